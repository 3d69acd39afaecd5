"""Assembly microbenchmark generation with statically verifiable plans.

Kernels follow a two-loop skeleton: an outer loop whose repetition count is
supplied at run time to control duration, and an inner loop of (nominally)
256 unrolled instructions cycling through the register pool. Instructions
that do not fit the unrolled block become a remainder placed in the outer
loop. Memory kernels walk an array of contiguous ascending addresses,
touching every byte exactly once per outer iteration.

Every generated kernel carries a LoopPlan and ExpectedCounts; verify_kernel
re-parses the emitted text and recounts instructions so count mismatches
surface before anything executes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from . import isa as isa_mod
from .errors import CodegenError, KernelSpecError
from .isa import IsaDescriptor, OpKind, bytes_per_mem_instruction, flops_per_instruction

DEFAULT_UNROLL = 256

KERNEL_KINDS = ("memory", "fp", "mixed", "freq-probe", "vlen-probe")


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    isa: str
    precision: str = "dp"
    ld_st_ratio: tuple = (2, 1)  # (loads, stores); (1,0)=only loads, (0,1)=only stores
    fp_op: OpKind | None = None
    fp_per_mem: int = 0  # FP instructions per (loads+stores) memory block, mixed only
    array_bytes: int = 0
    threads: int = 1
    architecture: str | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise KernelSpecError(f"unknown kernel kind {self.kind!r}")
        loads, stores = self.ld_st_ratio
        if loads < 0 or stores < 0:
            raise KernelSpecError("ld_st_ratio counts must be >= 0")
        if self.kind in ("memory", "mixed"):
            if loads + stores < 1:
                raise KernelSpecError("ld_st_ratio needs loads+stores >= 1")
            if self.array_bytes <= 0:
                raise KernelSpecError("memory/mixed kernels need array_bytes > 0")
        if self.kind == "mixed" and self.fp_per_mem < 1:
            raise KernelSpecError("mixed kernels need fp_per_mem >= 1")
        if self.kind in ("fp", "mixed") and self.fp_op is None:
            raise KernelSpecError(f"{self.kind} kernels need an fp_op")

    def descriptor(self):
        return isa_mod.lookup_isa(self.isa, self.precision, self.architecture)


@dataclass(frozen=True)
class LoopPlan:
    inner_unroll: int
    inner_iters: int
    remainder_inst: int
    per_iter_pointer_bump: int  # bytes advanced per inner-loop iteration
    offsets: tuple  # immediate byte offsets used inside one unrolled block
    pointer_loaded_counter: bool = False
    bytes_per_inst: int = 0  # bytes one memory instruction moves (incl. grouping)
    outer_iters_symbol: str = "outer_iters"


@dataclass(frozen=True)
class ExpectedCounts:
    mem_inst_per_outer_iter: int = 0
    fp_inst_per_outer_iter: int = 0
    flops_per_fp_inst: int = 0
    bytes_per_mem_inst: int = 0

    def nominal_ai(self):
        """Exact FLOP/byte ratio of one outer iteration, as a Fraction."""
        if self.mem_inst_per_outer_iter == 0:
            return None
        return Fraction(
            self.fp_inst_per_outer_iter * self.flops_per_fp_inst,
            self.mem_inst_per_outer_iter * self.bytes_per_mem_inst,
        )

    def flops_per_outer_iter(self):
        return self.fp_inst_per_outer_iter * self.flops_per_fp_inst

    def bytes_per_outer_iter(self):
        return self.mem_inst_per_outer_iter * self.bytes_per_mem_inst


@dataclass(frozen=True)
class KernelSource:
    name: str
    assembly_text: str
    plan: LoopPlan
    expected: ExpectedCounts
    spec: KernelSpec
    isa: IsaDescriptor
    warnings: tuple = ()

    def filename(self):
        loads, stores = self.spec.ld_st_ratio
        return (
            f"kernel_{self.spec.kind}_{self.spec.isa}_"
            f"{self.spec.precision}_{loads}to{stores}.S"
        )


def _kernel_name(spec):
    loads, stores = spec.ld_st_ratio
    kind = spec.kind.replace("-", "_")
    return f"carm_{kind}_{spec.isa}_{spec.precision}_{loads}_{stores}"


def plan_loops(spec, isa=None):
    """Size the inner/outer loop structure for a kernel spec.

    The unroll starts at 256 and shrinks only when the ISA's immediate
    offset limit (or a small array) forces it; the shortfall is compensated
    first by more inner-loop repetitions and then by a remainder in the
    outer loop.
    """
    isa = isa or spec.descriptor()
    if spec.kind == "fp":
        return LoopPlan(DEFAULT_UNROLL, 1, 0, 0, ())
    if spec.kind in ("freq-probe", "vlen-probe"):
        return LoopPlan(DEFAULT_UNROLL if spec.kind == "freq-probe" else 1, 1, 0, 0, ())

    vb = bytes_per_mem_instruction(isa, spec.precision)
    policy = isa.pointer_bump_policy
    if spec.kind == "mixed" and policy == "per-group-of-8":
        # Mixed kernels interleave m1 FP ops, so the memory side drops to
        # m1 width with a bump after every instruction.
        policy = "per-instruction"
    group = isa.group_factor if policy == "per-group-of-8" else 1
    inst_bytes = vb * group

    if spec.array_bytes % inst_bytes:
        raise KernelSpecError(
            f"array_bytes={spec.array_bytes} is not a multiple of the "
            f"{inst_bytes}-byte access size of {spec.isa}/{spec.precision}"
        )
    n_inst = spec.array_bytes // inst_bytes
    if n_inst < 1:
        raise KernelSpecError("array too small for a single memory instruction")

    if policy == "per-block":
        # Largest unroll whose top offset stays strictly below the limit.
        max_by_offset = (isa.max_mem_offset - 1) // vb + 1
    else:
        max_by_offset = DEFAULT_UNROLL
    unroll = min(DEFAULT_UNROLL, max_by_offset, n_inst)

    if spec.kind == "mixed":
        g = sum(spec.ld_st_ratio)
        if n_inst % g:
            raise KernelSpecError(
                f"mixed kernel needs the {n_inst} memory instructions to be "
                f"a multiple of the ld/st group size {g}"
            )
        unroll = (unroll // g) * g
        if unroll == 0:
            raise KernelSpecError(
                f"ld/st group of {g} does not fit in an unrolled block"
            )

    inner_iters = n_inst // unroll
    remainder = n_inst % unroll

    if policy == "per-block":
        offsets = tuple(i * vb for i in range(unroll))
    else:
        offsets = tuple(0 for _ in range(unroll))
    bump = unroll * inst_bytes

    for off in offsets:
        if off >= isa.max_mem_offset:
            raise CodegenError(f"offset {off} exceeds limit {isa.max_mem_offset}")

    return LoopPlan(
        inner_unroll=unroll,
        inner_iters=inner_iters,
        remainder_inst=remainder,
        per_iter_pointer_bump=bump,
        offsets=offsets,
        pointer_loaded_counter=inner_iters > isa.max_inner_immediate,
        bytes_per_inst=inst_bytes,
    )


def _mem_kind(spec, i):
    loads, stores = spec.ld_st_ratio
    return "load" if (i % (loads + stores)) < loads else "store"


def _mem_pool(isa, spec, policy):
    pool = isa.register_pool[spec.precision]
    if policy == "per-group-of-8":
        return pool[:: isa.group_factor]
    return pool


def _effective_policy(isa, spec):
    policy = isa.pointer_bump_policy
    if spec.kind == "mixed" and policy == "per-group-of-8":
        policy = "per-instruction"
    return policy


def _block_ops(spec, isa, plan, n_mem, with_block_bump):
    """Abstract op stream for one block: load/store/fp/bump tuples."""
    policy = _effective_policy(isa, spec)
    mem_pool = _mem_pool(isa, spec, policy)
    fp_pool = isa.register_pool[spec.precision]
    fp_group = sum(spec.ld_st_ratio) if spec.kind == "mixed" else 0
    ops = []
    fp_idx = 0
    for i in range(n_mem):
        kind = _mem_kind(spec, i)
        if policy == "per-block":
            ops.append((kind, mem_pool[i % len(mem_pool)], plan.offsets[i]))
        else:
            ops.append((kind, mem_pool[i % len(mem_pool)], 0))
            ops.append(("bump", plan.bytes_per_inst))
        if fp_group and (i + 1) % fp_group == 0:
            for _ in range(spec.fp_per_mem):
                ops.append(("fp", fp_pool[fp_idx % len(fp_pool)]))
                fp_idx += 1
    if with_block_bump and policy == "per-block":
        ops.append(("bump", plan.per_iter_pointer_bump))
    return ops


# --- architecture-specific emission -------------------------------------

_X86 = {"ptr": "%r9", "ctr": "%rcx", "base": "%rdi", "outer": "%rsi"}
_A64 = {"ptr": "x9", "ctr": "x10", "base": "x0", "outer": "x1"}
_RV = {"ptr": "t0", "ctr": "t1", "bump": "t2", "vl": "t3", "base": "a0", "outer": "a1"}


def _x86_fp_line(isa, spec, reg):
    mn = isa.fp_opcodes[(spec.precision, spec.fp_op.kind)]
    if mn.startswith("vfmadd"):
        return f"    {mn} %{reg}, %{reg}, %{reg}"
    if mn.startswith("v"):
        return f"    {mn} %{reg}, %{reg}, %{reg}"
    return f"    {mn} %{reg}, %{reg}"


def _x86_zero_line(isa, reg):
    if reg.startswith("zmm"):
        return f"    vpxorq %{reg}, %{reg}, %{reg}"
    if reg.startswith("ymm"):
        return f"    vxorps %{reg}, %{reg}, %{reg}"
    return f"    xorps %{reg}, %{reg}"


def _emit_x86(spec, isa, plan, name):
    r = _X86
    lines = []

    def mem_line(kind, reg, off):
        mn = isa.mem_opcodes[(spec.precision, kind)]
        addr = f"{off}({r['ptr']})" if off else f"0({r['ptr']})"
        if kind == "load":
            return f"    {mn} {addr}, %{reg}"
        return f"    {mn} %{reg}, {addr}"

    def op_lines(ops):
        for op in ops:
            if op[0] == "bump":
                lines.append(f"    addq ${op[1]}, {r['ptr']}")
            elif op[0] == "fp":
                lines.append(_x86_fp_line(isa, spec, op[1]))
            else:
                lines.append(mem_line(op[0], op[1], op[2]))

    has_mem = spec.kind in ("memory", "mixed")
    has_fp = spec.kind in ("fp", "mixed")
    if has_fp:
        for reg in isa.register_pool[spec.precision]:
            lines.append(_x86_zero_line(isa, reg))
    lines.append("    lfence")

    if spec.kind == "freq-probe":
        lines.append(f"    xorq %rax, %rax")
        lines.append(f".Louter_{name}:")
        for _ in range(plan.inner_unroll):
            lines.append("    addq $1, %rax")
        lines.append(f"    subq $1, {r['outer']}")
        lines.append(f"    jnz .Louter_{name}")
    else:
        lines.append(f".Louter_{name}:")
        if has_mem:
            lines.append(f"    movq {r['base']}, {r['ptr']}")
            lines.append(f"    movq ${plan.inner_iters}, {r['ctr']}")
            lines.append(f".Linner_{name}:")
            op_lines(_block_ops(spec, isa, plan, plan.inner_unroll, True))
            lines.append(f"    subq $1, {r['ctr']}")
            lines.append(f"    jnz .Linner_{name}")
            if plan.remainder_inst:
                op_lines(_block_ops(spec, isa, plan, plan.remainder_inst, False))
        else:  # fp kernel: single unrolled block in the outer loop
            for i in range(plan.inner_unroll):
                pool = isa.register_pool[spec.precision]
                lines.append(_x86_fp_line(isa, spec, pool[i % len(pool)]))
        lines.append(f"    subq $1, {r['outer']}")
        lines.append(f"    jnz .Louter_{name}")
    lines.append("    lfence")
    lines.append("    ret")

    header = [
        "    .text",
        f"    .globl {name}",
        f"    .type {name}, @function",
        f"{name}:",
        f"    # args: {r['base']} = array base, {r['outer']} = outer iterations",
    ]
    return "\n".join(header + lines) + "\n"


def _a64_bump_lines(ptr, bump):
    # add immediate encodes 12 bits, optionally shifted left by 12
    lines = []
    remaining = bump
    big = remaining & ~0xFFF
    if big:
        lines.append(f"    add {ptr}, {ptr}, #{big}")
        remaining -= big
    if remaining or not lines:
        lines.append(f"    add {ptr}, {ptr}, #{remaining}")
    return lines


def _a64_fp_line(isa, spec, reg):
    mn = isa.fp_opcodes[(spec.precision, spec.fp_op.kind)]
    if isa.name == "neon":
        arr = ".2d" if spec.precision == "dp" else ".4s"
        return f"    {mn} {reg}{arr}, {reg}{arr}, {reg}{arr}"
    if mn == "fmadd":
        return f"    {mn} {reg}, {reg}, {reg}, {reg}"
    return f"    {mn} {reg}, {reg}, {reg}"


def _a64_mem_reg(isa, spec, reg):
    if isa.name == "neon":
        return "q" + reg[1:]  # v7 -> q7 for 128-bit ldr/str
    return reg


def _emit_aarch64(spec, isa, plan, name):
    r = _A64
    lines = []

    def op_lines(ops):
        for op in ops:
            if op[0] == "bump":
                lines.extend(_a64_bump_lines(r["ptr"], op[1]))
            elif op[0] == "fp":
                lines.append(_a64_fp_line(isa, spec, op[1]))
            else:
                mn = isa.mem_opcodes[(spec.precision, op[0])]
                reg = _a64_mem_reg(isa, spec, op[1])
                addr = f"[{r['ptr']}, #{op[2]}]" if op[2] else f"[{r['ptr']}]"
                lines.append(f"    {mn} {reg}, {addr}")

    has_mem = spec.kind in ("memory", "mixed")
    has_fp = spec.kind in ("fp", "mixed")
    if has_fp:
        for reg in isa.register_pool[spec.precision]:
            if isa.name == "neon":
                lines.append(f"    movi {reg}.2d, #0")
            elif spec.precision == "dp":
                lines.append(f"    fmov {reg}, xzr")
            else:
                lines.append(f"    fmov {reg}, wzr")
    lines.append("    isb")

    if spec.kind == "freq-probe":
        lines.append("    mov x9, #0")
        lines.append(f".Louter_{name}:")
        for _ in range(plan.inner_unroll):
            lines.append("    add x9, x9, #1")
        lines.append(f"    subs {r['outer']}, {r['outer']}, #1")
        lines.append(f"    b.ne .Louter_{name}")
    else:
        lines.append(f".Louter_{name}:")
        if has_mem:
            lines.append(f"    mov {r['ptr']}, {r['base']}")
            if plan.pointer_loaded_counter:
                lines.append(f"    ldr {r['ctr']}, =0x{plan.inner_iters:x}")
            else:
                lines.append(f"    mov {r['ctr']}, #{plan.inner_iters}")
            lines.append(f".Linner_{name}:")
            op_lines(_block_ops(spec, isa, plan, plan.inner_unroll, True))
            lines.append(f"    subs {r['ctr']}, {r['ctr']}, #1")
            lines.append(f"    b.ne .Linner_{name}")
            if plan.remainder_inst:
                op_lines(_block_ops(spec, isa, plan, plan.remainder_inst, False))
        else:
            pool = isa.register_pool[spec.precision]
            for i in range(plan.inner_unroll):
                lines.append(_a64_fp_line(isa, spec, pool[i % len(pool)]))
        lines.append(f"    subs {r['outer']}, {r['outer']}, #1")
        lines.append(f"    b.ne .Louter_{name}")
    lines.append("    isb")
    lines.append("    ret")

    header = [
        "    .text",
        f"    .globl {name}",
        f"    .type {name}, %function",
        f"{name}:",
        f"    // args: {r['base']} = array base, {r['outer']} = outer iterations",
    ]
    return "\n".join(header + lines) + "\n"


def _rv_fp_line(isa, spec, reg):
    mn = isa.fp_opcodes[(spec.precision, spec.fp_op.kind)]
    if mn.startswith("fmadd"):
        return f"    {mn} {reg}, {reg}, {reg}, {reg}"
    return f"    {mn} {reg}, {reg}, {reg}"


def _emit_riscv(spec, isa, plan, name):
    r = _RV
    lines = []
    policy = _effective_policy(isa, spec)
    has_mem = spec.kind in ("memory", "mixed")
    has_fp = spec.kind in ("fp", "mixed")
    is_vector = isa.name == "rvv"

    def op_lines(ops):
        for op in ops:
            if op[0] == "bump":
                lines.append(f"    add {r['ptr']}, {r['ptr']}, {r['bump']}")
            elif op[0] == "fp":
                lines.append(_rv_fp_line(isa, spec, op[1]))
            else:
                mn = isa.mem_opcodes[(spec.precision, op[0])]
                if is_vector:
                    lines.append(f"    {mn} {op[1]}, ({r['ptr']})")
                else:
                    lines.append(f"    {mn} {op[1]}, {op[2]}({r['ptr']})")

    if is_vector:
        ew = "e64" if spec.precision == "dp" else "e32"
        lmul = "m8" if policy == "per-group-of-8" else "m1"
        lines.append(f"    vsetvli {r['vl']}, x0, {ew}, {lmul}, ta, ma")
    if has_fp:
        for reg in isa.register_pool[spec.precision]:
            if is_vector:
                lines.append(f"    vmv.v.i {reg}, 0")
            elif spec.precision == "dp":
                lines.append(f"    fmv.d.x {reg}, x0")
            else:
                lines.append(f"    fmv.w.x {reg}, x0")
    if has_mem:
        if policy == "per-block":
            lines.append(f"    li {r['bump']}, {plan.per_iter_pointer_bump}")
        else:
            lines.append(f"    li {r['bump']}, {plan.bytes_per_inst}")

    if spec.kind == "freq-probe":
        lines.append("    li t0, 0")
        lines.append(f".Louter_{name}:")
        for _ in range(plan.inner_unroll):
            lines.append("    addi t0, t0, 1")
        lines.append(f"    addi {r['outer']}, {r['outer']}, -1")
        lines.append(f"    bnez {r['outer']}, .Louter_{name}")
    elif spec.kind == "vlen-probe":
        ew = "e64" if spec.precision == "dp" else "e32"
        lines = [
            "    li t0, 8192",
            f"    vsetvli t0, t0, {ew}, m1, ta, ma",
            f"    sd t0, 0({r['base']})",
        ]
    else:
        lines.append(f".Louter_{name}:")
        if has_mem:
            lines.append(f"    mv {r['ptr']}, {r['base']}")
            lines.append(f"    li {r['ctr']}, {plan.inner_iters}")
            lines.append(f".Linner_{name}:")
            # bump register t2 is preloaded with the single bump amount
            # this kernel uses (block advance, or per-instruction stride)
            op_lines(_block_ops(spec, isa, plan, plan.inner_unroll, True))
            lines.append(f"    addi {r['ctr']}, {r['ctr']}, -1")
            lines.append(f"    bnez {r['ctr']}, .Linner_{name}")
            if plan.remainder_inst:
                op_lines(_block_ops(spec, isa, plan, plan.remainder_inst, False))
        else:
            pool = isa.register_pool[spec.precision]
            for i in range(plan.inner_unroll):
                lines.append(_rv_fp_line(isa, spec, pool[i % len(pool)]))
        lines.append(f"    addi {r['outer']}, {r['outer']}, -1")
        lines.append(f"    bnez {r['outer']}, .Louter_{name}")
    lines.append("    ret")

    header = [
        "    .text",
        f"    .globl {name}",
        f"    .type {name}, @function",
        f"{name}:",
        f"    # args: {r['base']} = array base, {r['outer']} = outer iterations",
    ]
    return "\n".join(header + lines) + "\n"


_EMITTERS = {"x86-64": _emit_x86, "aarch64": _emit_aarch64, "riscv64": _emit_riscv}


def _expected_counts(spec, isa, plan):
    if spec.kind in ("memory", "mixed"):
        n_mem = plan.inner_unroll * plan.inner_iters + plan.remainder_inst
        fp = 0
        flops = 0
        if spec.kind == "mixed":
            g = sum(spec.ld_st_ratio)
            fp = (n_mem // g) * spec.fp_per_mem
            flops = flops_per_instruction(isa, spec.precision, spec.fp_op)
        return ExpectedCounts(n_mem, fp, flops, plan.bytes_per_inst)
    if spec.kind == "fp":
        return ExpectedCounts(
            0, plan.inner_unroll,
            flops_per_instruction(isa, spec.precision, spec.fp_op), 0,
        )
    return ExpectedCounts()


def _generate(spec):
    isa = spec.descriptor()
    warnings = []
    if spec.fp_op is not None and spec.fp_op.kind == "div":
        if (spec.precision, "div") not in isa.fp_opcodes:
            warnings.append(
                f"{spec.isa} has no vector divide; falling back to scalar"
            )
            spec = KernelSpec(
                kind=spec.kind, isa="scalar", precision=spec.precision,
                ld_st_ratio=spec.ld_st_ratio, fp_op=spec.fp_op,
                fp_per_mem=spec.fp_per_mem, array_bytes=spec.array_bytes,
                threads=spec.threads, architecture=isa.architecture,
            )
            isa = spec.descriptor()
    plan = plan_loops(spec, isa)
    name = _kernel_name(spec)
    text = _EMITTERS[isa.architecture](spec, isa, plan, name)
    source = KernelSource(
        name=name, assembly_text=text, plan=plan,
        expected=_expected_counts(spec, isa, plan),
        spec=spec, isa=isa, warnings=tuple(warnings),
    )
    report = verify_kernel(source)
    if not report.match:
        raise CodegenError(
            f"generated kernel {name} failed static verification: "
            + "; ".join(report.messages)
        )
    return source


def generate_memory_kernel(isa_name, precision="dp", array_bytes=0,
                           ld_st_ratio=(2, 1), threads=1, architecture=None):
    spec = KernelSpec(kind="memory", isa=isa_name, precision=precision,
                      ld_st_ratio=tuple(ld_st_ratio), array_bytes=array_bytes,
                      threads=threads, architecture=architecture)
    return _generate(spec)


def generate_fp_kernel(isa_name, precision="dp", op="add", threads=1,
                       architecture=None):
    spec = KernelSpec(kind="fp", isa=isa_name, precision=precision,
                      fp_op=OpKind(op, precision), threads=threads,
                      architecture=architecture)
    return _generate(spec)


def generate_mixed_kernel(isa_name, precision="dp", array_bytes=0, op="add",
                          fp_per_mem=1, ld_st_ratio=(2, 1), threads=1,
                          architecture=None):
    spec = KernelSpec(kind="mixed", isa=isa_name, precision=precision,
                      ld_st_ratio=tuple(ld_st_ratio), array_bytes=array_bytes,
                      fp_op=OpKind(op, precision), fp_per_mem=fp_per_mem,
                      threads=threads, architecture=architecture)
    return _generate(spec)


def generate_frequency_probe(isa_name, precision="dp", architecture=None):
    spec = KernelSpec(kind="freq-probe", isa=isa_name, precision=precision,
                      ld_st_ratio=(1, 0), architecture=architecture)
    return _generate(spec)


def generate_vlen_probe(precision="dp"):
    spec = KernelSpec(kind="vlen-probe", isa="rvv", precision=precision,
                      ld_st_ratio=(1, 0))
    return _generate(spec)


def generate(spec):
    """Generate any kernel directly from a KernelSpec."""
    return _generate(spec)


# --- static verification --------------------------------------------------

@dataclass
class VerificationReport:
    match: bool
    mem_delta: int
    fp_delta: int
    max_offset: int
    offsets_ok: bool
    reuse_ok: bool
    chain_adds: int = 0
    messages: list = field(default_factory=list)


_X86_MEM_RE = re.compile(r"(-?\d+)?\(%\w+\)")
_A64_MEM_RE = re.compile(r"\[\s*\w+(?:\s*,\s*#(-?\d+))?\s*\]")
_RV_MEM_RE = re.compile(r"(-?\d+)?\((\w+)\)")


def _instruction_lines(text):
    out = []
    for raw in text.splitlines():
        # '#' introduces immediates on aarch64 ("#8"), so only "# " starts
        # a comment; "//" always does
        line = raw.split("# ", 1)[0].split("//", 1)[0].strip()
        if not line:
            continue
        if line.endswith(":"):
            out.append(("label", line[:-1], line))
            continue
        if line.startswith("."):
            continue
        mnemonic = line.split()[0]
        out.append(("inst", mnemonic, line))
    return out


def _split_segments(items, name):
    """Break the instruction stream into inner-block / remainder / rest."""
    inner_label = f".Linner_{name}"
    outer_label = f".Louter_{name}"
    inner_start = inner_end = None
    outer_branch = None
    for i, (kind, tok, line) in enumerate(items):
        if kind == "label" and tok == inner_label:
            inner_start = i + 1
        elif kind == "inst" and inner_label in line and inner_start is not None:
            inner_end = i
            break
    if inner_start is None:
        return None, None
    for i in range(inner_end + 1, len(items)):
        kind, tok, line = items[i]
        if kind == "inst" and outer_label in line:
            outer_branch = i
            break
    inner = [it for it in items[inner_start:inner_end] if it[0] == "inst"]
    tail = [it for it in items[inner_end + 1:outer_branch] if it[0] == "inst"]
    return inner, tail


def _classify_counts(lines, isa, precision):
    load_mn = isa.mem_opcodes[(precision, "load")]
    store_mn = isa.mem_opcodes[(precision, "store")]
    fp_mns = {isa.fp_opcodes[(precision, op)] for op in ("add", "mul", "div", "fma")}
    loads = stores = fp = 0
    offsets = []
    fp_dests = []
    for _, mn, line in lines:
        body = line[len(mn):].strip()
        if mn in fp_mns:
            fp += 1
            dest = body.split(",")[0].strip().lstrip("%").split(".")[0]
            fp_dests.append(dest)
            continue
        is_load = is_store = False
        if load_mn == store_mn and mn == load_mn:
            # dual-use move: memory operand position decides direction
            first = body.split(",")[0]
            is_load = "(" in first or "[" in first
            is_store = not is_load
        elif mn == load_mn:
            is_load = True
        elif mn == store_mn:
            is_store = True
        else:
            continue
        m = (_X86_MEM_RE.search(body) or _A64_MEM_RE.search(body)
             or _RV_MEM_RE.search(body))
        if m is None:
            # no memory operand (e.g. an aarch64 literal-pool ldr): not a
            # data access, skip
            continue
        loads += is_load
        stores += is_store
        offsets.append(int(m.group(1) or 0))
    return loads, stores, fp, offsets, fp_dests


def _min_reuse_distance(dests):
    last_seen = {}
    best = None
    for i, d in enumerate(dests):
        if d in last_seen:
            dist = i - last_seen[d]
            best = dist if best is None else min(best, dist)
        last_seen[d] = i
    return best


def verify_kernel(source):
    """Recount instructions from the emitted text against ExpectedCounts."""
    spec, isa, plan = source.spec, source.isa, source.plan
    items = _instruction_lines(source.assembly_text)
    messages = []

    if spec.kind in ("freq-probe", "vlen-probe"):
        chain = 0
        for kind, mn, line in items:
            if kind == "inst" and mn in ("addq", "addi", "add"):
                ops = line[len(mn):].strip()
                if ops.endswith("%rax") or ops.startswith(("x9,", "t0,")):
                    chain += 1
        ok = spec.kind == "vlen-probe" or chain == plan.inner_unroll
        if not ok:
            messages.append(
                f"frequency probe has {chain} chain adds, expected {plan.inner_unroll}"
            )
        return VerificationReport(ok, 0, 0, 0, True, True, chain, messages)

    inner, tail = _split_segments(items, source.name)
    if inner is None:
        # no inner loop: count the whole body once (fp kernels)
        body = [it for it in items if it[0] == "inst"]
        loads, stores, fp, offsets, fp_dests = _classify_counts(
            body, isa, spec.precision)
        mem_total = loads + stores
        fp_total = fp
    else:
        l1, s1, f1, off1, fpd1 = _classify_counts(inner, isa, spec.precision)
        l2, s2, f2, off2, fpd2 = _classify_counts(tail, isa, spec.precision)
        mem_total = (l1 + s1) * plan.inner_iters + l2 + s2
        fp_total = f1 * plan.inner_iters + f2
        offsets = off1 + off2
        fp_dests = fpd1 or fpd2

    mem_delta = mem_total - source.expected.mem_inst_per_outer_iter
    fp_delta = fp_total - source.expected.fp_inst_per_outer_iter
    if mem_delta:
        messages.append(f"memory instruction count off by {mem_delta:+d}")
    if fp_delta:
        messages.append(f"FP instruction count off by {fp_delta:+d}")

    max_offset = max(offsets) if offsets else 0
    offsets_ok = max_offset < isa.max_mem_offset
    if not offsets_ok:
        messages.append(
            f"offset {max_offset} breaches the {isa.max_mem_offset} limit")

    reuse_ok = True
    if fp_dests:
        pool = isa.register_pool[spec.precision]
        needed = min(len(pool), len(fp_dests))
        dist = _min_reuse_distance(fp_dests)
        if dist is not None and dist < needed:
            reuse_ok = False
            messages.append(
                f"FP destination reused after {dist} instructions "
                f"(pool allows {needed})")

    match = mem_delta == 0 and fp_delta == 0 and offsets_ok and reuse_ok
    return VerificationReport(
        match, mem_delta, fp_delta, max_offset, offsets_ok, reuse_ok,
        messages=messages,
    )
