"""Per-ISA opcode tables, operand widths, register pools, and encoding limits.

Single source of truth for everything the kernel generator and the opcode
classifier need to know about an instruction set. All descriptors are
immutable static data; detection helpers only read OS-exposed feature
information.
"""

from __future__ import annotations

import platform
from dataclasses import dataclass, field

from .errors import DomainError, FeatureAbsentError, UnsupportedHostError

PRECISIONS = ("sp", "dp")
FP_OPS = ("add", "mul", "div", "fma")
MEM_OPS = ("load", "store")
BUMP_POLICIES = ("per-block", "per-instruction", "per-group-of-8")

_PRECISION_BYTES = {"sp": 4, "dp": 8}


@dataclass(frozen=True)
class OpKind:
    kind: str  # load | store | add | mul | div | fma
    precision: str = "dp"

    def __post_init__(self):
        if self.kind not in FP_OPS + MEM_OPS:
            raise DomainError(f"unknown op kind {self.kind!r}")
        if self.precision not in PRECISIONS:
            raise DomainError(f"unknown precision {self.precision!r}")

    @property
    def is_fp(self):
        return self.kind in FP_OPS

    @property
    def is_mem(self):
        return self.kind in MEM_OPS


@dataclass(frozen=True)
class IsaDescriptor:
    name: str
    architecture: str  # x86-64 | aarch64 | riscv64
    vector_bytes: dict  # precision -> operand width in bytes
    mem_opcodes: dict  # (precision, 'load'|'store') -> mnemonic
    fp_opcodes: dict  # (precision, op) -> mnemonic
    register_pool: dict  # precision -> tuple of register names
    max_mem_offset: int  # strict upper bound usable as immediate byte offset
    max_inner_immediate: int  # largest loop-count immediate before fallback
    pointer_bump_policy: str = "per-block"
    group_factor: int = 1  # registers grouped per memory instruction (RVV m8)

    def __post_init__(self):
        for p in PRECISIONS:
            if self.vector_bytes[p] not in (4, 8, 16, 32, 64):
                raise DomainError(
                    f"{self.name}: vector_bytes must be one of 4/8/16/32/64"
                )
            if not self.register_pool[p]:
                raise DomainError(f"{self.name}: empty register pool")
            if self.max_mem_offset <= self.vector_bytes[p]:
                raise DomainError(f"{self.name}: max_mem_offset too small")
        if self.pointer_bump_policy not in BUMP_POLICIES:
            raise DomainError(f"bad bump policy {self.pointer_bump_policy!r}")

    def elements_per_vector(self, precision):
        return self.vector_bytes[precision] // _PRECISION_BYTES[precision]


def _xmm(n):
    return tuple(f"xmm{i}" for i in range(n))


_CATALOG = {}


def _register(desc):
    _CATALOG[(desc.name, desc.architecture)] = desc


_register(IsaDescriptor(
    name="scalar", architecture="x86-64",
    vector_bytes={"sp": 4, "dp": 8},
    mem_opcodes={("dp", "load"): "movsd", ("dp", "store"): "movsd",
                 ("sp", "load"): "movss", ("sp", "store"): "movss"},
    fp_opcodes={("dp", "add"): "addsd", ("dp", "mul"): "mulsd",
                ("dp", "div"): "divsd", ("dp", "fma"): "vfmadd231sd",
                ("sp", "add"): "addss", ("sp", "mul"): "mulss",
                ("sp", "div"): "divss", ("sp", "fma"): "vfmadd231ss"},
    register_pool={"sp": _xmm(16), "dp": _xmm(16)},
    max_mem_offset=1 << 20,
    max_inner_immediate=(1 << 31) - 1,
))

_register(IsaDescriptor(
    name="sse", architecture="x86-64",
    vector_bytes={"sp": 16, "dp": 16},
    mem_opcodes={("dp", "load"): "movapd", ("dp", "store"): "movapd",
                 ("sp", "load"): "movaps", ("sp", "store"): "movaps"},
    fp_opcodes={("dp", "add"): "addpd", ("dp", "mul"): "mulpd",
                ("dp", "div"): "divpd", ("dp", "fma"): "vfmadd231pd",
                ("sp", "add"): "addps", ("sp", "mul"): "mulps",
                ("sp", "div"): "divps", ("sp", "fma"): "vfmadd231ps"},
    register_pool={"sp": _xmm(16), "dp": _xmm(16)},
    max_mem_offset=1 << 20,
    max_inner_immediate=(1 << 31) - 1,
))

_register(IsaDescriptor(
    name="avx2", architecture="x86-64",
    vector_bytes={"sp": 32, "dp": 32},
    mem_opcodes={("dp", "load"): "vmovapd", ("dp", "store"): "vmovapd",
                 ("sp", "load"): "vmovaps", ("sp", "store"): "vmovaps"},
    fp_opcodes={("dp", "add"): "vaddpd", ("dp", "mul"): "vmulpd",
                ("dp", "div"): "vdivpd", ("dp", "fma"): "vfmadd231pd",
                ("sp", "add"): "vaddps", ("sp", "mul"): "vmulps",
                ("sp", "div"): "vdivps", ("sp", "fma"): "vfmadd231ps"},
    register_pool={"sp": tuple(f"ymm{i}" for i in range(16)),
                   "dp": tuple(f"ymm{i}" for i in range(16))},
    max_mem_offset=1 << 20,
    max_inner_immediate=(1 << 31) - 1,
))

_register(IsaDescriptor(
    name="avx512", architecture="x86-64",
    vector_bytes={"sp": 64, "dp": 64},
    mem_opcodes={("dp", "load"): "vmovapd", ("dp", "store"): "vmovapd",
                 ("sp", "load"): "vmovaps", ("sp", "store"): "vmovaps"},
    fp_opcodes={("dp", "add"): "vaddpd", ("dp", "mul"): "vmulpd",
                ("dp", "div"): "vdivpd", ("dp", "fma"): "vfmadd231pd",
                ("sp", "add"): "vaddps", ("sp", "mul"): "vmulps",
                ("sp", "div"): "vdivps", ("sp", "fma"): "vfmadd231ps"},
    register_pool={"sp": tuple(f"zmm{i}" for i in range(32)),
                   "dp": tuple(f"zmm{i}" for i in range(32))},
    max_mem_offset=1 << 20,
    max_inner_immediate=(1 << 31) - 1,
))

_register(IsaDescriptor(
    name="scalar", architecture="aarch64",
    vector_bytes={"sp": 4, "dp": 8},
    mem_opcodes={("dp", "load"): "ldr", ("dp", "store"): "str",
                 ("sp", "load"): "ldr", ("sp", "store"): "str"},
    fp_opcodes={("dp", "add"): "fadd", ("dp", "mul"): "fmul",
                ("dp", "div"): "fdiv", ("dp", "fma"): "fmadd",
                ("sp", "add"): "fadd", ("sp", "mul"): "fmul",
                ("sp", "div"): "fdiv", ("sp", "fma"): "fmadd"},
    register_pool={"sp": tuple(f"s{i}" for i in range(32)),
                   "dp": tuple(f"d{i}" for i in range(32))},
    max_mem_offset=4095,
    max_inner_immediate=4095,
))

_register(IsaDescriptor(
    name="neon", architecture="aarch64",
    vector_bytes={"sp": 16, "dp": 16},
    mem_opcodes={("dp", "load"): "ldr", ("dp", "store"): "str",
                 ("sp", "load"): "ldr", ("sp", "store"): "str"},
    fp_opcodes={("dp", "add"): "fadd", ("dp", "mul"): "fmul",
                ("dp", "div"): "fdiv", ("dp", "fma"): "fmla",
                ("sp", "add"): "fadd", ("sp", "mul"): "fmul",
                ("sp", "div"): "fdiv", ("sp", "fma"): "fmla"},
    register_pool={"sp": tuple(f"v{i}" for i in range(32)),
                   "dp": tuple(f"v{i}" for i in range(32))},
    max_mem_offset=4095,
    max_inner_immediate=4095,
))

_register(IsaDescriptor(
    name="scalar", architecture="riscv64",
    vector_bytes={"sp": 4, "dp": 8},
    mem_opcodes={("dp", "load"): "fld", ("dp", "store"): "fsd",
                 ("sp", "load"): "flw", ("sp", "store"): "fsw"},
    fp_opcodes={("dp", "add"): "fadd.d", ("dp", "mul"): "fmul.d",
                ("dp", "div"): "fdiv.d", ("dp", "fma"): "fmadd.d",
                ("sp", "add"): "fadd.s", ("sp", "mul"): "fmul.s",
                ("sp", "div"): "fdiv.s", ("sp", "fma"): "fmadd.s"},
    register_pool={"sp": tuple(f"f{i}" for i in range(32)),
                   "dp": tuple(f"f{i}" for i in range(32))},
    max_mem_offset=2048,
    max_inner_immediate=2047,
))

_register(IsaDescriptor(
    name="rvv", architecture="riscv64",
    vector_bytes={"sp": 16, "dp": 16},
    mem_opcodes={("dp", "load"): "vle64.v", ("dp", "store"): "vse64.v",
                 ("sp", "load"): "vle32.v", ("sp", "store"): "vse32.v"},
    fp_opcodes={("dp", "add"): "vfadd.vv", ("dp", "mul"): "vfmul.vv",
                ("dp", "div"): "vfdiv.vv", ("dp", "fma"): "vfmacc.vv",
                ("sp", "add"): "vfadd.vv", ("sp", "mul"): "vfmul.vv",
                ("sp", "div"): "vfdiv.vv", ("sp", "fma"): "vfmacc.vv"},
    register_pool={"sp": tuple(f"v{i}" for i in range(32)),
                   "dp": tuple(f"v{i}" for i in range(32))},
    max_mem_offset=2048,
    max_inner_immediate=2047,
    pointer_bump_policy="per-group-of-8",
    group_factor=8,
))

_DEFAULT_ARCH_FOR = {
    "scalar": "x86-64", "sse": "x86-64", "avx2": "x86-64", "avx512": "x86-64",
    "neon": "aarch64", "rvv": "riscv64",
}

_ARCH_ALIASES = {
    "x86_64": "x86-64", "amd64": "x86-64", "x86-64": "x86-64",
    "aarch64": "aarch64", "arm64": "aarch64",
    "riscv64": "riscv64",
}


def host_architecture(machine=None):
    """Map a platform machine string onto a catalog architecture tag."""
    machine = machine or platform.machine()
    try:
        return _ARCH_ALIASES[machine.lower()]
    except KeyError:
        raise UnsupportedHostError(
            f"unsupported host architecture {machine!r}; "
            f"supported: {sorted(set(_ARCH_ALIASES.values()))}"
        ) from None


def supported_isa_names(architecture=None):
    names = [n for (n, a) in _CATALOG if architecture in (None, a)]
    return sorted(set(names))


def lookup_isa(name, precision="dp", architecture=None):
    """Return the descriptor for an ISA name.

    ``architecture`` disambiguates 'scalar', which exists on every
    architecture; it defaults to the ISA's home architecture (x86-64 for
    scalar) so tables can be inspected off-host.
    """
    if precision not in PRECISIONS:
        raise DomainError(f"unknown precision {precision!r}")
    if architecture is None:
        architecture = _DEFAULT_ARCH_FOR.get(name)
    desc = _CATALOG.get((name, architecture))
    if desc is None:
        raise UnsupportedHostError(
            f"unknown ISA {name!r} for architecture {architecture!r}; "
            f"supported ISAs: {supported_isa_names()}"
        )
    return desc


def all_descriptors():
    return list(_CATALOG.values())


def _read_cpuinfo():
    try:
        with open("/proc/cpuinfo") as fh:
            return fh.read()
    except OSError:
        return ""


def detect_supported_isas(machine=None, cpu_flags=None):
    """List ISA names usable on this host, always including 'scalar'.

    Feature bits come from the OS feature listing (/proc/cpuinfo) rather
    than raw instruction probing. ``cpu_flags`` injects a feature set for
    testing off-host.
    """
    arch = host_architecture(machine)
    if cpu_flags is None:
        cpu_flags = set(_read_cpuinfo().split())
    else:
        cpu_flags = set(cpu_flags)
    isas = ["scalar"]
    if arch == "x86-64":
        if "sse2" in cpu_flags or "sse" in cpu_flags:
            isas.append("sse")
        if "avx2" in cpu_flags:
            isas.append("avx2")
        if "avx512f" in cpu_flags:
            isas.append("avx512")
    elif arch == "aarch64":
        if "asimd" in cpu_flags or "neon" in cpu_flags:
            isas.append("neon")
    elif arch == "riscv64":
        if "v" in cpu_flags or "rvv" in cpu_flags:
            isas.append("rvv")
    return isas


def flops_per_instruction(isa, precision, op):
    """FP operations per instruction: vector elements, doubled for FMA."""
    if isinstance(op, OpKind):
        kind = op.kind
    else:
        kind = op
    if kind not in FP_OPS:
        raise DomainError(f"{kind!r} is not an FP operation")
    elems = isa.elements_per_vector(precision)
    return elems * (2 if kind == "fma" else 1)


def bytes_per_mem_instruction(isa, precision):
    """Bytes moved by one load/store at this ISA/precision (m1 for RVV)."""
    return isa.vector_bytes[precision]


def probe_max_vector_length(requested=8192, vlen_bits=None, machine=None):
    """Maximum e64 elements one RVV vector register holds (m1 grouping).

    On real RISC-V hardware this is answered by a vsetvli probe; off-host
    the hardware VLEN can be injected via ``vlen_bits`` for simulation.
    The granted length is the probe request clamped to the hardware max.
    """
    if vlen_bits is None:
        arch = host_architecture(machine)
        if arch != "riscv64":
            raise FeatureAbsentError(
                "RVV vector-length probe requires a riscv64 host "
                "(or an injected vlen_bits for simulation)"
            )
        raise FeatureAbsentError(
            "live vsetvli probing is not wired up; pass vlen_bits explicitly"
        )
    if vlen_bits % 64 or vlen_bits <= 0:
        raise DomainError("vlen_bits must be a positive multiple of 64")
    return min(requested, vlen_bits // 64)
