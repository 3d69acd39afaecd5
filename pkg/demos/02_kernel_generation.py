"""Generating and statically verifying benchmark kernels.

Benchmark numbers are only as trustworthy as the instruction stream that
produced them, so every kernel is generated as assembly text with an
exact plan (how many instructions, what offsets, how the loops nest) and
then re-parsed by an independent verifier that recounts everything.

The structure of every memory kernel:
  - an outer loop repeated a calibrated number of times,
  - an inner loop whose body is a block of at most 256 unrolled
    load/store instructions cycling through the vector registers,
  - any remainder instructions spilled after the inner loop,
  - sequential, ascending addresses that touch the array exactly once
    per outer iteration,
  - serializing instructions bracketing the whole kernel so timing
    reads cannot drift across it.
"""

from carmkit import (
    generate_fp_kernel,
    generate_frequency_probe,
    generate_memory_kernel,
    generate_mixed_kernel,
    verify_kernel,
)

# A 64 KiB AVX2 double-precision kernel with the default 2:1
# load:store ratio.
k = generate_memory_kernel("avx2", "dp", 64 * 1024)
print(f"file name       : {k.filename()}")
print(f"inner unroll    : {k.plan.inner_unroll} instructions")
print(f"inner iterations: {k.plan.inner_iters}")
print(f"remainder       : {k.plan.remainder_inst} instructions")
print(f"pointer bump    : {k.plan.per_iter_pointer_bump} bytes/iteration")
print(f"expected memory instructions per outer iteration: "
      f"{k.expected.mem_inst_per_outer_iter}")

report = verify_kernel(k)
print(f"verifier agrees with the plan: {report.match}, "
      f"offsets within ISA limits: {report.offsets_ok}")

print("\nfirst 20 lines of the generated assembly:")
for line in k.assembly_text.splitlines()[:20]:
    print("   ", line)

# The same generator handles other architectures; immediate-offset
# limits (4095 on aarch64, 2047 on riscv64 scalar) shape the plan.
for name, arch in (("neon", "aarch64"), ("scalar", "riscv64"),
                   ("rvv", "riscv64")):
    k = generate_memory_kernel(name, "dp", 64 * 1024, architecture=arch)
    print(f"\n{arch}/{name}: unroll {k.plan.inner_unroll}, "
          f"max offset {max(k.plan.offsets)}, "
          f"{k.expected.bytes_per_mem_inst} B/instruction, "
          f"verified: {verify_kernel(k).match}")

# FP kernels have no memory traffic at all: a 256-instruction block of
# independent vector operations.
fp = generate_fp_kernel("avx512", "dp", "fma")
print(f"\nFP kernel: {fp.expected.fp_inst_per_outer_iter} instructions x "
      f"{fp.expected.flops_per_fp_inst} FLOPs each")

# Mixed kernels interleave FP with memory groups; their nominal AI is an
# exact rational, which matters when points must land on exact sweep
# positions.
for n in (1, 3, 6):
    mk = generate_mixed_kernel("avx2", "dp", 96 * 1024, "fma", fp_per_mem=n)
    print(f"mixed fp_per_mem={n}: nominal AI = {mk.expected.nominal_ai()} "
          f"= {float(mk.expected.nominal_ai()):.4f}")

# The frequency probe is a chain of dependent scalar adds: one add per
# cycle on any reasonable core, so instructions/second = cycles/second.
probe = generate_frequency_probe("scalar", architecture="x86-64")
print(f"\nfrequency probe: {verify_kernel(probe).chain_adds} dependent adds")
