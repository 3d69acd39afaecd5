"""A complete roofline measurement on the simulated machine.

The simulated executor models a machine with per-level bytes-per-cycle
capabilities and a fixed FP issue rate, so the whole benchmarking
pipeline — frequency probing, calibration, execution, aggregation,
persistence, plotting — runs deterministically with no hardware access.

The numbers below model a wide-vector server core: 192 B/cycle from L1
(three 64-byte ports), halving at each level, two FMA units, 3 GHz.
"""

import os
import tempfile

from carmkit import (
    CacheTopology,
    ResultArchive,
    SimulatedExecutor,
    SimulatedMachine,
    SuiteConfig,
    render_roofline_svg,
    ridge_point,
    run_roofline_suite,
)

machine = SimulatedMachine(
    frequency_ghz=3.0,
    l1_bytes=32 * 1024, l2_bytes=1024 * 1024, l3_bytes=1408 * 1024,
    bytes_per_cycle={"L1": 192, "L2": 96, "L3": 48, "DRAM": 8},
    fp_ipc=2.0)
executor = SimulatedExecutor(machine)

topology = CacheTopology(l1d_kib=32, l2_kib=1024, l3_total_kib=11264,
                         l3_slice_kib=1408)

workdir = tempfile.mkdtemp(prefix="carmkit-demo-")
archive = ResultArchive(workdir)

config = SuiteConfig(test="roofline", isa="avx512", architecture="x86-64",
                     precision="dp", fp_op="fma", repetitions=8)
record = run_roofline_suite(config, executor, topology, archive=archive,
                            machine="simulated-server")[0]

print("measured roofs:")
for level in ("l1", "l2", "l3", "dram"):
    bw = getattr(record, f"{level}_gbps")
    ipc = getattr(record, f"{level}_ipc")
    print(f"  {level.upper():>4}: {bw:8.2f} GB/s   IPC {ipc:.3f}")
print(f"  FMA : {record.fma_gflops:8.2f} GFLOP/s IPC {record.fma_ipc:.3f}")

model = record.to_model()
ridge = ridge_point(model.fp_peak, model.fastest_bandwidth)
print(f"\nridge point: {ridge:.4f} FLOP/byte "
      "(96 GFLOP/s over 576 GB/s = 1/6)")

svg_path = os.path.join(workdir, "roofline.svg")
with open(svg_path, "w") as fh:
    fh.write(render_roofline_svg(model))
print(f"results CSV: {archive.path_for('roofline')}")
print(f"plot       : {svg_path}")
