"""Bandwidth as a function of working-set size.

Sweeping the array from 2 KiB to 512 MiB at four points per octave (73
sizes) traces the cache hierarchy directly: bandwidth holds a plateau
while the array fits a level and steps down when it spills to the next.
Each size is re-calibrated so every measurement runs long enough to be
timed reliably.
"""

import os
import tempfile

from carmkit import (
    CacheTopology,
    SimulatedExecutor,
    SimulatedMachine,
    SuiteConfig,
    curve_sizes,
    render_memcurve_svg,
    run_memory_curve,
)

sizes = curve_sizes()
print(f"{len(sizes)} sizes from {sizes[0]} B to {sizes[-1]} B")

machine = SimulatedMachine(
    l1_bytes=32 * 1024, l2_bytes=1024 * 1024, l3_bytes=1408 * 1024,
    bytes_per_cycle={"L1": 192, "L2": 96, "L3": 48, "DRAM": 8})
topology = CacheTopology(l1d_kib=32, l2_kib=1024, l3_total_kib=11264,
                         l3_slice_kib=1408)

config = SuiteConfig(test="MEM", isa="avx512", architecture="x86-64",
                     repetitions=4)
record = run_memory_curve(config, SimulatedExecutor(machine), topology,
                          machine="simulated-server")

# Print the curve as a coarse text plot: one row per size, bar length
# proportional to log bandwidth.
print(f"\n{'size':>12}  bandwidth")
last_bw = None
for nbytes, bw, _ipc in record.points:
    marker = "  <- step" if last_bw and bw < last_bw * 0.9 else ""
    if marker or last_bw is None or nbytes in (sizes[0], sizes[-1]):
        print(f"{nbytes:>12}  {bw:8.1f} GB/s{marker}")
    last_bw = bw

svg_path = os.path.join(tempfile.mkdtemp(prefix="carmkit-demo-"),
                        "memcurve.svg")
with open(svg_path, "w") as fh:
    fh.write(render_memcurve_svg(record, topology))
print(f"\nfull curve plot: {svg_path}")
