"""Roofline-model arithmetic from first principles.

The model answers one question: given a machine's peak FP throughput and
its memory bandwidth at each cache level, what performance can a workload
with a given arithmetic intensity (AI, FLOPs per byte moved) possibly
reach? This script walks through the three core operations — attainable
performance, the ridge point, and region classification — on a small
hand-built model.
"""

from carmkit import (
    FpCeiling,
    RoofMeasurement,
    attainable_performance,
    build_model,
    classify_region,
    ridge_point,
)

# A machine with four memory roofs (GB/s) and two FP ceilings (GFLOP/s).
roofs = [
    RoofMeasurement("L1", 576.0, 3.0, (2, 1)),
    RoofMeasurement("L2", 288.0, 1.5, (2, 1)),
    RoofMeasurement("L3", 144.0, 0.75, (2, 1)),
    RoofMeasurement("DRAM", 24.0, 0.125, (2, 1)),
]
ceilings = [FpCeiling("add", 48.0, 2.0), FpCeiling("fma", 96.0, 2.0)]
model = build_model(roofs, ceilings, machine="demo-machine",
                    frequency_ghz=3.0)

print(f"model: {model.machine}, FP peak {model.fp_peak} GFLOP/s")
print(f"fastest roof {model.fastest_bandwidth} GB/s, "
      f"slowest {model.slowest_bandwidth} GB/s")

# The ridge point of a roof is the AI where the sloped memory bound meets
# the flat compute bound. Below it the roof limits you; above it the FP
# units do.
for roof in model.roofs:
    r = ridge_point(model.fp_peak, roof.bandwidth_gbps)
    print(f"  {roof.level:>4} ridge: {r:.4f} FLOP/byte")

# Attainable performance is min(FP peak, bandwidth x AI): the lower of the
# two bounds at a given AI.
for ai in (0.05, 1/6, 1.0, 8.0):
    perf = attainable_performance(model.fp_peak, model.fastest_bandwidth, ai)
    region = classify_region(model, ai)
    print(f"AI {ai:8.4f} -> attainable {perf:7.2f} GFLOP/s ({region})")

# Region boundaries belong to the region on their right: the first ridge
# is already 'mixed', the last ridge already 'compute-bound'.
first = ridge_point(model.fp_peak, model.fastest_bandwidth)
last = ridge_point(model.fp_peak, model.slowest_bandwidth)
print(f"at first ridge {first:.4f}: {classify_region(model, first)}")
print(f"at last ridge  {last:.4f}: {classify_region(model, last)}")
