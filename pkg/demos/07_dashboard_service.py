"""Driving the HTTP service that backs the browser dashboard.

The service wraps the library behind a small JSON API on loopback port
8642: machine facts, run submission and polling, stored results,
application analysis, and plot data. Exactly one run executes at a time
(benchmarks are timing-sensitive); a second submission gets 409 with the
active run's id.

This demo exercises the API in-process. To serve the real dashboard:

    carm-serve --simulate --frontend frontend/dist
"""

import os
import time

from fastapi.testclient import TestClient

from carmkit import CacheTopology, SimulatedExecutor, SimulatedMachine
from carmkit.service import create_app

machine = SimulatedMachine(
    l1_bytes=32 * 1024, l2_bytes=1024 * 1024, l3_bytes=1408 * 1024,
    bytes_per_cycle={"L1": 192, "L2": 96, "L3": 48, "DRAM": 8},
    fp_ipc=2.0)
app = create_app(
    executor=SimulatedExecutor(machine), results_root="/tmp/carmkit-demo",
    topology=CacheTopology(l1d_kib=32, l2_kib=1024, l3_total_kib=11264,
                           l3_slice_kib=1408),
    cpu_flags={"sse2", "avx2", "avx512f"})
client = TestClient(app)

print("GET /api/machine")
info = client.get("/api/machine").json()
print(f"  machine={info['machine']!r} isas={info['isas']}")

print("\nPOST /api/runs  (full roofline, avx512)")
run = client.post("/api/runs", json={"test": "roofline",
                                     "isa": "avx512",
                                     "fp_op": "fma"}).json()
print(f"  queued as {run['id']}")

while run["state"] not in ("done", "failed"):
    time.sleep(0.05)
    run = client.get(f"/api/runs/{run['id']}").json()
    p = run["progress"]
    print(f"  {run['state']:>8}: {p['completed']}/{p['total']} "
          f"{p['current']}")
print(f"  final state: {run['state']}")

print("\nGET /api/plots/roofline/<id>")
plot = client.get(f"/api/plots/roofline/{run['id']}").json()
m = plot["models"][0]
print(f"  FP peak {m['fp_peak_gflops']:.1f} GFLOP/s; roofs: "
      + ", ".join(f"{r['level']} {r['bandwidth_gbps']:.0f} GB/s"
                  for r in m["roofs"]))

print("\nPOST /api/analysis  (replayed histogram)")
fixture = os.path.join(os.path.dirname(__file__), "..", "tests",
                       "fixtures", "dynamorio_app.txt")
analysis = client.post("/api/analysis", json={
    "mode": "dbi", "replay_report": fixture, "label": "demo-app"}).json()
pt = analysis["point"]
print(f"  AI {pt['ai']} FLOP/byte, {pt['gflops']:.2f} GFLOP/s, "
      f"region: {analysis['region']}")
