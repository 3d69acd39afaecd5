import pytest

from carmkit import harness, suite


@pytest.fixture
def sklx_machine():
    """Simulated machine configured from published per-cycle peaks of a
    server part with 64-byte vectors: 192 B/cycle L1 and two FMA units
    (32 DP FLOP/cycle at 16 FLOP per 512-bit FMA instruction)."""
    return harness.SimulatedMachine(
        frequency_ghz=3.0, nominal_ghz=3.0,
        l1_bytes=32 * 1024, l2_bytes=1024 * 1024, l3_bytes=1408 * 1024,
        bytes_per_cycle={"L1": 192.0, "L2": 96.0, "L3": 48.0, "DRAM": 8.0},
        fp_ipc=2.0)


@pytest.fixture
def sklx_executor(sklx_machine):
    return harness.SimulatedExecutor(sklx_machine)


@pytest.fixture
def sklx_topology():
    return suite.CacheTopology(l1d_kib=32, l2_kib=1024,
                               l3_total_kib=1408 * 8, l3_slice_kib=1408,
                               source="cli-override")
