import math

import pytest

from carmkit import model, suite
from carmkit.errors import ConfigurationError
from carmkit.harness import SimulatedExecutor, SimulatedMachine
from carmkit.suite import (
    CacheTopology,
    MemoryCurveRecord,
    RunState,
    SuiteConfig,
    curve_sizes,
    detect_cache_topology,
    read_topology_config,
    run_memory_curve,
    run_mixed_suite,
    run_roofline_suite,
    run_suite,
    working_set_for_level,
)


# --- configuration objects --------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigurationError):
        SuiteConfig(test="warp-speed")
    with pytest.raises(ConfigurationError):
        SuiteConfig(precision="hp")
    with pytest.raises(ConfigurationError):
        SuiteConfig(threads=0)
    with pytest.raises(ConfigurationError):
        SuiteConfig(ld_st_ratio=(0, 0))
    with pytest.raises(ConfigurationError):
        SuiteConfig(fp_op="sqrt")
    with pytest.raises(ConfigurationError):
        SuiteConfig(fp_per_mem_range=(3, 1))
    with pytest.raises(ConfigurationError):
        SuiteConfig(verbosity=5)


def test_topology_monotonicity():
    with pytest.raises(ConfigurationError):
        CacheTopology(l1d_kib=64, l2_kib=32)
    with pytest.raises(ConfigurationError):
        CacheTopology(l3_total_kib=100, l3_slice_kib=200)
    with pytest.raises(ConfigurationError):
        CacheTopology(l1d_kib=-1)


# --- topology detection -----------------------------------------------------

def _write_sysfs(root, entries):
    for name, fields in entries.items():
        d = root / name
        d.mkdir(parents=True)
        for key, value in fields.items():
            (d / key).write_text(value)


def test_sysfs_detection(tmp_path):
    _write_sysfs(tmp_path, {
        "index0": {"level": "1", "type": "Data", "size": "32K",
                   "shared_cpu_list": "0-1"},
        "index1": {"level": "1", "type": "Instruction", "size": "32K"},
        "index2": {"level": "2", "type": "Unified", "size": "1024K"},
        "index3": {"level": "3", "type": "Unified", "size": "11264K",
                   "shared_cpu_list": "0-15"},
    })
    topo = detect_cache_topology(machine="x86_64", sysfs_root=str(tmp_path))
    assert topo.l1d_kib == 32
    assert topo.l2_kib == 1024
    assert topo.l3_total_kib == 11264
    assert topo.l3_slice_kib == 11264 // 16
    assert topo.source == "cpuid"


def test_sysfs_ignored_on_non_x86(tmp_path):
    _write_sysfs(tmp_path, {
        "index0": {"level": "1", "type": "Data", "size": "32K"}})
    with pytest.raises(ConfigurationError):
        detect_cache_topology(machine="aarch64", sysfs_root=str(tmp_path))


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "caches.conf"
    cfg.write_text("# sizes in KiB unless suffixed\n"
                   "l1 = 48\n"
                   "l2 = 1.25M\n"
                   "l3 = 24M\n"
                   "l3_slice = 2M\n")
    values = read_topology_config(str(cfg))
    assert values == {"l1": 48, "l2": 1280, "l3": 24576, "l3_slice": 2048}


def test_config_file_error_cites_line(tmp_path):
    cfg = tmp_path / "caches.conf"
    cfg.write_text("l1 = 32\nnot a setting\n")
    with pytest.raises(ConfigurationError, match=r"caches\.conf:2"):
        read_topology_config(str(cfg))
    cfg.write_text("l9 = 32\n")
    with pytest.raises(ConfigurationError, match=r"caches\.conf:1"):
        read_topology_config(str(cfg))


def test_precedence_override_beats_config_beats_sysfs(tmp_path):
    sysfs = tmp_path / "cache"
    _write_sysfs(sysfs, {
        "index0": {"level": "1", "type": "Data", "size": "32K"},
        "index2": {"level": "2", "type": "Unified", "size": "256K"},
    })
    cfg = tmp_path / "caches.conf"
    cfg.write_text("l2 = 512\nl3 = 8192\n")
    topo = detect_cache_topology(config_path=str(cfg),
                                 overrides={"l3": 16384},
                                 machine="x86_64", sysfs_root=str(sysfs))
    assert topo.l1d_kib == 32      # from hardware
    assert topo.l2_kib == 512      # config file wins over hardware
    assert topo.l3_total_kib == 16384  # explicit override wins over all
    assert topo.source == "cli-override"


def test_no_topology_raises_actionable_error(tmp_path):
    with pytest.raises(ConfigurationError, match="config file"):
        detect_cache_topology(machine="riscv64",
                              sysfs_root=str(tmp_path / "nope"))


# --- working-set sizing -----------------------------------------------------

def test_working_set_rules(sklx_topology):
    # half of L1d
    assert working_set_for_level(sklx_topology, "L1") == 16 * 1024
    # geometric midpoint of L1d (32) and L2 (1024) = 181.02 KiB
    l2 = working_set_for_level(sklx_topology, "L2")
    assert l2 == int(math.sqrt(32 * 1024) * 1024)
    # L3: sqrt(1024*11264) = 3396 KiB overshoots the 1408 KiB slice, so
    # the midpoint is recomputed against the slice: sqrt(1024*1408) = 1200.8
    l3 = working_set_for_level(sklx_topology, "L3")
    assert l3 == int(math.sqrt(1024 * 1408) * 1024)
    # 1 MiB < L3 working set < slice: inside the open interval (L2, slice)
    assert 1024 * 1024 < l3 < 1408 * 1024
    assert working_set_for_level(sklx_topology, "DRAM") == 512 * 1024 * 1024


def test_working_set_missing_sizes():
    topo = CacheTopology(l1d_kib=32)
    with pytest.raises(ConfigurationError):
        working_set_for_level(topo, "L2")
    with pytest.raises(ConfigurationError):
        working_set_for_level(None, "L1")
    with pytest.raises(ConfigurationError):
        working_set_for_level(topo, "L7")


def test_l3_midpoint_kept_when_within_slice():
    topo = CacheTopology(l1d_kib=32, l2_kib=256, l3_total_kib=1024,
                         l3_slice_kib=1024)
    # sqrt(256*1024) = 512 KiB < slice: the total-based midpoint stands
    assert working_set_for_level(topo, "L3") == 512 * 1024


# --- roofline suite ----------------------------------------------------------

def test_roofline_suite_sklx(sklx_executor, sklx_topology):
    cfg = SuiteConfig(isa="avx512", architecture="x86-64", repetitions=3)
    records = run_roofline_suite(cfg, sklx_executor, sklx_topology,
                                 machine="sklx-sim")
    assert len(records) == 1
    r = records[0]
    assert r.l1_gbps == pytest.approx(576.0, rel=1e-9)
    assert r.l1_ipc == pytest.approx(3.0, abs=1e-6)
    assert r.l2_gbps == pytest.approx(288.0, rel=1e-9)
    assert r.l3_gbps == pytest.approx(144.0, rel=1e-9)
    assert r.dram_gbps == pytest.approx(24.0, rel=1e-9)
    assert r.fp_gflops == pytest.approx(48.0, rel=1e-9)   # add: 2 x 8 x 3G
    assert r.fma_gflops == pytest.approx(96.0, rel=1e-9)  # fma doubles
    assert r.fma_ipc == pytest.approx(2.0, abs=1e-6)
    m = r.to_model()
    assert model.ridge_point(m.fp_peak, m.fastest_bandwidth) == \
        pytest.approx(1 / 6, abs=1e-4)


def test_roofline_auto_isa_produces_record_per_isa(sklx_executor,
                                                  sklx_topology):
    cfg = SuiteConfig(isa="auto", architecture="x86-64", repetitions=2)
    records = run_roofline_suite(
        cfg, sklx_executor, sklx_topology, machine="sklx-sim",
        cpu_flags={"sse2", "avx2", "avx512f"})
    assert [r.isa for r in records] == ["scalar", "sse", "avx2", "avx512"]
    # narrower vectors at the same bytes/cycle give lower per-inst IPC need
    assert all(r.l1_gbps == pytest.approx(576.0, rel=1e-9) for r in records)


def test_single_level_test_fills_only_that_roof(sklx_executor, sklx_topology):
    cfg = SuiteConfig(test="L2", isa="avx512", architecture="x86-64",
                      repetitions=2)
    r = run_roofline_suite(cfg, sklx_executor, sklx_topology,
                           machine="m")[0]
    assert r.l2_gbps is not None
    assert r.l1_gbps is None and r.fp_gflops is None


def test_failed_subbenchmark_leaves_field_empty_with_warning(sklx_topology):
    cfg = SuiteConfig(test="FP", isa="avx512", architecture="x86-64",
                      precision="dp", repetitions=2, fp_op="div")

    class _NoDivExecutor(SimulatedExecutor):
        def run(self, kernel, outer_iters, thread_id=0):
            if "div" in kernel.assembly_text:
                raise ConfigurationError("divide unit unavailable")
            return super().run(kernel, outer_iters, thread_id)

    ex = _NoDivExecutor(SimulatedMachine())
    r = run_roofline_suite(cfg, ex, sklx_topology, machine="m")[0]
    assert r.fp_gflops is None
    assert r.fma_gflops is not None
    assert any("div" in w for w in r.warnings)


def test_run_state_progression(sklx_executor, sklx_topology):
    cfg = SuiteConfig(test="L1", isa="avx512", architecture="x86-64",
                      repetitions=2)
    state = RunState()
    run_roofline_suite(cfg, sklx_executor, sklx_topology, machine="m",
                       state=state)
    snap = state.snapshot()
    assert snap["phase"] == "done"
    assert snap["completed"] == snap["total"] == 1


# --- memory curve ------------------------------------------------------------

def test_curve_has_73_points_with_exact_endpoints():
    sizes = curve_sizes()
    assert len(sizes) == 73
    assert sizes[0] == 2 * 1024
    assert sizes[-1] == 512 * 1024 * 1024
    assert sizes == sorted(sizes)
    # four points per octave: every 4th point doubles (up to the 1-byte
    # rounding of each size to an integer)
    for a, b in zip(sizes, sizes[4:]):
        assert abs(b - 2 * a) <= 2


def test_memory_curve_is_a_step_function_of_cache_levels(sklx_executor,
                                                         sklx_topology):
    cfg = SuiteConfig(test="MEM", isa="avx512", architecture="x86-64",
                      repetitions=2)
    rec = run_memory_curve(cfg, sklx_executor, sklx_topology, machine="m")
    assert isinstance(rec, MemoryCurveRecord)
    assert len(rec.points) == 73
    by_size = dict((s, bw) for s, bw, _ in rec.points)
    # plateaus at the simulated per-level bandwidths; the simulated L3 is
    # 1408 KiB, so only sizes in (1 MiB, 1408 KiB] read the L3 rate
    assert by_size[2048] == pytest.approx(576.0, rel=1e-9)
    assert by_size[512 * 1024] == pytest.approx(288.0, rel=1e-9)
    assert by_size[512 * 1024 * 1024] == pytest.approx(24.0, rel=1e-9)
    levels = sorted(set(round(bw, 6) for _, bw, _ in rec.points),
                    reverse=True)
    assert levels == [576.0, 288.0, 144.0, 24.0]
    # and is monotonically non-increasing in between
    bws = [bw for _, bw, _ in rec.points]
    assert all(a >= b - 1e-9 for a, b in zip(bws, bws[1:]))


def test_memory_curve_point_order_matches_size_order(sklx_executor,
                                                     sklx_topology):
    cfg = SuiteConfig(test="MEM", isa="avx512", architecture="x86-64",
                      repetitions=2)
    rec = run_memory_curve(cfg, sklx_executor, sklx_topology, machine="m")
    sizes = [s for s, _, _ in rec.points]
    assert sizes == sorted(sizes)


# --- mixed sweep -------------------------------------------------------------

def test_mixed_sweep_sklx(sklx_executor, sklx_topology):
    cfg = SuiteConfig(test="mixedL1", isa="avx512", architecture="x86-64",
                      fp_op="fma", repetitions=2)
    points = run_mixed_suite(cfg, sklx_executor, sklx_topology, machine="m")
    assert [p.fp_per_mem for p in points] == [1, 2, 3, 4, 5, 6]
    # every measured point must respect the model bound for its own AI
    m = run_roofline_suite(
        SuiteConfig(isa="avx512", architecture="x86-64", repetitions=2),
        sklx_executor, sklx_topology, machine="m")[0].to_model()
    for p in points:
        bound = model.attainable_performance(
            m.fp_peak, m.fastest_bandwidth, p.ai)
        assert p.gflops <= bound * (1 + 1e-9)
    # performance rises with AI until the ridge
    gflops = [p.gflops for p in points]
    assert gflops == sorted(gflops)


def test_mixed_requires_mixed_test(sklx_executor, sklx_topology):
    cfg = SuiteConfig(test="L1", isa="avx512", architecture="x86-64")
    with pytest.raises(ConfigurationError):
        run_mixed_suite(cfg, sklx_executor, sklx_topology)


# --- dispatcher --------------------------------------------------------------

def test_run_suite_dispatch(sklx_executor, sklx_topology):
    kw = dict(topology=sklx_topology, machine="m")
    r = run_suite(SuiteConfig(test="L1", isa="avx512",
                              architecture="x86-64", repetitions=2),
                  sklx_executor, **kw)
    assert r[0].l1_gbps is not None
    rec = run_suite(SuiteConfig(test="MEM", isa="avx512",
                                architecture="x86-64", repetitions=2),
                    sklx_executor, **kw)
    assert isinstance(rec, MemoryCurveRecord)
    pts = run_suite(SuiteConfig(test="mixedL1", isa="avx512",
                                architecture="x86-64", repetitions=2),
                    sklx_executor, **kw)
    assert pts[0].ai_exact is not None
