"""Command-line driver for benchmark suites and application analysis.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

from . import harness, isa as isa_mod, profiler, store, suite
from .errors import CarmError, ConfigurationError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_RATIO_DEFAULT = "2:1"


@dataclass
class CliInvocation:
    action: str  # suite | analyze
    config: suite.SuiteConfig | None = None
    plot: bool = False
    simulate: bool = False
    results_root: str = "."
    topology_config: str | None = None
    topology_overrides: dict = field(default_factory=dict)
    analyze_target: str | None = None
    dbi_backend: str = "dynamorio"
    dbi_path: str | None = None
    replay_report: str | None = None
    pmu: bool = False
    pmu_reports: tuple = ()
    pmu_width: int = 8
    verbosity: int = 0


def _ratio(text):
    try:
        loads, _, stores = text.partition(":")
        pair = (int(loads), int(stores))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected LOADS:STORES (e.g. 2:1), got {text!r}")
    if pair[0] < 0 or pair[1] < 0 or sum(pair) < 1:
        raise argparse.ArgumentTypeError("ratio needs loads+stores >= 1")
    return pair


def build_parser():
    p = argparse.ArgumentParser(
        prog="carm",
        description="Cache-aware roofline benchmarking and application "
                    "analysis.")
    g = p.add_argument_group("benchmark selection")
    g.add_argument("--test", default="roofline", choices=suite.TESTS,
                   help="benchmark type (default: roofline)")
    g.add_argument("--isa", default="auto",
                   help="instruction set, or 'auto' to benchmark every "
                        "detected one (default: auto)")
    g.add_argument("--precision", default="dp", choices=isa_mod.PRECISIONS,
                   help="floating-point precision (default: dp)")
    g.add_argument("--threads", type=int, default=1,
                   help="worker threads (default: 1)")
    g.add_argument("--ld_st_ratio", "-ldst", dest="ld_st_ratio", type=_ratio,
                   default=_RATIO_DEFAULT, metavar="L:S",
                   help="load:store instruction ratio (default: 2:1)")
    g.add_argument("--only_ld", action="store_true",
                   help="memory kernels issue loads only")
    g.add_argument("--only_st", action="store_true",
                   help="memory kernels issue stores only")
    g.add_argument("--inst", default="add",
                   choices=sorted(isa_mod.FP_OPS),
                   help="FP operation for FP and mixed kernels "
                        "(default: add)")
    g.add_argument("--fpldst", type=int, metavar="N",
                   help="mixed suite: fixed FP instructions per memory "
                        "group (default: sweep 1..6)")

    t = p.add_argument_group("machine topology")
    t.add_argument("--config", dest="topology_config", metavar="FILE",
                   help="cache-size config file (l1=.../l2=.../l3=..., KiB)")
    t.add_argument("--l1", type=int, metavar="KIB", help="L1d size override")
    t.add_argument("--l2", type=int, metavar="KIB", help="L2 size override")
    t.add_argument("--l3", type=int, metavar="KIB",
                   help="L3 total size override")
    t.add_argument("--l3_slice", type=int, metavar="KIB",
                   help="L3 per-core slice size override")

    a = p.add_argument_group("application analysis")
    a.add_argument("--analyze", metavar="EXE",
                   help="profile an executable instead of benchmarking")
    a.add_argument("--dbi", default="dynamorio",
                   choices=profiler.DBI_BACKENDS,
                   help="instrumentation backend (default: dynamorio)")
    a.add_argument("--dbi-path", dest="dbi_path", metavar="DIR",
                   help="install directory of the instrumentation backend")
    a.add_argument("--replay", metavar="REPORT",
                   help="parse a recorded report instead of launching the "
                        "backend")
    a.add_argument("--pmu", action="store_true",
                   help="use hardware counters instead of instrumentation")
    a.add_argument("--pmu-report", dest="pmu_reports", action="append",
                   default=[], metavar="REPORT",
                   help="recorded counter pass output (repeatable)")
    a.add_argument("--pmu-width", dest="pmu_width", type=int, default=8,
                   metavar="BYTES",
                   help="operand width for counter byte accounting "
                        "(default: 8)")

    o = p.add_argument_group("output")
    o.add_argument("--plot", action="store_true",
                   help="also render an SVG plot next to the CSV")
    o.add_argument("--simulate", action="store_true",
                   help="run on the deterministic simulated machine "
                        "instead of real hardware")
    o.add_argument("--results-root", dest="results_root",
                   default=os.environ.get("CARM_RESULTS_ROOT", "."),
                   metavar="DIR",
                   help="directory holding the Results/ tree "
                        "(default: $CARM_RESULTS_ROOT or .)")
    o.add_argument("-v", dest="verbosity", type=int, default=0,
                   choices=(0, 1, 2, 3),
                   help="output detail, 0 (quiet) to 3 (per-benchmark "
                        "internals)")
    return p


def parse_args(argv):
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.only_ld and ns.only_st:
        parser.error("--only_ld and --only_st are mutually exclusive")
    ratio = ns.ld_st_ratio
    if isinstance(ratio, str):
        ratio = _ratio(ratio)
    if ns.only_ld:
        ratio = (ratio[0] or 1, 0)
    elif ns.only_st:
        ratio = (0, ratio[1] or 1)
    overrides = {}
    for key, val in (("l1", ns.l1), ("l2", ns.l2), ("l3", ns.l3),
                     ("l3_slice", ns.l3_slice)):
        if val is not None:
            overrides[key] = val
    inv = CliInvocation(
        action="analyze" if ns.analyze else "suite",
        plot=ns.plot, simulate=ns.simulate, results_root=ns.results_root,
        topology_config=ns.topology_config, topology_overrides=overrides,
        analyze_target=ns.analyze, dbi_backend=ns.dbi, dbi_path=ns.dbi_path,
        replay_report=ns.replay, pmu=ns.pmu,
        pmu_reports=tuple(ns.pmu_reports), pmu_width=ns.pmu_width,
        verbosity=ns.verbosity)
    if inv.action == "suite":
        fp_range = (ns.fpldst, ns.fpldst) if ns.fpldst else (1, 6)
        try:
            inv.config = suite.SuiteConfig(
                test=ns.test, isa=ns.isa, precision=ns.precision,
                threads=ns.threads, ld_st_ratio=ratio, fp_op=ns.inst,
                fp_per_mem_range=fp_range, verbosity=ns.verbosity)
        except ConfigurationError as exc:
            parser.error(str(exc))
    return inv


def canonical_args(inv):
    """Serialize an invocation back to a canonical argument vector.

    parse_args(canonical_args(parse_args(argv))) is the identity on the
    parsed form for every documented flag combination.
    """
    args = []
    if inv.action == "analyze":
        args += ["--analyze", inv.analyze_target, "--dbi", inv.dbi_backend]
        if inv.dbi_path:
            args += ["--dbi-path", inv.dbi_path]
        if inv.replay_report:
            args += ["--replay", inv.replay_report]
        if inv.pmu:
            args.append("--pmu")
        for r in inv.pmu_reports:
            args += ["--pmu-report", r]
        args += ["--pmu-width", str(inv.pmu_width)]
    else:
        c = inv.config
        args += ["--test", c.test, "--isa", c.isa,
                 "--precision", c.precision, "--threads", str(c.threads),
                 "--ld_st_ratio", f"{c.ld_st_ratio[0]}:{c.ld_st_ratio[1]}",
                 "--inst", c.fp_op]
        if c.fp_per_mem_range[0] == c.fp_per_mem_range[1]:
            args += ["--fpldst", str(c.fp_per_mem_range[0])]
    if inv.topology_config:
        args += ["--config", inv.topology_config]
    for key in ("l1", "l2", "l3", "l3_slice"):
        if key in inv.topology_overrides:
            args += [f"--{key}", str(inv.topology_overrides[key])]
    if inv.plot:
        args.append("--plot")
    if inv.simulate:
        args.append("--simulate")
    args += ["--results-root", inv.results_root, "-v", str(inv.verbosity)]
    return args


def _say(inv, level, message):
    if inv.verbosity >= level:
        print(message)


def _topology(inv):
    try:
        return suite.detect_cache_topology(
            config_path=inv.topology_config,
            overrides=inv.topology_overrides or None)
    except ConfigurationError:
        if inv.simulate:
            # simulated machine carries its own sizes
            return suite.CacheTopology(l1d_kib=32, l2_kib=1024,
                                       l3_total_kib=1408 * 8,
                                       l3_slice_kib=1408,
                                       source="cli-override")
        raise


def _run_suite(inv):
    config = inv.config
    if config.isa != "auto" and config.isa not in isa_mod.supported_isa_names():
        print(f"error: unsupported ISA {config.isa!r}; supported: "
              f"{', '.join(isa_mod.supported_isa_names())}", file=sys.stderr)
        return EXIT_USAGE
    executor = (harness.SimulatedExecutor() if inv.simulate
                else harness.NativeExecutor())
    topology = _topology(inv)
    archive = store.ResultArchive(inv.results_root)
    _say(inv, 1, f"running {config.test} ({config.isa}, {config.precision}, "
                 f"{config.threads} thread(s))")
    if config.test.startswith("mixed"):
        points = suite.run_mixed_suite(config, executor, topology=topology,
                                       archive=archive)
        for p in points:
            _say(inv, 1, f"  AI {float(p.ai_exact):.6g} "
                         f"({p.ai_exact}): {p.gflops:.6g} GFLOP/s, "
                         f"IPC {p.ipc:.4g}")
        print(archive.path_for("mixed"))
        return EXIT_OK
    if config.test == "MEM":
        record = suite.run_memory_curve(config, executor, topology=topology,
                                        archive=archive)
        for nbytes, bw, ipc in record.points:
            _say(inv, 3, f"  {nbytes} B: {bw:.6g} GB/s, IPC {ipc:.4g}")
        if inv.plot:
            svg = store.render_memcurve_svg(record, topology)
            path = os.path.join(inv.results_root, "Results", "MemoryCurve",
                                "curve.svg")
            with open(path, "w") as fh:
                fh.write(svg)
            _say(inv, 1, f"plot written to {path}")
        print(archive.path_for("memcurve"))
        return EXIT_OK
    records = suite.run_roofline_suite(config, executor, topology=topology,
                                       archive=archive)
    for record in records:
        _say(inv, 1, f"[{record.isa}] frequency {record.frequency_ghz:.4g} "
                     "GHz")
        for level in ("l1", "l2", "l3", "dram"):
            bw = getattr(record, f"{level}_gbps")
            ipc = getattr(record, f"{level}_ipc")
            if bw is not None:
                _say(inv, 3, f"  {level.upper()}: {bw:.6g} GB/s, "
                             f"IPC {ipc:.4g}")
        for prefix, op in (("fp", record.fp_op), ("fma", "fma")):
            gf = getattr(record, f"{prefix}_gflops")
            ipc = getattr(record, f"{prefix}_ipc")
            if gf is not None:
                _say(inv, 3, f"  FP {op}: {gf:.6g} GFLOP/s, IPC {ipc:.4g}")
        for w in record.warnings:
            _say(inv, 2, f"  warning: {w}")
        if inv.plot:
            svg = store.render_roofline_svg(record.to_model())
            path = os.path.join(inv.results_root, "Results", "Roofline",
                                f"roofline_{record.isa}.svg")
            with open(path, "w") as fh:
                fh.write(svg)
            _say(inv, 1, f"plot written to {path}")
    print(archive.path_for("roofline"))
    return EXIT_OK


def _run_analysis(inv):
    if inv.pmu:
        point, counts, warnings = profiler.run_pmu_profile(
            inv.analyze_target,
            operand_width_bytes=inv.pmu_width,
            replay_reports=inv.pmu_reports or None,
            label=os.path.basename(inv.analyze_target or "app"))
        for w in warnings:
            _say(inv, 2, f"warning: {w}")
        _say(inv, 3, f"counters: lst_ins={counts.lst_ins} "
                     f"sp_ops={counts.sp_ops} dp_ops={counts.dp_ops}")
    else:
        point, totals = profiler.run_dbi_profile(
            inv.analyze_target, backend=inv.dbi_backend,
            backend_root=inv.dbi_path, replay_report=inv.replay_report,
            label=os.path.basename(inv.analyze_target or "app"))
        for w in totals.warnings:
            _say(inv, 2, f"warning: {w}")
        _say(inv, 3, f"totals: {totals.flops} FLOPs, "
                     f"{totals.bytes_moved} bytes")
    print(f"{point.label or 'app'}: AI {point.ai:.6g} FLOP/byte, "
          f"{point.gflops:.6g} GFLOP/s ({point.source})")
    return EXIT_OK


def main(argv=None):
    try:
        inv = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        if inv.action == "analyze":
            return _run_analysis(inv)
        return _run_suite(inv)
    except CarmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
