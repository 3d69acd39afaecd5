"""Local HTTP service for the browser dashboard.

Exposes benchmark launch, run status, stored results, application
analysis, and plot data as JSON over loopback. Runs execute on a single
dedicated worker thread (benchmarks are timing-sensitive, so at most one
is in flight; further submissions are rejected as busy).
"""

from __future__ import annotations

import os
import queue
import threading
import uuid

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import harness, isa as isa_mod, profiler, store, suite
from .errors import CarmError, ConfigurationError
from .model import classify_region

DEFAULT_PORT = 8642
SCHEMA_VERSION = 1

RUN_STATES = ("queued", "running", "done", "failed")


class _RunTable:
    """Run handles guarded by one writer lock; reads take snapshots."""

    def __init__(self):
        self._lock = threading.Lock()
        self._runs = {}
        self._order = []

    def create(self, config_dict):
        run_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._runs[run_id] = {
                "id": run_id, "state": "queued", "config": config_dict,
                "progress": {"phase": "idle", "completed": 0, "total": 0,
                             "current": ""},
                "result": None, "error": None,
                "schema_version": SCHEMA_VERSION,
            }
            self._order.append(run_id)
        return run_id

    def update(self, run_id, **fields):
        with self._lock:
            run = self._runs[run_id]
            new_state = fields.get("state")
            if new_state is not None:
                # the state machine only moves forward
                if RUN_STATES.index(new_state) < RUN_STATES.index(run["state"]):
                    fields = {k: v for k, v in fields.items() if k != "state"}
            run.update(fields)

    def get(self, run_id):
        with self._lock:
            run = self._runs.get(run_id)
            return dict(run) if run else None

    def active(self):
        with self._lock:
            for rid in self._order:
                if self._runs[rid]["state"] in ("queued", "running"):
                    return rid
        return None


def _error(status, message, fields=None):
    body = {"error": message, "schema_version": SCHEMA_VERSION}
    if fields:
        body["field_errors"] = fields
    return JSONResponse(body, status_code=status)


def _parse_config(body):
    """Validate a run-submission body into a SuiteConfig.

    Returns (config, field_errors); exactly one is None. Validation is
    explicit so the client gets one message per offending field.
    """
    errors = {}
    if not isinstance(body, dict):
        return None, {"body": "expected a JSON object"}
    known = {"test", "isa", "precision", "threads", "ld_st_ratio", "fp_op",
             "fp_per_mem", "verbosity"}
    for key in body:
        if key not in known:
            errors[key] = "unknown field"
    test = body.get("test", "roofline")
    if test not in suite.TESTS:
        errors["test"] = f"must be one of {', '.join(suite.TESTS)}"
    isa = body.get("isa", "auto")
    if isa != "auto" and isa not in isa_mod.supported_isa_names():
        errors["isa"] = ("must be 'auto' or one of "
                         f"{', '.join(isa_mod.supported_isa_names())}")
    precision = body.get("precision", "dp")
    if precision not in isa_mod.PRECISIONS:
        errors["precision"] = f"must be one of {', '.join(isa_mod.PRECISIONS)}"
    threads = body.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        errors["threads"] = "must be a positive integer"
    ratio = body.get("ld_st_ratio", [2, 1])
    if (not isinstance(ratio, (list, tuple)) or len(ratio) != 2
            or not all(isinstance(v, int) and v >= 0 for v in ratio)
            or sum(ratio) < 1):
        errors["ld_st_ratio"] = "must be [loads, stores] with loads+stores >= 1"
    fp_op = body.get("fp_op", "add")
    if fp_op not in isa_mod.FP_OPS:
        errors["fp_op"] = f"must be one of {', '.join(sorted(isa_mod.FP_OPS))}"
    fp_per_mem = body.get("fp_per_mem", [1, 6])
    if isinstance(fp_per_mem, int):
        fp_range = (fp_per_mem, fp_per_mem)
    elif (isinstance(fp_per_mem, (list, tuple)) and len(fp_per_mem) == 2
            and all(isinstance(v, int) for v in fp_per_mem)):
        fp_range = tuple(fp_per_mem)
    else:
        errors["fp_per_mem"] = "must be an integer or [lo, hi]"
        fp_range = (1, 6)
    verbosity = body.get("verbosity", 0)
    if not isinstance(verbosity, int) or not 0 <= verbosity <= 3:
        errors["verbosity"] = "must be an integer 0..3"
    if errors:
        return None, errors
    try:
        config = suite.SuiteConfig(
            test=test, isa=isa, precision=precision, threads=threads,
            ld_st_ratio=tuple(ratio), fp_op=fp_op, fp_per_mem_range=fp_range,
            verbosity=verbosity)
    except ConfigurationError as exc:
        return None, {"config": str(exc)}
    return config, None


def _record_json(record):
    return {
        "machine": record.machine, "date": record.date, "isa": record.isa,
        "precision": record.precision, "threads": record.threads,
        "ld_st_ratio": list(record.ld_st_ratio),
        "frequency_ghz": record.frequency_ghz,
        "l1_gbps": record.l1_gbps, "l1_ipc": record.l1_ipc,
        "l2_gbps": record.l2_gbps, "l2_ipc": record.l2_ipc,
        "l3_gbps": record.l3_gbps, "l3_ipc": record.l3_ipc,
        "dram_gbps": record.dram_gbps, "dram_ipc": record.dram_ipc,
        "fp_op": record.fp_op,
        "fp_gflops": record.fp_gflops, "fp_ipc": record.fp_ipc,
        "fma_gflops": record.fma_gflops, "fma_ipc": record.fma_ipc,
        "warnings": list(record.warnings),
    }


def _model_json(model):
    return {
        "machine": model.machine,
        "frequency_ghz": model.frequency_ghz,
        "fp_peak_gflops": model.fp_peak,
        "roofs": [{"level": r.level, "bandwidth_gbps": r.bandwidth_gbps,
                   "ipc": r.ipc, "ld_st_ratio": list(r.ld_st_ratio),
                   "isa": r.isa, "precision": r.precision,
                   "threads": r.threads} for r in model.roofs],
        "ceilings": [{"op": c.op, "gflops": c.gflops, "ipc": c.ipc,
                      "isa": c.isa, "precision": c.precision,
                      "threads": c.threads} for c in model.ceilings],
        "warnings": list(model.warnings),
    }


def create_app(executor=None, results_root=".", topology=None,
               frontend_dir=None, cpu_flags=None):
    """Build the service. The executor is injected so tests and the
    dashboard's development mode run against the simulated machine."""
    executor = executor or harness.SimulatedExecutor()
    archive = store.ResultArchive(results_root)
    app = FastAPI(title="carmkit service", docs_url=None, redoc_url=None)
    runs = _RunTable()
    work = queue.Queue()

    if topology is None:
        try:
            topology = suite.detect_cache_topology()
        except CarmError:
            topology = None

    def worker():
        while True:
            item = work.get()
            if item is None:
                return
            run_id, config = item
            state = suite.RunState()
            runs.update(run_id, state="running")
            stop = threading.Event()

            def track():
                while not stop.wait(0.05):
                    runs.update(run_id, progress=state.snapshot())

            tracker = threading.Thread(target=track, daemon=True)
            tracker.start()
            try:
                result = suite.run_suite(config, executor, topology=topology,
                                         archive=archive, state=state)
                ref = _result_reference(config, result)
                runs.update(run_id, state="done", result=ref,
                            progress=state.snapshot())
            except Exception as exc:  # failures land in the handle
                runs.update(run_id, state="failed", error=str(exc),
                            progress=state.snapshot())
            finally:
                stop.set()
                tracker.join()
                work.task_done()

    def _result_reference(config, result):
        if config.test.startswith("mixed"):
            return {"suite": "mixed",
                    "points": [{"ai": float(p.ai_exact),
                                "ai_exact": [p.ai_exact.numerator,
                                             p.ai_exact.denominator],
                                "gflops": p.gflops, "ipc": p.ipc,
                                "fp_per_mem": p.fp_per_mem,
                                "level": p.level, "fp_op": p.fp_op}
                               for p in result]}
        if config.test == "MEM":
            return {"suite": "memcurve",
                    "points": [[s, b, i] for s, b, i in result.points]}
        return {"suite": "roofline",
                "records": [_record_json(r) for r in result]}

    threading.Thread(target=worker, daemon=True).start()
    app.state.work_queue = work

    @app.get("/api/machine")
    def machine():
        topo = None
        if topology is not None:
            topo = {"l1d_kib": topology.l1d_kib, "l2_kib": topology.l2_kib,
                    "l3_total_kib": topology.l3_total_kib,
                    "l3_slice_kib": topology.l3_slice_kib,
                    "source": topology.source}
        return {"schema_version": SCHEMA_VERSION,
                "machine": suite.machine_identity(),
                "architecture": isa_mod.host_architecture(),
                "isas": list(isa_mod.detect_supported_isas(
                    cpu_flags=cpu_flags)),
                "topology": topo}

    @app.post("/api/runs")
    async def submit_run(request: Request):
        active = runs.active()
        if active is not None:
            return JSONResponse(
                {"error": "a run is already in flight",
                 "active_run_id": active,
                 "schema_version": SCHEMA_VERSION}, status_code=409)
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        config, field_errors = _parse_config(body)
        if field_errors:
            return _error(400, "invalid run configuration", field_errors)
        run_id = runs.create(body if isinstance(body, dict) else {})
        work.put((run_id, config))
        return JSONResponse(runs.get(run_id), status_code=202)

    @app.get("/api/runs/{run_id}")
    def run_status(run_id: str):
        run = runs.get(run_id)
        if run is None:
            return _error(404, f"unknown run id {run_id!r}")
        return run

    @app.get("/api/results")
    def results(suite_name: str = Query("roofline", alias="suite")):
        if suite_name == "roofline":
            records = [_record_json(r) for r in archive.read_roofline()]
        elif suite_name == "memcurve":
            records = [{
                "machine": r.machine, "date": r.date, "isa": r.isa,
                "precision": r.precision, "threads": r.threads,
                "ld_st_ratio": list(r.ld_st_ratio),
                "frequency_ghz": r.frequency_ghz,
                "points": [[s, b, i] for s, b, i in r.points],
                "warnings": list(r.warnings)} for r in archive.read_memcurve()]
        elif suite_name == "mixed":
            records = [{
                "machine": r["machine"], "isa": r["isa"],
                "precision": r["precision"], "threads": r["threads"],
                "point": {"ai": float(r["point"].ai_exact),
                          "gflops": r["point"].gflops,
                          "ipc": r["point"].ipc,
                          "fp_per_mem": r["point"].fp_per_mem,
                          "level": r["point"].level,
                          "fp_op": r["point"].fp_op}}
                for r in archive.read_mixed()]
        else:
            return _error(400, "suite must be roofline, memcurve, or mixed",
                          {"suite": f"unknown suite {suite_name!r}"})
        return {"schema_version": SCHEMA_VERSION, "suite": suite_name,
                "records": records}

    def _latest_model():
        records = [r for r in archive.read_roofline()
                   if r.l1_gbps is not None and
                   (r.fp_gflops is not None or r.fma_gflops is not None)]
        if not records:
            return None
        return records[-1].to_model()

    @app.post("/api/analysis")
    async def analysis(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "expected a JSON object")
        mode = body.get("mode", "dbi")
        label = body.get("label", "")
        try:
            if mode == "dbi":
                replay = body.get("replay_report")
                if not replay:
                    return _error(400, "invalid analysis request",
                                  {"replay_report":
                                   "required (live DBI runs go through the "
                                   "CLI)"})
                point, totals = profiler.run_dbi_profile(
                    body.get("executable", ""),
                    backend=body.get("backend", "dynamorio"),
                    replay_report=replay, label=label)
                extra = {"flops": totals.flops,
                         "bytes_moved": totals.bytes_moved,
                         "warnings": list(totals.warnings)}
            elif mode == "pmu":
                reports = body.get("replay_reports")
                if not reports:
                    return _error(400, "invalid analysis request",
                                  {"replay_reports": "required"})
                point, counts, warns = profiler.run_pmu_profile(
                    body.get("executable", ""),
                    operand_width_bytes=body.get("operand_width_bytes", 8),
                    replay_reports=reports, label=label)
                extra = {"counts": {"lst_ins": counts.lst_ins,
                                    "sp_ops": counts.sp_ops,
                                    "dp_ops": counts.dp_ops},
                         "warnings": list(warns)}
            else:
                return _error(400, "invalid analysis request",
                              {"mode": "must be 'dbi' or 'pmu'"})
        except CarmError as exc:
            return _error(400, str(exc))
        model = _latest_model()
        region = classify_region(model, point.ai) if model else None
        return {"schema_version": SCHEMA_VERSION,
                "point": {"ai": point.ai, "gflops": point.gflops,
                          "source": point.source, "label": point.label},
                "region": region, **extra}

    @app.get("/api/plots/roofline/{run_id}")
    def plot_data(run_id: str):
        run = runs.get(run_id)
        if run is None:
            return _error(404, f"unknown run id {run_id!r}")
        if run["state"] != "done":
            return _error(409, f"run {run_id} is {run['state']}, not done")
        ref = run["result"]
        points = []
        models = []
        if ref["suite"] == "roofline":
            models = [suite.RooflineRecord(
                **{k: (tuple(v) if k in ("ld_st_ratio", "warnings") else v)
                   for k, v in rec.items()}).to_model()
                for rec in ref["records"]]
        elif ref["suite"] == "mixed":
            model = _latest_model()
            if model is not None:
                models = [model]
            points = [{"ai": p["ai"], "gflops": p["gflops"],
                       "source": "mixed-benchmark",
                       "label": f"{p['level']} {p['fp_op']} "
                                f"x{p['fp_per_mem']}",
                       "region": classify_region(model, p["ai"])
                       if model else None}
                      for p in ref["points"]]
        else:
            return _error(400, "memory-curve runs have no roofline plot")
        if models:
            for p in points:
                if p["region"] is None:
                    p["region"] = classify_region(models[0], p["ai"])
        return {"schema_version": SCHEMA_VERSION,
                "models": [_model_json(m) for m in models],
                "points": points}

    if frontend_dir and os.path.isdir(frontend_dir):
        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="frontend")
    return app


def entry():
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(
        prog="carm-serve", description="Dashboard backend service.")
    parser.add_argument("--port", type=int, default=DEFAULT_PORT)
    parser.add_argument("--host", default="127.0.0.1",
                        help="bind address (default: loopback only)")
    parser.add_argument("--results-root",
                        default=os.environ.get("CARM_RESULTS_ROOT", "."))
    parser.add_argument("--simulate", action="store_true",
                        help="execute runs on the simulated machine")
    parser.add_argument("--frontend", default=None,
                        help="directory of built dashboard assets to serve")
    ns = parser.parse_args()
    executor = (harness.SimulatedExecutor() if ns.simulate
                else harness.NativeExecutor())
    app = create_app(executor=executor, results_root=ns.results_root,
                     frontend_dir=ns.frontend)
    uvicorn.run(app, host=ns.host, port=ns.port)


if __name__ == "__main__":
    entry()
