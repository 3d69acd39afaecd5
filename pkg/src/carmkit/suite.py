"""Benchmark suites: roofline, memory curve, and mixed sweeps.

Composes kernel generation and the execution harness into the three suite
types, detects cache topology, sizes per-level working sets, and hands
completed records to the result archive.
"""

from __future__ import annotations

import datetime as _dt
import math
import os
import platform
import re
import socket
import threading
from dataclasses import dataclass, field, replace
from fractions import Fraction

from . import codegen, harness, isa as isa_mod
from .errors import CarmError, ConfigurationError, KernelSpecError
from .model import AppPoint, CarmModel, FpCeiling, RoofMeasurement, build_model

TESTS = ("roofline", "L1", "L2", "L3", "DRAM", "FP", "MEM",
         "mixedL1", "mixedL2", "mixedL3", "mixedDRAM")
DRAM_ARRAY_BYTES = 512 * 1024 * 1024
CURVE_MIN_BYTES = 2 * 1024
CURVE_MAX_BYTES = 512 * 1024 * 1024
CURVE_POINTS_PER_OCTAVE = 4


@dataclass(frozen=True)
class CacheTopology:
    """Per-core data-cache sizes, in KiB."""

    l1d_kib: int | None = None
    l2_kib: int | None = None
    l3_total_kib: int | None = None
    l3_slice_kib: int | None = None
    source: str = "cli-override"  # cpuid | config-file | cli-override

    def __post_init__(self):
        sizes = [s for s in (self.l1d_kib, self.l2_kib, self.l3_total_kib)
                 if s is not None]
        if any(s <= 0 for s in sizes):
            raise ConfigurationError("cache sizes must be positive")
        for inner, outer in zip(sizes, sizes[1:]):
            if inner > outer:
                raise ConfigurationError(
                    f"inconsistent topology: inner cache {inner} KiB larger "
                    f"than outer {outer} KiB")
        if (self.l3_slice_kib is not None and self.l3_total_kib is not None
                and self.l3_slice_kib > self.l3_total_kib):
            raise ConfigurationError("l3 slice cannot exceed l3 total")


@dataclass(frozen=True)
class SuiteConfig:
    test: str = "roofline"
    isa: str = "auto"
    precision: str = "dp"
    threads: int = 1
    ld_st_ratio: tuple = (2, 1)
    fp_op: str = "add"
    fp_per_mem_range: tuple = (1, 6)
    verbosity: int = 0
    architecture: str | None = None
    repetitions: int = harness.DEFAULT_REPETITIONS
    working_set_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.test not in TESTS:
            raise ConfigurationError(f"unknown test {self.test!r}")
        if self.precision not in isa_mod.PRECISIONS:
            raise ConfigurationError(f"unknown precision {self.precision!r}")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        loads, stores = self.ld_st_ratio
        if loads < 0 or stores < 0 or loads + stores < 1:
            raise ConfigurationError("ld_st_ratio needs loads+stores >= 1")
        if self.fp_op not in isa_mod.FP_OPS:
            raise ConfigurationError(f"unknown FP op {self.fp_op!r}")
        lo, hi = self.fp_per_mem_range
        if lo < 1 or hi < lo:
            raise ConfigurationError("fp_per_mem_range must be 1 <= lo <= hi")
        if not 0 <= self.verbosity <= 3:
            raise ConfigurationError("verbosity must be 0..3")


@dataclass(frozen=True)
class RooflineRecord:
    """One complete roofline run: four memory roofs plus two FP ceilings."""

    machine: str
    date: str  # ISO-8601
    isa: str
    precision: str
    threads: int
    ld_st_ratio: tuple
    frequency_ghz: float
    l1_gbps: float | None = None
    l1_ipc: float | None = None
    l2_gbps: float | None = None
    l2_ipc: float | None = None
    l3_gbps: float | None = None
    l3_ipc: float | None = None
    dram_gbps: float | None = None
    dram_ipc: float | None = None
    fp_op: str = "add"
    fp_gflops: float | None = None
    fp_ipc: float | None = None
    fma_gflops: float | None = None
    fma_ipc: float | None = None
    warnings: tuple = ()

    def to_model(self):
        roofs = []
        for level, bw, ipc in (("L1", self.l1_gbps, self.l1_ipc),
                               ("L2", self.l2_gbps, self.l2_ipc),
                               ("L3", self.l3_gbps, self.l3_ipc),
                               ("DRAM", self.dram_gbps, self.dram_ipc)):
            if bw is not None:
                roofs.append(RoofMeasurement(
                    level, bw, ipc or 0.0, self.ld_st_ratio,
                    self.isa, self.precision, self.threads))
        ceilings = []
        if self.fp_gflops is not None:
            ceilings.append(FpCeiling(self.fp_op, self.fp_gflops,
                                      self.fp_ipc or 0.0, self.isa,
                                      self.precision, self.threads))
        if self.fma_gflops is not None:
            ceilings.append(FpCeiling("fma", self.fma_gflops,
                                      self.fma_ipc or 0.0, self.isa,
                                      self.precision, self.threads))
        return build_model(roofs, ceilings, self.machine, self.frequency_ghz)


@dataclass(frozen=True)
class MemoryCurveRecord:
    machine: str
    date: str
    isa: str
    precision: str
    threads: int
    ld_st_ratio: tuple
    frequency_ghz: float
    points: tuple = ()  # (array_bytes, bandwidth_gbps, ipc)
    warnings: tuple = ()


@dataclass(frozen=True)
class MixedPoint:
    """One mixed-sweep result, keeping the nominal AI exact."""

    ai_exact: Fraction
    gflops: float
    ipc: float
    fp_per_mem: int
    level: str
    fp_op: str

    @property
    def ai(self):
        return float(self.ai_exact)

    def as_app_point(self, label=""):
        return AppPoint(float(self.ai_exact), self.gflops,
                        "mixed-benchmark", label)


class RunState:
    """Read-only progress view of the currently executing suite."""

    def __init__(self):
        self._lock = threading.Lock()
        self._phase = "idle"
        self._completed = 0
        self._total = 0
        self._current = ""

    def begin(self, total):
        with self._lock:
            self._phase = "running"
            self._completed = 0
            self._total = total
            self._current = ""

    def step(self, label):
        with self._lock:
            self._current = label

    def done_step(self):
        with self._lock:
            self._completed += 1

    def finish(self, failed=False):
        with self._lock:
            self._phase = "failed" if failed else "done"
            self._current = ""

    def snapshot(self):
        with self._lock:
            return {"phase": self._phase, "completed": self._completed,
                    "total": self._total, "current": self._current}


# --- machine identity and topology ---------------------------------------

def machine_identity(cpuinfo_path="/proc/cpuinfo"):
    """hostname + CPU model string, for tagging stored records."""
    model = platform.processor() or ""
    try:
        with open(cpuinfo_path) as fh:
            for line in fh:
                if line.lower().startswith(("model name", "uarch", "hardware")):
                    model = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    host = socket.gethostname()
    return f"{host} ({model})" if model else host


_SIZE_RE = re.compile(r"^(\d+(?:\.\d+)?)\s*([KMG]?)i?B?$", re.IGNORECASE)
_UNIT_KIB = {"": 1, "K": 1, "M": 1024, "G": 1024 * 1024}


def _parse_size_kib(text):
    """Size in KiB; a bare number is KiB, K/M/G suffixes scale it."""
    m = _SIZE_RE.match(text.strip())
    if not m:
        raise ConfigurationError(f"cannot parse cache size {text!r}")
    value = float(m.group(1)) * _UNIT_KIB[m.group(2).upper()]
    if value != int(value) or value < 1:
        raise ConfigurationError(
            f"cache size {text!r} is not a whole number of KiB >= 1")
    return int(value)


def read_topology_config(path):
    """key=value file with l1 / l2 / l3 / l3_slice sizes (KiB or suffixed)."""
    values = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(
                    f"{path}:{n}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip().lower()
            if key not in ("l1", "l1d", "l2", "l3", "l3_total", "l3_slice"):
                raise ConfigurationError(f"{path}:{n}: unknown key {key!r}")
            try:
                values[key] = _parse_size_kib(val)
            except ConfigurationError as exc:
                raise ConfigurationError(f"{path}:{n}: {exc}") from None
    return values


def _read_sysfs_topology(root):
    l1d = l2 = l3_total = l3_slice = None
    if not os.path.isdir(root):
        return None
    for entry in sorted(os.listdir(root)):
        if not entry.startswith("index"):
            continue
        d = os.path.join(root, entry)
        try:
            with open(os.path.join(d, "level")) as fh:
                level = int(fh.read())
            with open(os.path.join(d, "type")) as fh:
                ctype = fh.read().strip()
            with open(os.path.join(d, "size")) as fh:
                size_kib = _parse_size_kib(fh.read())
        except (OSError, ValueError):
            continue
        if ctype == "Instruction":
            continue
        if level == 1:
            l1d = size_kib
        elif level == 2:
            l2 = size_kib
        elif level == 3:
            l3_total = size_kib
            try:
                with open(os.path.join(d, "shared_cpu_list")) as fh:
                    sharers = _count_cpu_list(fh.read())
                l3_slice = max(1, size_kib // max(1, sharers))
            except (OSError, ValueError):
                l3_slice = size_kib
    if l1d is None and l2 is None and l3_total is None:
        return None
    return {"l1": l1d, "l2": l2, "l3": l3_total, "l3_slice": l3_slice}


def _count_cpu_list(text):
    count = 0
    for part in text.strip().split(","):
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-")
            count += int(hi) - int(lo) + 1
        else:
            count += 1
    return count


def detect_cache_topology(config_path=None, overrides=None, machine=None,
                          sysfs_root="/sys/devices/system/cpu/cpu0/cache"):
    """Topology from hardware enumeration, config file, and CLI overrides.

    Precedence (highest wins): explicit overrides, then config file, then
    hardware detection. Hardware detection is only trusted on x86-64;
    other architectures must supply a config file or overrides.
    """
    arch = isa_mod.host_architecture(machine)
    detected = _read_sysfs_topology(sysfs_root) if arch == "x86-64" else None
    merged = {}
    source = None
    if detected:
        merged.update({k: v for k, v in detected.items() if v is not None})
        source = "cpuid"
    if config_path:
        cfg = read_topology_config(config_path)
        cfg.setdefault("l1", cfg.pop("l1d", None))
        cfg.setdefault("l3", cfg.pop("l3_total", None))
        merged.update({k: v for k, v in cfg.items() if v is not None})
        source = "config-file"
    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        if clean:
            merged.update(clean)
            source = "cli-override"
    if not merged:
        raise ConfigurationError(
            f"no cache topology available on {arch}: supply sizes via a "
            "config file (l1=.../l2=.../l3=... in KiB) or explicit overrides")
    return CacheTopology(
        l1d_kib=merged.get("l1"),
        l2_kib=merged.get("l2"),
        l3_total_kib=merged.get("l3"),
        l3_slice_kib=merged.get("l3_slice", merged.get("l3")),
        source=source,
    )


def working_set_for_level(topology, level, threads=1):
    """Per-thread array size, in bytes, targeting one memory level.

    L1 uses half the L1d so the array stays resident; L2 and L3 use the
    geometric midpoint of the enclosing and inner sizes so the working set
    clearly overflows the inner level without spilling past the target
    (the L3 midpoint is recomputed against the per-core slice when the
    total-based midpoint would overshoot it). DRAM uses a fixed 512 MiB.
    """
    if level == "DRAM":
        return DRAM_ARRAY_BYTES
    if level == "L1":
        if topology is None or topology.l1d_kib is None:
            raise ConfigurationError("L1 working set needs the L1d size")
        return topology.l1d_kib * 1024 // 2
    if level == "L2":
        if topology is None or topology.l1d_kib is None or topology.l2_kib is None:
            raise ConfigurationError("L2 working set needs L1d and L2 sizes")
        mid_kib = math.sqrt(topology.l1d_kib * topology.l2_kib)
        return int(mid_kib * 1024)
    if level == "L3":
        if (topology is None or topology.l2_kib is None
                or topology.l3_total_kib is None):
            raise ConfigurationError("L3 working set needs L2 and L3 sizes")
        slice_kib = topology.l3_slice_kib or topology.l3_total_kib
        mid_kib = math.sqrt(topology.l2_kib * topology.l3_total_kib)
        if mid_kib >= slice_kib:
            mid_kib = math.sqrt(topology.l2_kib * slice_kib)
        return int(mid_kib * 1024)
    raise ConfigurationError(f"unknown memory level {level!r}")


def _align_size(nbytes, multiple):
    """Round to the nearest positive multiple of `multiple`."""
    aligned = round(nbytes / multiple) * multiple
    return max(multiple, aligned)


# --- suite runners --------------------------------------------------------

def _resolve_isas(config, machine=None, cpu_flags=None):
    if config.isa != "auto":
        return [config.isa]
    return list(isa_mod.detect_supported_isas(
        machine=machine or config.architecture, cpu_flags=cpu_flags))


def _frequency(executor, arch, threads):
    probe = codegen.generate_frequency_probe("scalar", architecture=arch)
    return harness.measure_frequency(executor, probe, threads)


def _memory_array_bytes(config, desc, target_bytes, mixed=False):
    multiple = desc.vector_bytes[config.precision] * desc.group_factor
    if mixed:
        # mixed kernels need whole ld/st rounds so the nominal AI stays an
        # exact rational
        loads, stores = config.ld_st_ratio
        multiple *= max(1, loads + stores)
    return _align_size(target_bytes, multiple)


def _run_memory(config, executor, isa_name, array_bytes, freq, arch):
    kernel = codegen.generate_memory_kernel(
        isa_name, config.precision, array_bytes,
        ld_st_ratio=config.ld_st_ratio, architecture=arch)
    return harness.run_benchmark(kernel, executor, config.threads,
                                 config.repetitions, freq)


def _run_fp(config, executor, isa_name, op, freq, arch):
    kernel = codegen.generate_fp_kernel(
        isa_name, config.precision, op, architecture=arch)
    return harness.run_benchmark(kernel, executor, config.threads,
                                 config.repetitions, freq)


def run_roofline_suite(config, executor, topology=None, archive=None,
                       machine=None, state=None, cpu_flags=None):
    """Full roofline: L1/L2/L3/DRAM roofs plus FP and FMA ceilings.

    Returns one record per resolved ISA (a single concrete ISA yields a
    one-element list). Sub-benchmark failures leave the field empty and
    append a warning; the record is still produced and persisted.
    """
    arch = config.architecture
    machine = machine or machine_identity()
    date = _dt.date.today().isoformat()
    isas = _resolve_isas(config, cpu_flags=cpu_flags)
    state = state or RunState()
    levels = _levels_for_test(config.test)
    fp_ops = _fp_ops_for_test(config.test, config.fp_op)
    state.begin(len(isas) * (len(levels) + len(fp_ops)))
    records = []
    freq = _frequency(executor, arch, config.threads)
    try:
        for isa_name in isas:
            desc = isa_mod.lookup_isa(isa_name, config.precision, arch)
            warnings = list(freq.warnings)
            fields = {}
            for level in levels:
                state.step(f"{isa_name} {level}")
                try:
                    target = working_set_for_level(topology, level,
                                                   config.threads) \
                        if level not in config.working_set_overrides \
                        else config.working_set_overrides[level]
                    nbytes = _memory_array_bytes(config, desc, target)
                    res = _run_memory(config, executor, isa_name, nbytes,
                                      freq, arch)
                    fields[f"{level.lower()}_gbps"] = res.bandwidth_gbps
                    fields[f"{level.lower()}_ipc"] = res.ipc
                    warnings.extend(res.warnings)
                except CarmError as exc:
                    warnings.append(f"{level} benchmark failed: {exc}")
                state.done_step()
            for op in fp_ops:
                state.step(f"{isa_name} fp {op}")
                try:
                    res = _run_fp(config, executor, isa_name, op, freq, arch)
                    prefix = "fma" if op == "fma" else "fp"
                    fields[f"{prefix}_gflops"] = res.gflops
                    fields[f"{prefix}_ipc"] = res.ipc
                    warnings.extend(res.warnings)
                except CarmError as exc:
                    warnings.append(f"FP {op} benchmark failed: {exc}")
                state.done_step()
            record = RooflineRecord(
                machine=machine, date=date, isa=isa_name,
                precision=config.precision, threads=config.threads,
                ld_st_ratio=config.ld_st_ratio,
                frequency_ghz=freq.real_ghz, fp_op=config.fp_op,
                warnings=tuple(warnings), **fields)
            if archive is not None:
                archive.write_roofline(record)
            records.append(record)
    except Exception:
        state.finish(failed=True)
        raise
    state.finish()
    return records


def _levels_for_test(test):
    if test in ("roofline", "MEM"):
        return ["L1", "L2", "L3", "DRAM"]
    if test in ("L1", "L2", "L3", "DRAM"):
        return [test]
    if test == "FP":
        return []
    raise ConfigurationError(f"test {test!r} is not a roofline-style test")


def _fp_ops_for_test(test, fp_op):
    if test in ("L1", "L2", "L3", "DRAM", "MEM"):
        return []
    # a full roofline always pairs the configured op with an FMA ceiling
    return [fp_op] if fp_op == "fma" else [fp_op, "fma"]


def curve_sizes(min_bytes=CURVE_MIN_BYTES, max_bytes=CURVE_MAX_BYTES,
                per_octave=CURVE_POINTS_PER_OCTAVE):
    """Geometric sweep sizes; endpoints are always exact."""
    octaves = math.log2(max_bytes / min_bytes)
    n = round(octaves * per_octave)
    return [int(round(min_bytes * 2 ** (k / per_octave))) for k in range(n)] \
        + [max_bytes]


def run_memory_curve(config, executor, topology=None, archive=None,
                     machine=None, state=None, cpu_flags=None):
    """Bandwidth vs working-set size, re-calibrated at every size."""
    arch = config.architecture
    machine = machine or machine_identity()
    isa_name = _resolve_isas(config, cpu_flags=cpu_flags)[-1]
    desc = isa_mod.lookup_isa(isa_name, config.precision, arch)
    freq = _frequency(executor, arch, config.threads)
    state = state or RunState()
    sizes = curve_sizes()
    state.begin(len(sizes))
    points = []
    warnings = list(freq.warnings)
    seen = set()
    for raw in sizes:
        nbytes = _memory_array_bytes(config, desc, raw)
        if nbytes in seen:
            state.done_step()
            continue
        seen.add(nbytes)
        state.step(f"{isa_name} {nbytes} B")
        try:
            res = _run_memory(config, executor, isa_name, nbytes, freq, arch)
            points.append((nbytes, res.bandwidth_gbps, res.ipc))
        except CarmError as exc:
            warnings.append(f"size {nbytes}: {exc}")
        state.done_step()
    state.finish()
    record = MemoryCurveRecord(
        machine=machine, date=_dt.date.today().isoformat(), isa=isa_name,
        precision=config.precision, threads=config.threads,
        ld_st_ratio=config.ld_st_ratio, frequency_ghz=freq.real_ghz,
        points=tuple(points), warnings=tuple(warnings))
    if archive is not None:
        archive.write_memcurve(record)
    return record


def run_mixed_suite(config, executor, topology=None, archive=None,
                    machine=None, state=None, cpu_flags=None):
    """Sweep FP-per-memory-group ratios against one memory level."""
    if not config.test.startswith("mixed"):
        raise ConfigurationError(
            f"run_mixed_suite needs a mixed* test, got {config.test!r}")
    level = config.test[len("mixed"):]
    arch = config.architecture
    isa_name = _resolve_isas(config, cpu_flags=cpu_flags)[-1]
    desc = isa_mod.lookup_isa(isa_name, config.precision, arch)
    if level in config.working_set_overrides:
        target = config.working_set_overrides[level]
    else:
        target = working_set_for_level(topology, level, config.threads)
    nbytes = _memory_array_bytes(config, desc, target, mixed=True)
    freq = _frequency(executor, arch, config.threads)
    lo, hi = config.fp_per_mem_range
    state = state or RunState()
    state.begin(hi - lo + 1)
    points = []
    for fp_per_mem in range(lo, hi + 1):
        state.step(f"{isa_name} mixed {level} fp_per_mem={fp_per_mem}")
        kernel = codegen.generate_mixed_kernel(
            isa_name, config.precision, nbytes, config.fp_op,
            fp_per_mem=fp_per_mem, ld_st_ratio=config.ld_st_ratio,
            architecture=arch)
        res = harness.run_benchmark(kernel, executor, config.threads,
                                    config.repetitions, freq)
        points.append(MixedPoint(
            ai_exact=kernel.expected.nominal_ai(),
            gflops=res.gflops, ipc=res.ipc, fp_per_mem=fp_per_mem,
            level=level, fp_op=config.fp_op))
        state.done_step()
    state.finish()
    if archive is not None:
        archive.write_mixed(points, machine=machine or machine_identity(),
                            isa=isa_name, precision=config.precision,
                            threads=config.threads)
    return points


def run_suite(config, executor, **kwargs):
    """Dispatch a SuiteConfig to the matching runner."""
    if config.test.startswith("mixed"):
        return run_mixed_suite(config, executor, **kwargs)
    if config.test == "MEM":
        return run_memory_curve(config, executor, **kwargs)
    return run_roofline_suite(config, executor, **kwargs)
