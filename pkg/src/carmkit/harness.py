"""Kernel execution: frequency measurement, calibration, timing, aggregation.

The harness drives an executor object through barrier-synchronized,
repeated runs and reduces the samples to a BenchResult. Two executors are
provided: a deterministic simulated machine (used throughout the test
suite and usable on any host) and a native executor that assembles kernels
through the system toolchain into a shared object and times real runs.
"""

from __future__ import annotations

import ctypes
import os
import statistics
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field, replace

from .errors import CalibrationError, ConfigurationError, DomainError, ToolchainError

DEFAULT_REPETITIONS = 1024
INSTRUMENTED_REPETITIONS = 10  # DBI-backed runs gain nothing from more
CALIBRATION_WINDOW = (0.010, 0.200)  # seconds per repetition
MAX_CALIBRATION_PROBES = 40


@dataclass(frozen=True)
class ExecutablePlan:
    kernel: object  # KernelSource
    outer_iters: int
    threads: int = 1
    pinning: tuple = ()
    repetitions: int = DEFAULT_REPETITIONS

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be >= 1")
        if self.outer_iters < 1:
            raise ConfigurationError("outer_iters must be >= 1")
        if self.pinning:
            if len(self.pinning) != self.threads:
                raise ConfigurationError("pinning length must equal threads")
            if len(set(self.pinning)) != len(self.pinning):
                raise ConfigurationError("pinned CPUs must be distinct")


@dataclass(frozen=True)
class Sample:
    thread_id: int
    repetition: int
    elapsed: float  # seconds, or cycles when source == 'tsc'
    source: str = "seconds"  # seconds | tsc

    def __post_init__(self):
        if not self.elapsed > 0:
            raise DomainError("sample elapsed must be > 0")


@dataclass(frozen=True)
class BenchResult:
    bandwidth_gbps: float
    gflops: float
    ipc: float
    elapsed_best: float
    frequency_ghz: float
    isa: str = ""
    precision: str = "dp"
    ld_st_ratio: tuple = (2, 1)
    threads: int = 1
    array_bytes: int = 0
    warnings: tuple = ()


@dataclass(frozen=True)
class FrequencyReading:
    per_thread_ghz: tuple
    real_ghz: float
    nominal_ghz: float | None = None
    warnings: tuple = ()


def real_cycles(tsc_cycles, real_ghz, nominal_ghz):
    """Scale TSC counts (which tick at nominal frequency) to real cycles."""
    if real_ghz <= 0 or nominal_ghz <= 0:
        raise DomainError("frequencies must be > 0")
    return tsc_cycles * (real_ghz / nominal_ghz)


# --- executors ------------------------------------------------------------

@dataclass
class SimulatedMachine:
    """Deterministic throughput oracle standing in for real hardware.

    Memory kernels run at the configured bytes/cycle of the cache level
    their working set falls into; FP kernels run at fp_ipc instructions
    per cycle; mixed kernels overlap and take the slower of the two.
    """

    frequency_ghz: float = 3.0
    nominal_ghz: float | None = None
    l1_bytes: int = 32 * 1024
    l2_bytes: int = 1024 * 1024
    l3_bytes: int = 1408 * 1024
    bytes_per_cycle: dict = field(default_factory=lambda: {
        "L1": 192.0, "L2": 64.0, "L3": 32.0, "DRAM": 8.0})
    fp_ipc: float = 2.0
    mem_ipc_cap: float | None = None  # optional instruction-rate ceiling

    def level_for(self, array_bytes):
        if array_bytes <= self.l1_bytes:
            return "L1"
        if array_bytes <= self.l2_bytes:
            return "L2"
        if array_bytes <= self.l3_bytes:
            return "L3"
        return "DRAM"

    def elapsed_seconds(self, kernel, outer_iters):
        hz = self.frequency_ghz * 1e9
        expected = kernel.expected
        spec = kernel.spec
        if spec.kind == "freq-probe":
            # dependent add chain retires one instruction per cycle
            return kernel.plan.inner_unroll * outer_iters / hz
        t_mem = 0.0
        t_fp = 0.0
        if expected.mem_inst_per_outer_iter:
            nbytes = expected.bytes_per_outer_iter() * outer_iters
            bpc = self.bytes_per_cycle[self.level_for(spec.array_bytes)]
            t_mem = nbytes / (bpc * hz)
            if self.mem_ipc_cap:
                t_mem = max(t_mem, expected.mem_inst_per_outer_iter
                            * outer_iters / (self.mem_ipc_cap * hz))
        if expected.fp_inst_per_outer_iter:
            t_fp = expected.fp_inst_per_outer_iter * outer_iters / (self.fp_ipc * hz)
        t = max(t_mem, t_fp)
        if t <= 0:
            raise ConfigurationError("kernel has neither memory nor FP work")
        return t


class SimulatedExecutor:
    """Executor backed by a SimulatedMachine; fully deterministic."""

    def __init__(self, machine=None):
        self.machine = machine or SimulatedMachine()
        nom = self.machine.nominal_ghz
        self.supports_tsc = nom is not None

    def run(self, kernel, outer_iters, thread_id=0):
        elapsed = self.machine.elapsed_seconds(kernel, outer_iters)
        tsc = None
        if self.supports_tsc:
            tsc = elapsed * self.machine.nominal_ghz * 1e9
        return elapsed, tsc

    def pin(self, thread_id, cpu):
        return True


class NativeExecutor:
    """Assemble kernels into a shared object and execute them for real.

    Uses the system cc driver as assembler/linker, loads the .so with
    ctypes, and calls the kernel through the fixed
    (array pointer, outer iterations) signature. Timing uses the OS
    monotonic clock; TSC reads are not wired through this path.
    """

    supports_tsc = False

    def __init__(self, cc="cc", workdir=None):
        self.cc = cc
        self.workdir = workdir or tempfile.mkdtemp(prefix="carmkit-")
        self._cache = {}

    def _load(self, kernel):
        fn = self._cache.get(kernel.name)
        if fn is not None:
            return fn
        src = os.path.join(self.workdir, kernel.name + ".S")
        obj = os.path.join(self.workdir, kernel.name + ".so")
        with open(src, "w") as fh:
            fh.write(kernel.assembly_text)
        proc = subprocess.run(
            [self.cc, "-shared", "-nostdlib", "-o", obj, src],
            capture_output=True, text=True)
        if proc.returncode != 0:
            raise ToolchainError(
                f"assembling {kernel.name} failed:\n{proc.stderr}")
        lib = ctypes.CDLL(obj)
        fn = getattr(lib, kernel.name)
        fn.argtypes = [ctypes.c_void_p, ctypes.c_uint64]
        fn.restype = None
        self._cache[kernel.name] = (lib, fn)
        return self._cache[kernel.name]

    def _array(self, nbytes):
        if nbytes <= 0:
            return None
        buf = ctypes.create_string_buffer(nbytes + 64)
        addr = ctypes.addressof(buf)
        aligned = (addr + 63) & ~63
        # keep the buffer alive alongside the aligned pointer
        return buf, aligned

    def run(self, kernel, outer_iters, thread_id=0):
        _, fn = self._load(kernel)
        holder = self._array(kernel.spec.array_bytes)
        ptr = holder[1] if holder else None
        t0 = time.perf_counter_ns()
        fn(ptr, outer_iters)
        t1 = time.perf_counter_ns()
        return (t1 - t0) / 1e9, None

    def pin(self, thread_id, cpu):
        try:
            os.sched_setaffinity(0, {cpu})
            return True
        except OSError:
            return False


def default_pinning(threads):
    """Distinct logical CPUs, lowest-numbered first."""
    try:
        cpus = sorted(os.sched_getaffinity(0))
    except AttributeError:
        cpus = list(range(os.cpu_count() or 1))
    return tuple(cpus[i % len(cpus)] for i in range(threads))


# --- frequency ------------------------------------------------------------

def measure_frequency(executor, probe_kernel, threads=1, outer_iters=1_000_000):
    """Run the dependent-add probe on every thread simultaneously.

    Each thread's frequency is the known instruction count over its
    measured time (the chain retires at one instruction per cycle). When
    the executor exposes a TSC, the nominal frequency is the TSC cycle
    count over the same wall time.
    """
    chain_per_iter = probe_kernel.plan.inner_unroll
    results = [None] * threads
    barrier = threading.Barrier(threads)

    def worker(tid):
        barrier.wait()
        elapsed, tsc = executor.run(probe_kernel, outer_iters, tid)
        results[tid] = (elapsed, tsc)

    if threads == 1:
        worker(0)
    else:
        ts = [threading.Thread(target=worker, args=(i,)) for i in range(threads)]
        for t in ts:
            t.start()
        for t in ts:
            t.join()

    insts = chain_per_iter * outer_iters
    per_thread = tuple(insts / r[0] / 1e9 for r in results)
    nominal = None
    if getattr(executor, "supports_tsc", False) and results[0][1] is not None:
        nominal = statistics.median(r[1] / r[0] / 1e9 for r in results)
    warnings = []
    spread = (max(per_thread) - min(per_thread)) / max(per_thread)
    if spread > 0.10:
        warnings.append(
            f"per-thread frequency spread {spread:.1%} exceeds 10% "
            "(thermal or turbo instability)")
    return FrequencyReading(
        per_thread_ghz=per_thread,
        real_ghz=statistics.median(per_thread),
        nominal_ghz=nominal,
        warnings=tuple(warnings),
    )


# --- calibration ----------------------------------------------------------

def calibrate_outer_iterations(executor, kernel, window=CALIBRATION_WINDOW,
                               max_iters=1 << 62):
    """Find an outer iteration count whose single run lands in the window."""
    t_min, t_max = window
    iters = 1
    for _ in range(MAX_CALIBRATION_PROBES):
        elapsed, _ = executor.run(kernel, iters)
        if elapsed >= t_min:
            if elapsed <= t_max or iters == 1:
                return iters
            iters = max(1, iters // 2)
            elapsed, _ = executor.run(kernel, iters)
            return iters
        if iters >= max_iters:
            raise CalibrationError(
                f"kernel {kernel.name}: cannot reach {t_min}s even at "
                f"{iters} outer iterations")
        iters = min(max_iters, iters * 2)
    raise CalibrationError(
        f"kernel {kernel.name}: calibration did not converge in "
        f"{MAX_CALIBRATION_PROBES} probes")


# --- execution ------------------------------------------------------------

def execute(plan, executor):
    """Run a plan: threads x repetitions samples, barrier per repetition."""
    threads = plan.threads
    pinning = plan.pinning or default_pinning(threads)
    warnings = []
    samples = [[] for _ in range(threads)]
    barrier = threading.Barrier(threads)
    lock = threading.Lock()

    def worker(tid):
        if not executor.pin(tid, pinning[tid]):
            with lock:
                warnings.append(
                    f"could not pin thread {tid} to CPU {pinning[tid]}; "
                    "running unpinned")
        for rep in range(plan.repetitions):
            barrier.wait()
            elapsed, tsc = executor.run(plan.kernel, plan.outer_iters, tid)
            if tsc is not None:
                samples[tid].append(Sample(tid, rep, tsc, "tsc"))
            else:
                samples[tid].append(Sample(tid, rep, elapsed, "seconds"))

    if threads == 1:
        worker(0)
    else:
        ts = [threading.Thread(target=worker, args=(i,)) for i in range(threads)]
        for t in ts:
            t.start()
        for t in ts:
            t.join()

    flat = [s for per in samples for s in per]
    return flat, tuple(warnings)


def _sample_seconds(sample, freq):
    if sample.source == "seconds":
        return sample.elapsed
    if freq.nominal_ghz is None:
        raise ConfigurationError("TSC samples need a nominal frequency")
    cycles = real_cycles(sample.elapsed, freq.real_ghz, freq.nominal_ghz)
    return cycles / (freq.real_ghz * 1e9)


def aggregate(samples, expected, freq, outer_iters, threads=1,
              config=None, warnings=()):
    """Best run per thread, median across threads, scaled by counts.

    Bandwidth and GFLOPS sum over threads (each thread drives a private
    array); IPC is per-core.
    """
    if not samples:
        raise ConfigurationError("aggregate needs at least one sample")
    if isinstance(freq, (int, float)):
        freq = FrequencyReading((float(freq),), float(freq))
    per_thread = {}
    for s in samples:
        sec = _sample_seconds(s, freq)
        cur = per_thread.get(s.thread_id)
        per_thread[s.thread_id] = sec if cur is None else min(cur, sec)
    if len(per_thread) != threads:
        raise ConfigurationError(
            f"samples cover {len(per_thread)} threads, expected {threads}")
    elapsed = statistics.median(per_thread.values())

    bytes_total = expected.bytes_per_outer_iter() * outer_iters * threads
    flops_total = expected.flops_per_outer_iter() * outer_iters * threads
    inst_per_thread = (expected.mem_inst_per_outer_iter
                       + expected.fp_inst_per_outer_iter) * outer_iters
    cfg = config or {}
    return BenchResult(
        bandwidth_gbps=bytes_total / elapsed / 1e9,
        gflops=flops_total / elapsed / 1e9,
        ipc=inst_per_thread / (elapsed * freq.real_ghz * 1e9),
        elapsed_best=elapsed,
        frequency_ghz=freq.real_ghz,
        isa=cfg.get("isa", ""),
        precision=cfg.get("precision", "dp"),
        ld_st_ratio=tuple(cfg.get("ld_st_ratio", (2, 1))),
        threads=threads,
        array_bytes=cfg.get("array_bytes", 0),
        warnings=tuple(warnings),
    )


def run_benchmark(kernel, executor, threads=1, repetitions=DEFAULT_REPETITIONS,
                  freq=None, pinning=(), window=CALIBRATION_WINDOW):
    """Calibrate, execute, and aggregate one kernel end to end."""
    if freq is None:
        from .codegen import generate_frequency_probe
        probe = generate_frequency_probe(
            "scalar", architecture=kernel.isa.architecture)
        freq = measure_frequency(executor, probe, threads)
    outer = calibrate_outer_iterations(executor, kernel, window)
    plan = ExecutablePlan(kernel=kernel, outer_iters=outer, threads=threads,
                          pinning=tuple(pinning), repetitions=repetitions)
    samples, warnings = execute(plan, executor)
    spec = kernel.spec
    return aggregate(
        samples, kernel.expected, freq, outer, threads,
        config={"isa": spec.isa, "precision": spec.precision,
                "ld_st_ratio": spec.ld_st_ratio,
                "array_bytes": spec.array_bytes},
        warnings=warnings,
    )
