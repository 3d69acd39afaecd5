"""Cache-aware roofline mathematics.

Roof construction, attainable performance, ridge points, and bound-region
classification. Everything here is pure value computation on immutable
objects; models can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigurationError, DomainError

MEMORY_LEVELS = ("L1", "L2", "L3", "DRAM")
REGION_MEMORY = "memory-bound"
REGION_MIXED = "mixed"
REGION_COMPUTE = "compute-bound"

POINT_SOURCES = ("dbi", "pmu", "mixed-benchmark")


def _require_finite(name, value):
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class RoofMeasurement:
    """Measured bandwidth roof for one memory level."""

    level: str
    bandwidth_gbps: float
    ipc: float
    ld_st_ratio: tuple  # (loads, stores)
    isa: str = "scalar"
    precision: str = "dp"
    threads: int = 1

    def __post_init__(self):
        if self.level not in MEMORY_LEVELS:
            raise DomainError(f"unknown memory level {self.level!r}")
        if not self.bandwidth_gbps > 0:
            raise DomainError("bandwidth_gbps must be > 0")
        if self.ipc < 0:
            raise DomainError("ipc must be >= 0")
        loads, stores = self.ld_st_ratio
        if loads < 0 or stores < 0 or loads + stores < 1:
            raise DomainError("ld_st_ratio needs loads+stores >= 1")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")


@dataclass(frozen=True)
class FpCeiling:
    """Measured peak FP throughput for one operation kind."""

    op: str  # add | mul | div | fma
    gflops: float
    ipc: float
    isa: str = "scalar"
    precision: str = "dp"
    threads: int = 1

    def __post_init__(self):
        if self.op not in ("add", "mul", "div", "fma"):
            raise DomainError(f"unknown FP op {self.op!r}")
        if not self.gflops > 0:
            raise DomainError("gflops must be > 0")
        if self.ipc < 0:
            raise DomainError("ipc must be >= 0")


@dataclass(frozen=True)
class CarmModel:
    """Ordered memory roofs plus FP ceilings for one machine configuration."""

    roofs: tuple
    ceilings: tuple
    machine: str = ""
    frequency_ghz: float = 0.0
    warnings: tuple = ()

    @property
    def fp_peak(self):
        return max(c.gflops for c in self.ceilings)

    @property
    def fastest_bandwidth(self):
        return self.roofs[0].bandwidth_gbps

    @property
    def slowest_bandwidth(self):
        return self.roofs[-1].bandwidth_gbps


@dataclass(frozen=True)
class AppPoint:
    """One profiled application / ROI placement on the model."""

    ai: float
    gflops: float
    source: str
    label: str = ""

    def __post_init__(self):
        if not math.isfinite(self.ai) or self.ai < 0:
            raise DomainError("ai must be finite and >= 0")
        if not math.isfinite(self.gflops) or self.gflops < 0:
            raise DomainError("gflops must be finite and >= 0")
        if self.source not in POINT_SOURCES:
            raise DomainError(f"unknown point source {self.source!r}")


def attainable_performance(fp_peak, bandwidth, ai):
    """min(F_p, B*AI), with the ridge point mapping exactly to F_p."""
    for name, v in (("fp_peak", fp_peak), ("bandwidth", bandwidth), ("ai", ai)):
        _require_finite(name, v)
    if fp_peak <= 0 or bandwidth <= 0:
        raise DomainError("fp_peak and bandwidth must be > 0")
    if ai < 0:
        raise DomainError("ai must be >= 0")
    # Comparing against the ridge (rather than min alone) keeps
    # attainable(f, b, ridge_point(f, b)) == f exact in floating point.
    if ai >= fp_peak / bandwidth:
        return fp_peak
    return min(fp_peak, bandwidth * ai)


def ridge_point(fp_peak, bandwidth):
    """AI at which the compute ceiling starts to dominate a roof."""
    _require_finite("fp_peak", fp_peak)
    _require_finite("bandwidth", bandwidth)
    if bandwidth == 0:
        raise DomainError("bandwidth must be nonzero")
    if fp_peak <= 0 or bandwidth < 0:
        raise DomainError("fp_peak and bandwidth must be > 0")
    return fp_peak / bandwidth


def arithmetic_intensity(flops, nbytes):
    """FLOPs per byte of memory traffic seen from the core."""
    if nbytes == 0:
        raise DomainError("bytes must be > 0")
    if nbytes < 0 or flops < 0:
        raise DomainError("flops and bytes must be non-negative")
    return flops / nbytes


def classify_region(model, ai):
    """Assign an AI to the memory-bound / mixed / compute-bound region.

    Boundary points belong to the region on their right: an AI exactly on
    the L1 ridge is mixed, one exactly on the slowest-roof ridge is
    compute-bound.
    """
    if not isinstance(model, CarmModel) or not model.roofs or not model.ceilings:
        raise ConfigurationError("classify_region needs a model with roofs and ceilings")
    _require_finite("ai", ai)
    if ai < 0:
        raise DomainError("ai must be >= 0")
    fp = model.fp_peak
    first_ridge = ridge_point(fp, model.fastest_bandwidth)
    last_ridge = ridge_point(fp, model.slowest_bandwidth)
    if ai < first_ridge:
        return REGION_MEMORY
    if ai >= last_ridge:
        return REGION_COMPUTE
    return REGION_MIXED


_LEVEL_ORDER = {lvl: i for i, lvl in enumerate(MEMORY_LEVELS)}


def build_model(roofs, ceilings, machine="", frequency_ghz=0.0):
    """Validate and level-order measurements into a CarmModel.

    Duplicate (level, ld/st ratio, isa) roofs are rejected. Bandwidth that
    is not non-increasing from L1 outward yields a warning, not an error:
    real measurements can invert near level boundaries and the model must
    still render.
    """
    roofs = list(roofs)
    ceilings = list(ceilings)
    if not roofs:
        raise ConfigurationError("a model needs at least one memory roof")
    if not ceilings:
        raise ConfigurationError("a model needs at least one FP ceiling")
    seen = set()
    for r in roofs:
        key = (r.level, tuple(r.ld_st_ratio), r.isa)
        if key in seen:
            raise ConfigurationError(f"duplicate roof for {key}")
        seen.add(key)
    roofs.sort(key=lambda r: _LEVEL_ORDER[r.level])
    warnings = []
    for inner, outer in zip(roofs, roofs[1:]):
        if outer.bandwidth_gbps > inner.bandwidth_gbps:
            warnings.append(
                f"non-monotonic bandwidth: {outer.level} "
                f"({outer.bandwidth_gbps:g} GB/s) exceeds {inner.level} "
                f"({inner.bandwidth_gbps:g} GB/s)"
            )
    return CarmModel(
        roofs=tuple(roofs),
        ceilings=tuple(ceilings),
        machine=machine,
        frequency_ghz=frequency_ghz,
        warnings=tuple(warnings),
    )
