"""carmkit: cache-aware roofline benchmarking and application analysis.

Builds per-memory-level bandwidth roofs and FP ceilings from generated
assembly microbenchmarks, places profiled applications on the resulting
model, and persists/renders everything as CSV and SVG. A local HTTP
service exposes the same capabilities to the browser dashboard.
"""

from .errors import (
    BackendError,
    CalibrationError,
    CarmError,
    CodegenError,
    ConfigurationError,
    DomainError,
    FeatureAbsentError,
    KernelSpecError,
    ParseError,
    SchemaError,
    ToolchainError,
    UnsupportedHostError,
)
from .model import (
    AppPoint,
    CarmModel,
    FpCeiling,
    REGION_COMPUTE,
    REGION_MEMORY,
    REGION_MIXED,
    RoofMeasurement,
    arithmetic_intensity,
    attainable_performance,
    build_model,
    classify_region,
    ridge_point,
)
from .isa import (
    IsaDescriptor,
    OpKind,
    detect_supported_isas,
    host_architecture,
    lookup_isa,
    supported_isa_names,
)
from .codegen import (
    ExpectedCounts,
    KernelSource,
    KernelSpec,
    generate,
    generate_fp_kernel,
    generate_frequency_probe,
    generate_memory_kernel,
    generate_mixed_kernel,
    plan_loops,
    verify_kernel,
)
from .harness import (
    BenchResult,
    FrequencyReading,
    NativeExecutor,
    Sample,
    SimulatedExecutor,
    SimulatedMachine,
    aggregate,
    calibrate_outer_iterations,
    execute,
    measure_frequency,
    real_cycles,
    run_benchmark,
)
from .suite import (
    CacheTopology,
    MemoryCurveRecord,
    MixedPoint,
    RooflineRecord,
    SuiteConfig,
    curve_sizes,
    detect_cache_topology,
    run_memory_curve,
    run_mixed_suite,
    run_roofline_suite,
    run_suite,
    working_set_for_level,
)
from .profiler import (
    OpcodeCounts,
    PmuCounts,
    build_classification,
    classify_and_total,
    compute_app_point,
    dbi_app_point,
    parse_dbi_report,
    parse_pmu_report,
    pmu_app_point,
    run_dbi_profile,
    run_pmu_profile,
)
from .store import (
    ResultArchive,
    render_memcurve_svg,
    render_roofline_svg,
)

__version__ = "1.0.0"

__all__ = [name for name in dir() if not name.startswith("_")]
