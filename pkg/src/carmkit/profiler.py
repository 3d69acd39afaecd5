"""Application profiling: opcode-histogram and hardware-counter analysis.

Turns the textual reports of external profilers into arithmetic intensity
and GFLOPS. Two instrumentation backends (an opcode-counting DynamoRIO
client and Intel SDE's dynamic statistics) and one counter backend (three
single-event passes over a marked region) are supported. Every
subprocess-driven entry point accepts a recorded report in place of live
execution, so the whole module is testable without any profiler installed.
"""

from __future__ import annotations

import json
import os
import shutil
import statistics
import subprocess
from dataclasses import dataclass, field

from . import isa as isa_mod
from .errors import BackendError, DomainError, ParseError
from .model import AppPoint, arithmetic_intensity

DBI_BACKENDS = ("dynamorio", "sde")
PMU_EVENTS = ("lst_ins", "sp_ops", "dp_ops")
_EVENT_NAMES = {  # counter-library event name -> our field
    "PAPI_LST_INS": "lst_ins",
    "PAPI_SP_OPS": "sp_ops",
    "PAPI_DP_OPS": "dp_ops",
}

# Command templates, overridable per call. {root} is the backend install
# path, {out} the report file the backend must produce.
DEFAULT_COMMANDS = {
    "dynamorio": ["{root}/bin64/drrun", "-c", "{root}/clients/opcode_count.so",
                  "--output", "{out}", "--", "{exe}"],
    "sde": ["{root}/sde64", "-mix", "-omix", "{out}", "--", "{exe}"],
}


@dataclass(frozen=True)
class OpcodeCounts:
    counts: dict  # mnemonic -> dynamic count
    elapsed_seconds: float
    backend: str

    def __post_init__(self):
        if self.backend not in DBI_BACKENDS:
            raise DomainError(f"unknown DBI backend {self.backend!r}")
        if not self.elapsed_seconds > 0:
            raise DomainError("elapsed_seconds must be > 0")
        if any(c < 0 for c in self.counts.values()):
            raise DomainError("opcode counts must be >= 0")


@dataclass(frozen=True)
class PmuCounts:
    lst_ins: int
    sp_ops: int
    dp_ops: int
    elapsed_seconds: float
    region: str = "roi"

    def __post_init__(self):
        if min(self.lst_ins, self.sp_ops, self.dp_ops) < 0:
            raise DomainError("counter values must be >= 0")
        if not self.elapsed_seconds > 0:
            raise DomainError("elapsed_seconds must be > 0")


@dataclass(frozen=True)
class Totals:
    flops: int
    bytes_moved: int
    breakdown: dict = field(default_factory=dict)  # class tag -> instruction count
    unclassified: dict = field(default_factory=dict)  # mnemonic -> count
    warnings: tuple = ()


def build_classification(architecture=None):
    """Opcode -> (flops, bytes-moved) map from the instruction catalog.

    Every FP opcode maps to (per-instruction FLOPs, 0); every memory
    opcode to (0, operand width in bytes). The tag records ISA family and
    role for breakdown reporting.
    """
    table = {}
    reg_class = {16: "xmm", 32: "ymm", 64: "zmm"}
    for desc in isa_mod.all_descriptors():
        if architecture and desc.architecture != architecture:
            continue
        for (precision, op), mnem in desc.fp_opcodes.items():
            flops = isa_mod.flops_per_instruction(desc, precision, op)
            entry = (flops, 0, f"{desc.name}-fp-{op}")
            # bare mnemonics are ambiguous across vector widths on x86
            # (vaddpd is both 256- and 512-bit); histograms can use the
            # register-class-suffixed form to pin the width
            table.setdefault(mnem, entry)
            suffix = reg_class.get(desc.vector_bytes[precision])
            if desc.architecture == "x86-64" and suffix:
                table[f"{mnem}_{suffix}"] = entry
        for (precision, _role), mnem in desc.mem_opcodes.items():
            nbytes = isa_mod.bytes_per_mem_instruction(desc, precision)
            entry = (0, nbytes, f"{desc.name}-mem")
            table.setdefault(mnem, entry)
            suffix = reg_class.get(desc.vector_bytes[precision])
            if desc.architecture == "x86-64" and suffix:
                table[f"{mnem}_{suffix}"] = entry
    return table


def classify_and_total(counts, classification=None):
    """Sum FLOPs and bytes over a histogram; tally unknown opcodes."""
    table = classification or build_classification()
    flops = 0
    nbytes = 0
    breakdown = {}
    unclassified = {}
    total_dyn = 0
    for mnem, count in counts.counts.items():
        total_dyn += count
        entry = table.get(mnem)
        if entry is None:
            unclassified[mnem] = unclassified.get(mnem, 0) + count
            continue
        f, b, tag = entry
        flops += f * count
        nbytes += b * count
        breakdown[tag] = breakdown.get(tag, 0) + count
    warnings = []
    unk = sum(unclassified.values())
    if total_dyn and unk / total_dyn > 0.01:
        top = sorted(unclassified.items(), key=lambda kv: -kv[1])[:5]
        listing = ", ".join(f"{m} ({c})" for m, c in top)
        warnings.append(
            f"{unk / total_dyn:.1%} of dynamic instructions unclassified; "
            f"top offenders: {listing}")
    return Totals(flops, nbytes, breakdown, unclassified, tuple(warnings))


# --- report parsing -------------------------------------------------------

def parse_dbi_report(backend, text):
    """Parse an opcode histogram.

    The DynamoRIO client writes ``<count> : <mnemonic>`` lines; the SDE
    statistics report writes ``<mnemonic> <count>``. Both carry an
    ``elapsed_seconds: <float>`` metadata line from the region timer.
    Comment lines start with '#'.
    """
    if backend not in DBI_BACKENDS:
        raise ParseError(f"unknown DBI backend {backend!r}")
    counts = {}
    elapsed = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        low = line.lower()
        if low.startswith("elapsed_seconds"):
            _, _, val = line.partition(":")
            try:
                elapsed = float(val)
            except ValueError:
                raise ParseError(f"bad elapsed_seconds value {val.strip()!r}",
                                 line=n)
            continue
        if backend == "dynamorio":
            count_s, sep, mnem = line.partition(":")
            if not sep:
                raise ParseError(
                    f"expected '<count> : <mnemonic>', got {line!r}", line=n)
            mnem = mnem.strip()
            count_s = count_s.strip()
        else:
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(
                    f"expected '<mnemonic> <count>', got {line!r}", line=n)
            mnem, count_s = parts
        try:
            count = int(count_s)
        except ValueError:
            raise ParseError(f"bad count {count_s!r}", line=n)
        if count < 0:
            raise ParseError(f"negative count for {mnem!r}", line=n)
        counts[mnem] = counts.get(mnem, 0) + count
    if elapsed is None:
        raise ParseError("report carries no elapsed_seconds line")
    return OpcodeCounts(counts=counts, elapsed_seconds=elapsed, backend=backend)


def parse_pmu_report(text):
    """Merge the three single-event counter passes of one region.

    Input is one JSON object per line:
    ``{"region": ..., "event": "PAPI_DP_OPS", "count": N,
    "elapsed_seconds": T}``. Each pass measures exactly one event; the
    merged elapsed time is the median across passes. A duplicated event
    keeps the later pass's count, with a warning.
    """
    events = {}
    elapsed = []
    region = "roi"
    warnings = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", line=n)
        try:
            name = obj["event"]
            count = int(obj["count"])
            elapsed.append(float(obj["elapsed_seconds"]))
            region = obj.get("region", region)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"incomplete pass record: {exc}", line=n)
        fld = _EVENT_NAMES.get(name, name.lower())
        if fld not in PMU_EVENTS:
            raise ParseError(f"unknown counter event {name!r}", line=n)
        if fld in events:
            warnings.append(
                f"event {name} appears in more than one pass; later pass wins")
        events[fld] = count
    missing = [e for e in PMU_EVENTS if e not in events]
    if missing:
        raise ParseError(
            "missing counter event(s): " + ", ".join(missing))
    counts = PmuCounts(
        lst_ins=events["lst_ins"], sp_ops=events["sp_ops"],
        dp_ops=events["dp_ops"],
        elapsed_seconds=statistics.median(elapsed), region=region)
    return counts, tuple(warnings)


# --- point computation ----------------------------------------------------

def compute_app_point(flops, nbytes, seconds, label="", source="dbi"):
    """AI = FLOPs/bytes; GFLOPS = FLOPs per second / 1e9."""
    if seconds <= 0:
        raise DomainError("seconds must be > 0")
    ai = arithmetic_intensity(flops, nbytes)
    return AppPoint(ai=ai, gflops=flops / seconds / 1e9,
                    source=source, label=label)


def pmu_app_point(counts, operand_width_bytes, label=""):
    """Counter-based point; memory traffic is lst_ins x operand width.

    The operand width is an explicit input because the counters only
    report instruction counts, not widths; callers should pass the
    dominant vector width of the profiled binary.
    """
    if operand_width_bytes <= 0:
        raise DomainError("operand_width_bytes must be > 0")
    flops = counts.sp_ops + counts.dp_ops
    nbytes = counts.lst_ins * operand_width_bytes
    return compute_app_point(flops, nbytes, counts.elapsed_seconds,
                             label=label, source="pmu")


def dbi_app_point(counts, classification=None, label=""):
    totals = classify_and_total(counts, classification)
    point = compute_app_point(totals.flops, totals.bytes_moved,
                              counts.elapsed_seconds, label=label,
                              source="dbi")
    return point, totals


# --- subprocess drivers ---------------------------------------------------

def _render_command(template, root, exe, out, args):
    cmd = [part.format(root=root, exe=exe, out=out) for part in template]
    return cmd + list(args)


def run_dbi_profile(executable, args=(), backend="dynamorio", backend_root=None,
                    replay_report=None, classification=None, label="",
                    archive_dir=None, command_template=None):
    """Profile an executable under a DBI backend and compute its point.

    With ``replay_report`` set, the recorded report is parsed instead of
    launching anything (replay mode). Otherwise the backend is invoked as
    a subprocess using its command template and must write the report to
    the path handed to it.
    """
    if replay_report is not None:
        try:
            with open(replay_report) as fh:
                text = fh.read()
        except OSError as exc:
            raise BackendError(f"cannot read replay report: {exc}") from None
    else:
        if backend not in DBI_BACKENDS:
            raise BackendError(f"unknown DBI backend {backend!r}")
        if backend_root is None or not os.path.isdir(backend_root):
            raise BackendError(
                f"backend {backend!r} not found at {backend_root!r}; pass "
                "backend_root= (CLI: --dbi-path) pointing at its install "
                "directory, or use replay_report= with a recorded report")
        out = os.path.join(archive_dir or ".", f"{backend}_report.txt")
        cmd = _render_command(command_template or DEFAULT_COMMANDS[backend],
                              backend_root, executable, out, args)
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise BackendError(
                f"{backend} exited with {proc.returncode}:\n{proc.stderr}")
        with open(out) as fh:
            text = fh.read()
    counts = parse_dbi_report(backend, text)
    if archive_dir is not None and replay_report is not None:
        os.makedirs(archive_dir, exist_ok=True)
        shutil.copy(replay_report,
                    os.path.join(archive_dir, os.path.basename(replay_report)))
    return dbi_app_point(counts, classification, label=label)


def run_pmu_profile(executable, args=(), operand_width_bytes=8,
                    replay_reports=None, label="", runner=None):
    """Three single-event passes over the marked region, merged.

    ``replay_reports`` is a sequence of recorded pass outputs (text, one
    JSON line each, or multi-line). For live runs a ``runner`` callable
    ``(executable, args, event_name) -> pass text`` must be supplied by
    the integration layer; there is no default because counter access is
    system-specific (a permission error should cite the kernel's
    perf_event_paranoid setting).
    """
    if replay_reports is not None:
        texts = []
        for path in replay_reports:
            try:
                with open(path) as fh:
                    texts.append(fh.read())
            except OSError as exc:
                raise BackendError(
                    f"cannot read replay report: {exc}") from None
    elif runner is not None:
        texts = [runner(executable, args, name) for name in _EVENT_NAMES]
    else:
        raise BackendError(
            "live counter profiling needs a runner; on Linux ensure "
            "/proc/sys/kernel/perf_event_paranoid permits counter access, "
            "or use replay_reports= with recorded pass outputs")
    merged_text = "\n".join(texts)
    counts, warnings = parse_pmu_report(merged_text)
    point = pmu_app_point(counts, operand_width_bytes, label=label)
    return point, counts, warnings
