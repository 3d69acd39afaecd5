import pytest

from carmkit import isa
from carmkit.errors import (
    DomainError,
    FeatureAbsentError,
    UnsupportedHostError,
)


def test_host_architecture_aliases():
    assert isa.host_architecture("x86_64") == "x86-64"
    assert isa.host_architecture("amd64") == "x86-64"
    assert isa.host_architecture("aarch64") == "aarch64"
    assert isa.host_architecture("arm64") == "aarch64"
    assert isa.host_architecture("riscv64") == "riscv64"
    with pytest.raises(UnsupportedHostError):
        isa.host_architecture("vax")


def test_catalog_contents():
    assert set(isa.supported_isa_names()) == {
        "scalar", "sse", "avx2", "avx512", "neon", "rvv"}
    assert isa.supported_isa_names("aarch64") == ["neon", "scalar"]


@pytest.mark.parametrize("name,arch,dp_bytes", [
    ("scalar", "x86-64", 8), ("sse", "x86-64", 16), ("avx2", "x86-64", 32),
    ("avx512", "x86-64", 64), ("scalar", "aarch64", 8),
    ("neon", "aarch64", 16), ("scalar", "riscv64", 8),
    ("rvv", "riscv64", 16),
])
def test_vector_widths(name, arch, dp_bytes):
    desc = isa.lookup_isa(name, "dp", arch)
    assert desc.vector_bytes["dp"] == dp_bytes
    assert isa.bytes_per_mem_instruction(desc, "dp") == dp_bytes


def test_scalar_needs_architecture_disambiguation_defaults_to_host():
    desc = isa.lookup_isa("scalar")
    assert desc.architecture == isa.host_architecture()


def test_flops_per_instruction_doubles_for_fma():
    avx512 = isa.lookup_isa("avx512", "dp", "x86-64")
    assert isa.flops_per_instruction(avx512, "dp", "add") == 8
    assert isa.flops_per_instruction(avx512, "dp", "fma") == 16
    assert isa.flops_per_instruction(avx512, "sp", "add") == 16
    assert isa.flops_per_instruction(avx512, "sp", "fma") == 32
    scalar = isa.lookup_isa("scalar", "dp", "x86-64")
    assert isa.flops_per_instruction(scalar, "dp", "add") == 1
    assert isa.flops_per_instruction(scalar, "dp", "fma") == 2


def test_fp_per_cycle_doubles_along_the_isa_width_chain():
    """With two FP units and FMA, per-cycle FP ops double with each
    doubling of vector width: 4 (scalar) -> 8 -> 16 -> 32 at DP."""
    units = 2
    chain = [("scalar", 4), ("sse", 8), ("avx2", 16), ("avx512", 32)]
    for name, expected in chain:
        desc = isa.lookup_isa(name, "dp", "x86-64")
        per_cycle = units * isa.flops_per_instruction(desc, "dp", "fma")
        assert per_cycle == expected


def test_detection_from_feature_flags():
    assert list(isa.detect_supported_isas(
        machine="x86_64", cpu_flags={"sse2", "avx2"})) == \
        ["scalar", "sse", "avx2"]
    assert list(isa.detect_supported_isas(
        machine="x86_64", cpu_flags={"sse2", "avx2", "avx512f"})) == \
        ["scalar", "sse", "avx2", "avx512"]
    assert list(isa.detect_supported_isas(
        machine="aarch64", cpu_flags={"asimd"})) == ["scalar", "neon"]
    assert list(isa.detect_supported_isas(
        machine="riscv64", cpu_flags={"v"})) == ["scalar", "rvv"]
    assert list(isa.detect_supported_isas(
        machine="riscv64", cpu_flags=set())) == ["scalar"]


def test_detection_on_this_host_always_includes_scalar():
    assert "scalar" in isa.detect_supported_isas()


def test_aarch64_offset_limit():
    for name in ("scalar", "neon"):
        assert isa.lookup_isa(name, "dp", "aarch64").max_mem_offset == 4095


def test_riscv_offset_limit():
    assert isa.lookup_isa("scalar", "dp", "riscv64").max_mem_offset == 2048


def test_rvv_group_policy():
    rvv = isa.lookup_isa("rvv", "dp", "riscv64")
    assert rvv.pointer_bump_policy == "per-group-of-8"
    assert rvv.group_factor == 8


def test_vector_length_probe():
    # 128-bit registers hold 2 e64 elements; a request of 8192 clamps
    assert isa.probe_max_vector_length(8192, vlen_bits=128) == 2
    assert isa.probe_max_vector_length(8192, vlen_bits=512) == 8
    assert isa.probe_max_vector_length(1, vlen_bits=65536) == 1
    with pytest.raises(FeatureAbsentError):
        isa.probe_max_vector_length(8192, machine="x86_64")


def test_unknown_isa_lookup():
    with pytest.raises(UnsupportedHostError):
        isa.lookup_isa("mmx")


def test_opkind_validation():
    assert isa.OpKind("add", "dp").is_fp
    assert isa.OpKind("load", "sp").is_mem
    with pytest.raises(DomainError):
        isa.OpKind("sqrt", "dp")
