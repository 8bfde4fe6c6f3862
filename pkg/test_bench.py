"""
Tests for the sequence-length scaling benchmark.
"""

import numpy as np
import pytest

from ssmdrive.errors import ContractError
from ssmdrive.evaluation import loglog_slope, measure, scaling_benchmark, scaling_rows

SMALL = [16, 32, 64, 96, 128]


def test_loglog_slope_recovers_powers():
    lengths = [10, 20, 40, 80, 160]
    assert loglog_slope(lengths, [3.0 * n for n in lengths]) == pytest.approx(1.0)
    assert loglog_slope(lengths, [0.5 * n**2 for n in lengths]) == pytest.approx(2.0)
    assert loglog_slope([10], [1.0]) is None


def test_measure_reports_time_and_allocation():
    ms, peak = measure(lambda: np.zeros(100_000), repeats=2)
    assert ms >= 0.0
    assert peak >= 800_000


def test_lengths_must_increase():
    with pytest.raises(ContractError):
        scaling_benchmark([16, 32, 64, 128])
    with pytest.raises(ContractError):
        scaling_benchmark([16, 32, 32, 64, 128])
    with pytest.raises(ContractError, match="span at least 8x"):
        scaling_benchmark([16, 20, 24, 28, 32])


def test_small_sweep_produces_both_curves():
    report = scaling_benchmark(SMALL, width=8, repeats=1, state=4)
    assert set(report.curves) == {"bmamba", "attention"}
    for curve in report.curves.values():
        assert [p.length for p in curve.points] == SMALL
        assert not any(p.failed for p in curve.points)
        assert curve.time_slope is not None and curve.memory_slope is not None
    rows = scaling_rows(report)
    assert len(rows) == 2 * len(SMALL)
    assert set(rows[0]) == {"layer", "length", "time_ms", "peak_bytes", "failed"}


@pytest.mark.slow
def test_scaling_slopes():
    """B-Mamba grows linearly with sequence length, attention quadratically."""
    report = scaling_benchmark([256, 512, 1024, 2048, 4096, 8192, 16384], width=64, repeats=5)
    mamba, attention = report.curves["bmamba"], report.curves["attention"]
    assert 0.8 <= mamba.time_slope <= 1.3
    assert 1.7 <= attention.time_slope <= 2.3
    largest = attention.points[-1]
    # an attention run that could not allocate counts as using more memory
    assert largest.failed or mamba.points[-1].peak_bytes < largest.peak_bytes
