import math

import numpy as np
import pytest

import maxwalk as mw
from maxwalk.montecarlo import default_bins, histogram_csv, summary_json


def test_reproducible_summaries():
    spec = mw.DistributionSpec("uniform")
    a = mw.simulate(spec, 8, 10**4, 31415)
    b = mw.simulate(spec, 8, 10**4, 31415)
    assert summary_json(a) == summary_json(b)
    assert np.array_equal(a.bin_counts, b.bin_counts)
    c = mw.simulate(spec, 8, 10**4, 31416)
    assert not np.array_equal(a.bin_counts, c.bin_counts)


def test_sample_floor():
    with pytest.raises(ValueError):
        mw.simulate(mw.DistributionSpec("gaussian"), 8, 10**3, 1)


def test_one_step_symmetric():
    summary = mw.simulate(mw.DistributionSpec("gaussian"), 1, 10**5, 7)
    assert abs(summary.nonpos_hat - 0.5) <= 3 * summary.nonpos_se


def test_histogram_accounts_for_everything():
    summary = mw.simulate(mw.DistributionSpec("laplace"), 4, 10**4, 11)
    total = int(summary.bin_counts.sum()) + summary.underflow + summary.overflow
    assert total == summary.samples


def test_agreement_with_grid_law(small_grid):
    walk = mw.compute_walk(mw.DistributionSpec("mixture"), 8, small_grid)
    summary = mw.simulate(mw.DistributionSpec("mixture"), 8, 10**5, 123)
    z, tv_hist = mw.empirical_compare(summary, walk)
    assert z <= 4.0
    allowance = mw.binning_allowance(walk, 8, summary.bin_edges, summary.samples)
    assert tv_hist <= 0.01 + allowance
    assert summary.m2_plus_hat == pytest.approx(
        mw.moment(mw.rescale_sqrt(walk.max_laws[8], 8), 2, "positive"), abs=0.02
    )


def test_bin_refinement_consistency(small_grid):
    walk = mw.compute_walk(mw.DistributionSpec("gaussian"), 8, small_grid)
    coarse = mw.simulate(mw.DistributionSpec("gaussian"), 8, 10**5, 5)
    fine = mw.simulate(
        mw.DistributionSpec("gaussian"), 8, 10**5, 5, bins=default_bins(width=0.025)
    )
    _, tv_coarse = mw.empirical_compare(coarse, walk)
    _, tv_fine = mw.empirical_compare(fine, walk)
    a1 = mw.binning_allowance(walk, 8, coarse.bin_edges, coarse.samples)
    a2 = mw.binning_allowance(walk, 8, fine.bin_edges, fine.samples)
    assert abs(tv_fine - tv_coarse) <= a1 + a2


def test_mean_limit_large_n():
    # E(max/sqrt(n)) approaches E|Z| = sqrt(2/pi) from below
    summary = mw.simulate(mw.DistributionSpec("gaussian"), 64, 2 * 10**5, 2024)
    assert summary.mean_max_scaled == pytest.approx(
        math.sqrt(2.0 / math.pi), abs=0.08
    )
    assert summary.mean_max_scaled < math.sqrt(2.0 / math.pi)


def test_serialization_formats():
    summary = mw.simulate(mw.DistributionSpec("spike"), 4, 10**4, 17)
    text = summary_json(summary)
    assert '"spec": "spike"' in text and '"seed": 17' in text
    hist = histogram_csv(summary)
    lines = hist.splitlines()
    assert lines[0] == "bin_lo,bin_hi,count"
    assert lines[1].startswith("-inf,")
    assert lines[-1].endswith(f",{summary.overflow}")


def test_mismatched_compare_rejected(small_grid):
    walk = mw.compute_walk(mw.DistributionSpec("gaussian"), 4, small_grid)
    summary = mw.simulate(mw.DistributionSpec("laplace"), 4, 10**4, 3)
    with pytest.raises(ValueError):
        mw.empirical_compare(summary, walk)
