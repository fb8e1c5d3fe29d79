import math
from fractions import Fraction

import numpy as np
import pytest

import maxwalk as mw
from maxwalk.grid import GridError


def test_one_step_is_step_density(gaussian_walk8):
    assert gaussian_walk8.max_laws[1] is gaussian_walk8.step_density
    assert gaussian_walk8.sum_laws[1] is gaussian_walk8.step_density


def test_symmetric_two_step_probability(gaussian_walk8):
    assert gaussian_walk8.nonpos_prob[2] == pytest.approx(3.0 / 8.0, abs=1e-3)


def test_sparre_andersen_exact_values():
    assert mw.sparre_andersen(1) == 0.5
    assert mw.sparre_andersen(2) == float(Fraction(3, 8))
    assert mw.sparre_andersen(3) == float(Fraction(5, 16))
    assert mw.sparre_andersen(4) == float(Fraction(35, 128))
    with pytest.raises(ValueError):
        mw.sparre_andersen(0)


def test_sparre_andersen_matches_simulation():
    # independent stochastic check of the combinatorial identity
    summary = mw.simulate(mw.DistributionSpec("spike"), 4, 10**5, 99)
    se = summary.nonpos_se
    assert abs(summary.nonpos_hat - mw.sparre_andersen(4)) <= 4 * se


def test_walk_scalar_invariants(gaussian_walk8):
    w = gaussian_walk8
    for k in range(1, 9):
        assert w.max_laws[k].mass == pytest.approx(1.0, abs=k * 1e-6)
        assert w.neg_moment1[k] <= 0.0
        assert w.neg_moment2[k] >= 0.0
    assert np.all(np.diff(w.nonpos_prob[1:9]) < 0)  # strictly shrinking here
    _, p_neg = mw.restrict(w.step_density, "negative")
    assert w.nonpos_prob[1] == pytest.approx(p_neg, abs=1e-15)


def test_mass_drift_abort():
    # a too-small window cannot hold the walk: the drift guard must fire
    count = 2**12
    step = 18.0 / count
    g = mw.GridSpec(x_min=-(count // 2) * step, step=step, count=count)
    with pytest.raises(GridError):
        mw.compute_walk(mw.DistributionSpec("gaussian"), 16, g)


def test_nagaev_collapses_at_one(gaussian_walk8):
    out = mw.nagaev_density(gaussian_walk8, 1)
    assert mw.l1_distance(out, gaussian_walk8.step_density) <= 1e-12


def test_nagaev_matches_recursion(small_grid):
    w = mw.compute_walk(mw.DistributionSpec("laplace"), 8, small_grid)
    out = mw.nagaev_density(w, 8)
    assert mw.l1_distance(out, w.max_laws[8]) <= 1e-3
    assert out.mass == pytest.approx(1.0, abs=8e-6)


def test_nagaev_kernel_validation(gaussian_walk8):
    k0 = mw.NagaevKernel(0, 1.0, mw.GridDensity(gaussian_walk8.grid,
                                                np.zeros(gaussian_walk8.grid.count)))
    assert k0.atom_at_zero == 1.0
    with pytest.raises(ValueError):
        mw.NagaevKernel(0, 0.5, k0.negative_density)


def test_spitzer_law_one_step(gaussian_walk8):
    law = mw.spitzer_positive_law(gaussian_walk8, 1)
    pos, mass = mw.restrict(gaussian_walk8.step_density, "positive")
    assert law.atom_at_zero == pytest.approx(gaussian_walk8.nonpos_prob[1], abs=1e-12)
    assert mw.l1_distance(law.density, pos) <= 1e-12


def test_spitzer_law_matches_recursion(small_grid):
    w = mw.compute_walk(mw.DistributionSpec("uniform"), 8, small_grid)
    law = mw.spitzer_positive_law(w, 8)
    assert law.atom_at_zero == pytest.approx(w.nonpos_prob[8], abs=8e-6)
    pos, _ = mw.restrict(w.max_laws[8], "positive")
    assert mw.l1_distance(law.density, pos) <= 1e-3


def test_spitzer_second_moment_consistency(small_grid):
    w = mw.compute_walk(mw.DistributionSpec("mixture"), 8, small_grid)
    series = mw.spitzer_second_moment(w, 8)
    grid_value = mw.moment(mw.rescale_sqrt(w.max_laws[8], 8), 2, "positive") * 8.0
    assert series == pytest.approx(grid_value, abs=8e-3)


def test_one_step_positive_second_moment(gaussian_walk8):
    # symmetric unit-variance step: E((X^+)^2) = 1/2
    assert mw.spitzer_second_moment(gaussian_walk8, 1) == pytest.approx(0.5, abs=1e-4)


def test_positive_mean_limit(acceptance_state):
    # E(S_k^+)/sqrt(k) approaches 1/sqrt(2 pi); exact for the gaussian walk
    w = acceptance_state.walk("gaussian")
    val = mw.moment(w.sum_laws[64], 1, "positive") / 8.0
    assert val == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), abs=0.02)


def test_second_moment_frozen_value(acceptance_state):
    # frozen from the exact generating-series evaluation, confirmed by
    # simulation: E(max^+/8)^2 = 0.8927 for the gaussian walk at n = 64
    w = acceptance_state.walk("gaussian")
    m2 = mw.moment(mw.rescale_sqrt(w.max_laws[64], 64), 2, "positive")
    assert m2 == pytest.approx(0.89269, abs=2e-3)
    assert mw.spitzer_second_moment(w, 64) / 64.0 == pytest.approx(m2, abs=1e-3)


def test_first_term_split(small_grid):
    w = mw.compute_walk(mw.DistributionSpec("laplace"), 8, small_grid)
    rem = mw.spitzer_first_term_split(w, 2)
    assert rem.values.min() >= -1e-6
    pos_step, step_mass = mw.restrict(w.step_density, "positive")
    expected = (1.0 - w.nonpos_prob[2]) - w.nonpos_prob[1] * step_mass
    assert rem.mass == pytest.approx(expected, abs=1e-4)
    # at n = 2 the recursion gives the same split directly
    direct = mw.convolve(w.step_density, pos_step)
    direct_pos, _ = mw.restrict(direct, "positive")
    assert mw.l1_distance(rem, direct_pos) <= 1e-6
    with pytest.raises(ValueError):
        mw.spitzer_first_term_split(w, 1)


def test_scalar_table_csv(gaussian_walk8):
    from maxwalk.walk import walk_scalars_csv

    text = walk_scalars_csv(gaussian_walk8)
    lines = text.strip().splitlines()
    assert lines[0] == "k,Fbar0,abar,bbar,mass_p,mass_pbar"
    assert len(lines) == 9
    first = lines[1].split(",")
    assert int(first[0]) == 1
    assert float(first[1]) == pytest.approx(0.5, abs=1e-6)
