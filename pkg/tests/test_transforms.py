import math

import numpy as np
import pytest
from scipy.special import dawsn

import maxwalk as mw
from maxwalk.transforms import charfn_csv, gaussian_envelope_window


@pytest.fixture(scope="module")
def charfn_grid():
    # fine standalone grid: the phase-snapping bias (1 - sinc(t h / 2))
    # stays below 1e-6 on |t| <= 5 only for step ~1e-3
    count = 2**14
    step = 20.0 / count
    return mw.GridSpec(x_min=-(count // 2) * step, step=step, count=count)


def half_normal_transform_exact(t: np.ndarray) -> np.ndarray:
    return np.exp(-t * t / 2.0) + 2j / math.sqrt(math.pi) * dawsn(t / math.sqrt(2.0))


def test_moment_identities_at_zero(charfn_grid):
    f = mw.sample_density(mw.DistributionSpec("mixture"), charfn_grid)
    out = mw.charfn(f, np.array([0.0]), 2)
    assert out.values[0][0] == pytest.approx(1.0, abs=1e-6)
    assert abs(out.values[1][0]) <= 1e-6
    assert out.values[2][0].real == pytest.approx(-1.0, abs=1e-4)


def test_gaussian_transform_closed_form(charfn_grid):
    f = mw.sample_density(mw.DistributionSpec("gaussian"), charfn_grid)
    t = np.linspace(-5.0, 5.0, 201)
    out = mw.charfn(f, t, 0)
    assert np.abs(out.values[0] - np.exp(-t * t / 2.0)).max() <= 1e-6


def test_uniform_transform_closed_form(charfn_grid):
    f = mw.sample_density(mw.DistributionSpec("uniform"), charfn_grid)
    t = np.linspace(0.3, 5.0, 100)
    out = mw.charfn(f, t, 0)
    exact = np.sin(math.sqrt(3.0) * t) / (math.sqrt(3.0) * t)
    assert np.abs(out.values[0] - exact).max() <= 1e-6


def test_negative_tail_transform_basics(gaussian_walk8):
    t = np.linspace(-5.0, 5.0, 101)
    base = mw.negative_tail_transform(gaussian_walk8, 0, t)
    assert np.all(base.values[0] == 1.0)
    assert np.all(base.values[1] == 0.0)
    for k in (1, 4, 8):
        tail = mw.negative_tail_transform(gaussian_walk8, k, t)
        i0 = np.argmin(np.abs(t))
        assert abs(tail.values[0][i0]) <= 1e-12


def test_transform_bounds_hold(gaussian_walk8):
    t = np.linspace(-5.0, 5.0, 101)
    for k in (1, 3, 8):
        slacks = mw.transform_bound_slacks(gaussian_walk8, k, t)
        assert len(slacks) == 6
        assert min(slacks.values()) >= -1e-8


def test_half_normal_transform_properties():
    t = np.linspace(-5.0, 5.0, 101)
    base = mw.half_normal_charfn(t, n=1, order=2)
    i0 = np.argmin(np.abs(t))
    assert base.values[0][i0] == pytest.approx(1.0, abs=1e-10)
    # independent closed form through the Dawson function
    assert np.abs(base.values[0] - half_normal_transform_exact(t)).max() <= 1e-9
    for n in (2, 4, 16):
        other = mw.half_normal_charfn(t, n=n, order=2)
        for j in range(3):
            assert np.abs(base.values[j] - other.values[j]).max() <= 1e-8


def test_half_normal_transform_matches_quadrature(charfn_grid):
    t = np.linspace(-5.0, 5.0, 101)
    base = mw.half_normal_charfn(t, n=1, order=0)
    sampled = mw.half_normal().sample_on(charfn_grid)
    direct = mw.charfn(sampled, t, 0)
    assert np.abs(base.values[0] - direct.values[0]).max() <= 1e-6


def test_kernel_route_transform(small_grid):
    w = mw.compute_walk(mw.DistributionSpec("laplace"), 8, small_grid)
    t = np.linspace(-5.0, 5.0, 101)
    route = mw.nagaev_charfn(w, 8, t, 2)
    direct = mw.charfn(w.max_laws[8], t, 2)
    for j in range(3):
        assert np.abs(route.values[j] - direct.values[j]).max() <= 1e-4
    i0 = np.argmin(np.abs(t))
    assert route.values[0][i0].real == pytest.approx(1.0, abs=8e-6)
    one = mw.nagaev_charfn(w, 1, t, 1)
    step = mw.charfn(w.step_density, t, 1)
    assert np.abs(one.values[0] - step.values[0]).max() <= 1e-14


def test_convergence_report_decreases(acceptance_state):
    w = acceptance_state.walk("gaussian")
    d8 = mw.charfn_convergence_report(w, 8)
    d64 = mw.charfn_convergence_report(w, 64)
    for j in range(3):
        assert 0.0 < d64[j] < d8[j]


def test_clt_envelope_gaussian_tiny():
    g = mw.make_working_grid(8, 2**14)
    w = mw.compute_walk(mw.DistributionSpec("gaussian"), 8, g)
    for n in (1, 2, 8):
        assert mw.clt_envelope(w, n) <= 1e-6


def test_clt_envelope_laplace_halves(small_grid):
    w = mw.compute_walk(mw.DistributionSpec("laplace"), 16, small_grid)
    assert mw.clt_envelope(w, 16) <= 0.75 * mw.clt_envelope(w, 8)
    assert mw.clt_envelope(w, 8) >= 0.0


def test_envelope_window_per_law(small_grid):
    g = mw.sample_density(mw.DistributionSpec("gaussian"), small_grid)
    assert gaussian_envelope_window(g) == 3.0
    lap = mw.sample_density(mw.DistributionSpec("laplace"), small_grid)
    assert 1.8 <= gaussian_envelope_window(lap) <= 2.2


def test_decay_window(small_grid):
    f = mw.sample_density(mw.DistributionSpec("gaussian"), small_grid)
    t99 = mw.charfn_decay_window(f, 0.99)
    assert t99 == pytest.approx(math.sqrt(-2.0 * math.log(0.99)), abs=0.02)


def test_charfn_csv_format(small_grid):
    f = mw.sample_density(mw.DistributionSpec("gaussian"), small_grid)
    out = mw.charfn(f, np.array([0.0, 1.0]), 1)
    text = charfn_csv(out)
    lines = text.splitlines()
    assert lines[0] == "t,re0,im0,re1,im1,re2,im2"
    assert len(lines) == 3
    assert lines[1].endswith(",0,0")  # second-derivative columns zero-filled
