"""Laws of the partial-sum walk and its running maximum, by three routes.

The canonical route is the distributional recursion
``max(S_1..S_n) =d X + max(S_1..S_{n-1})^+`` (one convolution per step).
Two independent representations are provided for cross-validation: the
Nagaev kernel sum and the Spitzer generating-series expansion of the law of
the nonnegative part.  All three must agree on the grid to far better than
the published cross-route tolerance of 1e-3 in L1.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grid import (
    MASS_TOL,
    DistributionSpec,
    GridDensity,
    GridError,
    GridSpec,
    HalfLineLaw,
    convolve,
    make_working_grid,
    moment,
    restrict,
    sample_density,
)


@dataclass(frozen=True)
class WalkLaws:
    """Per-step laws of S_k and of the running maximum, with scalar tables.

    ``sum_laws[k]`` and ``max_laws[k]`` are valid for 1 <= k <= n_max
    (index 0 is None).  ``nonpos_prob[k]`` is P(max <= 0) after k steps,
    ``neg_moment1``/``neg_moment2`` are the first and second moments of the
    running maximum over the negative half-line.
    """

    spec: DistributionSpec
    n_max: int
    step_density: GridDensity
    sum_laws: tuple
    max_laws: tuple
    nonpos_prob: np.ndarray
    neg_moment1: np.ndarray
    neg_moment2: np.ndarray

    @property
    def grid(self) -> GridSpec:
        return self.step_density.grid

    def check_index(self, n: int) -> None:
        if not 1 <= n <= self.n_max:
            raise ValueError(f"n must lie in [1, {self.n_max}], got {n}")


@dataclass(frozen=True)
class NagaevKernel:
    """Signed kernel: an atom at 0 minus the max law's negative part.

    The negative part is stored as a nonnegative density supported on
    (-inf, 0); its sign is applied where the kernel is used.
    """

    index: int
    atom_at_zero: float
    negative_density: GridDensity

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("kernel index must be >= 0")
        if self.index == 0:
            if self.atom_at_zero != 1.0 or np.any(self.negative_density.values != 0.0):
                raise ValueError("index-0 kernel must be the unit atom at 0")
        else:
            gap = abs(self.negative_density.mass - self.atom_at_zero)
            if gap > MASS_TOL:
                raise ValueError(
                    f"kernel {self.index}: atom {self.atom_at_zero} and negative mass "
                    f"{self.negative_density.mass} differ by {gap:.2e}"
                )


def compute_walk(
    spec: DistributionSpec,
    n_max: int,
    grid: GridSpec | None = None,
) -> WalkLaws:
    """Build all walk laws up to n_max by the one-step max recursion."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if grid is None:
        grid = make_working_grid(n_max)
    p = sample_density(spec, grid)

    sum_laws: list = [None, p]
    max_laws: list = [None, p]
    nonpos = np.full(n_max + 1, np.nan)
    m1 = np.full(n_max + 1, np.nan)
    m2 = np.full(n_max + 1, np.nan)

    def scalars(k: int, f: GridDensity) -> None:
        _, neg_mass = restrict(f, "negative")
        nonpos[k] = neg_mass
        m1[k] = moment(f, 1, "negative")
        m2[k] = moment(f, 2, "negative")

    scalars(1, p)
    for k in range(2, n_max + 1):
        sum_laws.append(convolve(p, sum_laws[k - 1]))
        prev = max_laws[k - 1]
        pos_part, _ = restrict(prev, "positive")
        nxt = nonpos[k - 1] * p + convolve(p, pos_part)
        drift = abs(nxt.mass - 1.0)
        if drift > k * MASS_TOL:
            raise GridError(
                f"mass drift {drift:.2e} at step {k} exceeds {k * MASS_TOL:.1e}; "
                "increase the grid resolution or window"
            )
        max_laws.append(nxt)
        scalars(k, nxt)

    return WalkLaws(
        spec=spec,
        n_max=n_max,
        step_density=p,
        sum_laws=tuple(sum_laws),
        max_laws=tuple(max_laws),
        nonpos_prob=nonpos,
        neg_moment1=m1,
        neg_moment2=m2,
    )


def nagaev_kernel(walk: WalkLaws, index: int) -> NagaevKernel:
    """Kernel G_j: the unit atom for j = 0; else atom P(max<=0) minus the
    negative part of the j-step max law."""
    if index == 0:
        zero = GridDensity(walk.grid, np.zeros(walk.grid.count))
        return NagaevKernel(0, 1.0, zero)
    walk.check_index(index)
    neg, neg_mass = restrict(walk.max_laws[index], "negative")
    return NagaevKernel(index, float(walk.nonpos_prob[index]), neg)


def _apply_kernel(f: GridDensity, kernel: NagaevKernel) -> GridDensity:
    """f convolved with the signed kernel; the atom is exact mass transfer."""
    out = kernel.atom_at_zero * f
    if kernel.index > 0:
        out = out - convolve(f, kernel.negative_density)
    return out


def nagaev_density(walk: WalkLaws, n: int) -> GridDensity:
    """Density of the n-step running maximum as the kernel representation
    sum of k-step sum laws convolved with the (n-k)-step kernels."""
    walk.check_index(n)
    acc = np.zeros(walk.grid.count)
    for k in range(1, n + 1):
        term = _apply_kernel(walk.sum_laws[k], nagaev_kernel(walk, n - k))
        acc += term.values
    return GridDensity(walk.grid, acc)


def spitzer_positive_law(walk: WalkLaws, n: int) -> HalfLineLaw:
    """Law of the nonnegative part of the n-step maximum via the
    exponential generating-series recursion over positive sum restrictions.

    With mu_k the restriction of the k-step sum law to (0, inf), the series
    exp(sum_k s^k mu_k / k) has measure coefficients B_0 = delta_0 and
    B_m = (1/m) sum_{j<=m} mu_j * B_{m-j}; the result is
    sum_m c_{n-m} B_m with c_0 = 1 and c_j = P(max_j < 0).
    """
    walk.check_index(n)
    mu = [None]
    for k in range(1, n + 1):
        pos, _ = restrict(walk.sum_laws[k], "positive")
        mu.append(pos)

    zero = np.zeros(walk.grid.count)
    b_density: list = [GridDensity(walk.grid, zero)]  # B_0 = atom only
    for m in range(1, n + 1):
        acc = mu[m].values.copy()  # j = m term: mu_m * B_0 = mu_m
        for j in range(1, m):
            acc = acc + convolve(mu[j], b_density[m - j]).values
        b_density.append(GridDensity(walk.grid, acc / m))

    atom = float(walk.nonpos_prob[n])  # c_n * B_0
    dens = np.zeros(walk.grid.count)
    for m in range(1, n + 1):
        c = 1.0 if n == m else float(walk.nonpos_prob[n - m])
        dens += c * b_density[m].values
    density = GridDensity(walk.grid, np.maximum(dens, 0.0))
    # the boundary cells of the half-line restrictions carry an O(n step^2)
    # quadrature drift into the total mass, plus an O(step^{3/2}) term driven
    # by the boundary magnitude when the step density is unbounded at 0
    boundary = max(
        float(mu[j].values[walk.grid.zero_index()]) for j in range(1, min(n, 2) + 1)
    )
    tol = n * (MASS_TOL + 0.05 * walk.grid.step**2)
    tol += 0.2 * walk.grid.step**1.5 * boundary**2
    return HalfLineLaw(atom_at_zero=atom, density=density, mass_tol=tol)


def spitzer_second_moment(walk: WalkLaws, n: int) -> float:
    """Second moment of the nonnegative part of the n-step maximum from the
    generating-series identity over positive-part moments of the sum laws."""
    walk.check_index(n)
    e1 = np.array([moment(walk.sum_laws[k], 1, "positive") for k in range(1, n + 1)])
    e2 = np.array([moment(walk.sum_laws[k], 2, "positive") for k in range(1, n + 1)])
    inv = 1.0 / np.arange(1, n + 1)
    a = inv * e1
    cross = 0.0
    for k in range(1, n):
        cross += a[k - 1] * a[: n - k].sum()
    return float(cross + (inv * e2).sum())


def sparre_andersen(n: int) -> float:
    """P(all of S_1..S_n <= 0) for symmetric continuous steps:
    binom(2n, n) / 4^n, evaluated in exact rational arithmetic."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return float(Fraction(math.comb(2 * n, n), 4**n))


def spitzer_first_term_split(walk: WalkLaws, n: int) -> GridDensity:
    """Subprobability remainder on (0, inf) after removing the leading
    single-step term from the n-step max law:
    remainder = max_law_n - P(max_{n-1} <= 0) * step_density, restricted."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    walk.check_index(n)
    signed = walk.max_laws[n] - float(walk.nonpos_prob[n - 1]) * walk.step_density
    rem, _ = restrict(signed, "positive")
    return rem


def walk_scalars_csv(walk: WalkLaws) -> str:
    """Per-step scalar table: k,Fbar0,abar,bbar,mass_p,mass_pbar."""
    buf = io.StringIO()
    buf.write("k,Fbar0,abar,bbar,mass_p,mass_pbar\n")
    for k in range(1, walk.n_max + 1):
        buf.write(
            f"{k},{walk.nonpos_prob[k]:.17g},{walk.neg_moment1[k]:.17g},"
            f"{walk.neg_moment2[k]:.17g},{walk.sum_laws[k].mass:.17g},"
            f"{walk.max_laws[k].mass:.17g}\n"
        )
    return buf.getvalue()
