"""Bounded/unbounded splitting of the step density and derived approximants.

The step density p is written as (1-rho) q1 + rho q2 with q1 bounded by a
threshold M and rho < 1/2; the split propagates to every n-fold convolution
through binomial weights (accumulated in log space), and yields a bounded
approximation to the running-max density together with explicitly controlled
remainder terms.  For bounded step densities rho = 0 and the machinery
degenerates gracefully (the 0^0 = 1 weight convention).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft, rfft
from scipy.special import gammaln

from .grid import (
    MASS_TOL,
    GridDensity,
    GridError,
    convolve,
    halfline_l1,
    halfline_sup,
    l1_distance,
    moment,
    rescale_sqrt,
    restrict,
)
from .walk import NagaevKernel, WalkLaws, nagaev_kernel

_WEIGHT_CUTOFF = 1e-16


@dataclass(frozen=True)
class BinomialDecomposition:
    """Step density split p = (1-rho) q1 + rho q2 with q1 bounded by M."""

    rho: float
    q1: GridDensity
    q2: GridDensity
    bound_M: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho < 0.5:
            raise GridError(f"rho must lie in [0, 1/2), got {self.rho}")
        if self.q1.values.max() > self.bound_M * (1.0 + 1e-9) + 1e-12:
            raise GridError("q1 exceeds its stated bound")
        if moment(self.q1, 0, "positive") <= 0.0:
            raise GridError("q1 must carry mass on the positive half-line")


def median_level(p: GridDensity) -> float:
    """Level m such that half of p's mass lies where p <= m (mass-weighted
    median of the density's own values)."""
    v = p.values
    order = np.argsort(v, kind="stable")
    masses = v[order] * p.grid.step
    cum = np.cumsum(masses)
    idx = int(np.searchsorted(cum, 0.5 * cum[-1]))
    return float(v[order[min(idx, len(v) - 1)]])


def binomial_split(p: GridDensity, M: float | None = None) -> BinomialDecomposition:
    """Truncation-at-level-M split: q1 = min(p, M)/(1-rho), q2 = excess/rho.

    Default M is twice the mass-weighted median level of p, which keeps rho
    small and q1 far from degenerate.  Raises if the truncated mass rho
    reaches 1/2 (with the minimal admissible M in the message).
    """
    if M is None:
        M = 2.0 * median_level(p)
    if M <= 0:
        raise GridError(f"threshold M must be positive, got {M}")
    if np.any(p.values < -1e-12):
        raise GridError("binomial split expects a nonnegative density")
    clipped = np.minimum(p.values, M)
    rho = float((p.values - clipped).sum() * p.grid.step)
    if rho >= 0.5:
        # smallest admissible M: bisect the excess-mass level
        lo, hi = M, float(p.values.max())
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if float(np.maximum(p.values - mid, 0.0).sum() * p.grid.step) >= 0.5:
                lo = mid
            else:
                hi = mid
        raise GridError(
            f"truncated mass rho = {rho:.4f} >= 1/2 at M = {M}; need M > {hi:.6g}"
        )
    if rho == 0.0:
        q1 = GridDensity(p.grid, clipped)
        q2 = GridDensity(p.grid, np.zeros_like(clipped))
    else:
        q1 = GridDensity(p.grid, clipped / (1.0 - rho))
        q2 = GridDensity(p.grid, (p.values - clipped) / rho)
    return BinomialDecomposition(rho=rho, q1=q1, q2=q2, bound_M=M / max(1.0 - rho, 0.5))


def binomial_log_weight(k: int, j: int, rho: float) -> float:
    """C(k, j) (1-rho)^j rho^(k-j), accumulated in log space; 0^0 = 1."""
    if rho == 0.0:
        return 1.0 if j == k else 0.0
    if j == 0:
        return math.exp(k * math.log(rho))
    log_w = (
        gammaln(k + 1)
        - gammaln(j + 1)
        - gammaln(k - j + 1)
        + j * math.log1p(-rho)
        + (k - j) * math.log(rho)
    )
    return math.exp(log_w)


@dataclass(frozen=True)
class DecompTable:
    """Convolution powers of the split: for each k <= n_max,
    p_k = (1 - rho^k) qk1[k] + rho^k qk2[k] with qk1/qk2 probability
    densities.  q1_powers[j] and q2_powers[m] hold the plain convolution
    powers (index 0 is None: the unit atom)."""

    decomp: BinomialDecomposition
    n_max: int
    qk1: tuple
    qk2: tuple
    q1_powers: tuple
    q2_powers: tuple

    def check_index(self, k: int) -> None:
        if not 1 <= k <= self.n_max:
            raise ValueError(f"k must lie in [1, {self.n_max}], got {k}")


def decomp_powers(decomp: BinomialDecomposition, n_max: int) -> DecompTable:
    """Propagate the split to all convolution powers up to n_max."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    rho = decomp.rho
    grid = decomp.q1.grid
    zero = GridDensity(grid, np.zeros(grid.count))

    pow1: list = [None, decomp.q1]
    for j in range(2, n_max + 1):
        pow1.append(convolve(decomp.q1, pow1[j - 1]))

    if rho == 0.0:
        qk1 = [None] + pow1[1:]
        qk2 = [None] + [zero] * n_max
        pow2 = [None] + [zero] * max(n_max - 1, 1)
        return DecompTable(decomp, n_max, tuple(qk1), tuple(qk2),
                           tuple(pow1), tuple(pow2))

    pow2: list = [None, decomp.q2]
    for m in range(2, n_max + 1):
        pow2.append(convolve(decomp.q2, pow2[m - 1]))

    # Fourier caches let each qk1[k] be a single weighted spectral sum.
    n_fft = 2 * grid.count
    h = grid.step
    i_zero = grid.zero_index()
    f1 = [None] + [rfft(d.values, n_fft) for d in pow1[1:]]
    f2 = [None] + [rfft(d.values, n_fft) for d in pow2[1:]]

    qk1: list = [None]
    qk2: list = [None]
    for k in range(1, n_max + 1):
        acc = np.zeros(n_fft // 2 + 1, dtype=np.complex128)
        used_fourier = False
        for j in range(1, k):
            w = binomial_log_weight(k, j, rho)
            if w < _WEIGHT_CUTOFF:
                continue
            acc += w * f1[j] * f2[k - j]
            used_fourier = True
        spatial = np.zeros(grid.count)
        if used_fourier:
            full = irfft(acc, n_fft) * h
            spatial = full[i_zero : i_zero + grid.count]
        spatial = spatial + binomial_log_weight(k, k, rho) * pow1[k].values
        scale = 1.0 - rho**k
        qk1.append(GridDensity(grid, spatial / scale))
        qk2.append(pow2[k])
    return DecompTable(decomp, n_max, tuple(qk1), tuple(qk2),
                       tuple(pow1), tuple(pow2))


def _apply_kernel(f: GridDensity, kernel: NagaevKernel) -> GridDensity:
    out = kernel.atom_at_zero * f
    if kernel.index > 0:
        out = out - convolve(f, kernel.negative_density)
    return out


@dataclass(frozen=True)
class MaxLawSplit:
    """Bounded approximation of the n-step max density and its remainders.

    ``bounded`` is signed; ``remainder_pos``/``remainder_neg`` are the
    nonnegative remainder parts built from the kernel's atom and negative
    density.  The reconstruction max_law = bounded + remainder_pos -
    remainder_neg holds per cell."""

    n: int
    bounded: GridDensity
    remainder_pos: GridDensity
    remainder_neg: GridDensity


def bounded_max_approximation(
    table: DecompTable, walk: WalkLaws, n: int
) -> MaxLawSplit:
    """Split the n-step max law into the bounded-component sum and the
    remainders carried by the unbounded component.

    Verifies the per-cell reconstruction against the walk's max law at
    tolerance n * 1e-8 before returning.
    """
    table.check_index(n)
    walk.check_index(n)
    rho = table.decomp.rho
    grid = walk.grid
    kernels = [nagaev_kernel(walk, j) for j in range(0, n)]

    bounded = np.zeros(grid.count)
    rem_pos = np.zeros(grid.count)
    rem_neg = np.zeros(grid.count)
    for k in range(1, n + 1):
        kern = kernels[n - k]
        scale = 1.0 - rho**k if rho > 0 else 1.0
        bounded += scale * _apply_kernel(table.qk1[k], kern).values
        if rho > 0:
            w = rho**k
            if w >= _WEIGHT_CUTOFF:
                rem_pos += w * kern.atom_at_zero * table.qk2[k].values
                rem_neg += w * convolve(table.qk2[k], kern.negative_density).values

    split = MaxLawSplit(
        n=n,
        bounded=GridDensity(grid, bounded),
        remainder_pos=GridDensity(grid, rem_pos),
        remainder_neg=GridDensity(grid, rem_neg),
    )
    recon = bounded + rem_pos - rem_neg
    gap = float(np.abs(recon - walk.max_laws[n].values).max())
    if gap > n * 1e-8:
        raise GridError(f"split reconstruction gap {gap:.2e} exceeds {n * 1e-8:.1e}")
    return split


def local_correction_term(table: DecompTable, walk: WalkLaws, n: int) -> GridDensity:
    """Signed correction term of the local limit approximation, rescaled to
    the sqrt(n) scale: the one- and two-factor bounded-component terms of the
    split, convolved with the max kernels."""
    table.check_index(n)
    walk.check_index(n)
    rho = table.decomp.rho
    grid = walk.grid
    acc = np.zeros(grid.count)
    for k in range(1, n + 1):
        kern = nagaev_kernel(walk, n - k)
        # one bounded factor
        if k == 1:
            base1 = table.q1_powers[1]
            w1 = 1.0  # k=1: weight k (1-rho) rho^(k-1) with 0^0 = 1
            if rho > 0:
                w1 = 1.0 - rho
            acc += w1 * _apply_kernel(base1, kern).values
        elif rho > 0:
            w1 = k * (1.0 - rho) * rho ** (k - 1)
            if w1 >= _WEIGHT_CUTOFF:
                base1 = convolve(table.q1_powers[1], table.q2_powers[k - 1])
                acc += w1 * _apply_kernel(base1, kern).values
        # two bounded factors
        if k == 2:
            w2 = (1.0 - rho) ** 2 if rho > 0 else 1.0
            acc += w2 * _apply_kernel(table.q1_powers[2], kern).values
        elif k > 2 and rho > 0:
            w2 = math.comb(k, 2) * (1.0 - rho) ** 2 * rho ** (k - 2)
            if w2 >= _WEIGHT_CUTOFF:
                base2 = convolve(table.q1_powers[2], table.q2_powers[k - 2])
                acc += w2 * _apply_kernel(base2, kern).values
    return rescale_sqrt(GridDensity(grid, acc), n)


def smooth_part(table: DecompTable, k: int) -> GridDensity:
    """Part of the k-step sum law with at least three bounded factors
    (nonnegative; three-fold bounded convolutions have integrable spectra)."""
    if k < 3:
        raise ValueError(f"k must be >= 3, got {k}")
    table.check_index(k)
    rho = table.decomp.rho
    total = (1.0 - rho**k) * table.qk1[k].values if rho > 0 else table.qk1[k].values
    out = total.copy()
    if rho > 0:
        w1 = k * (1.0 - rho) * rho ** (k - 1)
        if w1 >= _WEIGHT_CUTOFF:
            out = out - w1 * convolve(table.q1_powers[1], table.q2_powers[k - 1]).values
        w2 = math.comb(k, 2) * (1.0 - rho) ** 2 * rho ** (k - 2)
        if w2 >= _WEIGHT_CUTOFF:
            out = out - w2 * convolve(table.q1_powers[2], table.q2_powers[k - 2]).values
    return GridDensity(table.decomp.q1.grid, out)


def smooth_part_mass(table: DecompTable, k: int) -> float:
    """Expected mass of smooth_part: 1 - sum_{j<=2} C(k,j)(1-rho)^j rho^(k-j)."""
    rho = table.decomp.rho
    if rho == 0.0:
        return 1.0
    head = sum(binomial_log_weight(k, j, rho) for j in range(0, min(2, k) + 1))
    return 1.0 - head


def smooth_split_identity_gap(table: DecompTable, walk: WalkLaws, n: int) -> float:
    """Max per-cell gap in: rescaled bounded part == sqrt(n)-rescaled sum of
    smooth parts convolved with kernels, plus the local correction term."""
    table.check_index(n)
    walk.check_index(n)
    split = bounded_max_approximation(table, walk, n)
    lhs = rescale_sqrt(split.bounded, n)
    acc = np.zeros(walk.grid.count)
    for k in range(3, n + 1):
        part = smooth_part(table, k)
        if float(np.abs(part.values).max()) == 0.0:
            continue
        acc += _apply_kernel(part, nagaev_kernel(walk, n - k)).values
    rhs = rescale_sqrt(GridDensity(walk.grid, acc), n) + local_correction_term(table, walk, n)
    return float(np.abs(lhs.values - rhs.values).max())


@dataclass(frozen=True)
class DiagnosticsRow:
    """Quality measures of the bounded approximation at one n (positive
    half-line norms, on the sqrt(n) scale)."""

    n: int
    l1_pq: float
    x2_pq: float
    qminus_l1: float
    qbar_sup_over_sqrtn: float
    rn_l1: float
    rn_sup: float


def split_quality_diagnostics(
    walk: WalkLaws, table: DecompTable, n_list: list[int]
) -> list[DiagnosticsRow]:
    """Per-n diagnostics: L1 and x^2-weighted gaps between the max density
    and its bounded approximation, the negative-part mass of the
    approximation, its sup norm, and the correction-term norms."""
    rows = []
    for n in sorted(n_list):
        split = bounded_max_approximation(table, walk, n)
        q_star = rescale_sqrt(split.bounded, n)
        p_star = rescale_sqrt(walk.max_laws[n], n)
        diff = p_star - q_star
        x = walk.grid.centers()
        w = np.where(x > 0, walk.grid.step, 0.0)
        i = walk.grid.zero_index()
        if i >= 0:
            w[i] = walk.grid.step / 2.0
        l1 = float(np.sum(w * np.abs(diff.values)))
        x2 = float(np.sum(w * x * x * np.abs(diff.values)))
        qminus = float(np.sum(w * np.maximum(-q_star.values, 0.0)))
        qsup = halfline_sup(split.bounded, "positive") / math.sqrt(n)
        rn = local_correction_term(table, walk, n)
        rows.append(
            DiagnosticsRow(
                n=n,
                l1_pq=l1,
                x2_pq=x2,
                qminus_l1=qminus,
                qbar_sup_over_sqrtn=qsup,
                rn_l1=halfline_l1(rn, "positive"),
                rn_sup=halfline_sup(rn, "positive"),
            )
        )
    return rows


def diagnostics_csv(rows: list[DiagnosticsRow]) -> str:
    buf = io.StringIO()
    buf.write("n,l1_pq,x2_pq,qminus_l1,qbar_sup_over_sqrtn,rn_l1,rn_sup\n")
    for r in rows:
        buf.write(
            f"{r.n},{r.l1_pq:.17g},{r.x2_pq:.17g},{r.qminus_l1:.17g},"
            f"{r.qbar_sup_over_sqrtn:.17g},{r.rn_l1:.17g},{r.rn_sup:.17g}\n"
        )
    return buf.getvalue()
