"""Characteristic functions with exact moment-weighted derivatives.

Derivatives are computed by weighting the quadrature with (ix)^j rather than
by finite differencing, so second derivatives are as accurate as values.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .grid import GridDensity, rescale_sqrt, restrict
from .walk import WalkLaws

_T_CHUNK = 256


@dataclass(frozen=True)
class CharFnSamples:
    """Characteristic function samples: values[j][i] is the j-th derivative
    at t_grid[i], for j <= order."""

    t_grid: np.ndarray
    order: int
    values: tuple

    def __post_init__(self) -> None:
        t = np.ascontiguousarray(self.t_grid, dtype=np.float64)
        t.setflags(write=False)
        object.__setattr__(self, "t_grid", t)
        if self.order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {self.order}")
        if len(self.values) != self.order + 1:
            raise ValueError("values must hold one array per derivative order")


def charfn(f: GridDensity, t_grid: np.ndarray, order: int = 2) -> CharFnSamples:
    """step-weighted quadrature of (ix)^j e^{itx} f(x) for j <= order."""
    t = np.asarray(t_grid, dtype=np.float64)
    x = f.grid.centers()
    mask = f.values != 0.0
    xs = x[mask]
    weights = [((1j * xs) ** j) * f.values[mask] * f.grid.step for j in range(order + 1)]
    outs = [np.zeros(t.shape, dtype=np.complex128) for _ in range(order + 1)]
    for start in range(0, len(t), _T_CHUNK):
        block = t[start : start + _T_CHUNK]
        phase = np.exp(1j * np.outer(block, xs))
        for j in range(order + 1):
            outs[j][start : start + _T_CHUNK] = phase @ weights[j]
    return CharFnSamples(t, order, tuple(outs))


def negative_tail_transform(
    walk: WalkLaws, k: int, t_grid: np.ndarray, order: int = 2
) -> CharFnSamples:
    """Transform of the max law's negative tail: the deficit
    integral of (1 - e^{itx}) over the k-step max law on (-inf, 0).

    k = 0 is the constant 1 (derivatives 0).
    """
    t = np.asarray(t_grid, dtype=np.float64)
    if k == 0:
        vals = [np.ones(t.shape, dtype=np.complex128)]
        vals += [np.zeros(t.shape, dtype=np.complex128) for _ in range(order)]
        return CharFnSamples(t, order, tuple(vals))
    walk.check_index(k)
    neg, neg_mass = restrict(walk.max_laws[k], "negative")
    base = charfn(neg, t, order)
    vals = [neg_mass - base.values[0]]
    vals += [-base.values[j] for j in range(1, order + 1)]
    return CharFnSamples(t, order, tuple(vals))


_PHIHAT_CACHE: dict = {}


def half_normal_charfn(t_grid: np.ndarray, n: int = 1, order: int = 2) -> CharFnSamples:
    """Fourier transform of the half-normal density, via the n-parameterized
    integral representation e^{-t^2/2} + (it/sqrt(2 pi n)) I(t).

    The endpoint singularity of the inner integral is removed by the
    substitution u = n - v^2; adaptive quadrature does the rest.  The result
    is independent of n (a checkable identity), and derivatives follow by
    differentiating under the integral sign.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    t = np.asarray(t_grid, dtype=np.float64)
    key = (t.tobytes(), int(n), int(order))
    if key in _PHIHAT_CACHE:
        return _PHIHAT_CACHE[key]
    root_n = math.sqrt(n)
    norm = 1.0 / math.sqrt(2.0 * math.pi * n)

    def moments(ti: float) -> tuple[float, float, float]:
        out = []
        for m in range(3):
            val, _ = quad(
                lambda v: 2.0 * ((n - v * v) / n) ** m
                * math.exp(-(n - v * v) * ti * ti / (2.0 * n)),
                0.0,
                root_n,
                epsabs=1e-13,
                epsrel=1e-12,
                limit=200,
            )
            out.append(val)
        return out[0], out[1], out[2]

    gauss = np.exp(-t * t / 2.0)
    v0 = np.zeros(t.shape, dtype=np.complex128)
    v1 = np.zeros(t.shape, dtype=np.complex128)
    v2 = np.zeros(t.shape, dtype=np.complex128)
    for i, ti in enumerate(t):
        i0, i1, i2 = moments(float(ti))
        v0[i] = gauss[i] + 1j * norm * ti * i0
        v1[i] = -ti * gauss[i] + 1j * norm * (i0 - ti * ti * i1)
        v2[i] = (ti * ti - 1.0) * gauss[i] + 1j * norm * (-3.0 * ti * i1 + ti**3 * i2)
    result = CharFnSamples(t, order, tuple([v0, v1, v2][: order + 1]))
    _PHIHAT_CACHE[key] = result
    return result


def nagaev_charfn(walk: WalkLaws, n: int, t_grid: np.ndarray, order: int = 2) -> CharFnSamples:
    """Transform of the n-step max law as the kernel-representation sum
    of step-transform powers times negative-tail transforms."""
    walk.check_index(n)
    t = np.asarray(t_grid, dtype=np.float64)
    f = charfn(walk.step_density, t, order)
    f0 = f.values[0]
    f1 = f.values[1] if order >= 1 else None
    f2 = f.values[2] if order >= 2 else None
    out0 = np.zeros(t.shape, dtype=np.complex128)
    out1 = np.zeros(t.shape, dtype=np.complex128) if order >= 1 else None
    out2 = np.zeros(t.shape, dtype=np.complex128) if order >= 2 else None
    for k in range(1, n + 1):
        tail = negative_tail_transform(walk, n - k, t, order)
        g0 = tail.values[0]
        fk = f0**k
        out0 += fk * g0
        if order >= 1:
            fk1 = k * f0 ** (k - 1) * f1
            out1 += fk1 * g0 + fk * tail.values[1]
        if order >= 2:
            fk2 = k * (k - 1) * f0 ** (k - 2) * f1 * f1 + k * f0 ** (k - 1) * f2
            out2 += fk2 * g0 + 2.0 * fk1 * tail.values[1] + fk * tail.values[2]
    vals = [out0] + ([out1] if order >= 1 else []) + ([out2] if order >= 2 else [])
    return CharFnSamples(t, order, tuple(vals))


def charfn_convergence_report(
    walk: WalkLaws, n: int, t_window: float = 3.0, spacing: float = 0.01
) -> tuple[float, float, float]:
    """Sup deviations (value, first, second derivative) between the transform
    of the rescaled n-step max law and the half-normal transform, over
    |t| <= t_window on a grid of the given spacing."""
    walk.check_index(n)
    count = int(round(2 * t_window / spacing)) + 1
    t = np.linspace(-t_window, t_window, count)
    scaled = rescale_sqrt(walk.max_laws[n], n)
    ours = charfn(scaled, t, 2)
    ref = half_normal_charfn(t, n=1, order=2)
    return tuple(
        float(np.abs(ours.values[j] - ref.values[j]).max()) for j in range(3)
    )


def gaussian_envelope_window(
    f: GridDensity, t_cap: float = 3.0, margin: float = 0.9, spacing: float = 0.005
) -> float:
    """Admissible window for the envelope-weighted transform comparison.

    Once |charfn(f)(s)| e^{s^2/4} reaches 1, n-th powers of the transform
    stop contracting under the gaussian envelope weight and the weighted
    comparison carries no information.  The window is `margin` times the
    first such s (capped at t_cap), keeping the edge term strictly
    contracting in n.
    """
    s = np.arange(spacing, t_cap + spacing / 2, spacing)
    vals = np.abs(charfn(f, s, 0).values[0]) * np.exp(s * s / 4.0)
    bad = np.nonzero(vals >= 1.0)[0]
    if len(bad) == 0:
        return t_cap
    return float(min(t_cap, max(margin * s[bad[0]], spacing)))


def clt_envelope(walk: WalkLaws, n: int, t_window: float = 3.0) -> float:
    """Gaussian-envelope-weighted sup distance between the n-th transform
    power of the rescaled step law and the standard gaussian transform:
    sup |f^n(t/sqrt(n)) - e^{-t^2/2}| e^{t^2/4} over the admissible window.

    The window is |t| <= min(t_window, W) sqrt(n) with W the
    gaussian-envelope window of the step transform.
    """
    walk.check_index(n)
    window = min(t_window, gaussian_envelope_window(walk.step_density, t_cap=t_window))
    spacing = 0.01 / math.sqrt(n)
    s = np.arange(0.0, window + spacing / 2, spacing)
    f = charfn(walk.step_density, s, 0).values[0]
    t2 = n * s * s
    diff = np.abs(f**n - np.exp(-t2 / 2.0)) * np.exp(t2 / 4.0)
    return float(diff.max())


def charfn_decay_window(f: GridDensity, threshold: float = 0.99, t_cap: float = 50.0) -> float:
    """Smallest t >= 0 beyond which |charfn(f)| has dropped to the threshold
    (a proxy for the high-frequency decay onset of the step law)."""
    s = np.linspace(0.0, t_cap, 5001)
    vals = np.abs(charfn(f, s, 0).values[0])
    below = np.nonzero(vals <= threshold)[0]
    return float(s[below[0]]) if len(below) else t_cap


def transform_bound_slacks(walk: WalkLaws, k: int, t_grid: np.ndarray) -> dict[str, float]:
    """Minimum slacks of the six negative-tail transform bounds at index k:
    each entry is min over t of (bound - measured); nonnegative slack means
    the bound holds on the whole t grid."""
    walk.check_index(k)
    t = np.asarray(t_grid, dtype=np.float64)
    tail = negative_tail_transform(walk, k, t, 2)
    v0, v1, v2 = tail.values
    f0 = float(walk.nonpos_prob[k])
    a = float(walk.neg_moment1[k])  # <= 0
    b = float(walk.neg_moment2[k])  # >= 0
    lin = -1j * t * a
    return {
        "value_vs_mass": float(np.min(2.0 * f0 - np.abs(v0))),
        "value_vs_mean": float(np.min(abs(a) * np.abs(t) - np.abs(v0))),
        "deriv_vs_mean": float(np.min(abs(a) - np.abs(v1))),
        "value_linearized": float(np.min(0.5 * b * t * t - np.abs(v0 - lin))),
        "deriv_linearized": float(np.min(b * np.abs(t) - np.abs(v1 - (-1j * a)))),
        "second_deriv": float(np.min(b - np.abs(v2))),
    }


def charfn_csv(samples: CharFnSamples) -> str:
    """CSV with header t,re0,im0,re1,im1,re2,im2 (missing orders as 0)."""
    buf = io.StringIO()
    buf.write("t,re0,im0,re1,im1,re2,im2\n")
    zeros = np.zeros(len(samples.t_grid), dtype=np.complex128)
    cols = [samples.values[j] if j <= samples.order else zeros for j in range(3)]
    for i, ti in enumerate(samples.t_grid):
        row = [f"{ti:.17g}"]
        for j in range(3):
            row.append(f"{cols[j][i].real:.17g}")
            row.append(f"{cols[j][i].imag:.17g}")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
