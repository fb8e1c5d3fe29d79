"""Uniform-grid signed densities and the operations every other module builds on.

A density is stored as cell-averaged values on an equally spaced grid with a
cell centered at 0.  Cell averaging (CDF differences over cells) keeps
unbounded-but-integrable densities representable and makes mass bookkeeping
exact.  All objects are immutable; all operations are pure functions, safe to
call concurrently, and deterministic regardless of thread count.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import ndtr, ndtri

MASS_TOL = 1e-6

Side = Literal["positive", "negative"]
Region = Literal["all", "positive", "negative"]
ConvMode = Literal["direct", "fast"]


class GridError(ValueError):
    """Base class for grid-layer failures."""


class GridMismatchError(GridError):
    """Operands live on incompatible grids."""


class WindowOverflowError(GridError):
    """Significant mass would leave the grid window."""


class WindowTooSmallError(GridError):
    """Requested window cannot hold the distribution's effective support."""


class UnknownDistributionError(GridError):
    """Distribution name not in the registry."""


@dataclass(frozen=True)
class GridSpec:
    """Equally spaced grid: cell centers x_min + step*i for i < count."""

    x_min: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if not (self.step > 0):
            raise GridError(f"step must be positive, got {self.step}")
        if self.count < 2:
            raise GridError(f"count must be >= 2, got {self.count}")

    def centers(self) -> np.ndarray:
        return self.x_min + self.step * np.arange(self.count)

    def edges(self) -> np.ndarray:
        """count+1 cell edges."""
        return self.x_min + self.step * (np.arange(self.count + 1) - 0.5)

    @property
    def x_max(self) -> float:
        return self.x_min + self.step * (self.count - 1)

    def zero_index(self) -> int:
        """Index of the cell centered at 0, or -1 if no cell center is at 0."""
        i = round(-self.x_min / self.step)
        if 0 <= i < self.count and abs(self.x_min + i * self.step) <= 1e-9 * self.step:
            return i
        return -1

    def close_to(self, other: "GridSpec") -> bool:
        return (
            self.count == other.count
            and math.isclose(self.step, other.step, rel_tol=1e-12, abs_tol=0.0)
            and abs(self.x_min - other.x_min) <= 1e-9 * self.step
        )


@dataclass(frozen=True)
class GridDensity:
    """Signed density sampled (cell-averaged) on a GridSpec."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.count,):
            raise GridError(
                f"values shape {v.shape} does not match grid count {self.grid.count}"
            )
        if not np.all(np.isfinite(v)):
            raise GridError("density values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self) -> float:
        return float(self.grid.step * self.values.sum())

    def with_values(self, values: np.ndarray) -> "GridDensity":
        return GridDensity(self.grid, values)

    def __add__(self, other: "GridDensity") -> "GridDensity":
        if not self.grid.close_to(other.grid):
            raise GridMismatchError("cannot add densities on different grids")
        return GridDensity(self.grid, self.values + other.values)

    def __sub__(self, other: "GridDensity") -> "GridDensity":
        if not self.grid.close_to(other.grid):
            raise GridMismatchError("cannot subtract densities on different grids")
        return GridDensity(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "GridDensity":
        return GridDensity(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class HalfLineLaw:
    """Law on [0, inf): an atom at 0 plus a density on (0, inf)."""

    atom_at_zero: float
    density: GridDensity
    mass_tol: float = MASS_TOL

    def __post_init__(self) -> None:
        if not (0.0 <= self.atom_at_zero <= 1.0 + self.mass_tol):
            raise GridError(f"atom mass {self.atom_at_zero} outside [0, 1]")
        x = self.density.grid.centers()
        v = self.density.values
        if np.any(v < -1e-12):
            raise GridError("half-line density must be nonnegative")
        if float(np.abs(v[x < -self.density.grid.step / 2]).sum()) > 1e-12:
            raise GridError("half-line density has mass at negative abscissas")
        total = self.atom_at_zero + self.density.mass
        if abs(total - 1.0) > self.mass_tol:
            raise GridError(f"atom + density mass = {total}, expected 1 +- {self.mass_tol}")


def make_working_grid(
    n_max: int,
    points: int = 2**14,
    half_width_factor: float = 8.0,
    sigma_pad: float = 1.25,
) -> GridSpec:
    """Grid wide enough to hold an n_max-step unit-variance walk.

    Window is +-half_width_factor*sqrt(n_max)*sigma_pad; the grid has a cell
    centered at 0 and `points` cells (power of two, for fast convolution).
    """
    if points < 16 or points & (points - 1):
        raise GridError(f"points must be a power of two >= 16, got {points}")
    half_width = half_width_factor * math.sqrt(n_max) * sigma_pad
    step = 2.0 * half_width / points
    return GridSpec(x_min=-(points // 2) * step, step=step, count=points)


# ---------------------------------------------------------------------------
# step distributions
# ---------------------------------------------------------------------------

_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)
_SPIKE_C = 2.0 * 5.0**0.25  # cdf(x) = 1/2 + sqrt(x)/_SPIKE_C on [0, sqrt(5)]


def _gaussian_cdf(x: np.ndarray) -> np.ndarray:
    return ndtr(x)


def _gaussian_inv(u: np.ndarray) -> np.ndarray:
    return ndtri(u)


def _uniform_cdf(x: np.ndarray) -> np.ndarray:
    return np.clip((x + _SQRT3) / (2.0 * _SQRT3), 0.0, 1.0)


def _uniform_inv(u: np.ndarray) -> np.ndarray:
    return (2.0 * u - 1.0) * _SQRT3


_LAPLACE_B = 1.0 / math.sqrt(2.0)


def _laplace_cdf(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < 0, 0.5 * np.exp(x / _LAPLACE_B), 1.0 - 0.5 * np.exp(-x / _LAPLACE_B))


def _laplace_inv(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    return np.where(u < 0.5, _LAPLACE_B * np.log(2.0 * u), -_LAPLACE_B * np.log(2.0 * (1.0 - u)))


def _spike_cdf(x: np.ndarray) -> np.ndarray:
    x = np.clip(np.asarray(x, dtype=np.float64), -_SQRT5, _SQRT5)
    return np.where(
        x >= 0,
        0.5 + np.sqrt(np.maximum(x, 0.0)) / _SPIKE_C,
        0.5 - np.sqrt(np.maximum(-x, 0.0)) / _SPIKE_C,
    )


def _spike_inv(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    return np.where(u >= 0.5, (_SPIKE_C * (u - 0.5)) ** 2, -((_SPIKE_C * (0.5 - u)) ** 2))


# mixture: w*N(m1, s2) + (1-w)*N(m2, s2), standardized to mean 0, variance 1
_MIX_DEFAULT = {"weight": 0.3, "loc1": -0.7, "loc2": 0.3, "var": 0.79}


def _mixture_params(params: dict) -> tuple[float, float, float, float]:
    w = float(params.get("weight", _MIX_DEFAULT["weight"]))
    m1 = float(params.get("loc1", _MIX_DEFAULT["loc1"]))
    m2 = float(params.get("loc2", _MIX_DEFAULT["loc2"]))
    s2 = float(params.get("var", _MIX_DEFAULT["var"]))
    mean = w * m1 + (1 - w) * m2
    var = w * (m1 * m1 + s2) + (1 - w) * (m2 * m2 + s2)
    if abs(mean) > 1e-9 or abs(var - 1.0) > 1e-9:
        raise GridError(
            f"mixture parameters give mean {mean:.3g}, variance {var:.6g}; "
            "must standardize to (0, 1)"
        )
    return w, m1, m2, s2


def _mixture_cdf_fn(params: dict) -> Callable[[np.ndarray], np.ndarray]:
    w, m1, m2, s2 = _mixture_params(params)
    s = math.sqrt(s2)

    def cdf(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return w * ndtr((x - m1) / s) + (1 - w) * ndtr((x - m2) / s)

    return cdf


_MIX_INV_CACHE: dict = {}


def _mixture_inv_fn(params: dict) -> Callable[[np.ndarray], np.ndarray]:
    w, m1, m2, s2 = _mixture_params(params)
    s = math.sqrt(s2)
    cdf = _mixture_cdf_fn(params)

    def pdf(x: np.ndarray) -> np.ndarray:
        z1 = (x - m1) / s
        z2 = (x - m2) / s
        c = 1.0 / (s * math.sqrt(2.0 * math.pi))
        return c * (w * np.exp(-z1 * z1 / 2.0) + (1 - w) * np.exp(-z2 * z2 / 2.0))

    key = (w, m1, m2, s2)
    if key not in _MIX_INV_CACHE:
        # dense monotone lookup in x-space; the interpolated start lies within
        # one table cell of the root, so Newton refinement is step-bounded and
        # two iterations reach well below the 1e-10 inversion tolerance
        x_tab = np.linspace(min(m1, m2) - 10.0 * s, max(m1, m2) + 10.0 * s, 32769)
        _MIX_INV_CACHE[key] = (cdf(x_tab), x_tab)
    u_tab, x_tab = _MIX_INV_CACHE[key]
    spacing = float(x_tab[1] - x_tab[0])

    def inv(u: np.ndarray) -> np.ndarray:
        u = np.clip(np.asarray(u, dtype=np.float64), u_tab[0], u_tab[-1])
        x = np.interp(u, u_tab, x_tab)
        for _ in range(2):
            step = (cdf(x) - u) / np.maximum(pdf(x), 1e-300)
            x = x - np.clip(step, -spacing, spacing)
        return x

    return inv


_SPEC_NAMES = ("gaussian", "uniform", "laplace", "mixture", "spike")


@dataclass(frozen=True)
class DistributionSpec:
    """A built-in standardized (mean 0, variance 1) step distribution."""

    name: str
    parameters: tuple = ()

    def __post_init__(self) -> None:
        if self.name not in _SPEC_NAMES:
            raise UnknownDistributionError(
                f"unknown distribution {self.name!r}; choose from {_SPEC_NAMES}"
            )
        object.__setattr__(self, "parameters", tuple(self.parameters))
        if self.parameters and self.name != "mixture":
            raise GridError(f"{self.name!r} takes no parameters")
        if self.name == "mixture":
            _mixture_params(self._params_dict())  # standardization check

    def _params_dict(self) -> dict:
        return dict(zip(("weight", "loc1", "loc2", "var"), self.parameters))

    def cdf(self, x: np.ndarray) -> np.ndarray:
        if self.name == "gaussian":
            return _gaussian_cdf(x)
        if self.name == "uniform":
            return _uniform_cdf(x)
        if self.name == "laplace":
            return _laplace_cdf(x)
        if self.name == "spike":
            return _spike_cdf(x)
        return _mixture_cdf_fn(self._params_dict())(x)

    def inv_cdf(self, u: np.ndarray) -> np.ndarray:
        if self.name == "gaussian":
            return _gaussian_inv(u)
        if self.name == "uniform":
            return _uniform_inv(u)
        if self.name == "laplace":
            return _laplace_inv(u)
        if self.name == "spike":
            return _spike_inv(u)
        return _mixture_inv_fn(self._params_dict())(u)

    @property
    def symmetric(self) -> bool:
        return self.name in ("gaussian", "uniform", "laplace", "spike")

    @property
    def bounded_density(self) -> bool:
        return self.name != "spike"


def sample_density(spec: DistributionSpec, grid: GridSpec) -> GridDensity:
    """Cell-averaged sampling of the step density onto the grid.

    Requires at least 8 standard deviations of window on each side of 0 and
    checks the standardization invariants on the sampled result.
    """
    if grid.x_min > -8.0 or grid.x_max < 8.0:
        raise WindowTooSmallError(
            f"window [{grid.x_min:.3g}, {grid.x_max:.3g}] must contain [-8, 8]"
        )
    edges = grid.edges()
    values = np.diff(spec.cdf(edges)) / grid.step
    f = GridDensity(grid, values)
    if abs(f.mass - 1.0) > MASS_TOL:
        raise GridError(f"sampled mass {f.mass} deviates from 1 beyond {MASS_TOL}")
    mean = moment(f, 1, "all")
    var = moment(f, 2, "all") - mean * mean
    if abs(mean) > 1e-6 or abs(var - 1.0) > 1e-4:
        raise GridError(
            f"sampled law has mean {mean:.2e}, variance {var:.6f}; "
            "refine the grid (smaller step) to meet the standardization invariants"
        )
    return f


# ---------------------------------------------------------------------------
# core operations
# ---------------------------------------------------------------------------


def _require_same_grid(a: GridDensity, b: GridDensity) -> None:
    if not math.isclose(a.grid.step, b.grid.step, rel_tol=1e-12, abs_tol=0.0):
        raise GridMismatchError(
            f"step mismatch: {a.grid.step} vs {b.grid.step}"
        )
    if not a.grid.close_to(b.grid):
        raise GridMismatchError("convolution operands must share one working grid")


def convolve(a: GridDensity, b: GridDensity, mode: ConvMode = "fast") -> GridDensity:
    """Linear convolution of two densities, cropped back to their common grid.

    The full (zero-padded) linear convolution is computed, so there is no
    circular wraparound; the result is then restricted to the input window.
    Raises WindowOverflowError if the cropped-away mass is significant.
    """
    _require_same_grid(a, b)
    grid = a.grid
    h = grid.step
    i_zero = grid.zero_index()
    if i_zero < 0:
        raise GridMismatchError("convolution requires a grid with a cell centered at 0")
    if mode == "direct":
        full = np.convolve(a.values, b.values) * h
    elif mode == "fast":
        full = fftconvolve(a.values, b.values) * h
    else:
        raise ValueError(f"mode must be 'direct' or 'fast', got {mode!r}")
    # full conv starts at 2*x_min; our window starts at x_min = -i_zero*step
    offset = i_zero
    kept = full[offset : offset + grid.count]
    lost = h * (np.abs(full[:offset]).sum() + np.abs(full[offset + grid.count :]).sum())
    scale = max(1.0, abs(a.mass * b.mass))
    if lost > 10.0 * MASS_TOL * scale:
        raise WindowOverflowError(
            f"convolution loses mass {lost:.3e} outside the window; "
            "enlarge the window or increase the cell count"
        )
    return GridDensity(grid, kept)


def rescale_sqrt(f: GridDensity, n: int) -> GridDensity:
    """Law of X/sqrt(n) for X ~ f: x -> sqrt(n) f(sqrt(n) x), cell-averaged.

    The cumulative mass function of a cell-averaged density is exactly
    piecewise linear between cell edges, so re-binning through it is the
    exact pushforward of the represented law: mass and nonnegativity are
    preserved, and unbounded inputs stay representable.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n == 1:
        return f
    root = math.sqrt(n)
    edges = f.grid.edges()
    cum = np.concatenate(([0.0], np.cumsum(f.values) * f.grid.step))
    target = np.interp(root * edges, edges, cum, left=0.0, right=cum[-1])
    return GridDensity(f.grid, np.diff(target) / f.grid.step)


def _halfline_weights(grid: GridSpec, side: Side) -> np.ndarray:
    """Integration weights for one open half-line; the 0-cell counts half."""
    x = grid.centers()
    h = grid.step
    if side == "positive":
        w = np.where(x > 0, h, 0.0)
    else:
        w = np.where(x < 0, h, 0.0)
    i = grid.zero_index()
    if i >= 0:
        w[i] = h / 2.0
    return w


def restrict(f: GridDensity, side: Side) -> tuple[GridDensity, float]:
    """Restriction of f to an open half-line, and its mass.

    The cell centered at 0 is split evenly between the two sides, which
    removes the O(step) bias a hard cut would introduce.  The two restrictions
    always add back to f exactly.
    """
    if side not in ("positive", "negative"):
        raise ValueError(f"side must be 'positive' or 'negative', got {side!r}")
    x = f.grid.centers()
    v = f.values.copy()
    i = f.grid.zero_index()
    if side == "positive":
        v[x < 0] = 0.0
    else:
        v[x > 0] = 0.0
    if i >= 0:
        v[i] = f.values[i] / 2.0
    out = GridDensity(f.grid, v)
    return out, out.mass


def moment(f: GridDensity, order: int, region: Region = "all") -> float:
    """step-weighted sum of x**order * f(x) over a region (0-cell split)."""
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    x = f.grid.centers()
    if region == "all":
        w = np.full(f.grid.count, f.grid.step)
    elif region in ("positive", "negative"):
        w = _halfline_weights(f.grid, region)
    else:
        raise ValueError(f"region must be 'all', 'positive' or 'negative', got {region!r}")
    if order == 0:
        return float(np.sum(w * f.values))
    return float(np.sum(w * x**order * f.values))


def tv_distance(f: GridDensity, g) -> float:
    """Total variation distance: half the L1 distance between densities.

    `g` may be a GridDensity on the same grid or any object exposing
    ``sample_on(grid) -> GridDensity`` (analytic reference laws do).
    """
    if not isinstance(g, GridDensity):
        g = g.sample_on(f.grid)
    if not f.grid.close_to(g.grid):
        raise GridMismatchError("total variation requires a common grid")
    return float(0.5 * f.grid.step * np.abs(f.values - g.values).sum())


def l1_distance(f: GridDensity, g: GridDensity, side: Side | None = None) -> float:
    """L1 distance, optionally over one half-line (0-cell split)."""
    if not f.grid.close_to(g.grid):
        raise GridMismatchError("L1 distance requires a common grid")
    diff = np.abs(f.values - g.values)
    if side is None:
        return float(f.grid.step * diff.sum())
    return float(np.sum(_halfline_weights(f.grid, side) * diff))


def halfline_l1(f: GridDensity, side: Side = "positive") -> float:
    """Integral of |f| over one half-line (the total-variation norm there)."""
    return float(np.sum(_halfline_weights(f.grid, side) * np.abs(f.values)))


def halfline_sup(f: GridDensity, side: Side = "positive") -> float:
    """sup of |f| over one open half-line."""
    x = f.grid.centers()
    sel = x > 0 if side == "positive" else x < 0
    if not np.any(sel):
        return 0.0
    return float(np.abs(f.values[sel]).max())


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def density_to_csv(f: GridDensity) -> str:
    """CSV with header `x,value` and a grid header comment line."""
    buf = io.StringIO()
    g = f.grid
    buf.write(f"# x_min={g.x_min:.17g} step={g.step:.17g} count={g.count}\n")
    buf.write("x,value\n")
    x = g.centers()
    for xi, vi in zip(x, f.values):
        buf.write(f"{xi:.17g},{vi:.17g}\n")
    return buf.getvalue()


def density_from_csv(text: str) -> GridDensity:
    lines = text.strip().splitlines()
    header = lines[0]
    if not header.startswith("#"):
        raise GridError("missing grid header comment line")
    fields = dict(part.split("=") for part in header[1:].split())
    grid = GridSpec(float(fields["x_min"]), float(fields["step"]), int(fields["count"]))
    values = np.array([float(line.split(",")[1]) for line in lines[2:]])
    return GridDensity(grid, values)
