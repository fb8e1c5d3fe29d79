"""The runnable verification suite: acceptance criteria plus module invariants.

Every check produces a CheckResult row with a stable identifier, the measured
value, its threshold, and a pass flag; the report is JSON-serializable and
byte-stable for a fixed configuration.  Checks that need a larger n_max than
the configuration provides are skipped (listed separately), not failed.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.random import Generator, Philox

from . import transforms as cf
from . import decomposition as dc
from . import entropy as en
from . import grid as gr
from . import limits as lm
from . import montecarlo as mc
from . import walk as wk
from .config import RunConfig

ENVELOPE_SLACK = 1.25  # headroom for rate-envelope fits at the smallest n
_ZERO_FLOOR = 1e-9


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    description: str
    value: float
    threshold: float
    comparison: str  # "<=" or ">="
    passed: bool
    note: str = ""


def _le(check_id: str, desc: str, value: float, threshold: float, note: str = "") -> CheckResult:
    ok = bool(value <= threshold) and math.isfinite(value)
    return CheckResult(check_id, desc, float(value), float(threshold), "<=", ok, note)


def _ge(check_id: str, desc: str, value: float, threshold: float, note: str = "") -> CheckResult:
    ok = bool(value >= threshold) and math.isfinite(value)
    return CheckResult(check_id, desc, float(value), float(threshold), ">=", ok, note)


class SuiteState:
    """Lazily built shared state: walks, decompositions, curves, simulations."""

    def __init__(self, config: RunConfig):
        self.config = config
        self._specs: dict = {}
        self._walks: dict = {}
        self._tables: dict = {}
        self._curves: dict = {}
        self._mc: dict = {}

    def grid_spec(self) -> gr.GridSpec:
        c = self.config
        return gr.make_working_grid(
            c.n_max, c.grid_points, c.half_width_factor, c.sigma_pad
        )

    def spec(self, name: str) -> gr.DistributionSpec:
        if name not in self._specs:
            params = self.config.spec_parameters if name == "mixture" else ()
            self._specs[name] = gr.DistributionSpec(name, params)
        return self._specs[name]

    def walk(self, name: str) -> wk.WalkLaws:
        if name not in self._walks:
            self._walks[name] = wk.compute_walk(
                self.spec(name), self.config.n_max, self.grid_spec()
            )
        return self._walks[name]

    def table(self, name: str) -> dc.DecompTable:
        if name not in self._tables:
            walk = self.walk(name)
            split = dc.binomial_split(walk.step_density, self.config.decomposition_M)
            self._tables[name] = dc.decomp_powers(split, self.config.n_max)
        return self._tables[name]

    def curves(self, name: str) -> list[lm.ConvergenceRow]:
        if name not in self._curves:
            self._curves[name] = lm.convergence_curves(
                self.spec(name),
                list(self.config.n_list),
                C=4.0,
                walk=self.walk(name),
                table=self.table(name),
            )
        return self._curves[name]

    def simulation(self, name: str, n: int, samples: int | None = None) -> mc.EmpiricalSummary:
        samples = self.config.mc_samples if samples is None else samples
        key = (name, n, samples)
        if key not in self._mc:
            offset = ("gaussian", "uniform", "laplace", "mixture", "spike").index(name)
            self._mc[key] = mc.simulate(
                self.spec(name), n, samples, self.config.seed + offset
            )
        return self._mc[key]

    def diag_ns(self) -> list[int]:
        return [n for n in (8, 16, 32, 64) if n <= self.config.n_max]


def _envelope_rows(
    check_id: str,
    desc: str,
    values: dict[int, float],
    rate: float,
    slack: float = ENVELOPE_SLACK,
) -> list[CheckResult]:
    """Fit C = slack * v(n0) * n0^rate at the smallest n; assert
    v(n) * n^rate <= C at every larger n.  All-zero columns pass against an
    absolute floor."""
    ns = sorted(values)
    n0 = ns[0]
    cap = slack * values[n0] * n0**rate
    out = []
    for n in ns[1:]:
        scaled = values[n] * n**rate
        if cap < _ZERO_FLOOR:
            out.append(
                _le(f"{check_id}.n{n}", f"{desc} (degenerate column)", values[n], _ZERO_FLOOR)
            )
        else:
            out.append(
                _le(f"{check_id}.n{n}", f"{desc}, envelope fitted at n={n0}", scaled, cap)
            )
    return out


# ---------------------------------------------------------------------------
# acceptance criteria
# ---------------------------------------------------------------------------


def check_route_equivalence(state: SuiteState) -> list[CheckResult]:
    out = []
    ns = [n for n in (2, 4, 8, 16) if n <= state.config.n_max]
    for name in state.config.specs:
        walk = state.walk(name)
        start = time.perf_counter()
        for n in ns:
            direct = walk.max_laws[n]
            kernel_route = wk.nagaev_density(walk, n)
            out.append(
                _le(
                    f"acceptance.route_equivalence.{name}.kernel.n{n}",
                    "L1 gap, one-step recursion vs kernel representation",
                    gr.l1_distance(direct, kernel_route),
                    1e-3,
                )
            )
            series = wk.spitzer_positive_law(walk, n)
            pos, alpha = gr.restrict(direct, "positive")
            gap = gr.l1_distance(pos, series.density) + abs(
                series.atom_at_zero - float(walk.nonpos_prob[n])
            )
            out.append(
                _le(
                    f"acceptance.route_equivalence.{name}.series.n{n}",
                    "L1 gap, one-step recursion vs generating-series law",
                    gap,
                    1e-3,
                )
            )
        elapsed = time.perf_counter() - start
        out.append(
            _le(
                f"acceptance.route_equivalence.{name}.runtime",
                "three-route verification runtime per spec (s)",
                elapsed,
                120.0,
            )
        )
    return out


def check_sparre_andersen(state: SuiteState) -> list[CheckResult]:
    out = []
    ns = range(1, min(16, state.config.n_max) + 1)
    for name in state.config.specs:
        if not state.spec(name).symmetric:
            continue
        walk = state.walk(name)
        worst = max(abs(float(walk.nonpos_prob[n]) - wk.sparre_andersen(n)) for n in ns)
        out.append(
            _le(
                f"acceptance.sparre_andersen.{name}",
                "max |P(max<=0) - binom(2n,n)/4^n| over n <= 16",
                worst,
                1e-3,
            )
        )
    return out


def check_entropic_endpoint(state: SuiteState) -> list[CheckResult]:
    out = []
    for name in state.config.specs:
        rows = {r.n: r for r in state.curves(name)}
        if 64 not in rows or 8 not in rows:
            continue
        out.append(
            _le(
                f"acceptance.entropic_endpoint.{name}.absolute",
                "conditioned relative entropy at n=64",
                rows[64].D_plus,
                0.01,
            )
        )
        out.append(
            _le(
                f"acceptance.entropic_endpoint.{name}.ratio",
                "D_plus(64) / D_plus(8)",
                rows[64].D_plus / rows[8].D_plus,
                1.0 / 3.0,
                note="a Theta(n^-1/2) quantity gives ratio ~0.35 > 1/3; "
                "measured decay is genuine but slower than the pinned ratio",
            )
        )
    return out


def check_tv_endpoint(state: SuiteState) -> list[CheckResult]:
    out = []
    for name in state.config.specs:
        rows = {r.n: r for r in state.curves(name)}
        if 64 not in rows:
            continue
        out.append(
            _le(
                f"acceptance.tv_endpoint.{name}.absolute",
                "total variation to the half-normal at n=64",
                rows[64].tv,
                0.05,
                note="tv(64) ~ 0.56/sqrt(64) = 0.07 for centered unit-variance "
                "steps; the pinned 0.05 sits below the n=64 asymptote",
            )
        )
        summary = state.simulation(name, 64)
        walk = state.walk(name)
        _, tv_hist = mc.empirical_compare(summary, walk)
        allowance = mc.binning_allowance(walk, 64, summary.bin_edges, summary.samples)
        out.append(
            _le(
                f"acceptance.tv_endpoint.{name}.simulation",
                "histogram-vs-grid-law total variation",
                tv_hist,
                0.01 + allowance,
            )
        )
    return out


def check_second_moment(state: SuiteState) -> list[CheckResult]:
    out = []
    if state.config.n_max < 64:
        return out
    for name in state.config.specs:
        walk = state.walk(name)
        row64 = {r.n: r for r in state.curves(name)}.get(64)
        grid_m2 = row64.m2_plus if row64 else gr.moment(
            gr.rescale_sqrt(walk.max_laws[64], 64), 2, "positive"
        )
        out.append(
            _le(
                f"acceptance.second_moment.{name}.absolute",
                "|E(max^+/sqrt(n))^2 - 1| at n=64",
                abs(grid_m2 - 1.0),
                0.1,
                note="the true value is 1 - c/sqrt(n) with c ~ 0.93; at n=64 "
                "the deviation is ~0.107, confirmed by series and simulation",
            )
        )
        series_m2 = wk.spitzer_second_moment(walk, 64) / 64.0
        out.append(
            _le(
                f"acceptance.second_moment.{name}.series_gap",
                "|grid moment - generating-series moment|",
                abs(grid_m2 - series_m2),
                1e-3,
            )
        )
        summary = state.simulation(name, 64)
        star = gr.rescale_sqrt(walk.max_laws[64], 64)
        x = walk.grid.centers()
        w = np.where(x > 0, walk.grid.step, 0.0)
        m4 = float(np.sum(w * x**4 * star.values))
        se = math.sqrt(max(m4 - grid_m2**2, 1e-12) / summary.samples)
        out.append(
            _le(
                f"acceptance.second_moment.{name}.simulation_gap",
                "|grid moment - simulated moment| in standard errors",
                abs(grid_m2 - summary.m2_plus_hat) / se,
                4.0,
            )
        )
    return out


def check_pinsker(state: SuiteState) -> list[CheckResult]:
    out = []
    for name in state.config.specs:
        worst = min(r.pinsker_slack for r in state.curves(name))
        out.append(
            _ge(
                f"acceptance.pinsker.{name}",
                "min over n of D - tv^2/2 for the conditioned law",
                worst,
                -1e-6,
            )
        )
    return out


def _random_bump_density(rng: Generator, grid: gr.GridSpec) -> gr.GridDensity:
    # smooth at grid scale and decayed well inside the window, so the
    # piecewise-linear rescaling error stays far below the 1e-6 tolerances
    x = grid.centers()
    k = int(rng.integers(1, 5))
    v = np.zeros(grid.count)
    for _ in range(k):
        c = rng.uniform(-2.5, 2.5)
        s = rng.uniform(0.7, 1.2)
        w = rng.uniform(0.1, 2.0)
        v += w * np.exp(-((x - c) ** 2) / (2.0 * s * s))
    return gr.GridDensity(grid, v)


def _halfline_probability_density(
    rng: Generator, grid: gr.GridSpec, side: str
) -> gr.GridDensity:
    x = grid.centers()
    sign = 1.0 if side == "positive" else -1.0
    v = np.zeros(grid.count)
    for _ in range(int(rng.integers(1, 4))):
        c = sign * rng.uniform(0.8, 3.5)
        s = rng.uniform(0.15, 0.5)
        w = rng.uniform(0.2, 2.0)
        v += w * np.exp(-((x - c) ** 2) / (2.0 * s * s))
    if side == "positive":
        v[x <= 0] = 0.0
    else:
        v[x >= 0] = 0.0
    f = gr.GridDensity(grid, v)
    return (1.0 / f.mass) * f


def check_entropy_calculus(state: SuiteState, cases: int = 25) -> list[CheckResult]:
    """Randomized functional identities and inequalities of the half-line
    relative entropy calculus."""
    rng = Generator(Philox(key=state.config.seed + 0x1E77A))
    grid = gr.GridSpec(x_min=-(2**16) * 8.0 / 2**16, step=2.0 * 8.0 / 2**17, count=2**17)
    psi = en.half_normal()
    scaling_gap = 0.0
    scalar_gap = 0.0
    combo_slack = math.inf
    conv_slack = math.inf
    sandwich_lo = math.inf
    sandwich_hi = math.inf
    floor_slack = math.inf
    for _ in range(cases):
        f = _random_bump_density(rng, grid)
        g = _random_bump_density(rng, grid)
        df = en.relative_entropy(f, psi)
        dg = en.relative_entropy(g, psi)
        mass_f = gr.moment(f, 0, "positive")
        mass_g = gr.moment(g, 0, "positive")
        floor_slack = min(floor_slack, df + math.exp(-1.0), dg + math.exp(-1.0))
        for alpha in (0.5, 2.0, 7.0):
            lhs = en.relative_entropy(alpha * f, psi)
            scalar_gap = max(scalar_gap, abs(lhs - (alpha * df + en.L(alpha) * mass_f)))
        for a, b in ((0.5, 2.0), (1.5, 0.25)):
            lhs = en.relative_entropy(a * f + b * g, psi)
            bound = (
                a * df
                + b * dg
                + math.log(a + b) * (a * mass_f + b * mass_g)
            )
            combo_slack = min(combo_slack, bound - lhs)
        lhs = en.relative_entropy(f + g, psi)
        lo = df + dg
        hi = df + dg + en.L(mass_f + mass_g) - en.L(mass_f) - en.L(mass_g)
        sandwich_lo = min(sandwich_lo, lhs - lo)
        sandwich_hi = min(sandwich_hi, hi - lhs)
        for n in (4, 16):
            lhs = en.relative_entropy(gr.rescale_sqrt(f, n), psi)
            rhs = en.relative_entropy(f, en.half_normal_scaled(n))
            scaling_gap = max(scaling_gap, abs(lhs - rhs))
        fp = _halfline_probability_density(rng, grid, "positive")
        gn = _halfline_probability_density(rng, grid, "negative")
        conv = gr.convolve(fp, gn)
        lhs = en.relative_entropy(conv, psi)
        conv_slack = min(
            conv_slack, en.relative_entropy(fp, psi) + math.exp(-1.0) - lhs
        )
    return [
        _le("acceptance.entropy_calculus.scalar_identity",
            "max |D(a f) - a D(f) - L(a) mass|", scalar_gap, 1e-6),
        _ge("acceptance.entropy_calculus.combination_bound",
            "min slack of the convex-combination bound", combo_slack, -1e-6),
        _ge("acceptance.entropy_calculus.convolution_bound",
            "min slack of D(f*g) <= D(f) + 1/e", conv_slack, -1e-6),
        _ge("acceptance.entropy_calculus.sandwich_lower",
            "min slack of D(f+g) >= D(f) + D(g)", sandwich_lo, -1e-6),
        _ge("acceptance.entropy_calculus.sandwich_upper",
            "min slack of the superadditive upper bound", sandwich_hi, -1e-6),
        _le("acceptance.entropy_calculus.scaling_invariance",
            "max |D(rescaled f) - D(f | scaled reference)|", scaling_gap, 1e-6),
        _ge("acceptance.entropy_calculus.entropy_floor",
            "min D + 1/e over all sampled functions", floor_slack, -1e-6),
    ]


def check_conditioning_identity(state: SuiteState) -> list[CheckResult]:
    out = []
    for name in state.config.specs:
        worst = 0.0
        for r in state.curves(name):
            ident = (1.0 - r.Fbar0) * r.D_plus + en.L(1.0 - r.Fbar0)
            worst = max(worst, abs(r.D - ident))
        out.append(
            _le(
                f"acceptance.conditioning_identity.{name}",
                "max row gap of D = (1-F) D_plus + L(1-F)",
                worst,
                1e-6,
            )
        )
    return out


def check_neg_tail_asymptotics(state: SuiteState) -> list[CheckResult]:
    out = []
    c = state.config
    for name in c.specs:
        walk = state.walk(name)
        if c.n_max >= 64:
            a64 = float(walk.neg_moment1[64])
            out.append(
                _le(
                    f"acceptance.neg_tail.{name}.mean",
                    "|neg-tail mean * sqrt(2 pi 64) + 1|",
                    abs(a64 * math.sqrt(2.0 * math.pi * 64.0) + 1.0),
                    0.05,
                )
            )
            out.append(
                _le(
                    f"acceptance.neg_tail.{name}.second",
                    "neg-tail second moment halves from n=4 to n=64",
                    float(walk.neg_moment2[64]),
                    0.5 * float(walk.neg_moment2[4]),
                )
            )
        ns = range(4, c.n_max + 1)
        if c.n_max >= 4:
            scaled = [float(walk.nonpos_prob[n]) * math.sqrt(n) for n in ns]
            out.append(
                _ge(
                    f"acceptance.neg_tail.{name}.nonpos_low",
                    "min of sqrt(n) P(max<=0) over 4<=n<=n_max",
                    min(scaled),
                    0.2,
                )
            )
            out.append(
                _le(
                    f"acceptance.neg_tail.{name}.nonpos_high",
                    "max of sqrt(n) P(max<=0) over 4<=n<=n_max",
                    max(scaled),
                    1.0,
                )
            )
        t = np.linspace(-5.0, 5.0, 401)
        worst = math.inf
        for k in range(1, min(64, c.n_max) + 1):
            slacks = cf.transform_bound_slacks(walk, k, t)
            worst = min(worst, min(slacks.values()))
        out.append(
            _ge(
                f"acceptance.neg_tail.{name}.transform_bounds",
                "min slack of the six negative-tail transform bounds, k <= 64",
                worst,
                -1e-8,
            )
        )
    return out


def check_charfn_convergence(state: SuiteState) -> list[CheckResult]:
    out = []
    if state.config.n_max < 64:
        return out
    for name in state.config.specs:
        walk = state.walk(name)
        d8 = cf.charfn_convergence_report(walk, 8, state.config.t_window)
        d64 = cf.charfn_convergence_report(walk, 64, state.config.t_window)
        for j in range(3):
            out.append(
                _le(
                    f"acceptance.charfn_convergence.{name}.d{j}",
                    f"order-{j} transform deviation halves from n=8 to n=64",
                    d64[j],
                    0.5 * d8[j],
                )
            )
        if name == "gaussian":
            out.append(
                _le(
                    "acceptance.charfn_convergence.gaussian.absolute",
                    "transform deviation d0 at n=64",
                    d64[0],
                    0.05,
                    note="the measured deviation ~0.08 is the honest size of the "
                    "1/sqrt(n) term at n=64 (simulation-confirmed law)",
                )
            )
    return out


def check_half_normal_transform(state: SuiteState) -> list[CheckResult]:
    t = np.linspace(-5.0, 5.0, 501)
    base = cf.half_normal_charfn(t, n=1, order=2)
    worst = 0.0
    for n in (2, 4, 16):
        other = cf.half_normal_charfn(t, n=n, order=2)
        for j in range(3):
            worst = max(worst, float(np.abs(base.values[j] - other.values[j]).max()))
    rows = [
        _le(
            "acceptance.half_normal_transform.n_independence",
            "max deviation across the n-parameterized representations",
            worst,
            1e-8,
        )
    ]
    fine = gr.GridSpec(x_min=-(2**14) * 10.0 / 2**15, step=10.0 / 2**14, count=2**15)
    sampled = en.half_normal().sample_on(fine)
    direct = cf.charfn(sampled, t, 0)
    rows.append(
        _le(
            "acceptance.half_normal_transform.quadrature_agreement",
            "max |integral representation - grid quadrature| on |t| <= 5",
            float(np.abs(base.values[0] - direct.values[0]).max()),
            1e-6,
        )
    )
    return rows


def check_local_limit(state: SuiteState) -> list[CheckResult]:
    out = []
    c = state.config
    if c.n_max < 64:
        return out
    for name in c.specs:
        walk = state.walk(name)
        table = state.table(name)
        rows = {r.n: r for r in state.curves(name)}
        if state.spec(name).bounded_density and 8 in rows and 64 in rows:
            out.append(
                _le(
                    f"acceptance.local_limit.{name}.bounded_residual",
                    "weighted sup residual halves from n=8 to n=64",
                    rows[64].alesh,
                    0.5 * rows[8].alesh,
                )
            )
        if 8 in rows and 64 in rows:
            out.append(
                _le(
                    f"acceptance.local_limit.{name}.split_residual",
                    "split-route weighted sup residual halves from n=8 to n=64",
                    rows[64].local_a,
                    0.5 * rows[8].local_a,
                )
            )
        ns = state.diag_ns()
        recon_worst = 0.0
        smooth_worst = 0.0
        for n in ns:
            split = dc.bounded_max_approximation(table, walk, n)
            recon = (
                split.bounded.values
                + split.remainder_pos.values
                - split.remainder_neg.values
            )
            gap = float(np.abs(recon - walk.max_laws[n].values).max()) / (n * 1e-8)
            recon_worst = max(recon_worst, gap)
            smooth_worst = max(
                smooth_worst, dc.smooth_split_identity_gap(table, walk, n) / (n * 1e-8)
            )
        out.append(
            _le(
                f"acceptance.local_limit.{name}.reconstruction",
                "split reconstruction gap in units of n*1e-8",
                recon_worst,
                1.0,
            )
        )
        out.append(
            _le(
                f"acceptance.local_limit.{name}.smooth_identity",
                "smooth-part identity gap in units of n*1e-8",
                smooth_worst,
                1.0,
            )
        )
        diag = dc.split_quality_diagnostics(walk, table, ns)
        rn = {r.n: r.rn_l1 for r in diag}
        out.extend(
            _envelope_rows(
                f"acceptance.local_limit.{name}.rn_l1",
                "correction-term L1 norm obeys C/sqrt(n)",
                rn,
                0.5,
            )
        )
        rbar1 = {}
        rbar2 = {}
        x2r = {}
        for n in ns:
            split = dc.bounded_max_approximation(table, walk, n)
            r1 = gr.rescale_sqrt(split.remainder_pos, n)
            r2 = gr.rescale_sqrt(split.remainder_neg, n)
            rbar1[n] = gr.halfline_l1(r1, "positive")
            rbar2[n] = gr.halfline_l1(r2, "positive")
            x = walk.grid.centers()
            w = np.where(x > 0, walk.grid.step, 0.0)
            x2r[n] = float(np.sum(w * x * x * np.abs(r1.values)))
        out.extend(
            _envelope_rows(
                f"acceptance.local_limit.{name}.remainder_pos_l1",
                "atom-part remainder L1 obeys C/sqrt(n)",
                rbar1,
                0.5,
            )
        )
        out.extend(
            _envelope_rows(
                f"acceptance.local_limit.{name}.remainder_neg_l1",
                "tail-part remainder L1 obeys C/sqrt(n)",
                rbar2,
                0.5,
            )
        )
        out.extend(
            _envelope_rows(
                f"acceptance.local_limit.{name}.remainder_x2",
                "x^2-weighted remainder obeys C/n^(3/2)",
                x2r,
                1.5,
            )
        )
        if len(ns) >= 2:
            profiles = {n: lm.split_local_residual(table, walk, n) for n in ns}
            constant = lm.fit_log_error_constant(profiles[ns[0]])
            if constant < _ZERO_FLOOR:
                worst_ratio = 0.0
            else:
                worst_ratio = max(
                    lm.log_error_ratio(profiles[n], constant) for n in ns[1:]
                )
            out.append(
                _le(
                    f"acceptance.local_limit.{name}.log_error_envelope",
                    "near-origin residual under the fitted logarithmic model",
                    worst_ratio,
                    1.2,
                )
            )
    return out


def check_first_term_split(state: SuiteState) -> list[CheckResult]:
    out = []
    for name in state.config.specs:
        walk = state.walk(name)
        worst_min = 0.0
        worst_mass = 0.0
        for n in range(2, state.config.n_max + 1):
            rem = wk.spitzer_first_term_split(walk, n)
            worst_min = min(worst_min, float(rem.values.min()))
            pos_step, step_mass = gr.restrict(walk.step_density, "positive")
            expected = (
                (1.0 - float(walk.nonpos_prob[n]))
                - float(walk.nonpos_prob[n - 1]) * step_mass
            )
            worst_mass = max(worst_mass, abs(rem.mass - expected))
        out.append(
            _ge(
                f"acceptance.first_term_split.{name}.nonnegative",
                "min cell of the leading-term remainder over n <= n_max",
                worst_min,
                -1e-6,
            )
        )
        out.append(
            _le(
                f"acceptance.first_term_split.{name}.mass",
                "max remainder-mass bookkeeping gap",
                worst_mass,
                1e-4,
            )
        )
    return out


def check_simulation_agreement(state: SuiteState) -> list[CheckResult]:
    out = []
    n = min(64, state.config.n_max)
    for name in state.config.specs:
        walk = state.walk(name)
        summary = state.simulation(name, n)
        z, tv_hist = mc.empirical_compare(summary, walk)
        out.append(
            _le(
                f"invariant.simulation.{name}.nonpos_z",
                "z-score of P(max<=0), simulation vs grid law",
                z,
                4.0,
            )
        )
        star = gr.rescale_sqrt(walk.max_laws[n], n)
        mean_grid = gr.moment(star, 1, "all")
        var = gr.moment(star, 2, "all") - mean_grid**2
        se = math.sqrt(max(var, 1e-12) / summary.samples)
        out.append(
            _le(
                f"invariant.simulation.{name}.mean_z",
                "z-score of E(max/sqrt(n)), simulation vs grid law",
                abs(summary.mean_max_scaled - mean_grid) / se,
                4.0,
            )
        )
    # bit-reproducibility of the sampler
    spec = state.spec("gaussian")
    a = mc.simulate(spec, min(8, state.config.n_max), 10**4, state.config.seed)
    b = mc.simulate(spec, min(8, state.config.n_max), 10**4, state.config.seed)
    identical = (
        mc.summary_json(a) == mc.summary_json(b)
        and np.array_equal(a.bin_counts, b.bin_counts)
    )
    out.append(
        _ge(
            "invariant.simulation.reproducible",
            "identical seed gives a bit-identical summary (1 = yes)",
            1.0 if identical else 0.0,
            1.0,
        )
    )
    return out


def check_density_core(state: SuiteState) -> list[CheckResult]:
    rng = Generator(Philox(key=state.config.seed + 0xD0))
    grid = gr.make_working_grid(4, 2**12)
    a = _random_bump_density(rng, grid)
    b = _random_bump_density(rng, grid)
    c = _random_bump_density(rng, grid)
    signed = a - b
    out = []
    comm = gr.l1_distance(gr.convolve(a, b), gr.convolve(b, a))
    norm = gr.halfline_l1(gr.convolve(a, b), "positive") + gr.halfline_l1(
        gr.convolve(a, b), "negative"
    )
    out.append(
        _le(
            "invariant.density_core.commutative",
            "relative L1 gap of a*b vs b*a",
            comm / max(norm, 1e-12),
            1e-9,
        )
    )
    assoc = gr.l1_distance(
        gr.convolve(gr.convolve(a, b), c), gr.convolve(a, gr.convolve(b, c))
    )
    out.append(
        _le(
            "invariant.density_core.associative",
            "relative L1 gap of (a*b)*c vs a*(b*c)",
            assoc / max(norm, 1e-12),
            1e-9,
        )
    )
    conv_signed = gr.convolve(signed, b)
    out.append(
        _le(
            "invariant.density_core.mass_multiplicative",
            "|mass(f*g) - mass(f) mass(g)| for signed f",
            abs(conv_signed.mass - signed.mass * b.mass),
            10.0 * gr.MASS_TOL,
        )
    )
    small = gr.make_working_grid(1, 2**12)
    sa = gr.sample_density(state.spec("gaussian"), small)
    sb = gr.sample_density(state.spec("laplace"), small)
    direct = gr.convolve(sa, sb, "direct")
    fast = gr.convolve(sa, sb, "fast")
    tol = 1e-10 * float(sa.values.max()) * float(sb.values.max())
    out.append(
        _le(
            "invariant.density_core.direct_vs_fast",
            "max per-cell gap between direct and fast convolution",
            float(np.abs(direct.values - fast.values).max()),
            tol,
        )
    )
    # re-binning spreads each cell over the target lattice, which costs
    # step^2/12-level second moment; the 1e-6 relative contract therefore
    # needs a step below ~3e-3, independent of the walk window
    fine = gr.GridSpec(x_min=-(2**14) * 12.0 / 2**14, step=2.0 * 12.0 / 2**15, count=2**15)
    law = gr.sample_density(state.spec("gaussian"), fine)
    scaled = gr.rescale_sqrt(law, 9)
    target = gr.moment(law, 2, "all") / 9.0
    out.append(
        _le(
            "invariant.density_core.rescale_second_moment",
            "relative gap of the second moment under sqrt-rescaling",
            abs(gr.moment(scaled, 2, "all") - target) / max(abs(target), 1e-12),
            1e-6,
        )
    )
    return out


def check_misc_invariants(state: SuiteState) -> list[CheckResult]:
    out = []
    c = state.config
    for name in c.specs:
        rows = {r.n: r for r in state.curves(name)}
        if 8 in rows and 64 in rows:
            for field_name in ("D", "D_plus", "tv"):
                v8 = abs(getattr(rows[8], field_name))
                v64 = abs(getattr(rows[64], field_name))
                out.append(
                    _le(
                        f"invariant.limits.{name}.{field_name}_endpoint",
                        f"|{field_name}| at n=64 below its n=8 value",
                        v64,
                        v8,
                    )
                )
            out.append(
                _le(
                    f"invariant.limits.{name}.m2_endpoint",
                    "|1 - m2_plus| shrinks from n=8 to n=64",
                    abs(1.0 - rows[64].m2_plus),
                    abs(1.0 - rows[8].m2_plus),
                )
            )
        if 32 in rows:
            tail_worst = max(r.tail_mass_C for r in state.curves(name) if r.n >= 32)
            out.append(
                _le(
                    f"invariant.limits.{name}.tail_mass",
                    "x^2 tail mass beyond 4 for n >= 32",
                    tail_worst,
                    0.02,
                )
            )
        walk = state.walk(name)
        table = state.table(name)
        if c.n_max >= 64:
            psi = en.half_normal()
            gaps = {}
            for n in (8, 64):
                split = dc.bounded_max_approximation(table, walk, n)
                q_plus = gr.GridDensity(
                    walk.grid, np.maximum(gr.rescale_sqrt(split.bounded, n).values, 0.0)
                )
                star = gr.rescale_sqrt(walk.max_laws[n], n)
                gaps[n] = abs(
                    en.relative_entropy(q_plus, psi) - en.relative_entropy(star, psi)
                )
            out.append(
                _le(
                    f"invariant.decomposition.{name}.entropy_stability",
                    "entropy gap of the bounded approximation, n=64 vs n=8/3",
                    gaps[64],
                    max(gaps[8] / 3.0, _ZERO_FLOOR),
                )
            )
        rho = table.decomp.rho
        worst_w = max(
            abs(
                sum(dc.binomial_log_weight(k, j, rho) for j in range(k + 1)) - 1.0
            )
            for k in range(1, min(64, c.n_max) + 1)
        )
        out.append(
            _le(
                f"invariant.decomposition.{name}.weight_sums",
                "max |sum of binomial split weights - 1| over k <= 64",
                worst_w,
                1e-12,
            )
        )
        t = np.linspace(-5.0, 5.0, 201)
        worst_cf = 0.0
        for n in (8, min(16, c.n_max)):
            if n < 1:
                continue
            route = cf.nagaev_charfn(walk, n, t, 2)
            direct = cf.charfn(walk.max_laws[n], t, 2)
            for j in range(3):
                worst_cf = max(
                    worst_cf, float(np.abs(route.values[j] - direct.values[j]).max())
                )
        out.append(
            _le(
                f"invariant.charfn.{name}.kernel_route",
                "transform-side kernel representation matches, n <= 16",
                worst_cf,
                1e-4,
            )
        )
        if c.n_max >= 8:
            e8 = cf.clt_envelope(walk, 8, c.t_window)
            e64 = cf.clt_envelope(walk, min(64, c.n_max), c.t_window)
            if name == "gaussian":
                out.append(
                    _le(
                        "invariant.charfn.gaussian.clt_envelope",
                        "envelope-weighted transform gap (exact-law case)",
                        max(e8, e64),
                        1e-4,
                    )
                )
            elif c.n_max >= 64:
                out.append(
                    _le(
                        f"invariant.charfn.{name}.clt_envelope_trend",
                        "envelope-weighted transform gap halves 8 -> 64",
                        e64,
                        0.5 * e8,
                    )
                )
    return out


def check_determinism(state: SuiteState) -> list[CheckResult]:
    spec = state.spec("gaussian")
    n_max = min(16, state.config.n_max)
    ns = [n for n in state.config.n_list if n <= n_max] or [n_max]
    g = gr.make_working_grid(n_max, 2**12)

    def one_pass() -> str:
        walk = wk.compute_walk(spec, n_max, g)
        table = dc.decomp_powers(dc.binomial_split(walk.step_density), n_max)
        rows = lm.convergence_curves(spec, ns, walk=walk, table=table)
        return lm.curves_csv(rows)

    identical = one_pass() == one_pass()
    return [
        _ge(
            "invariant.cli.deterministic",
            "identical configuration reproduces byte-identical tables (1 = yes)",
            1.0 if identical else 0.0,
            1.0,
        )
    ]


@dataclass
class VerifyReport:
    config: RunConfig
    checks: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    runtime_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        payload = {
            "passed": self.passed,
            "runtime_seconds": round(self.runtime_seconds, 3),
            "config": {
                "specs": list(self.config.specs),
                "n_max": self.config.n_max,
                "n_list": list(self.config.n_list),
                "grid_points": self.config.grid_points,
                "mc_samples": self.config.mc_samples,
                "seed": self.config.seed,
            },
            "checks": [asdict(c) for c in self.checks],
            "skipped": self.skipped,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


_SECTIONS = (
    ("route_equivalence", check_route_equivalence, 1),
    ("sparre_andersen", check_sparre_andersen, 1),
    ("entropic_endpoint", check_entropic_endpoint, 64),
    ("tv_endpoint", check_tv_endpoint, 64),
    ("second_moment", check_second_moment, 64),
    ("pinsker", check_pinsker, 1),
    ("entropy_calculus", check_entropy_calculus, 1),
    ("conditioning_identity", check_conditioning_identity, 1),
    ("neg_tail_asymptotics", check_neg_tail_asymptotics, 4),
    ("charfn_convergence", check_charfn_convergence, 64),
    ("half_normal_transform", check_half_normal_transform, 1),
    ("local_limit", check_local_limit, 64),
    ("first_term_split", check_first_term_split, 2),
    ("density_core", check_density_core, 1),
    ("simulation_agreement", check_simulation_agreement, 1),
    ("misc_invariants", check_misc_invariants, 1),
    ("determinism", check_determinism, 1),
)


def run_verification(config: RunConfig) -> VerifyReport:
    """Run every check the configuration can support and time the suite."""
    start = time.perf_counter()
    state = SuiteState(config)
    report = VerifyReport(config=config)
    for name, fn, min_n in _SECTIONS:
        if config.n_max < min_n:
            report.skipped.append(
                {"section": name, "reason": f"needs n_max >= {min_n}"}
            )
            continue
        report.checks.extend(fn(state))
    report.runtime_seconds = time.perf_counter() - start
    report.checks.append(
        _le(
            "acceptance.runtime",
            "verification suite runtime (s)",
            report.runtime_seconds,
            900.0,
        )
    )
    return report
