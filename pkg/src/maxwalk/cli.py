"""Command line interface: run experiments and emit CSV/JSON artifacts.

Verbs: curves, verify, charfn, montecarlo, density, decomp.  A JSON config
file supplies defaults; flags override individual fields.  Exit codes:
0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import transforms as cf
from . import decomposition as dc
from . import grid as gr
from . import limits as lm
from . import montecarlo as mc
from . import walk as wk
from .config import ConfigError, RunConfig
from .verify import run_verification


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="maxwalk",
        description="Numerical laws of random-walk maxima and their "
        "half-normal limit diagnostics.",
    )
    p.add_argument("mode", choices=("curves", "verify", "charfn", "montecarlo",
                                    "density", "decomp"))
    p.add_argument("--config", type=str, default=None, help="JSON config file")
    p.add_argument("--spec", type=str, default=None, help="restrict to one step law")
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--grid-points", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mc-samples", type=int, default=None)
    p.add_argument("--out", type=str, default=None, help="output directory")
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        data.update(loaded)
    data["mode"] = args.mode
    if args.spec is not None:
        data["specs"] = (args.spec,)
    if args.nmax is not None:
        data["n_max"] = args.nmax
        data["n_list"] = tuple(n for n in (1, 2, 4, 8, 16, 32, 64) if n <= args.nmax)
    if args.grid_points is not None:
        data["grid_points"] = args.grid_points
    if args.seed is not None:
        data["seed"] = args.seed
    if args.mc_samples is not None:
        data["mc_samples"] = args.mc_samples
    if args.out is not None:
        data["out_dir"] = args.out
    env_threads = os.environ.get("MAXWALK_THREADS")
    if env_threads is not None and "threads" not in data:
        data["threads"] = int(env_threads)
    return RunConfig.from_dict(data)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _per_spec(config: RunConfig, fn) -> None:
    if config.threads > 1 and len(config.specs) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(fn, config.specs))
    else:
        for name in config.specs:
            fn(name)


def _build(config: RunConfig, name: str):
    spec = gr.DistributionSpec(name, config.spec_parameters if name == "mixture" else ())
    grid = gr.make_working_grid(
        config.n_max, config.grid_points, config.half_width_factor, config.sigma_pad
    )
    walk = wk.compute_walk(spec, config.n_max, grid)
    return spec, walk


def run_curves(config: RunConfig, out: Path) -> int:
    def one(name: str) -> None:
        spec, walk = _build(config, name)
        table = dc.decomp_powers(
            dc.binomial_split(walk.step_density, config.decomposition_M), config.n_max
        )
        rows = lm.convergence_curves(
            spec, list(config.n_list), C=4.0, walk=walk, table=table
        )
        _write(out / f"curves_{name}.csv", lm.curves_csv(rows))
        _write(out / f"entropy_{name}.csv", lm.entropy_reports_csv(rows))
        _write(out / f"walk_{name}.csv", wk.walk_scalars_csv(walk))

    _per_spec(config, one)
    return 0


def run_verify(config: RunConfig, out: Path) -> int:
    report = run_verification(config)
    _write(out / "verify_report.json", report.to_json())
    for check in report.checks:
        state = "pass" if check.passed else "FAIL"
        print(f"[{state}] {check.check_id}: value={check.value:.6g} "
              f"{check.comparison} {check.threshold:.6g}")
    print(f"verification {'passed' if report.passed else 'FAILED'} "
          f"({len(report.checks)} checks, {report.runtime_seconds:.1f}s)")
    return 0 if report.passed else 1


def run_charfn(config: RunConfig, out: Path) -> int:
    t = np.linspace(-5.0, 5.0, 1001)

    def one(name: str) -> None:
        _, walk = _build(config, name)
        n = config.n_max
        _write(out / f"charfn_step_{name}.csv",
               cf.charfn_csv(cf.charfn(walk.step_density, t, 2)))
        _write(out / f"charfn_max_{name}_n{n}.csv",
               cf.charfn_csv(cf.charfn(gr.rescale_sqrt(walk.max_laws[n], n), t, 2)))
        decay = cf.charfn_decay_window(walk.step_density, 0.99)
        envelope = cf.gaussian_envelope_window(walk.step_density, config.t_window)
        _write(out / f"charfn_windows_{name}.csv",
               f"decay_window_99,envelope_window\n{decay:.17g},{envelope:.17g}\n")

    _write(out / "charfn_half_normal.csv",
           cf.charfn_csv(cf.half_normal_charfn(t, n=1, order=2)))
    _per_spec(config, one)
    return 0


def run_montecarlo(config: RunConfig, out: Path) -> int:
    def one(name: str) -> None:
        spec = gr.DistributionSpec(name, config.spec_parameters if name == "mixture" else ())
        summary = mc.simulate(spec, config.n_max, config.mc_samples, config.seed)
        _write(out / f"mc_{name}_n{config.n_max}.json", mc.summary_json(summary))
        _write(out / f"mc_{name}_n{config.n_max}_hist.csv", mc.histogram_csv(summary))

    _per_spec(config, one)
    return 0


def run_density(config: RunConfig, out: Path) -> int:
    def one(name: str) -> None:
        _, walk = _build(config, name)
        n = config.n_max
        _write(out / f"max_density_{name}_n{n}.csv",
               gr.density_to_csv(walk.max_laws[n]))
        _write(out / f"max_density_{name}_n{n}_rescaled.csv",
               gr.density_to_csv(gr.rescale_sqrt(walk.max_laws[n], n)))

    _per_spec(config, one)
    return 0


def run_decomp(config: RunConfig, out: Path) -> int:
    def one(name: str) -> None:
        _, walk = _build(config, name)
        table = dc.decomp_powers(
            dc.binomial_split(walk.step_density, config.decomposition_M), config.n_max
        )
        ns = [n for n in (8, 16, 32, 64) if n <= config.n_max] or [config.n_max]
        rows = dc.split_quality_diagnostics(walk, table, ns)
        _write(out / f"decomp_{name}.csv", dc.diagnostics_csv(rows))

    _per_spec(config, one)
    return 0


_RUNNERS = {
    "curves": run_curves,
    "verify": run_verify,
    "charfn": run_charfn,
    "montecarlo": run_montecarlo,
    "density": run_density,
    "decomp": run_decomp,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args)
    except (ConfigError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(config.out_dir)
    try:
        return _RUNNERS[config.mode](config, out)
    except gr.GridError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
