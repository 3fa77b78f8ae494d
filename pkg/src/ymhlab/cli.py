"""Batch experiment runner.

Every subcommand writes report.json, one CSV per data series, PNG figures and
timings.json into the output directory. Exit status: 0 when every metric
passes, 1 when a metric fails, 2 for configuration errors.
"""
import os

_THREADS = os.environ.get("YMHLAB_THREADS")
if _THREADS and _THREADS.isdigit() and int(_THREADS) > 0:
    # cap BLAS pools before numpy is loaded
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[_var] = _THREADS

import csv  # noqa: E402
import json  # noqa: E402
import platform  # noqa: E402
import sys  # noqa: E402
from importlib import metadata  # noqa: E402
from pathlib import Path  # noqa: E402

import click  # noqa: E402

from . import __version__  # noqa: E402

TOP_KEYS = {"experiment", "seed", "grid", "tol", "out", "scenario"}

# scenario keys with their defaults
SCENARIOS = {
    "algebra-checks": {"n_samples": 1000},
    "transport-checks": {"n_fields": 100},
    "gauge-checks": {"n_points": 50, "n_rays": 5},
    "interaction-sweep": {
        "r": 0.0,
        "s_list": [0.2, 0.1, 0.05, 0.025],
        "b2": [0.7],
        "b3": [-1.3],
        "upsilon1": [[1.0, 0.5]],
        "n_kappa": 200,
    },
    "ymh-evolve": {
        "half_width": 0.5,
        "t0": -1.0,
        "t1": -0.4,
        "eps": 1e-3,
        "dx_list": [0.125, 0.0625, 0.03125],
        "patch_m": 7,
    },
    "recover-higgs": {
        "cases": ["constant", "polynomial_abelian", "electroweak", "h_sweep"],
        "h": 1e-3,
        "hs": [0.04, 0.02, 0.01],
    },
}
GRID_DEFAULT = {"ymh-evolve": 17}


class ConfigError(ValueError):
    pass


def threads():
    if not _THREADS:
        return 1
    if not _THREADS.isdigit() or int(_THREADS) < 1:
        raise ConfigError(f"YMHLAB_THREADS must be a positive integer, got {_THREADS!r}")
    return int(_THREADS)


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _number(name, v, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number")
    if kind is int and not float(v).is_integer():
        raise ConfigError(f"{name} must be an integer")
    return kind(v)


def _check_type(key, value, default):
    if isinstance(default, list):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"scenario.{key} must be a non-empty list")
        inner = default[0]
        if isinstance(inner, str):
            if not all(isinstance(x, str) for x in value):
                raise ConfigError(f"scenario.{key} must be a list of strings")
            return list(value)
        if isinstance(inner, list):
            out = []
            for x in value:
                if not isinstance(x, list) or len(x) != 2:
                    raise ConfigError(f"scenario.{key} entries must be [re, im] pairs")
                out.append([_number(key, x[0]), _number(key, x[1])])
            return out
        return [_number(key, x) for x in value]
    return _number(key, value, int if isinstance(default, int) else float)


def resolve(experiment, path, out, seed, grid, tol):
    """Merge file config and flags into a validated, fully populated config."""
    cfg = load_config(path)
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if cfg.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {cfg['experiment']!r}, not {experiment!r}")
    scen = cfg.get("scenario", {})
    if not isinstance(scen, dict):
        raise ConfigError("scenario must be a JSON object")
    defaults = SCENARIOS[experiment]
    unknown = set(scen) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown scenario keys for {experiment}: {sorted(unknown)}")
    scenario = {k: _check_type(k, scen[k], d) if k in scen else d for k, d in defaults.items()}

    seed = cfg.get("seed") if seed is None else seed
    if seed is not None:
        seed = _number("seed", seed, int)
        if seed < 0:
            raise ConfigError("seed must be non-negative")
    grid = cfg.get("grid") if grid is None else grid
    if grid is not None:
        if experiment not in GRID_DEFAULT:
            raise ConfigError(f"--grid does not apply to {experiment}")
        grid = _number("grid", grid, int)
        if grid < 5 or grid % 2 == 0:
            raise ConfigError("grid must be an odd node count >= 5")
    elif experiment in GRID_DEFAULT:
        grid = GRID_DEFAULT[experiment]
    tol = cfg.get("tol") if tol is None else tol
    if tol is not None:
        tol = _number("tol", tol)
        if tol <= 0:
            raise ConfigError("tol must be positive")
    out = out or cfg.get("out") or os.path.join("ymhlab-out", experiment)
    if not isinstance(out, str):
        raise ConfigError("out must be a path string")
    if seed is None and needs_seed(experiment, scenario):
        raise ConfigError(f"{experiment} is randomized; pass --seed or set seed in the config")
    return {"experiment": experiment, "seed": seed, "grid": grid, "tol": tol, "out": out, "scenario": scenario}


def needs_seed(experiment, scenario):
    if experiment == "interaction-sweep":
        return False
    if experiment == "recover-higgs":
        return bool(set(scenario["cases"]) - {"constant"})
    return True


def _kw_tol(cfg):
    return {} if cfg["tol"] is None else {"tol": cfg["tol"]}


def run_experiment(cfg):
    from . import experiments as E

    name, sc, seed = cfg["experiment"], cfg["scenario"], cfg["seed"]
    if name == "algebra-checks":
        return E.algebra_checks(seed, sc["n_samples"], **_kw_tol(cfg))
    if name == "transport-checks":
        return E.transport_checks(seed, sc["n_fields"], **_kw_tol(cfg))
    if name == "gauge-checks":
        return E.gauge_checks(seed, sc["n_points"], sc["n_rays"], **_kw_tol(cfg))
    if name == "interaction-sweep":
        ups = [complex(a, b) for a, b in sc["upsilon1"]]
        return E.interaction_sweep(sc["r"], sc["s_list"], sc["b2"], sc["b3"], ups, sc["n_kappa"], **_kw_tol(cfg))
    if name == "ymh-evolve":
        return E.ymh_evolve(seed, n=cfg["grid"], half_width=sc["half_width"], t0=sc["t0"], t1=sc["t1"],
                            eps=sc["eps"], dxs=sc["dx_list"], patch_m=sc["patch_m"], workers=threads(), **_kw_tol(cfg))
    if name == "recover-higgs":
        return E.recover_higgs(seed, tuple(sc["cases"]), sc["h"], tuple(sc["hs"]), **_kw_tol(cfg))
    raise ConfigError(f"unknown experiment {name!r}")


def versions():
    out = {"ymhlab": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy", "matplotlib", "click"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def write_csv(path, cols):
    keys = list(cols)
    n = max(len(v) for v in cols.values())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for i in range(n):
            w.writerow([repr(cols[k][i]) if isinstance(cols[k][i], float) else cols[k][i] for k in keys])


def write_figures(out, name, metrics, series):
    from . import plotting

    figs = []
    if plotting.plot_metrics(out / "metrics.png", metrics, name):
        figs.append("metrics.png")
    if "threefold" in series:
        s = series["threefold"]
        plotting.plot_loglog(out / "threefold_remainder.png", s["s"], {"remainder": s["remainder"]}, "s",
                             "|Y(s) - limit|", "threefold remainder", ref_slope=2)
        plotting.plot_series(out / "threefold_amplitude.png", s["s"], {"|Y(s)|": s["amplitude"], "limit": s["limit"]},
                             "s", "amplitude", "threefold amplitude")
        figs += ["threefold_remainder.png", "threefold_amplitude.png"]
    if "h_sweep" in series:
        s = series["h_sweep"]
        plotting.plot_loglog(out / "h_sweep.png", s["h"], {"rms error": s["rms_error"]}, "h", "rms error",
                             "Higgs reconstruction", ref_slope=2)
        figs.append("h_sweep.png")
    if "patch_residuals" in series:
        s = series["patch_residuals"]
        ys = {k: v for k, v in s.items() if k not in ("dx", "elimination")}
        plotting.plot_loglog(out / "patch_residuals.png", s["dx"], ys, "dx", "max residual",
                             "manufactured residuals", ref_slope=2)
        figs.append("patch_residuals.png")
    return figs


def emit(cfg, metrics, series, timings):
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "experiment": cfg["experiment"],
        "config": {k: cfg[k] for k in ("seed", "grid", "tol", "scenario")},
        "metrics": metrics,
        "provenance": {"seed": cfg["seed"], "versions": versions()},
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    for name, cols in series.items():
        write_csv(out / f"{name}.csv", cols)
    write_figures(out, cfg["experiment"], metrics, series)
    (out / "timings.json").write_text(json.dumps({k: round(v, 3) for k, v in timings.items()}, indent=2) + "\n")
    return report


def execute(experiment, config, out, seed, grid, tol):
    """Run one subcommand and return its exit code."""
    try:
        cfg = resolve(experiment, config, out, seed, grid, tol)
        threads()
        metrics, series, timings = run_experiment(cfg)
    except (ConfigError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    emit(cfg, metrics, series, timings)
    failed = [k for k, m in metrics.items() if not m["pass"]]
    for k, m in metrics.items():
        click.echo(f"{'PASS' if m['pass'] else 'FAIL'} {k}: {m['value']} (tolerance {m['tolerance']})")
    click.echo(f"wrote {Path(cfg['out']) / 'report.json'}")
    return 1 if failed else 0


def _options(fn):
    fn = click.option("--tol", type=float, default=None, help="Override the residual tolerances.")(fn)
    fn = click.option("--grid", type=int, default=None, help="Nodes per axis for grid-based suites.")(fn)
    fn = click.option("--seed", type=int, default=None, help="RNG seed (required for randomized suites).")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(fn)
    fn = click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
                      help="JSON experiment config.")(fn)
    return fn


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="ymhlab")
def main():
    """Yang-Mills-Higgs desk laboratory: batch checks with JSON reports."""


def _subcommand(name, doc):
    @main.command(name, help=doc)
    @_options
    def cmd(config, out, seed, grid, tol):
        sys.exit(execute(name, config, out, seed, grid, tol))

    return cmd


_subcommand("algebra-checks", "Coupling-form identity, equivariance and the charge/faithfulness table.")
_subcommand("transport-checks", "Coupled transport: ODE, Duhamel and ambient routes, reparametrization, block structure.")
_subcommand("gauge-checks", "Gauge covariance of transports and field equations; temporal gauge.")
_subcommand("interaction-sweep", "Covector splitting and the threefold Higgs amplitude as s shrinks.")
_subcommand("ymh-evolve", "Direct solver: zero source, finite speed, linearization, manufactured residuals.")
_subcommand("recover-higgs", "Higgs reconstruction from coupled broken-ray transport.")


if __name__ == "__main__":
    main()
