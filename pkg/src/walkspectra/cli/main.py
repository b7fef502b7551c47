"""``walkspectra <command> --config <path> [--site x1,..,xd]* [--grid N]
[--horizon N] [--out dir]``

Commands: validate, spectrum, evolve, average, decay, density, report.

The report is one JSON document (stdout, or ``<out>/<command>.json``).
``evolve`` additionally writes ``<out>/evolve_series.csv`` with header
``n,x1,..,xd,p``. Floats are written in shortest round-trip form.

Exit codes: 0 success, 2 configuration error, 3 failed precondition or
diagnostic (including a failed unitarity check), 4 internal numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .. import __version__
from ..exceptions import (
    AliasingError,
    ConfigError,
    DimensionMismatchError,
    EigensolverError,
    MalformedOperatorError,
    PreconditionError,
)
from ..lattice import validate_unitarity
from ..spectra import TorusGrid, peel_point_spectrum
from ..theorems import (
    cesaro_average,
    decay_check,
    geometric_schedule,
    point_spectrum_prediction,
    spectral_density_1d,
    transition_series,
)
from .config import WalkConfig, parse_config

COMMANDS = ("validate", "spectrum", "evolve", "average", "decay", "density", "report")

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NUMERIC = 0, 2, 3, 4


class UnitarityFailure(PreconditionError):
    def __init__(self, report):
        super().__init__(f"operator is not unitary: max residual {report.max_residual:.3g} "
                         f"exceeds tol {report.tol:g}")
        self.report = report


def _c(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _f(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _unitarity_section(rep) -> dict:
    return {
        "max_residual": _f(rep.max_residual),
        "tol": rep.tol,
        "passed": bool(rep.passed),
        "per_gamma": [{"gamma": list(g), "residual": _f(r)}
                      for g, r in sorted(rep.per_gamma.items())],
    }


def _spectrum_section(rep) -> dict:
    bands = rep.bands
    out = {
        "grid": {"d": rep.grid.d, "N": rep.grid.N},
        "char_poly_degree": rep.char_poly.degree,
        "candidates": [{
            "value": _c(c.value),
            "max_grid_deviation": _f(c.max_grid_deviation),
            "symbolic_residual": _f(c.symbolic_residual),
            "certified": bool(c.certified),
            "multiplicity": int(c.multiplicity),
        } for c in rep.candidates],
        "point_spectrum": [_c(v) for v in rep.point_spectrum],
        "multiplicities": rep.multiplicities,
        "quotient_degree": rep.quotient.degree,
    }
    if bands is not None:
        out["bands"] = {
            "discriminant_min": None if bands.discriminant_min is None
            else _f(bands.discriminant_min),
            "repeated_factor": bool(bands.repeated_factor),
            "gap_tol": bands.gap_tol,
            "collision_count": int(np.count_nonzero(bands.collisions)),
            "min_gap": _f(np.min(bands.min_gap)) if np.size(bands.min_gap) else None,
        }
    return out


def _series(op, w, sites, horizon) -> dict:
    return {s: transition_series(op, w, s, horizon) for s in sites}


def run(command: str, cfg: WalkConfig, sites=None, window=None) -> tuple[dict, dict]:
    """Execute one command.

    Returns
    -------
    report : dict
        JSON-ready report document.
    series : dict
        ``site -> p_n`` arrays for tabular output (possibly empty).
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", field="command")
    op = cfg.operator()
    w = cfg.state()
    tol = cfg.tolerances
    sites = [tuple(s) for s in (sites or [(0,) * cfg.d])]
    for s in sites:
        if len(s) != cfg.d:
            raise ConfigError(f"site {s} does not have {cfg.d} coordinates", field="site")
    grid = TorusGrid(cfg.d, cfg.grid_n)
    report = {
        "command": command,
        "provenance": {
            "package_version": __version__,
            "config_sha256": cfg.digest(),
            "preset": cfg.preset,
            "grid_n": cfg.grid_n,
            "horizon": cfg.horizon,
            "sites": [list(s) for s in sites],
        },
    }
    series = {}
    urep = validate_unitarity(op, tol["unitarity"])
    report["unitarity"] = _unitarity_section(urep)
    if not urep.passed:
        raise UnitarityFailure(urep)
    if command == "validate":
        return report, series

    want = {command} if command != "report" else set(COMMANDS) - {"validate", "report"}
    if command == "report" and cfg.d != 1:
        want.discard("density")

    spec = None
    if want & {"spectrum", "average", "density"}:
        spec = peel_point_spectrum(op, grid, spread_tol=tol["spread"],
                                   certify_tol=tol["certify"], cluster_tol=tol["cluster"])
    if "spectrum" in want:
        report["spectrum"] = _spectrum_section(spec)
    if want & {"evolve", "average"}:
        series = _series(op, w, sites, cfg.horizon)
    if "evolve" in want:
        report["evolve"] = {
            "norm_sq": _f(w.norm_sq()),
            "series": [{"site": list(s), "p": [_f(v) for v in series[s]]} for s in sites],
        }
    if "average" in want:
        if cfg.horizon < 1:
            raise PreconditionError("'average' needs a horizon of at least 1")
        pred = point_spectrum_prediction(op, w, grid, spec, cluster_tol=tol["cluster"])
        schedule = geometric_schedule(cfg.horizon)
        traces = []
        for s in sites:
            tr = cesaro_average(op, w, s, schedule, predicted=pred.at(s), series=series[s])
            traces.append({
                "site": list(s),
                "schedule": tr.schedule,
                "means": [_f(v) for v in tr.means],
                "predicted": _f(tr.predicted),
                "gaps": [_f(v) for v in tr.gaps],
                "final_gap": _f(tr.final_gap),
            })
        report["average"] = {"traces": traces, "point_mass": _f(pred.point_mass),
                             "point_mass_from_sites": _f(pred.mass())}
    if "decay" in want:
        win = window or (cfg.horizon // 2, cfg.horizon)
        out = []
        for s in sites:
            dr = decay_check(op, w, s, win)
            out.append({"site": list(s), "window": list(dr.window), "sup": _f(dr.sup),
                        "slope": _f(dr.slope)})
        report["decay"] = out
    if "density" in want:
        if cfg.d != 1:
            raise PreconditionError("'density' is available for one-dimensional walks only")
        prof = spectral_density_1d(op, w, 512, report=spec)
        report["density"] = {
            "phi": [_f(v) for v in prof.phi],
            "gamma": [_f(v) for v in prof.gamma],
            "weights": [_f(v) for v in prof.weights],
            "excluded": [int(i) for i in np.flatnonzero(prof.excluded)],
            "integral": _f(prof.integral()),
            "continuous_mass": _f(prof.continuous_mass),
        }
    return report, series


def _parse_site(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad site {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walkspectra",
                                description="Spectra and long-time behaviour of periodic "
                                            "unitary walks on Z^d.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--site", action="append", type=_parse_site, default=None,
                   help="lattice site x1,..,xd (repeatable; default origin)")
    p.add_argument("--grid", type=int, help="torus grid points per axis")
    p.add_argument("--horizon", type=int, help="number of time steps")
    p.add_argument("--out", type=Path, help="output directory")
    return p


def _write(report: dict, series: dict, command: str, out: Path | None):
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{command}.json").write_text(text)
    if series and command in ("evolve", "report"):
        d = len(next(iter(series)))
        with open(out / "evolve_series.csv", "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["n"] + [f"x{i + 1}" for i in range(d)] + ["p"])
            for s, p in series.items():
                for n, v in enumerate(p):
                    wr.writerow([n, *s, repr(float(v))])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            cfg = parse_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", field="config") from exc
        if args.grid is not None:
            if args.grid < 2:
                raise ConfigError("--grid must be at least 2", field="grid_n")
            cfg.grid_n = args.grid
        if args.horizon is not None:
            if args.horizon < 0:
                raise ConfigError("--horizon must be nonnegative", field="horizon")
            cfg.horizon = args.horizon
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report, series = run(args.command, cfg, args.site)
        msgs = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
        if msgs:
            report["warnings"] = msgs
    except (ConfigError, MalformedOperatorError, DimensionMismatchError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnitarityFailure as exc:
        _write({"command": args.command, "unitarity": _unitarity_section(exc.report)}, {},
               args.command, args.out)
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (PreconditionError, AliasingError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (EigensolverError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(report, series, args.command, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
