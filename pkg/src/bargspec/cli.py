"""Command-line front end and experiment runner.

Subcommands: spectrum, pseudospec, normal-form, action, birkhoff, moser,
verify, run (config-file driver).  Exit codes: 0 success, 1 config error,
2 tolerance failure, 3 convergence failure.

Floats are printed with repr (shortest round-trip representation); identical
config + seed therefore yields byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bargmann import MonomialSymbol, assemble_toeplitz
from .quadratic import (
    ComplexQuadraticForm,
    NoDeltaFound,
    phase_and_weights,
    reduce_quadratic,
)
from .spectral import (
    NoConvergence,
    action_integral,
    eigen_spectrum,
    resolvent_grid,
)
from . import acceptance, symbols

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TOLERANCE = 2
EXIT_CONVERGENCE = 3


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 1, column: int = 0):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# symbol parsing

_UNITS = {
    "p^2": {(2, 0): 0.5, (1, 1): 1.0, (0, 2): 0.5},
    "q^2": {(2, 0): -0.5, (1, 1): 1.0, (0, 2): -0.5},
    "p*q": {(2, 0): -0.5j, (0, 2): 0.5j},
    "|z|^2": {(1, 1): 1.0},
    "|z|^4": {(2, 2): 1.0},
    "z*zbar": {(1, 1): 1.0},
    "z": {(1, 0): 1.0},
    "zbar": {(0, 1): 1.0},
    "z^2": {(2, 0): 1.0},
    "zbar^2": {(0, 2): 1.0},
    "1": {(0, 0): 1.0},
}


def parse_symbol(text: str) -> MonomialSymbol:
    """JSON map {"alpha,beta": [re, im]} or shorthand sums of the documented
    built-ins (p^2, q^2, p*q, |z|^2, |z|^4, z, zbar, z^2, zbar^2, 1), each with
    an optional complex coefficient prefix like 2* or (1+0.3j)*."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return MonomialSymbol.from_json(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
        except (ValueError, TypeError) as exc:
            raise ParseError(str(exc)) from exc
    coeffs: dict[tuple[int, int], complex] = {}
    pos = 0
    # split into signed terms at top level (not inside parentheses)
    terms: list[tuple[complex, str, int]] = []
    sign = 1.0
    depth = 0
    cur = ""
    start = 0
    for i, ch in enumerate(text + "+"):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and i > 0 and text[i - 1] not in "eE({*":
            if cur.strip():
                terms.append((sign, cur.strip(), start))
            sign = 1.0 if ch == "+" else -1.0
            cur = ""
            start = i + 1
        else:
            cur += ch if i < len(text) else ""
    if cur.strip():
        terms.append((sign, cur.strip(), start))
    if not terms:
        raise ParseError("empty symbol expression", 1, 0)
    for sgn, term, tstart in terms:
        coef = complex(sgn)
        unit = term
        if "*" in term and term not in _UNITS:
            head, _, tail = term.partition("*")
            combined = f"{head}*{tail}"
            if combined in _UNITS:
                unit = combined
            else:
                try:
                    coef *= complex(head.replace("i", "j").strip("() "))
                except ValueError as exc:
                    raise ParseError(f"bad coefficient {head!r}", 1, tstart) from exc
                unit = tail.strip()
        if unit not in _UNITS:
            try:
                coef *= complex(unit.replace("i", "j").strip("() "))
                unit = "1"
            except ValueError:
                raise ParseError(f"unknown unit {unit!r}", 1, tstart) from None
        for key, val in _UNITS[unit].items():
            coeffs[key] = coeffs.get(key, 0.0) + coef * val
    return MonomialSymbol(coeffs)


# ---------------------------------------------------------------------------
# JSON encoding helpers (complex numbers as [re, im], matrices row-major)


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.complexfloating):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()] if obj.ndim == 1 else [
            [_jsonable(x) for x in row] for row in obj.tolist()
        ]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    return obj


def _write(path: Path, content: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)
    return path


# ---------------------------------------------------------------------------
# subcommand bodies


def _load_symbol(args) -> MonomialSymbol:
    if args.symbol is None:
        raise ConfigError("--symbol is required")
    text = args.symbol
    if os.path.exists(text):
        text = Path(text).read_text()
    return parse_symbol(text)


def cmd_spectrum(args) -> int:
    sym = _load_symbol(args)
    m = assemble_toeplitz(sym, args.hbar, args.n_max)
    try:
        spec = eigen_spectrum(m, args.count, tol=args.tol)
    except NoConvergence as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    lines = [f"{float(ev.real)!r},{float(ev.imag)!r}" for ev in spec.eigenvalues]
    out = "\n".join(lines) + "\n"
    if args.out:
        _write(Path(args.out), out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_pseudospec(args) -> int:
    sym = _load_symbol(args)
    m = assemble_toeplitz(sym, args.hbar, args.n_max)
    rect = tuple(float(x) for x in args.rect.split(","))
    res = tuple(int(x) for x in args.res.split(","))
    if len(rect) != 4 or len(res) != 2:
        raise ConfigError("--rect needs x0,x1,y0,y1 and --res needs NX,NY")
    field = resolvent_grid(m, rect, res)
    out = field.to_csv(c=args.c)
    if args.out:
        _write(Path(args.out), out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_normal_form(args) -> int:
    sym = _load_symbol(args)
    quad_keys = {(2, 0), (1, 1), (0, 2)}
    if any(k not in quad_keys for k in sym.coeffs):
        raise ConfigError("normal-form expects a purely quadratic symbol")
    form = ComplexQuadraticForm.from_zv_coefficients(
        sym.coeffs.get((2, 0), 0.0), sym.coeffs.get((1, 1), 0.0), sym.coeffs.get((0, 2), 0.0)
    )
    try:
        nf = reduce_quadratic(form)
    except NoDeltaFound as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    phase, weights = phase_and_weights(nf)
    doc = {
        "delta": nf.delta,
        "kappa1": nf.kappa1,
        "kappa2": nf.kappa2,
        "kappa3": nf.kappa3,
        "composed": nf.composed,
        "zeta": nf.zeta,
        "Delta": nf.Delta,
        "d0": nf.d0,
        "alpha": nf.alpha,
        "beta": nf.beta,
        "gamma": nf.gamma,
        "phase": {
            "x2": phase.coeff_x2,
            "xv": phase.coeff_xv,
            "v2": phase.coeff_v2,
            "b_over_d": phase.b_over_d,
        },
        "weights": {"r": weights.r, "j": weights.j},
    }
    out = json.dumps(_jsonable(doc), indent=2) + "\n"
    if args.out:
        _write(Path(args.out), out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_action(args) -> int:
    d = complex(*(float(x) for x in args.d.split(",")))
    energy = complex(*(float(x) for x in args.energy.split(",")))
    res = action_integral(d, energy, args.winding)
    doc = {"value": res["value"], "closed_form": res["closed_form"], "nodes": res["nodes"]}
    sys.stdout.write(json.dumps(_jsonable(doc)) + "\n")
    err = abs(res["value"] - res["closed_form"])
    return EXIT_OK if err <= 1e-8 else EXIT_TOLERANCE


def cmd_birkhoff(args) -> int:
    sym = _load_symbol(args)
    tab = symbols.table_from_dict(sym.coeffs, args.degree)
    br = symbols.birkhoff_normal_form(tab, args.degree)
    doc = {"mu0": list(br.mu0), "d0": br.d0, "linear_map": br.linear_map}
    out = json.dumps(_jsonable(doc), indent=2) + "\n"
    if args.out:
        _write(Path(args.out), out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_moser(args) -> int:
    sym = _load_symbol(args)
    degree = args.degree + 2 * args.order
    mu = symbols.FormalSymbol([symbols.radial_table(np.array([0.0, 1.0]), degree)])
    g = symbols.FormalSymbol([symbols.table_from_dict(sym.coeffs, degree)])
    res = symbols.moser_normal_form(mu, g, args.order, degree)
    doc = {
        "a_final": json.loads(res.a_final.to_json()),
        "r_final": [list(p) for p in res.r_final],
    }
    out = json.dumps(_jsonable(doc), indent=2) + "\n"
    if args.out:
        _write(Path(args.out), out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def cmd_verify(args) -> int:
    indices = [int(s) for s in args.only.split(",")] if args.only else None
    results = acceptance.run_all(indices, seed=args.seed)
    n_fail = sum(1 for r in results if not (r.passed and r.within_time))
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return EXIT_OK if n_fail == 0 else EXIT_TOLERANCE


# ---------------------------------------------------------------------------
# config runner


def _config_symbol(cfg: dict) -> MonomialSymbol:
    spec = cfg.get("symbol")
    if spec is None:
        raise ConfigError("config needs a 'symbol' entry")
    if "inline" in spec:
        return MonomialSymbol.from_json(json.dumps(spec["inline"]))
    if "path" in spec:
        return parse_symbol(Path(spec["path"]).read_text())
    if "shorthand" in spec:
        return parse_symbol(spec["shorthand"])
    raise ConfigError("symbol entry needs 'inline', 'path' or 'shorthand'")


def cmd_run(args) -> int:
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _run_config(cfg, Path(args.config))
    except (ConfigError, ParseError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergence as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


def _run_config(cfg: dict, cfg_path: Path) -> int:
    tasks = cfg.get("tasks", [])
    if not tasks:
        raise ConfigError("empty task list")
    out_dir = Path(cfg.get("out_dir", "out"))
    seed = int(cfg.get("seed", 0))
    hbars = cfg.get("hbar", [0.1])
    if isinstance(hbars, (int, float)):
        hbars = [hbars]
    if any(not 0 < h <= 1 for h in hbars):
        raise ConfigError("hbar values must lie in (0, 1]")
    n_max = int(cfg.get("n_max", 64))
    tol = cfg.get("tolerances", {})
    artifacts: list[Path] = []
    status = EXIT_OK

    for task in tasks:
        kind = task.get("type")
        out_name = task.get("out")
        if kind == "spectrum":
            sym = _config_symbol(cfg)
            rows = []
            for hbar in hbars:
                m = assemble_toeplitz(sym, hbar, n_max)
                spec = eigen_spectrum(m, int(task.get("count", 5)), tol=tol.get("spectrum", 1e-8))
                rows += [f"{float(ev.real)!r},{float(ev.imag)!r}" for ev in spec.eigenvalues]
            artifacts.append(_write(out_dir / (out_name or "eig.csv"), "\n".join(rows) + "\n"))
        elif kind == "pseudospec":
            sym = _config_symbol(cfg)
            m = assemble_toeplitz(sym, hbars[0], n_max)
            field = resolvent_grid(m, tuple(task["rect"]), tuple(task["res"]))
            artifacts.append(
                _write(out_dir / (out_name or "field.csv"), field.to_csv(task.get("c")))
            )
        elif kind == "normal-form":
            sym = _config_symbol(cfg)
            ns = argparse.Namespace(symbol=sym.to_json(), out=str(out_dir / (out_name or "nf.json")))
            rc = cmd_normal_form(ns)
            if rc != EXIT_OK:
                return rc
            artifacts.append(out_dir / (out_name or "nf.json"))
        elif kind == "birkhoff":
            sym = _config_symbol(cfg)
            ns = argparse.Namespace(
                symbol=sym.to_json(),
                degree=int(task.get("degree", 8)),
                out=str(out_dir / (out_name or "birkhoff.json")),
            )
            cmd_birkhoff(ns)
            artifacts.append(out_dir / (out_name or "birkhoff.json"))
        elif kind == "moser":
            sym = _config_symbol(cfg)
            ns = argparse.Namespace(
                symbol=sym.to_json(),
                order=int(task.get("order", 3)),
                degree=int(task.get("degree", 4)),
                out=str(out_dir / (out_name or "moser.json")),
            )
            cmd_moser(ns)
            artifacts.append(out_dir / (out_name or "moser.json"))
        elif kind == "action":
            d = complex(*task.get("d", [1.0, 0.0]))
            energy = complex(*task.get("energy", [0.1, 0.0]))
            res = action_integral(d, energy, int(task.get("winding", 1)))
            doc = json.dumps(_jsonable({"value": res["value"], "closed_form": res["closed_form"]})) + "\n"
            artifacts.append(_write(out_dir / (out_name or "action.json"), doc))
        elif kind == "verify":
            results = acceptance.run_all(task.get("only"), seed=seed)
            lines = [r.line() for r in results]
            artifacts.append(_write(out_dir / (out_name or "verify.txt"), "\n".join(lines) + "\n"))
            if any(not (r.passed and r.within_time) for r in results):
                status = EXIT_TOLERANCE
        else:
            raise ConfigError(f"unknown task type {kind!r}")

    manifest = {
        "config": str(cfg_path),
        "seed": seed,
        "artifacts": [
            {"path": str(p), "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}
            for p in artifacts
        ],
    }
    _write(out_dir / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return status


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bargspec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="adaptive eigenvalues of T(f)")
    sp.add_argument("--symbol", required=True, help="JSON map, shorthand, or file path")
    sp.add_argument("--hbar", type=float, required=True)
    sp.add_argument("--count", type=int, default=5)
    sp.add_argument("--n-max", type=int, default=64)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_spectrum)

    ps = sub.add_parser("pseudospec", help="sigma_min grid of (T(f) - lambda)")
    ps.add_argument("--symbol", required=True)
    ps.add_argument("--hbar", type=float, required=True)
    ps.add_argument("--rect", required=True, help="x0,x1,y0,y1")
    ps.add_argument("--res", required=True, help="NX,NY")
    ps.add_argument("--c", type=float, default=None)
    ps.add_argument("--n-max", type=int, default=128)
    ps.add_argument("--out")
    ps.set_defaults(func=cmd_pseudospec)

    nf = sub.add_parser("normal-form", help="quadratic normal-form data as JSON")
    nf.add_argument("--symbol", required=True)
    nf.add_argument("--out")
    nf.set_defaults(func=cmd_normal_form)

    ac = sub.add_parser("action", help="loop action integral vs closed form")
    ac.add_argument("--d", required=True, help="RE,IM")
    ac.add_argument("--energy", required=True, help="RE,IM")
    ac.add_argument("--winding", type=int, default=1)
    ac.set_defaults(func=cmd_action)

    bk = sub.add_parser("birkhoff", help="classical radial normal form")
    bk.add_argument("--symbol", required=True)
    bk.add_argument("--degree", type=int, default=8)
    bk.add_argument("--out")
    bk.set_defaults(func=cmd_birkhoff)

    ms = sub.add_parser("moser", help="Moser conjugation of id + hbar^2 g")
    ms.add_argument("--symbol", required=True)
    ms.add_argument("--order", type=int, default=3)
    ms.add_argument("--degree", type=int, default=4)
    ms.add_argument("--out")
    ms.set_defaults(func=cmd_moser)

    vf = sub.add_parser("verify", help="run the acceptance suite")
    vf.add_argument("--only", help="comma-separated criterion indices")
    vf.add_argument("--seed", type=int, default=0, help="seed for randomised corpora")
    vf.set_defaults(func=cmd_verify)

    rn = sub.add_parser("run", help="execute a JSON experiment config")
    rn.add_argument("--config", required=True)
    rn.set_defaults(func=cmd_run)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NoConvergence as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ParseError, ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
