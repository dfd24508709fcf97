"""Command line front end: strict JSON/flag configuration, dispatch, CSV/JSON/gnuplot output."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

import latmesh
from latmesh import kernels
from latmesh.errors import GuardViolation, LatmeshError, ValidationError
from latmesh.precision.ball import DEFAULT_BITS, ESCALATIONS, PrecisionContext, RealBall, default_max_bits
from latmesh.precision.exact import parse_exact
from latmesh.precision.pair import ExponentPair

# -- schema -------------------------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    kind: str  # int, num, str, bool, exact, choice
    default: object = None
    many: bool = False
    choices: tuple = ()
    help: str = ""


COMMON = {
    "a": Param("exact", "1", help="first exponent (integer, sqrt(n) expression or decimal)"),
    "b": Param("exact", "2", help="second exponent"),
    "assert_irrational": Param("bool", False, help="accept a decimal exponent pair as irrational"),
    "bits": Param("int", None, help="working precision in bits (default 192, capped by max_bits)"),
    "max_bits": Param("int", None, help="precision cap (default: LATMESH_MAX_BITS or 4096)"),
    "threads": Param("int", 1, help="worker threads"),
    "output_dir": Param("str", "latmesh-out", help="directory for CSV/JSON/gnuplot output"),
    "seed": Param("int", 0, help="seed for randomized suites"),
    "plots": Param("bool", False, help="also write gnuplot scripts"),
}

SCHEMAS = {
    "count": {"x": Param("num", None, many=True, help="count bounds")},
    "delta": {"x": Param("num", None, many=True)},
    "voronoi": {
        "H": Param("int", [10, 40, 160], many=True),
        "x_lo": Param("num", "100000"),
        "x_hi": Param("num", "200000"),
        "points": Param("int", 200),
    },
    "gterm": {
        "x": Param("num", None, many=True),
        "H": Param("int", [100], many=True),
        "order": Param("choice", "a", choices=("a", "b"), help="which of the two G-terms"),
    },
    "quads": {"box": Param("int", 4), "mode": Param("choice", "parametrized", choices=("parametrized", "brute"))},
    "gab": {
        "route": Param("choice", "partial", choices=("partial", "closed")),
        "box": Param("int", [10000], many=True),
        "require_validation": Param("bool", False),
        "validate": Param("bool", False),
    },
    "sigma1": {
        "H": Param("int", [2, 8, 32, 128], many=True),
        "box": Param("int", 10000),
        "role": Param("choice", "h", choices=("h", "r")),
    },
    "sigma2": {"T": Param("num", ["1000", "100000", "10000000"], many=True), "H": Param("int", 64), "R": Param("int", 64)},
    "nearpairs": {
        "mu": Param("exact", "1/3"),
        "nu": Param("exact", "2/3"),
        "H1": Param("num", "16"),
        "H2": Param("num", "16"),
        "R1": Param("num", "16"),
        "R2": Param("num", "16"),
        "delta": Param("num", "1/100"),
        "count": Param("int", 0, help="run this many randomized queries instead"),
        "grid": Param("bool", False, help="run the 20-query grid and fit a constant"),
    },
    "mingap": {
        "alpha": Param("exact", None),
        "beta": Param("exact", None),
        "M": Param("int", [2, 5, 10, 20, 50], many=True),
        "transform": Param("choice", "raw", choices=("raw", "eta")),
    },
    "roth": {"alpha": Param("exact", "sqrt(2)"), "H": Param("int", 100000)},
    "bproc": {
        "A": Param("num", "100000"),
        "beta": Param("num", "2"),
        "m1": Param("num", "100"),
        "m2": Param("num", "1000"),
        "count": Param("int", 0, help="run this many random phases instead"),
    },
    "moments": {"T": Param("num", None, many=True), "T0": Param("num", None)},
    "meanvalue": {"T": Param("num", None, many=True)},
    "signchanges": {"T": Param("num", "100000"), "T0": Param("num", None), "c": Param("num", None)},
    "report": {"T": Param("num", ["10000", "100000", "1000000"], many=True)},
}

HEADERS = {
    "count": ["x", "D"],
    "delta": ["x", "D", "main", "main_err", "delta", "delta_err"],
    "voronoi": ["H", "points", "rms", "max_abs"],
    "gterm": ["x", "H", "order", "value", "value_err"],
    "quads": ["h1", "r1", "h2", "r2", "diagonal", "weight"],
    "gab": ["route", "box", "value", "value_err", "tail_bound"],
    "sigma1": ["H", "box", "role", "value", "value_err", "normalized"],
    "sigma2": ["T", "H", "R", "swapped", "value", "value_err", "scaled"],
    "nearpairs": ["mu", "nu", "H1", "H2", "R1", "R2", "delta", "count", "brute", "shape", "ratio"],
    "mingap": ["M", "transform", "min_gap", "min_gap_err", "h1", "r1", "h2", "r2", "fitted_C"],
    "roth": ["n", "value", "value_err"],
    "bproc": ["A", "beta", "m1", "m2", "direct_re", "direct_im", "trans_re", "trans_im", "residual"],
    "moments": [
        "T", "T0", "int_delta", "int_delta_err", "int_delta_sq", "int_delta_sq_err",
        "predicted", "ratio", "sign_changes", "sup_abs_delta",
    ],
    "meanvalue": ["T", "integral", "integral_err", "ratio"],
    "signchanges": ["T", "T0", "sign_changes", "max_gap", "c", "length", "subwindows", "min_subwindow_changes"],
    "report": [
        "T", "T0", "int_delta", "int_delta_err", "int_delta_sq", "int_delta_sq_err",
        "predicted", "ratio", "sign_changes", "sup_abs_delta",
    ],
}

REQUIRED = {"count": ("x",), "delta": ("x",), "gterm": ("x",), "moments": ("T",), "meanvalue": ("T",)}


def _check_value(name: str, p: Param, value):
    def one(v):
        if p.kind == "int":
            if isinstance(v, bool) or not isinstance(v, int):
                raise ValidationError(f"{name} must be an integer")
            return v
        if p.kind == "bool":
            if not isinstance(v, bool):
                raise ValidationError(f"{name} must be true or false")
            return v
        if p.kind == "num":
            if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                raise ValidationError(f"{name} must be a number")
            try:
                Fraction(str(v))
            except (ValueError, ZeroDivisionError) as exc:
                raise ValidationError(f"{name}: cannot parse {v!r} as a number") from exc
            return str(v)
        if p.kind == "exact":
            if isinstance(v, bool) or not isinstance(v, (int, str)):
                raise ValidationError(f"{name} must be an integer or an expression string")
            parse_exact(str(v))
            return str(v)
        if p.kind == "choice":
            if v not in p.choices:
                raise ValidationError(f"{name} must be one of {', '.join(p.choices)}")
            return v
        if not isinstance(v, str):
            raise ValidationError(f"{name} must be a string")
        return v

    if value is None:
        return None
    if p.many:
        values = value if isinstance(value, list) else [value]
        if not values:
            raise ValidationError(f"{name} must not be empty")
        return [one(v) for v in values]
    if isinstance(value, list):
        raise ValidationError(f"{name} takes a single value")
    return one(value)


def resolve_config(subcommand: str, file_values: dict, flag_values: dict) -> dict:
    """Merge defaults < config file < flags, rejecting unknown keys and bad types."""
    if subcommand not in SCHEMAS:
        raise ValidationError(f"unknown subcommand {subcommand!r}")
    schema = {**COMMON, **SCHEMAS[subcommand]}
    for source in (file_values, flag_values):
        unknown = sorted(set(source) - set(schema))
        if unknown:
            raise ValidationError(f"unknown config keys for {subcommand}: {', '.join(unknown)}")
    cfg = {}
    for name, p in schema.items():
        value = flag_values.get(name, file_values.get(name, p.default))
        cfg[name] = _check_value(name, p, value)
    for name in REQUIRED.get(subcommand, ()):
        if cfg[name] is None:
            raise ValidationError(f"{subcommand} needs {name}")
    if cfg["threads"] < 1:
        raise ValidationError("threads must be >= 1")
    cfg["subcommand"] = subcommand
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# -- report -------------------------------------------------------------------------------


@dataclass
class Report:
    subcommand: str
    header: list
    rows: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    stdout: list = field(default_factory=list)


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, RealBall):
        return repr(float(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def csv_text(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.header)
    for row in report.rows:
        if len(row) != len(report.header):
            raise AssertionError(f"row width {len(row)} != header width {len(report.header)}")
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _json_cell(v):
    if isinstance(v, RealBall):
        return {"mid": float(v), "rad": v.rad_float()}
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {k: _json_cell(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_cell(x) for x in v]
    return v


def versions() -> dict:
    return {
        "latmesh": latmesh.__version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "mpmath": mpmath.__version__,
        "kernels": kernels.BACKEND,
    }


def write_outputs(report: Report, out_dir: Path, plots: bool = False) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    stem = f"{report.subcommand}-{stamp}"
    k = 1
    while (out_dir / f"{stem}.csv").exists():
        stem = f"{report.subcommand}-{stamp}-{k}"
        k += 1
    paths = {"csv": out_dir / f"{stem}.csv", "json": out_dir / f"{stem}.json"}
    paths["csv"].write_text(csv_text(report))
    if plots:
        paths["gp"] = emit_plots(report, out_dir, stem)
    doc = {
        "meta": _json_cell(report.meta),
        "header": report.header,
        "rows": [[_json_cell(v) for v in row] for row in report.rows],
        "warnings": report.warnings,
        "extra": _json_cell(report.extra),
        "files": {k: str(v) if not isinstance(v, list) else [str(x) for x in v] for k, v in paths.items()},
    }
    paths["json"].write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return paths


# -- plots --------------------------------------------------------------------------------

_PLOT_KINDS = {
    "moments": ("ratio_vs_T", 1, 8, "T", "int Delta^2 / predicted", True),
    "report": ("ratio_vs_T", 1, 8, "T", "int Delta^2 / predicted", True),
    "delta": ("delta_trace", 1, 5, "x", "Delta(x)", False),
    "voronoi": ("rms_vs_H", 1, 3, "H", "rms(Delta - Delta*)", True),
}


def plot_script(report: Report, csv_name: str, stem: str) -> tuple[str, str] | None:
    """(figure kind, gnuplot script) for the report, or None if there is no figure."""
    if report.subcommand not in _PLOT_KINDS:
        return None
    kind, xcol, ycol, xlabel, ylabel, logx = _PLOT_KINDS[report.subcommand]
    lines = [
        "set datafile separator ','",
        "set key top right",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set logscale x" if logx else "unset logscale x",
        "set terminal pngcairo size 900,600",
        f"set output '{stem}-{kind}.png'",
    ]
    plot = f"plot '{csv_name}' every ::1 using {xcol}:{ycol} with linespoints title '{ylabel}'"
    if kind == "ratio_vs_T":
        plot += ", 1 with lines dashtype 2 title 'ratio 1'"
    lines.append(plot)
    return kind, "\n".join(lines) + "\n"


def emit_plots(report: Report, out_dir: Path, stem: str) -> list:
    """Write gnuplot scripts next to the CSV; never runs a plotter."""
    if not report.rows:
        report.warnings.append("no rows: plot scripts skipped")
        return []
    made = plot_script(report, f"{stem}.csv", stem)
    if made is None:
        return []
    kind, text = made
    path = Path(out_dir) / f"{stem}-{kind}.gp"
    path.write_text(text)
    return [path]


# -- subcommands --------------------------------------------------------------------------


def _ctx(cfg) -> PrecisionContext:
    cap = cfg["max_bits"] or default_max_bits()
    bits = cfg["bits"] if cfg["bits"] is not None else min(DEFAULT_BITS, cap)
    if bits > cap:
        raise ValidationError(f"bits={bits} exceeds the precision cap {cap}")
    return PrecisionContext(bits, cap)


def _pair(cfg) -> ExponentPair:
    ctx = _ctx(cfg)
    return ExponentPair.parse(cfg["a"], cfg["b"], ctx, cfg["assert_irrational"])


def _num(s) -> Fraction:
    return Fraction(str(s))


def _fmt(q: Fraction) -> str:
    """Terminating decimals print as decimals, other rationals as p/q."""
    d, places = q.denominator, 0
    for f in (2, 5):
        k = 0
        while d % f == 0:
            d //= f
            k += 1
        places = max(places, k)
    if d != 1:
        return str(q)
    with localcontext() as ctx:
        ctx.prec = len(str(abs(q.numerator))) + places + 2
        text = format(Decimal(q.numerator) / Decimal(q.denominator), "f")
    return text.rstrip("0").rstrip(".") if "." in text else text


def run_count(cfg, rep: Report):
    from latmesh.counting import count_hyperbola

    pair = _pair(cfg)
    for x in map(_num, cfg["x"]):
        D = count_hyperbola(pair, x)
        rep.rows.append([_fmt(x), D])
        rep.stdout.append(str(D))


def run_delta(cfg, rep: Report):
    from latmesh.counting import delta_eval

    pair = _pair(cfg)
    for x in map(_num, cfg["x"]):
        r = delta_eval(pair, x, pair.ctx)
        rep.rows.append([_fmt(x), r.D, r.main, r.main.rad_float(), r.delta, r.delta.rad_float()])
        rep.stdout.append(f"{_fmt(x)} {r.D} {float(r.delta)!r}")


def run_voronoi(cfg, rep: Report):
    from latmesh.counting import delta_many
    from latmesh.voronoi import delta_star_many

    pair = _pair(cfg)
    lo, hi, n = float(_num(cfg["x_lo"])), float(_num(cfg["x_hi"])), cfg["points"]
    if n < 1 or hi <= lo or lo < 10:
        raise ValidationError("need points >= 1 and 10 <= x_lo < x_hi")
    xs = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    exact = delta_many(pair, xs)
    for H in cfg["H"]:
        diff = exact - delta_star_many(pair, xs, H)
        rep.rows.append([H, n, float(np.sqrt(np.mean(diff * diff))), float(np.abs(diff).max())])


def run_gterm(cfg, rep: Report):
    from latmesh.voronoi import g_term

    pair = _pair(cfg)
    for x in map(_num, cfg["x"]):
        for H in cfg["H"]:
            v = g_term(cfg["order"], pair, x, H, pair.ctx)
            rep.rows.append([_fmt(x), H, cfg["order"], v, v.rad_float()])


def run_quads(cfg, rep: Report):
    from latmesh.coincidence import quads_enumerate

    pair = _pair(cfg)
    for q in quads_enumerate(pair, cfg["box"], cfg["mode"]):
        rep.rows.append([q.h1, q.r1, q.h2, q.r2, q.is_diagonal(), q.weight])


def run_gab(cfg, rep: Report):
    from latmesh.coincidence import gab_closed_form, gab_partial, validate_closed_form

    pair = _pair(cfg)
    out = Path(cfg["output_dir"])
    if cfg["validate"]:
        vr = validate_closed_form(pair, record_dir=out)
        rep.extra["validation"] = vr.to_dict()
        if not vr.passed:
            rep.warnings.append("closed form failed validation")
    if cfg["route"] == "closed":
        g = gab_closed_form(pair, pair.ctx, cfg["require_validation"], record_dir=out)
        rep.rows.append(["closed_form", None, g.value, g.value.rad_float(), None])
        rep.warnings.extend(g.provenance)
        return
    for box in cfg["box"]:
        g = gab_partial(pair, box)
        rep.rows.append(["partial_sum", box, g.value, g.value.rad_float(), g.tail_bound])
        for w in g.provenance:
            if w not in rep.warnings:
                rep.warnings.append(w)


def run_sigma1(cfg, rep: Report):
    from latmesh.coincidence import sigma1_normalized, sigma1_partial

    pair = _pair(cfg)
    for H in cfg["H"]:
        v = sigma1_partial(pair, H, cfg["box"], cfg["role"])
        rep.rows.append([H, cfg["box"], cfg["role"], v, v.rad_float(), sigma1_normalized(pair, H, cfg["box"], cfg["role"])])


def run_sigma2(cfg, rep: Report):
    from latmesh.correlation import sigma2_eval

    pair = _pair(cfg)
    theta = pair.floats()["theta"]
    for T in map(_num, cfg["T"]):
        for swapped in (False, True):
            H, R = (cfg["R"], cfg["H"]) if swapped else (cfg["H"], cfg["R"])
            v = sigma2_eval(pair, T, H, R, pair.ctx, swapped)
            rep.rows.append([_fmt(T), H, R, swapped, v, v.rad_float(), float(v) / float(T) ** theta])


def run_nearpairs(cfg, rep: Report):
    from latmesh.correlation import (
        NearPairQuery,
        fit_near_pair_constant,
        near_pair_count,
        near_pair_count_brute,
        near_pair_grid,
        random_queries,
    )

    ctx = _ctx(cfg)
    if cfg["count"] > 0:
        queries = random_queries(cfg["seed"], cfg["count"])
    elif cfg["grid"]:
        queries = near_pair_grid(parse_exact(cfg["mu"]), parse_exact(cfg["nu"]))
    else:
        queries = [
            NearPairQuery(
                parse_exact(cfg["mu"]), parse_exact(cfg["nu"]),
                *(_num(cfg[k]) for k in ("H1", "H2", "R1", "R2")), _num(cfg["delta"]),
            )
        ]
    counts = []
    for q in queries:
        c = near_pair_count(q, ctx)
        brute = near_pair_count_brute(q, ctx) if q.volume() <= 10**6 else None
        if brute is not None and brute != c:
            rep.warnings.append(f"sweep/brute mismatch on {q}")
        counts.append(c)
        shape = q.shape()
        rep.rows.append([q.mu, q.nu, q.H1, q.H2, q.R1, q.R2, q.delta, c, brute, shape, c / shape])
    fit = fit_near_pair_constant(queries, counts)
    rep.extra["fit"] = {k: v for k, v in fit.items() if k != "ratios"}
    rep.warnings.append("near-pair constant is a fitted, non-rigorous quantity")


def run_mingap(cfg, rep: Report):
    from latmesh.correlation import min_gap

    ctx = _ctx(cfg)
    if cfg["alpha"] is None or cfg["beta"] is None:
        spec = _pair(cfg)
    else:
        spec = (parse_exact(cfg["alpha"]), parse_exact(cfg["beta"]))
    for M in cfg["M"]:
        g = min_gap(spec, M, ctx, cfg["transform"])
        rep.rows.append([M, cfg["transform"], g.min_gap, g.min_gap.rad_float(), *g.witness, g.fitted_C])
    rep.warnings.append("fitted_C is descriptive; the underlying constant is ineffective")


def run_roth(cfg, rep: Report):
    from latmesh.correlation import roth_quality

    ctx = _ctx(cfg)
    r = roth_quality(parse_exact(cfg["alpha"]), cfg["H"], ctx)
    for n, v in r.records:
        rep.rows.append([n, v, v.rad_float()])
    rep.extra["probe"] = {"epsilon": r.epsilon, "n": r.probe[0], "value": r.probe[1]}


def run_bproc(cfg, rep: Report):
    from latmesh.voronoi import PhaseSpec, bprocess_compare, random_phases

    ctx = _ctx(cfg)
    if cfg["count"] > 0:
        phases = random_phases(cfg["seed"], cfg["count"])
    else:
        phases = [PhaseSpec(*(float(_num(cfg[k])) for k in ("A", "beta", "m1", "m2")))]
    details = []
    for ph in phases:
        r = bprocess_compare(ph, ctx)
        rep.rows.append([
            ph.A, ph.beta_exp, ph.m1, ph.m2,
            r.direct.re, r.direct.im, r.transformed.re, r.transformed.im, r.residual,
        ])
        details.append({
            "error_scale": r.error_scale,
            "boundary_term": r.boundary_term,
            "ratio": float(r.residual) / r.error_scale if r.error_scale else None,
            "stationary_points": len(r.stationary_points),
            "no_stationary_points": r.no_stationary_points,
            "residual_err": r.residual.rad_float(),
        })
    rep.extra["phases"] = details


def _moment_row(wm) -> list:
    return [
        _fmt(wm.window.T), _fmt(wm.window.T0),
        wm.int_delta, wm.int_delta.rad_float(), wm.int_delta_sq, wm.int_delta_sq.rad_float(),
        wm.predicted_main, wm.ratio, wm.sign_changes, wm.sup_abs_delta,
    ]


def _moment_extra(wm) -> dict:
    return {
        "T": str(wm.window.T),
        "pieces": wm.pieces,
        "gab_route": wm.gab.route,
        "gab": wm.gab.value,
        "predicted_err": wm.predicted_main.rad_float(),
        "ratio_err": wm.ratio.rad_float(),
        "sup_abs_delta_err": wm.sup_abs_delta.rad_float(),
    }


def run_moments(cfg, rep: Report):
    from latmesh.coincidence import gab_for_moments
    from latmesh.moments import Window, window_moments

    pair = _pair(cfg)
    gab = gab_for_moments(pair, pair.ctx)
    rep.warnings.extend(gab.provenance)
    if not pair.is_integer:
        rep.warnings.append("irrational-pair band is heuristic: the error term is sub-polynomial")
    rep.extra["windows"] = []
    for T in map(_num, cfg["T"]):
        T0 = _num(cfg["T0"]) if cfg["T0"] is not None else T
        wm = window_moments(pair, Window(T, T0), gab, pair.ctx, cfg["threads"])
        if wm.int_delta_sq.certainly_lt(wm.int_delta * wm.int_delta / RealBall.exact_value(T0, wm.int_delta.prec)):
            rep.warnings.append(f"Cauchy-Schwarz violated on window T={T}")
        rep.rows.append(_moment_row(wm))
        rep.extra["windows"].append(_moment_extra(wm))


def run_meanvalue(cfg, rep: Report):
    from latmesh.moments import mean_value_check

    pair = _pair(cfg)
    for T in map(_num, cfg["T"]):
        integral, ratio = mean_value_check(pair, T, pair.ctx, cfg["threads"])
        rep.rows.append([_fmt(T), integral, integral.rad_float(), ratio])


def run_signchanges(cfg, rep: Report):
    from latmesh.moments import (
        fit_sign_change_constant,
        integrate_range,
        max_change_gap,
        sign_change_length,
        subwindow_changes,
    )

    pair = _pair(cfg)
    T = _num(cfg["T"])
    T0 = _num(cfg["T0"]) if cfg["T0"] is not None else T
    if cfg["c"] is None:
        fit = fit_sign_change_constant(pair, T, pair.ctx)
        c = fit["c"]
        rep.warnings.append("sign-change length constant measured at this T (empirical)")
    else:
        c = float(_num(cfg["c"]))
    tot = integrate_range(pair, T, T + T0, pair.ctx, cfg["threads"])
    length = sign_change_length(pair, T, c)
    start, end = float(T), float(T + T0)
    counts = subwindow_changes(start, end, length, tot.change_locations) if length <= end - start else []
    gap = max_change_gap(start, end, tot.change_locations)
    rep.rows.append([_fmt(T), _fmt(T0), tot.sign_changes, gap, c, length, len(counts), min(counts) if counts else None])
    rep.extra["change_locations_head"] = tot.change_locations[:50]


def run_report(cfg, rep: Report):
    from latmesh.moments import convergence_report

    pair = _pair(cfg)
    out = convergence_report(pair, [_num(t) for t in cfg["T"]], pair.ctx, cfg["threads"])
    for row in out["rows"]:
        rep.rows.append(_moment_row(row.moment))
    rep.extra["sup_exponent"] = out["sup_exponent"]
    rep.extra["windows"] = [_moment_extra(r.moment) for r in out["rows"]]
    if out["rows"]:
        rep.warnings.extend(out["rows"][0].moment.gab.provenance)
    rep.warnings.append("sup-exponent is a least-squares fit over few points")


RUNNERS = {
    "count": run_count,
    "delta": run_delta,
    "voronoi": run_voronoi,
    "gterm": run_gterm,
    "quads": run_quads,
    "gab": run_gab,
    "sigma1": run_sigma1,
    "sigma2": run_sigma2,
    "nearpairs": run_nearpairs,
    "mingap": run_mingap,
    "roth": run_roth,
    "bproc": run_bproc,
    "moments": run_moments,
    "meanvalue": run_meanvalue,
    "signchanges": run_signchanges,
    "report": run_report,
}


def dispatch(cfg: dict) -> Report:
    """Run one validated configuration and return its report (no files written)."""
    sub = cfg["subcommand"]
    rep = Report(sub, list(HEADERS[sub]))
    ESCALATIONS.reset()
    start = time.perf_counter()
    RUNNERS[sub](cfg, rep)
    try:
        pair_notes = _pair(cfg).provenance()
    except LatmeshError:
        pair_notes = []
    for note in pair_notes:
        if note not in rep.warnings:
            rep.warnings.append(note)
    echo = {k: v for k, v in cfg.items()}
    rep.meta = {
        "config": echo,
        "config_hash": config_hash(echo),
        "versions": versions(),
        "wall_time_s": time.perf_counter() - start,
        "escalations": ESCALATIONS.read(),
        "kernels": kernels.BACKEND,
    }
    return rep


# -- argument parsing ----------------------------------------------------------------------


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latmesh", description=__doc__, allow_abbrev=False)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SCHEMAS:
        sp = sub.add_parser(name, allow_abbrev=False)
        sp.add_argument("--config", help="JSON file with configuration keys")
        for key, p in {**COMMON, **SCHEMAS[name]}.items():
            kw = {"dest": key, "default": argparse.SUPPRESS, "help": p.help or None}
            if p.kind == "bool":
                sp.add_argument(_flag(key), action="store_true", **kw)
                continue
            if p.kind == "int":
                kw["type"] = int
            if p.kind == "choice":
                kw["choices"] = p.choices
            if p.many:
                kw["nargs"] = "+"
            sp.add_argument(_flag(key), **kw)
    return parser


def _reject_constant(name: str):
    raise ValidationError(f"config: {name} is not valid JSON")


def _unique_keys(pairs: list) -> dict:
    keys = [k for k, _ in pairs]
    dups = sorted({k for k in keys if keys.count(k) > 1})
    if dups:
        raise ValidationError(f"config: duplicate keys {', '.join(dups)}")
    return dict(pairs)


def load_config_file(path: str | None) -> dict:
    """Strict JSON object: NaN/Infinity and duplicate keys are rejected."""
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(), parse_constant=_reject_constant, object_pairs_hook=_unique_keys)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    data.pop("subcommand", None)
    return data


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    sub = args.pop("subcommand")
    config_path = args.pop("config", None)
    try:
        cfg = resolve_config(sub, load_config_file(config_path), args)
        rep = dispatch(cfg)
        paths = write_outputs(rep, Path(cfg["output_dir"]), cfg["plots"])
    except GuardViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except LatmeshError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    out = rep.stdout or csv_text(rep).splitlines()
    print("\n".join(out))
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {paths['csv']}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
