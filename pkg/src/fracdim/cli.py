"""Command line: fracdim generate|dim|analyze|validate.

Every command takes an optional JSON config; flags override its keys.  The
merged config is schema-checked (unknown keys rejected) before any work.
Exit codes: 0 success, 1 schema, 2 numeric, 3 resource, 4 IO.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import io, oracle
from .boxcount import EpsilonLadder, estimate_box_dim, minkowski_band
from .criterion import (criterion_check, envelope_constants, index_sandwich, zero_lattice)
from .curves import (ChirpSpec, PhaseSpec, SpiralSpec, sample_chirp, sample_phase_curve,
                     sample_spiral)
from .errors import FracDimError, OutputError, SchemaError
from .rectify import classify_chirp_length, classify_spiral_length, extrema_series
from .spiral import (check_waviness, decay_gap_check, envelope_and_derivative_bounds,
                     extract_wavy_sequence, oscillations, phase_asymptotic_check, phase_profile,
                     radial_decrease_bound, DEFAULT_THETA)

POS = {"type": "number", "exclusiveMinimum": 0}
NONNEG = {"type": "number", "minimum": 0}
COUNT = {"type": "integer", "minimum": 1}
OUTPUT = {"out": {"type": "string"}, "format": {"enum": ["csv", "json"]}}
CURVE = {
    "family": {"enum": ["chirp", "spiral", "phase", "phase-curve"]},
    "alpha": POS, "beta": POS,
    "phi_start": NONNEG, "phi_end": POS, "points_per_turn": {"type": "integer", "minimum": 16},
    "clockwise": {"type": "boolean"},
    "tau_min": POS, "points_per_period": {"type": "integer", "minimum": 8},
    "t_start": POS, "t_end": POS, "max_segment": POS,
}


def _schema(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SCHEMAS = {
    "generate": _schema({**CURVE, **OUTPUT}, ["family", "alpha"]),
    "dim": _schema({**CURVE, **OUTPUT, "input": {"type": "string"}, "k_first": {"type": "integer"},
                    "k_last": {"type": "integer"}, "min_window": {"type": "integer", "minimum": 2},
                    "minkowski": {"type": "number", "minimum": 1, "maximum": 2},
                    "resolution_factor": {"type": "integer", "minimum": 4},
                    "plot": {"type": "boolean"}}),
    "wavy": _schema({**OUTPUT, "alpha": POS, "t0": POS, "count": {"type": "integer", "minimum": 8},
                     "margin": NONNEG}, ["alpha"]),
    "radial": _schema({**OUTPUT, "alpha": POS, "t_start": POS, "phi_min": POS, "phi_max": POS,
                       "delta_phi": {"type": "array", "items": POS, "minItems": 1},
                       "theta": {"type": "number", "exclusiveMinimum": 0, "maximum": math.pi},
                       "n_grid": {"type": "integer", "minimum": 2}}, ["alpha"]),
    "phase-asymptotic": _schema({**OUTPUT, "alpha": NONNEG, "t_start": POS, "t_min": POS,
                                 "t_max": POS, "n_grid": {"type": "integer", "minimum": 2}},
                                ["alpha"]),
    "length": _schema({**OUTPUT, "family": {"enum": ["chirp", "spiral", "phase", "phase-curve"]},
                       "alpha": POS, "beta": POS, "phi_start": NONNEG, "t_start": POS,
                       "schedule": {"type": "array", "items": POS, "minItems": 5},
                       "points_per_period": {"type": "integer", "minimum": 8},
                       "k_max": {"type": "integer", "minimum": 10}}, ["alpha"]),
    "criterion": _schema({**OUTPUT, "alpha": POS, "beta": POS, "s": {"type": "number"},
                          "k_max": {"type": "integer", "minimum": 10}, "k_first": {"type": "integer"},
                          "k_last": {"type": "integer"}, "ratio_bound": POS}, ["alpha"]),
    "validate": _schema({**OUTPUT, "family": {"enum": list(oracle.FAMILIES)},
                         "alphas": {"type": "array", "items": {"type": "number"}},
                         "tolerance": POS,
                         "settings": _schema({
                             "phi_start": NONNEG, "phi_end": POS, "points_per_turn": COUNT,
                             "tau_min": POS, "points_per_period": COUNT, "beta": POS,
                             "t_start": POS, "t_end": POS, "max_segment": POS,
                             "k_first": {"type": "integer"},
                             "k_last": {"anyOf": [{"type": "integer"},
                                                  {"type": "object",
                                                   "additionalProperties": {"type": "integer"}}]},
                             "min_octaves": NONNEG})}),
}

CHIRP_SCHEDULE = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 5e-7, 2.5e-7, 1e-7]
SPIRAL_HORIZONS = [1e2, 1e3, 1e4, 1e5, 1e6, 2e6, 4e6, 8e6]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SchemaError(message)


def _output_flags(p, plot=False):
    p.add_argument("--config", metavar="FILE.json", help="JSON config; flags override its keys")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--format", choices=["csv", "json"])
    if plot:
        p.add_argument("--plot", action="store_true", default=argparse.SUPPRESS,
                       help="also write an SVG of the log-log fit")


def _curve_flags(p):
    p.add_argument("--family", choices=["chirp", "spiral", "phase", "phase-curve"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--phi-start", type=float)
    p.add_argument("--phi-end", type=float)
    p.add_argument("--points-per-turn", type=int)
    p.add_argument("--clockwise", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--tau-min", type=float)
    p.add_argument("--points-per-period", type=int)
    p.add_argument("--t-start", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--max-segment", type=float)


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    ap = _Parser(prog="fracdim", description="Box dimension and oscillation analysis of chirps and spirals.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="sample a curve to CSV (or JSON)")
    _curve_flags(g)
    _output_flags(g)

    d = sub.add_parser("dim", help="box dimension of a polyline file or inline curve")
    d.add_argument("--input", help="polyline CSV with header x,y")
    _curve_flags(d)
    d.add_argument("--k-first", type=int)
    d.add_argument("--k-last", type=int)
    d.add_argument("--min-window", type=int)
    d.add_argument("--minkowski", type=float, metavar="S", help="also compute the Minkowski band at S")
    d.add_argument("--resolution-factor", type=int)
    _output_flags(d, plot=True)

    an = sub.add_parser("analyze", help="wavy | radial | phase-asymptotic | length | criterion")
    asub = an.add_subparsers(dest="analysis", required=True, parser_class=_Parser)
    w = asub.add_parser("wavy", help="wavy sequence and waviness conditions")
    w.add_argument("--alpha", type=float)
    w.add_argument("--t0", type=float)
    w.add_argument("--count", type=int)
    w.add_argument("--margin", type=float)
    _output_flags(w)
    r = asub.add_parser("radial", help="decay gaps, radial decrease and envelope bounds")
    r.add_argument("--alpha", type=float)
    r.add_argument("--t-start", type=float)
    r.add_argument("--phi-min", type=float)
    r.add_argument("--phi-max", type=float)
    r.add_argument("--delta-phi", type=_floats)
    r.add_argument("--theta", type=float)
    r.add_argument("--n-grid", type=int)
    _output_flags(r)
    pa = asub.add_parser("phase-asymptotic", help="sup |phi(t) - t - pi/2| t")
    pa.add_argument("--alpha", type=float)
    pa.add_argument("--t-start", type=float)
    pa.add_argument("--t-min", type=float)
    pa.add_argument("--t-max", type=float)
    pa.add_argument("--n-grid", type=int)
    _output_flags(pa)
    ln = asub.add_parser("length", help="rectifiability verdict")
    ln.add_argument("--family", choices=["chirp", "spiral", "phase", "phase-curve"])
    ln.add_argument("--alpha", type=float)
    ln.add_argument("--beta", type=float)
    ln.add_argument("--phi-start", type=float)
    ln.add_argument("--t-start", type=float)
    ln.add_argument("--schedule", type=_floats, help="cutoffs (chirp) or horizons (spirals)")
    ln.add_argument("--points-per-period", type=int)
    ln.add_argument("--k-max", type=int)
    _output_flags(ln)
    c = asub.add_parser("criterion", help="oscillation criterion at candidate dimension s")
    c.add_argument("--alpha", type=float)
    c.add_argument("--beta", type=float)
    c.add_argument("--s", type=float)
    c.add_argument("--k-max", type=int)
    c.add_argument("--k-first", type=int)
    c.add_argument("--k-last", type=int)
    c.add_argument("--ratio-bound", type=float)
    _output_flags(c)

    v = sub.add_parser("validate", help="compare estimates with the closed-form dimensions")
    v.add_argument("--family", choices=list(oracle.FAMILIES))
    v.add_argument("--alphas", type=_floats)
    v.add_argument("--tolerance", type=float)
    _output_flags(v)
    return ap


def _merged(args, schema_key):
    cfg = {}
    if args.config:
        cfg = io.read_json(args.config)
        if not isinstance(cfg, dict):
            raise SchemaError("config must be a JSON object")
    skip = {"config", "command", "analysis"}
    for key, val in vars(args).items():
        if key not in skip and val is not None:
            cfg[key] = val
    try:
        jsonschema.validate(cfg, SCHEMAS[schema_key])
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "config"
        raise SchemaError(f"{where}: {err.message}") from None
    return cfg


def _family(cfg):
    fam = cfg.get("family")
    return "phase-curve" if fam == "phase" else fam


def build_curve(cfg):
    fam, alpha = _family(cfg), cfg["alpha"]
    h = cfg.get("max_segment")
    if fam == "spiral":
        spec = SpiralSpec(alpha, phi_start=cfg.get("phi_start", 2 * math.pi),
                          orientation="clockwise" if cfg.get("clockwise") else "counterclockwise")
        return sample_spiral(spec, cfg.get("phi_end", 1e4 * math.pi), cfg.get("points_per_turn", 64), h)
    if fam == "chirp":
        spec = ChirpSpec(alpha, cfg.get("beta", 1.0))
        return sample_chirp(spec, cfg.get("tau_min", 1e-4), cfg.get("points_per_period", 64), h)
    spec = PhaseSpec(alpha, t_start=cfg.get("t_start", 1.0))
    return sample_phase_curve(spec, cfg.get("t_end", 1e4 * math.pi), cfg.get("points_per_period", 64), h)


def _out_dir(cfg):
    return Path(cfg.get("out", "."))


def cmd_generate(cfg):
    curve = build_curve(cfg)
    out = _out_dir(cfg)
    if cfg.get("format", "csv") == "json":
        io.write_json(out / "curve.json", io.polyline_document(curve))
    else:
        io.write_polyline_csv(out / "curve.csv", curve)
        io.write_json(out / "curve.meta.json", {"meta": curve.meta, "n_points": len(curve),
                                                "bbox": curve.bbox})
    (x0, y0), (x1, y1) = curve.bbox
    print(f"points {len(curve)}  bbox [{x0:.6g}, {x1:.6g}] x [{y0:.6g}, {y1:.6g}]")
    return 0


def _oracle_k_last(cfg):
    fam = _family(cfg)
    try:
        return oracle._k_last(oracle.DEFAULTS[fam]["k_last"], cfg["alpha"])
    except SchemaError:
        return 12


def cmd_dim(cfg):
    if "input" in cfg:
        if "family" in cfg:
            raise SchemaError("give either input or an inline family, not both")
        curve = io.read_polyline_csv(cfg["input"])
        # finest rung keeps eps >= 2 * longest segment
        k_last = cfg.get("k_last", math.floor(-math.log2(2 * curve.max_segment())))
    elif "family" in cfg:
        if "alpha" not in cfg:
            raise SchemaError("inline curve needs alpha")
        k_last = cfg.get("k_last", _oracle_k_last(cfg))
        inline = dict(cfg)
        inline.setdefault("max_segment", 2.0 ** -(k_last + 1))
        if _family(cfg) == "spiral":
            inline.setdefault("phi_start", oracle.DEFAULTS["spiral"]["phi_start"])
        curve = build_curve(inline)
    else:
        raise SchemaError("dim needs input or family")
    ladder = EpsilonLadder.for_curve(curve, k_last, cfg.get("k_first"))
    est = estimate_box_dim(curve, ladder, cfg.get("min_window", 5))
    report = {"n_points": len(curve), "estimate": est, "minkowski": None}
    if "minkowski" in cfg:
        report["minkowski"] = minkowski_band(curve, cfg["minkowski"], ladder,
                                             cfg.get("resolution_factor", 8))
    out = _out_dir(cfg)
    io.write_json(out / "dim.json", report)
    if cfg.get("format") == "csv":
        io.write_rows_csv(out / "dim.csv", ["eps", "count"], est.table.rows())
    if cfg.get("plot"):
        try:
            (out / "dim.svg").write_text(io.loglog_svg(est))
        except OSError as err:
            raise OutputError(f"cannot write {out / 'dim.svg'}: {err}") from err
    i, j = est.window
    print(f"dimension {est.dimension:.6f}  raw slope {est.raw_slope:.6f}  r2 {est.r2:.6f}  "
          f"window {i}..{j}" + (f"  flags {','.join(est.flags)}" if est.flags else ""))
    if report["minkowski"] is not None:
        mk = report["minkowski"]
        print(f"minkowski s={mk.s:g} band [{mk.band[0]:.6g}, {mk.band[1]:.6g}] "
              f"degenerate {str(mk.degenerate_flag).lower()}")
    return 0


def an_wavy(cfg):
    alpha = cfg["alpha"]
    spec = PhaseSpec(alpha, t_start=cfg.get("t0", 0.6))
    seq = extract_wavy_sequence(spec, cfg.get("count", 48))
    rep = check_waviness(seq, spec, alpha, cfg.get("margin", 0.05))
    osc = oscillations(seq, spec)
    print(f"entries {len(seq)}  cond_i {rep.cond_i}  cond_ii {rep.cond_ii}  cond_iii {rep.cond_iii}  "
          f"eps {rep.evidence['eps_measured']:.6g}")
    rows = [[k, float(a), float(b), float(o)] for k, (a, b, o) in enumerate(zip(seq.odd, seq.even, osc))]
    return {"report": rep, "passed": rep.passed}, (["k", "t_odd", "t_even", "osc"], rows)


def an_radial(cfg):
    alpha = cfg["alpha"]
    spec = PhaseSpec(alpha, t_start=cfg.get("t_start", 1.0))
    lo, hi = cfg.get("phi_min", 50.0), cfg.get("phi_max", 2000.0)
    if not hi > lo:
        raise SchemaError("phi_max must exceed phi_min")
    deltas = cfg.get("delta_phi", [1.5, 2.0, 4.0])
    theta = cfg.get("theta", DEFAULT_THETA)
    reach = max(max(deltas), 2 * math.pi + theta) + 1.0
    prof = phase_profile(spec, hi + reach)
    grid = np.linspace(lo, hi, cfg.get("n_grid", 20001))
    gaps = []
    for dphi in deltas:
        k_const, idx = decay_gap_check(spec, dphi, grid, prof)
        gaps.append({"delta_phi": dphi, "k_const": k_const, "min_index": idx, "positive": k_const > 0})
    a_lower, worst = radial_decrease_bound(prof, alpha, (lo, hi), theta)
    m_low, m_high, m_der = envelope_and_derivative_bounds(prof, alpha, (lo, hi))
    signs_agree = all(g["positive"] == (a_lower > 0) for g in gaps)
    for g in gaps:
        print(f"delta_phi {g['delta_phi']:g}  k_const {g['k_const']:.6g}")
    print(f"radial a_lower {a_lower:.6g} at phi {worst:.6g}  envelope ({m_low:.6g}, {m_high:.6g}, {m_der:.6g})")
    result = {"decay_gaps": gaps, "radial": {"a_lower": a_lower, "worst_phi": worst, "theta": theta},
              "envelope": {"m_low": m_low, "m_high": m_high, "M": m_der}, "signs_agree": signs_agree}
    rows = [[g["delta_phi"], g["k_const"], g["min_index"]] for g in gaps]
    return result, (["delta_phi", "k_const", "min_index"], rows)


def an_phase_asymptotic(cfg):
    spec = PhaseSpec(cfg["alpha"], t_start=cfg.get("t_start", 1.0))
    lo, hi = cfg.get("t_min", 50.0), cfg.get("t_max", 5000.0)
    if not hi > lo:
        raise SchemaError("t_max must exceed t_min")
    n = cfg.get("n_grid", 200001)
    sup = phase_asymptotic_check(spec, np.linspace(lo, hi, n))
    sup2 = phase_asymptotic_check(spec, np.linspace(lo, hi, 2 * n - 1))
    change = abs(sup2 - sup) / sup if sup > 0 else abs(sup2 - sup)
    print(f"sup |phi - t - pi/2| t = {sup:.9g}  (doubled grid {sup2:.9g}, change {change:.3g})")
    result = {"sup_residual_times_t": sup, "sup_doubled_grid": sup2, "relative_change": change,
              "stable": change < 0.01}
    return result, (["n_grid", "sup"], [[n, sup], [2 * n - 1, sup2]])


def an_length(cfg):
    fam = _family(cfg) or "chirp"
    alpha = cfg["alpha"]
    if fam == "chirp":
        spec = ChirpSpec(alpha, cfg.get("beta", 1.0))
        prof = classify_chirp_length(spec, cfg.get("schedule", CHIRP_SCHEDULE),
                                     cfg.get("points_per_period", 16))
        ser = extrema_series(spec, cfg.get("k_max", 20000))
        extra = {"extrema_series": {"k_first": ser.k0, "k_last": int(ser.k[-1]),
                                    "partial_sum": float(ser.partial_sums[-1]),
                                    "last_term": float(ser.terms[-1]), "exponent": ser.exponent,
                                    "converged": ser.converged}}
    else:
        if fam == "spiral":
            spec = SpiralSpec(alpha, phi_start=cfg.get("phi_start", 1.0))
        else:
            spec = PhaseSpec(alpha, t_start=cfg.get("t_start", 1.0))
        prof = classify_spiral_length(spec, cfg.get("schedule", SPIRAL_HORIZONS))
        extra = {}
    print(f"verdict {prof.verdict}  growth exponent {prof.growth_exponent:.6g}"
          + (f"  flags {','.join(prof.flags)}" if prof.flags else ""))
    if extra:
        e = extra["extrema_series"]
        print(f"extrema series {'converges' if e['converged'] else 'diverges'}  term exponent {e['exponent']:.6g}")
    rows = [[c, L] for c, L in zip(prof.cutoffs, prof.partial_lengths)]
    return {"family": fam, "profile": prof, **extra}, (["cutoff", "length"], rows)


def an_criterion(cfg):
    alpha, beta = cfg["alpha"], cfg.get("beta", 1.0)
    spec = ChirpSpec(alpha, beta)
    s = cfg.get("s", oracle.chirp_dim(alpha, beta) if alpha <= beta else 1.5)
    lat = zero_lattice(spec, cfg.get("k_max", 20000))
    ladder = [2.0 ** -k for k in range(cfg.get("k_first", 4), cfg.get("k_last", 19) + 1)]
    rep = criterion_check(spec, lat, ladder, s, cfg.get("ratio_bound", 10.0))
    sandwich = index_sandwich(lat, ladder, beta)
    env = envelope_constants(spec)
    print(f"s {s:g}  verdict {str(rep.verdict).lower()}  lhs band [{rep.c1_band[0]:.6g}, {rep.c1_band[1]:.6g}]"
          f"  rhs band [{rep.c2_band[0]:.6g}, {rep.c2_band[1]:.6g}]")
    rows = [[e, k, a, b] for e, k, a, b in zip(rep.eps_values, rep.k_eps, rep.lhs_scaled, rep.rhs_scaled)]
    return ({"report": rep, "index_sandwich": sandwich, "envelope": env},
            (["eps", "k_eps", "lhs_scaled", "rhs_scaled"], rows))


ANALYSES = {"wavy": an_wavy, "radial": an_radial, "phase-asymptotic": an_phase_asymptotic,
            "length": an_length, "criterion": an_criterion}


def cmd_analyze(name, cfg):
    result, (header, rows) = ANALYSES[name](cfg)
    out = _out_dir(cfg)
    io.write_json(out / f"{name}.json", result)
    if cfg.get("format") == "csv":
        io.write_rows_csv(out / f"{name}.csv", header, rows)
    return 0


def cmd_validate(cfg):
    sweep = dict(oracle.DEFAULT_SWEEP)
    sweep.update({k: v for k, v in cfg.items() if k not in ("out", "format")})
    if not sweep["alphas"]:
        raise SchemaError("empty sweep: alphas has no entries")
    rows = oracle.validate(sweep)
    header, body = io.validation_rows(rows)
    print(io.format_table(header, body))
    out = _out_dir(cfg)
    all_pass = all(r.passed for r in rows)
    io.write_json(out / "validation.json", {"config": sweep, "rows": rows, "all_pass": all_pass})
    if cfg.get("format") == "csv":
        io.write_rows_csv(out / "validation.csv", header, body)
    print("all rows pass" if all_pass else f"{sum(not r.passed for r in rows)} row(s) failed")
    return 0 if all_pass else 2


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "analyze":
            return cmd_analyze(args.analysis, _merged(args, args.analysis))
        cfg = _merged(args, args.command)
        return {"generate": cmd_generate, "dim": cmd_dim, "validate": cmd_validate}[args.command](cfg)
    except FracDimError as err:
        print(f"fracdim: {type(err).__name__}: {err}", file=sys.stderr)
        return err.exit_code
    except OSError as err:
        print(f"fracdim: IO error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
