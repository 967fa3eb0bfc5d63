"""Command-line entry point: ``rigidtorus <group> <action> [options]``.

Exit status: 0 on success, 1 when a certificate or check fails, 2 on usage
or input errors.  Reports are JSON; exact rationals are written as "p/q"
strings and certified reals as {"value", "errorRadius"} decimal strings.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import decimal
import enum
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .entropy import lemma1_scan, smb_estimate
from .equidist import (
    Interval,
    checkpoints_csv,
    orbit_points,
    star_discrepancy,
    weyl_checkpoints,
    weyl_sum,
)
from .exact import (
    AngleSpecError,
    Arc,
    FixedReal,
    PrecisionExhausted,
    RationalAngle,
    TorusPoint,
    parse_angle,
)
from .measures import (
    InvarianceError,
    MeasureSpecError,
    arc_mass,
    canonical_arcs,
    check_invariance,
    parse_measure,
)
from .nazarov import (
    ConstructionError,
    NazarovConfig,
    StageRecord,
    StopCount,
    run_construction,
    verify_record,
)
from .rigidity import (
    ClassifyParams,
    ReconstructionTrace,
    certified_point,
    classify_measure,
    measure_pigeonhole,
    reconstruct_rational,
)
from .semigroup import density_profile, elements_up_to, is_lacunary, parse_gens
from .semigroup import count_up_to


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization


def rational_str(r: Fraction) -> str:
    r = Fraction(r)
    return f"{r.numerator}/{r.denominator}"


def decimal_str(r: Fraction, digits: int = 30, rounding=decimal.ROUND_HALF_EVEN) -> str:
    ctx = decimal.Context(prec=digits, rounding=rounding)
    return str(ctx.divide(decimal.Decimal(r.numerator), decimal.Decimal(r.denominator)))


def certified(value: Fraction, radius: Fraction) -> dict:
    return {
        "value": decimal_str(value),
        "errorRadius": decimal_str(radius, 3, decimal.ROUND_CEILING),
    }


def to_json(obj):
    """Convert report objects to JSON-ready values."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return obj if obj == obj and abs(obj) != float("inf") else str(obj)
    if isinstance(obj, Fraction):
        return rational_str(obj)
    if isinstance(obj, TorusPoint):
        return rational_str(obj.value)
    if isinstance(obj, FixedReal):
        return certified(obj.value, obj.error)
    if isinstance(obj, Interval):
        return {**certified(obj.value, obj.radius), "lo": rational_str(obj.lo), "hi": rational_str(obj.hi)}
    if isinstance(obj, Arc):
        return {"start": rational_str(obj.start), "length": rational_str(obj.length)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_json(v) for v in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: to_json(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.repr}
    return str(obj)


def trace_json(t: ReconstructionTrace) -> dict:
    stages = []
    for s in t.stages:
        w = s.witness
        stages.append({
            "M": s.M,
            "delta": rational_str(s.delta),
            "q1": w.q1 if w else None,
            "q2": w.q2 if w else None,
            "k": w.k if w else None,
            "ell": w.ell if w else None,
            "exactCollision": w.exact if w else None,
            "candidate": rational_str(s.candidate) if s.candidate is not None else None,
            "kappaBound": rational_str(s.kappa_bound),
            "kappaHolds": s.kappa_ok,
            "note": s.note,
        })
    return {
        "x": to_json(t.x),
        "stages": stages,
        "verdict": rational_str(t.verdict) if t.certified else "NotCertified",
        "separation": rational_str(t.separation) if t.separation is not None else None,
    }


# ---------------------------------------------------------------------------
# argument helpers


def _int(text: str) -> int:
    """Integer flag accepting 1e6 and 10^6 forms."""
    t = text.strip()
    try:
        if "^" in t:
            b, e = t.split("^")
            return int(b) ** int(e)
        if "e" in t.lower():
            m, e = t.lower().split("e")
            return int(Fraction(m) * 10 ** int(e))
        return int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _int_list(text: str) -> list[int]:
    return [_int(t) for t in text.split(",") if t.strip()]


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational p/q: {text!r}") from None


def _grid(text: str) -> list[Fraction]:
    """``b^-i..b^-j`` or a comma list of rationals."""
    t = text.replace(" ", "")
    if ".." in t:
        a, b = t.split("..")
        try:
            base1, e1 = a.split("^")
            base2, e2 = b.split("^")
        except ValueError:
            raise argparse.ArgumentTypeError("grid range must look like 2^-5..2^-40") from None
        if base1 != base2:
            raise argparse.ArgumentTypeError("grid range needs one base")
        base, lo, hi = int(base1), -int(e1), -int(e2)
        return [Fraction(1, base ** e) for e in range(min(lo, hi), max(lo, hi) + 1)]
    return [_frac(v) for v in t.split(",")]


def _gens(text: str):
    try:
        return parse_gens(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _point(text: str, bits: int):
    if ":" in text:
        spec = parse_angle(text)
        if isinstance(spec, RationalAngle):
            return TorusPoint.of(spec.value)
        return certified_point(spec, bits)
    return TorusPoint.of(_frac(text))


def _arc(text: str) -> Arc:
    try:
        s, length = text.split(",")
        return Arc(Fraction(s), Fraction(length))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"arc must be start,length: {exc}") from None


# ---------------------------------------------------------------------------
# commands; each returns (report dict, exit status)


def cmd_semigroup_count(a):
    return {"gens": list(a.gens), "limit": a.limit, "count": count_up_to(a.gens, a.limit)}, 0


def cmd_semigroup_density(a):
    rep = density_profile(a.gens, a.checkpoints)
    lac = is_lacunary(a.gens)
    out = {
        "gens": list(a.gens),
        "checkpoints": [
            {"N": c.N, "count": c.count, "density": rational_str(c.density),
             "logDensity": c.log_density, "emptyFlag": c.empty}
            for c in rep.checkpoints
        ],
        "densityExponentEmpirical": rep.density_exponent,
        "lacunary": lac.lacunary,
        "witness": lac.witness,
    }
    if a.csv:
        rows = "N,count\n" + "".join(f"{c.N},{c.count}\n" for c in rep.checkpoints)
        Path(a.csv).write_text(rows)
    return out, 0


def cmd_semigroup_lacunary(a):
    lac = is_lacunary(a.gens)
    return {"gens": list(a.gens), "lacunary": lac.lacunary, "witness": lac.witness}, 0


def cmd_measure_mass(a):
    mu = parse_measure(a.measure)
    return {"measure": str(mu), "arc": to_json(a.arc), "mass": rational_str(arc_mass(mu, a.arc))}, 0


def cmd_measure_invariance(a):
    mu = parse_measure(a.measure)
    arcs = a.arcs or canonical_arcs()
    rep = check_invariance(mu, a.q, arcs)
    rows = [
        {"arc": to_json(r.arc), "mass": rational_str(r.mass),
         "preimageMass": rational_str(r.preimage_mass), "discrepancy": rational_str(r.discrepancy)}
        for r in rep.rows
    ]
    return {"measure": str(mu), "q": a.q, "invariant": rep.invariant, "arcs": rows}, 0 if rep.invariant else 1


def cmd_entropy_estimate(a):
    mu = parse_measure(a.measure)
    est = smb_estimate(mu, a.p, a.depth, a.samples, a.seed)
    return {
        "measure": str(mu), "p": a.p, "depth": a.depth, "samples": a.samples,
        "mean": est.mean, "stderr": est.stderr, "analytic": est.analytic,
        "relativeError": est.relative_error,
    }, 0


def cmd_entropy_lemma1(a):
    mu = parse_measure(a.measure)
    rep = lemma1_scan(mu, a.beta, a.eps, a.delta_grid, a.samples, a.seed)
    return {
        "measure": str(mu), "beta": rational_str(rep.beta), "eps": rational_str(rep.eps),
        "grid": [rational_str(d) for d in rep.grid],
        "passFraction": rational_str(rep.pass_fraction),
        "passes": rep.passes,
        "delta0": rational_str(rep.delta0) if rep.delta0 is not None else None,
        "failures": [
            {"x": rational_str(f.x.value), "delta": rational_str(f.delta), "mass": rational_str(f.mass)}
            for f in rep.failures[:10]
        ],
        "note": "checked on the listed grid only",
    }, 0


def cmd_rigidity_reconstruct(a):
    x = _point(a.x, a.precision)
    tr = reconstruct_rational(x, a.gens, a.m1, a.doublings, a.delta_exponent)
    return {"gens": list(a.gens), "m1": a.m1, "doublings": a.doublings, **trace_json(tr)}, 0


def cmd_rigidity_classify(a):
    mu = parse_measure(a.measure)
    params = ClassifyParams(seed=a.seed, samples=a.samples, m1=a.m1, doublings=a.doublings)
    try:
        rep = classify_measure(mu, a.gens, params)
    except InvarianceError as exc:
        return {"measure": str(mu), "gens": list(a.gens), "rejected": str(exc),
                "witnessArc": to_json(exc.arc), "q": exc.q}, 1
    return {
        "measure": str(mu),
        "gens": list(a.gens),
        "verdict": rep.verdict.value,
        "entropies": [{"p": e.p, "value": e.value, "method": e.method} for e in rep.entropies],
        "lacunary": rep.lacunarity.lacunary,
        "witness": rep.lacunarity.witness,
        "atoms": [{"x": rational_str(x), "mass": rational_str(m)} for x, m in rep.atoms] if rep.atoms else None,
        "traces": [trace_json(t) for t in rep.traces[:5]],
        "evidence": to_json(rep.evidence),
        "note": "verdicts concern the supplied ergodic model only",
    }, 0


def cmd_rigidity_pigeonhole(a):
    mu = parse_measure(a.measure)
    r = measure_pigeonhole(mu, _frac(a.x), a.gens, a.m, a.beta, a.delta)
    return {
        "measure": str(mu), "x": a.x, "gens": list(a.gens), "M": a.m,
        "delta": rational_str(r.delta), "totalMass": rational_str(r.total_mass),
        "verdict": "CollisionForced" if r.forced else "NotForced",
        "pair": list(r.pair) if r.pair else None,
        "overlapPoint": to_json(r.overlap_point), "heavyArcs": r.heavy_arcs,
    }, 0


def _orbit_source(a):
    if a.set:
        return sorted(set(a.set)), True
    if a.integers:
        return list(range(1, a.limit + 1)), True
    if a.gens:
        return list(elements_up_to(a.gens, a.limit)), True
    raise UsageError("one of --gens, --set, --integers is required")


def cmd_equidist_weyl(a):
    alpha = parse_angle(a.alpha)
    sigmas, explicit = _orbit_source(a)
    pts = orbit_points(sigmas, alpha, a.limit, explicit=True)
    sigmas = [s for s in sigmas if s <= a.limit]
    s = weyl_sum(pts, a.h)
    if a.csv:
        marks = sorted({max(1, a.limit * j // 20) for j in range(1, 21)})
        Path(a.csv).write_text(checkpoints_csv(weyl_checkpoints(sigmas, pts, marks, a.h)))
    return {"alpha": str(alpha), "limit": a.limit, "h": a.h, "count": len(pts),
            "re": to_json(s.re), "im": to_json(s.im), "absUpper": s.abs_upper}, 0


def cmd_equidist_discrepancy(a):
    alpha = parse_angle(a.alpha)
    sigmas, _ = _orbit_source(a)
    pts = orbit_points(sigmas, alpha, a.limit, explicit=True)
    r = star_discrepancy(pts)
    return {"alpha": str(alpha), "N": r.N, "dStar": rational_str(r.d_star),
            "dStarDecimal": decimal_str(r.d_star, 12), "radius": decimal_str(r.radius, 3, decimal.ROUND_CEILING),
            "normalized": r.normalized}, 0


def nazarov_json(state, cfg: NazarovConfig) -> dict:
    stages = []
    for r, c in zip(state.stages, state.certificates):
        stages.append({
            "k": r.k, "N": r.N, "Nprime": r.N_prime, "ell": r.ell,
            "A": list(r.A), "B": list(r.B),
            "sigmaCount": r.sigma_count, "density": rational_str(r.density),
            "stopCounts": [{"X": s.X, "count": s.count, "threshold": rational_str(s.threshold)}
                           for s in r.stop_counts],
            "certificate": {
                "weylRe": to_json(c.weyl_re),
                "biasBound": "sqrt(2)/40 - 1/100",
                "biasHolds": c.bias_holds,
                "biasMargin": c.bias_margin,
                "densityHolds": c.density_holds,
            },
        })
    return {
        "config": {
            "alpha": str(cfg.alpha),
            "window": [rational_str(cfg.window[0]), rational_str(cfg.window[1])],
            "slack": rational_str(cfg.slack),
            "stopFraction": rational_str(cfg.stop_fraction),
            "growthFactor": cfg.growth_factor,
            "stages": cfg.stages,
            "precision": cfg.precision,
        },
        "N0": state.N0,
        "estimate2": {"verifiedRange": list(state.verified_range), "usedN": state.used_n},
        "stages": stages,
        "allHold": all(c.holds for c in state.certificates),
        "note": "density is certified only at the computed N_k; the asymptotic lower density is not certified",
    }


def cmd_nazarov_run(a):
    cfg = NazarovConfig(parse_angle(a.alpha), stages=a.stages, precision=a.precision,
                        n0_search_limit=a.search_limit)
    try:
        state = run_construction(cfg, a.n0)
    except ConstructionError as exc:
        return {"alpha": a.alpha, "aborted": type(exc).__name__, "reason": str(exc)}, 1
    doc = nazarov_json(state, cfg)
    return doc, 0 if doc["allHold"] else 1


def load_certificate(doc: dict):
    c = doc["config"]
    cfg = NazarovConfig(
        parse_angle(c["alpha"]),
        window=(Fraction(c["window"][0]), Fraction(c["window"][1])),
        slack=Fraction(c["slack"]),
        stop_fraction=Fraction(c["stopFraction"]),
        growth_factor=int(c["growthFactor"]),
        stages=int(c["stages"]),
        precision=int(c["precision"]),
    )
    stages, weyl = [], []
    for s in doc["stages"]:
        stages.append(StageRecord(
            int(s["k"]), int(s["N"]),
            None if s["Nprime"] is None else int(s["Nprime"]),
            None if s["ell"] is None else int(s["ell"]),
            tuple(int(v) for v in s["A"]), tuple(int(v) for v in s["B"]),
            int(s["sigmaCount"]),
            tuple(StopCount(int(t["X"]), int(t["count"]), Fraction(t["threshold"])) for t in s["stopCounts"]),
        ))
        w = s.get("certificate", {}).get("weylRe")
        weyl.append(Interval(Fraction(w["lo"]), Fraction(w["hi"])) if w else None)
    return cfg, int(doc["N0"]), stages, weyl


def cmd_nazarov_verify(a):
    try:
        doc = json.loads(Path(a.file).read_text())
        cfg, n0, stages, weyl = load_certificate(doc)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot read certificate {a.file}: {exc}") from None
    checks = verify_record(cfg.alpha, n0, stages, cfg, weyl)
    for rec, s in zip(stages, doc["stages"]):
        if rec.sigma_count != len(rec.B):
            checks.append(type(checks[0])(f"stage {rec.k}: recorded sigmaCount = |B|", False))
        if Fraction(s["density"]) != rec.density:
            checks.append(type(checks[0])(f"stage {rec.k}: recorded density", False))
    failed = [c for c in checks if not c.ok]
    for c in failed:
        print(f"VIOLATED: {c.name} {c.detail}".rstrip(), file=sys.stderr)
    return {
        "file": str(a.file),
        "checks": [{"name": c.name, "ok": c.ok, "detail": c.detail} for c in checks],
        "violated": [c.name for c in failed],
        "allHold": not failed,
    }, 0 if not failed else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precision", type=int, default=256, help="binary precision for irrational angles")
    common.add_argument("--json", metavar="PATH", help="write the JSON report here instead of stdout")
    common.add_argument("--csv", metavar="PATH", help="also write a CSV table where supported")
    common.add_argument("--threads", type=int, default=1, help="worker cap (results never depend on it)")
    common.add_argument("--timing", action="store_true", help="embed wall time in the manifest")

    parser = argparse.ArgumentParser(prog="rigidtorus", description=__doc__.splitlines()[0])
    parser.add_argument("--config", metavar="INI", help="config file; one [group.action] section per command")
    parser.add_argument("--version", action="version", version=f"rigidtorus {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)
    leaves: dict[str, argparse.ArgumentParser] = {}

    def leaf(group_parser, name, func, help_text):
        p = group_parser.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        leaves[f"{group_parser.group_name}.{name}"] = p
        return p

    def group(name):
        sub = groups.add_parser(name).add_subparsers(dest="action", required=True)
        sub.group_name = name
        return sub

    g = group("semigroup")
    p = leaf(g, "count", cmd_semigroup_count, "count Sigma ∩ [1, N]")
    p.add_argument("--gens", type=_gens, required=True)
    p.add_argument("--limit", type=_int, required=True)
    p = leaf(g, "density", cmd_semigroup_density, "density profile at checkpoints")
    p.add_argument("--gens", type=_gens, required=True)
    p.add_argument("--checkpoints", type=_int_list, required=True)
    p = leaf(g, "lacunary", cmd_semigroup_lacunary, "decide lacunarity")
    p.add_argument("--gens", type=_gens, required=True)

    g = group("measure")
    p = leaf(g, "mass", cmd_measure_mass, "exact arc mass")
    p.add_argument("--measure", required=True)
    p.add_argument("--arc", type=_arc, required=True, help="start,length")
    p = leaf(g, "invariance", cmd_measure_invariance, "check T_q-invariance on arcs")
    p.add_argument("--measure", required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--arcs", type=_arc, nargs="*")

    g = group("entropy")
    p = leaf(g, "estimate", cmd_entropy_estimate, "information-function entropy estimate")
    p.add_argument("--measure", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--samples", type=int, default=1000)
    p = leaf(g, "lemma1", cmd_entropy_lemma1, "ball-mass scan mu(B_delta(x)) > delta^beta")
    p.add_argument("--measure", required=True)
    p.add_argument("--beta", type=_frac, required=True)
    p.add_argument("--eps", type=_frac, default=Fraction(1, 2))
    p.add_argument("--delta-grid", type=_grid, required=True)
    p.add_argument("--samples", type=int, default=200)

    g = group("rigidity")
    p = leaf(g, "reconstruct", cmd_rigidity_reconstruct, "rational reconstruction trace")
    p.add_argument("--x", required=True, help="p/q or an angle spec such as quadratic:(-1+1*sqrt(2))/1")
    p.add_argument("--gens", type=_gens, required=True)
    p.add_argument("--m1", type=_int, required=True)
    p.add_argument("--doublings", type=int, default=1)
    p.add_argument("--delta-exponent", type=int, default=5, help="expert: delta = M^-e (default 5)")
    p = leaf(g, "classify", cmd_rigidity_classify, "classify an invariant measure")
    p.add_argument("--measure", required=True)
    p.add_argument("--gens", type=_gens, required=True)
    p.add_argument("--samples", type=int, default=24)
    p.add_argument("--m1", type=_int, default=100)
    p.add_argument("--doublings", type=int, default=1)
    p = leaf(g, "pigeonhole", cmd_rigidity_pigeonhole, "mass sum of dilated balls")
    p.add_argument("--measure", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--gens", type=_gens, required=True)
    p.add_argument("--m", type=_int, required=True)
    p.add_argument("--beta", type=_frac, default=Fraction(1, 20))
    p.add_argument("--delta", type=_frac, help="expert: override delta = M^-5")

    g = group("equidist")
    for name, func, text in (("weyl", cmd_equidist_weyl, "certified Weyl sum"),
                             ("discrepancy", cmd_equidist_discrepancy, "star discrepancy")):
        p = leaf(g, name, func, text)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--gens", type=_gens)
        src.add_argument("--set", type=_int_list)
        src.add_argument("--integers", action="store_true", help="use 1..limit")
        p.add_argument("--alpha", required=True)
        p.add_argument("--limit", type=_int, required=True)
        if name == "weyl":
            p.add_argument("--h", type=int, default=1)

    g = group("nazarov")
    p = leaf(g, "run", cmd_nazarov_run, "run the certified construction")
    p.add_argument("--alpha", required=True)
    p.add_argument("--stages", type=int, default=3)
    p.add_argument("--n0", type=int, help="skip the N0 search and use this value")
    p.add_argument("--search-limit", type=_int, default=10 ** 5)
    p = leaf(g, "verify", cmd_nazarov_verify, "re-check a construction certificate")
    p.add_argument("file")
    return parser, leaves


def _apply_config(path: str, leaves: dict) -> None:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path}")
    for section in cp.sections():
        if section not in leaves:
            raise UsageError(f"unknown config section [{section}]")
        p = leaves[section]
        known = {a.dest: a for a in p._actions}
        values = {}
        for key, raw in cp[section].items():
            dest = key.replace("-", "_")
            if dest not in known:
                raise UsageError(f"unknown key {key!r} in [{section}]")
            act = known[dest]
            values[dest] = act.type(raw) if act.type else raw
            act.required = False
        p.set_defaults(**values)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    parser, leaves = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    config_path = pre.parse_known_args(argv)[0].config
    try:
        if config_path:
            _apply_config(config_path, leaves)
    except (UsageError, argparse.ArgumentTypeError, configparser.Error) as exc:
        print(f"rigidtorus: error: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        report, status = args.func(args)
    except (UsageError, AngleSpecError, MeasureSpecError) as exc:
        print(f"rigidtorus: error: {exc}", file=sys.stderr)
        return 2
    except PrecisionExhausted as exc:
        print(f"rigidtorus: precision: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"rigidtorus: error: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "command": ["rigidtorus", *argv],
        "config": {k: to_json(v) for k, v in sorted(vars(args).items())
                   if k not in ("func", "json", "csv", "timing", "threads")},
        "seed": args.seed,
        "precision": args.precision,
        "toolVersion": __version__,
    }
    if args.timing:
        manifest["wallTimeSeconds"] = round(time.perf_counter() - started, 3)
    text = json.dumps({"manifest": manifest, **report}, indent=2) + "\n"
    if args.json:
        Path(args.json).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
