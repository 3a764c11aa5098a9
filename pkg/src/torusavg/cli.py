"""Batch experiment runner.

Parses JSON scenario files, executes the corresponding average job, runs
the limit-prediction comparison, and writes a CSV trace plus a JSON report.
``torusavg verify`` reproduces the built-in verification table.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import dynsys, engine, observables, oracle
from .dynsys import TransformSpec, build_family
from .engine import Schedule
from .observables import Observable, integrate
from .oracle import Factor, Prediction, compare, predict
from .unitmath import ScalarConstant, rational_independence, sum_shifted_frac, frac

JOB_KINDS = ("average", "correlation", "triple")


class ScenarioError(ValueError):
    """Carries every validation failure found in a scenario file."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Scenario:
    name: str
    job: str
    family: tuple[TransformSpec, ...]
    observables: tuple[Observable, ...]
    x0: float
    schedule: Schedule
    periodic: tuple[Observable, int] | None
    indicators: tuple[Observable, ...]
    tolerance: float
    workers: int
    expected_override: float | None


# ---------------------------------------------------------------------------
# JSON codecs


def _frac_from(v, path, errs):
    try:
        if isinstance(v, bool):
            raise ValueError
        if isinstance(v, int):
            return Fraction(v)
        if isinstance(v, str):
            return Fraction(v)
    except (ValueError, ZeroDivisionError):
        pass
    errs.append(f"{path}: expected an integer or 'p/q' string, got {v!r}")
    return None


def _scalar_from(obj, path, errs):
    if not isinstance(obj, dict) or len(obj) != 1:
        errs.append(f"{path}: expected a one-key constant record")
        return None
    (tag, body), = obj.items()
    if tag == "rational":
        p, q = body.get("p"), body.get("q", 1)
        if not isinstance(p, int) or not isinstance(q, int) or q < 1:
            errs.append(f"{path}.rational: need integer p and positive integer q")
            return None
        return ScalarConstant.rational(p, q)
    if tag == "surd":
        a = _frac_from(body.get("a", 0), f"{path}.surd.a", errs)
        b = _frac_from(body.get("b", 1), f"{path}.surd.b", errs)
        m = body.get("m")
        if not isinstance(m, int) or m < 1:
            errs.append(f"{path}.surd.m: need a positive integer")
            return None
        if a is None or b is None:
            return None
        return ScalarConstant.surd(a, b, m)
    if tag == "literal":
        if not isinstance(body, (int, float)) or isinstance(body, bool):
            errs.append(f"{path}.literal: need a number")
            return None
        return ScalarConstant.literal(float(body))
    errs.append(f"{path}: unknown constant tag {tag!r}")
    return None


def _scalar_to(c: ScalarConstant):
    if c.kind == "rational":
        return {"rational": {"p": c.rat.numerator, "q": c.rat.denominator}}
    if c.kind == "surd":
        return {"surd": {"a": str(c.surd_a), "b": str(c.surd_b), "m": c.surd_m}}
    return {"literal": c.lit}


def _spec_from(obj, path, errs):
    if not isinstance(obj, dict):
        errs.append(f"{path}: expected a transform record")
        return None
    kind = obj.get("kind")
    label = obj.get("label", "")
    if kind == "rotation":
        alpha = _scalar_from(obj.get("alpha"), f"{path}.alpha", errs)
        return dynsys.rotation(alpha, label) if alpha else None
    if kind == "rotation_power":
        alpha = _scalar_from(obj.get("alpha"), f"{path}.alpha", errs)
        p = obj.get("p")
        if not isinstance(p, int) or p < 1:
            errs.append(f"{path}.p: need a positive integer")
            return None
        return dynsys.rotation_power(alpha, p, label) if alpha else None
    if kind == "finite_rotation":
        q = obj.get("q")
        if not isinstance(q, int) or q < 1:
            errs.append(f"{path}.q: need a positive integer")
            return None
        return dynsys.finite_rotation(q, label)
    errs.append(f"{path}: unknown transform kind {kind!r}")
    return None


def _spec_to(s: TransformSpec):
    out = {"kind": s.kind}
    if s.label:
        out["label"] = s.label
    if s.kind in ("rotation", "rotation_power"):
        out["alpha"] = _scalar_to(s.alpha)
    if s.kind == "rotation_power":
        out["p"] = s.power
    if s.kind == "finite_rotation":
        out["q"] = s.order
    return out


def _obs_from(obj, path, errs):
    if not isinstance(obj, dict):
        errs.append(f"{path}: expected an observable record")
        return None
    kind = obj.get("kind")
    try:
        if kind == "frac_part":
            return observables.frac_part()
        if kind == "power_of_frac":
            return observables.power_of_frac(obj["p"])
        if kind == "indicator":
            return observables.indicator(obj["a"], obj["b"])
        if kind == "trig_poly":
            return observables.trig_poly(obj["coeffs"])
        if kind == "piecewise_linear":
            return observables.piecewise_linear(obj["knots"])
    except (KeyError, TypeError, ValueError) as exc:
        errs.append(f"{path}: invalid {kind} record ({exc})")
        return None
    errs.append(f"{path}: unknown observable kind {kind!r}")
    return None


def _obs_to(f: Observable):
    if f.kind == "frac_part":
        return {"kind": "frac_part"}
    if f.kind == "power_of_frac":
        return {"kind": "power_of_frac", "p": f.params[0]}
    if f.kind == "indicator":
        return {"kind": "indicator", "a": f.params[0], "b": f.params[1]}
    if f.kind == "trig_poly":
        return {"kind": "trig_poly", "coeffs": [list(c) for c in f.params]}
    if f.kind == "piecewise_linear":
        return {"kind": "piecewise_linear", "knots": [list(k) for k in f.params]}
    raise ValueError(f"observable kind {f.kind!r} has no scenario encoding")


def _schedule_from(obj, path, errs):
    if not isinstance(obj, dict):
        errs.append(f"{path}: expected a schedule record")
        return None
    try:
        if "checkpoints" in obj:
            return Schedule(tuple(int(c) for c in obj["checkpoints"]))
        n_max = obj["n_max"]
        ratio = obj.get("ratio", 10.0 ** 0.125)
        return Schedule.geometric(int(n_max), float(ratio))
    except (KeyError, TypeError, ValueError) as exc:
        errs.append(f"{path}: invalid schedule ({exc})")
        return None


def parse_scenario(text) -> Scenario:
    """Parse and fully validate a scenario; raises ScenarioError listing
    every violation found, not just the first."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    errs: list[str] = []
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"invalid JSON: {exc}"]) from exc
    if not isinstance(obj, dict):
        raise ScenarioError(["top level must be an object"])

    name = obj.get("name")
    if not isinstance(name, str) or not name:
        errs.append("name: required nonempty string")
        name = ""
    job = obj.get("job", "average")
    if job not in JOB_KINDS:
        errs.append(f"job: must be one of {JOB_KINDS}, got {job!r}")
        job = "average"

    fam_raw = obj.get("family")
    family = []
    if not isinstance(fam_raw, list) or not fam_raw:
        errs.append("family: required nonempty list")
    else:
        for i, rec in enumerate(fam_raw):
            s = _spec_from(rec, f"family[{i}]", errs)
            if s is not None:
                family.append(s)

    obs = []
    if job == "average":
        obs_raw = obj.get("observables")
        if not isinstance(obs_raw, list) or not obs_raw:
            errs.append("observables: required nonempty list for average jobs")
        else:
            for i, rec in enumerate(obs_raw):
                f = _obs_from(rec, f"observables[{i}]", errs)
                if f is not None:
                    obs.append(f)
            if isinstance(fam_raw, list) and len(obs_raw) != len(fam_raw):
                errs.append(f"observables: length {len(obs_raw)} does not match "
                            f"family length {len(fam_raw)}")

    indicators = []
    if job in ("correlation", "triple"):
        want = ("A", "B") if job == "correlation" else ("A", "B", "C")
        need = len(want)
        if isinstance(fam_raw, list) and len(fam_raw) != need - 1:
            errs.append(f"family: {job} jobs need exactly {need - 1} transform(s)")
        ind_raw = obj.get("indicators")
        if not isinstance(ind_raw, dict):
            errs.append(f"indicators: required object with keys {want}")
        else:
            for key in want:
                if key not in ind_raw:
                    errs.append(f"indicators.{key}: required")
                    continue
                f = _obs_from(ind_raw[key], f"indicators.{key}", errs)
                if f is not None:
                    if f.kind != "indicator":
                        errs.append(f"indicators.{key}: must be indicator kind")
                    else:
                        indicators.append(f)

    x0 = obj.get("x0", 0.0)
    if not isinstance(x0, (int, float)) or isinstance(x0, bool) or not 0 <= x0 < 1:
        errs.append(f"x0: must be a real in [0, 1), got {x0!r}")
        x0 = 0.0

    schedule = _schedule_from(obj.get("schedule"), "schedule", errs)

    periodic = None
    if "periodic" in obj:
        if job != "average":
            errs.append("periodic: only valid for average jobs")
        p = obj["periodic"]
        if not isinstance(p, dict) or "g" not in p or "k" not in p:
            errs.append("periodic: need an object with keys g and k")
        else:
            g = _obs_from(p["g"], "periodic.g", errs)
            k = p["k"]
            if not isinstance(k, int) or k < 1:
                errs.append("periodic.k: need a positive integer")
            elif g is not None:
                periodic = (g, k)

    tol = obj.get("tolerance")
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or tol <= 0:
        errs.append(f"tolerance: required positive real, got {tol!r}")
        tol = 1.0

    workers = obj.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        errs.append(f"workers: must be a positive integer, got {workers!r}")
        workers = 1

    override = obj.get("expected_override")
    if override is not None and (not isinstance(override, (int, float))
                                 or isinstance(override, bool)):
        errs.append("expected_override: must be a number")
        override = None

    known = {"name", "job", "family", "observables", "x0", "schedule",
             "periodic", "indicators", "tolerance", "workers",
             "expected_override"}
    for key in obj:
        if key not in known:
            errs.append(f"unknown field {key!r}")

    if errs:
        raise ScenarioError(errs)
    return Scenario(name, job, tuple(family), tuple(obs), float(x0), schedule,
                    periodic, tuple(indicators), float(tol), workers,
                    None if override is None else float(override))


def serialize_scenario(sc: Scenario) -> str:
    out = {
        "name": sc.name,
        "job": sc.job,
        "family": [_spec_to(s) for s in sc.family],
        "x0": sc.x0,
        "schedule": {"checkpoints": list(sc.schedule.checkpoints)},
        "tolerance": sc.tolerance,
        "workers": sc.workers,
    }
    if sc.job == "average":
        out["observables"] = [_obs_to(f) for f in sc.observables]
    else:
        keys = ("A", "B", "C")[:len(sc.indicators)]
        out["indicators"] = {k: _obs_to(f) for k, f in zip(keys, sc.indicators)}
    if sc.periodic is not None:
        out["periodic"] = {"g": _obs_to(sc.periodic[0]), "k": sc.periodic[1]}
    if sc.expected_override is not None:
        out["expected_override"] = sc.expected_override
    return json.dumps(out, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# execution


def _prediction_for(sc: Scenario) -> Prediction:
    if sc.job == "average":
        fam = build_family(sc.family)
        periodic = None
        if sc.periodic is not None:
            g, k = sc.periodic
            periodic = (g, dynsys.finite_rotation(k), sc.x0)
        return predict(fam, sc.observables, periodic=periodic)
    factors = tuple(Factor("single_integral", (i,), f.exact_integral)
                    for i, f in enumerate(sc.indicators))
    return Prediction(math.prod(f.value for f in factors), factors, True, ())


def _trace_for(sc: Scenario):
    if sc.job == "average":
        fam = build_family(sc.family)
        if sc.periodic is not None:
            g, k = sc.periodic
            return engine.periodic_factor_average(
                fam, sc.observables, g, dynsys.finite_rotation(k), sc.x0,
                sc.schedule, sc.workers)
        return engine.multiple_average(fam, sc.observables, sc.x0, sc.schedule,
                                       sc.workers)
    if sc.job == "correlation":
        return engine.correlation_average(sc.family[0], *sc.indicators,
                                          sc.schedule, sc.workers)
    return engine.triple_intersection_average(*sc.family, *sc.indicators,
                                              sc.schedule, sc.workers)


def trace_csv(trace) -> str:
    lines = ["N,value,est_tail"]
    prev = None
    for n, v in zip(trace.schedule.checkpoints, trace.values):
        tail = 0.0 if prev is None else abs(v - prev)
        lines.append(f"{n},{v!r},{tail!r}")
        prev = v
    return "\n".join(lines) + "\n"


def run_scenario(sc: Scenario, outdir=".") -> int:
    """Execute a scenario, write <name>.trace.csv and <name>.report.json,
    and return the process exit status."""
    pred = _prediction_for(sc)
    if sc.expected_override is not None:
        pred = dataclasses.replace(pred, value=sc.expected_override)
    trace = _trace_for(sc)
    report = {
        "name": sc.name,
        "job": sc.job,
        "n_max": sc.schedule.checkpoints[-1],
        "prediction": {
            "value": pred.value,
            "applicable": pred.applicable,
            "caveats": list(pred.caveats),
            "derivation": [{"kind": f.kind, "indices": list(f.indices),
                            "value": f.value} for f in pred.derivation],
        },
        "measured": trace.final,
        "est_tail": trace.est_tail,
        "tolerance": sc.tolerance,
    }
    if pred.applicable:
        rep = compare(pred, trace, sc.tolerance)
        report["final_error"] = rep.final_error
        report["passed"] = rep.passed
        status = 0 if rep.passed else 1
    else:
        report["final_error"] = None
        report["passed"] = None
        status = 0
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{sc.name}.trace.csv").write_text(trace_csv(trace))
        (outdir / f"{sc.name}.report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"error writing artifacts: {exc}", file=sys.stderr)
        return 2
    return status


# ---------------------------------------------------------------------------
# built-in verification suite


_SQRT2 = ScalarConstant.surd(0, 1, 2)
_SQRT3 = ScalarConstant.surd(0, 1, 3)
_SQRT5 = ScalarConstant.surd(0, 1, 5)


def _row(name, measured, expected, tol):
    return {"name": name, "measured": measured, "expected": expected,
            "tol": tol, "passed": abs(measured - expected) <= tol}


def verify_builtin(n_max: int = 10 ** 6, workers: int = 1,
                   tol_scale: float = 1.0, seed: int = 20240824):
    """Run the built-in verification table; returns (rows, all_passed).

    tol_scale relaxes only the finite-N statistical tolerances, never the
    exact identities.
    """
    rows = []
    sched = Schedule.geometric(n_max)
    r2 = dynsys.rotation(_SQRT2, "R_sqrt2")
    r3 = dynsys.rotation(_SQRT3, "R_sqrt3")
    fp = observables.frac_part()

    for x0 in (0.0, 0.3, 0.77):
        tr = engine.multiple_average(build_family([r2, r3]), [fp, fp], x0,
                                     sched, workers)
        rows.append(_row(f"distinct-rotations x0={x0}", tr.final, 0.25,
                         2e-3 * tol_scale))
    for x0 in (0.0, 0.3, 0.77):
        tr = engine.multiple_average(build_family([r2, r2]), [fp, fp], x0,
                                     sched, workers)
        rows.append(_row(f"repeated-rotation x0={x0}", tr.final, 1 / 3,
                         2e-3 * tol_scale))
    for k in (2, 3, 5):
        for x0 in (0.1, 0.37):
            tr = engine.periodic_factor_average(
                build_family([r2]), [fp], fp, dynsys.finite_rotation(k), x0,
                sched, workers)
            expected = frac(k * x0) / (2 * k) + (k - 1) / (4 * k)
            rows.append(_row(f"periodic-factor k={k} x0={x0}", tr.final,
                             expected, 2e-3 * tol_scale))
    tr = engine.birkhoff_average(r2, fp, 0.3, sched, workers)
    rows.append(_row("birkhoff frac-part", tr.final, 0.5, 1e-3 * tol_scale))

    rng = random.Random(seed)
    worst = 0.0
    xs = [rng.random() for _ in range(10_000)]
    for k in range(1, 65):
        for x in xs:
            dev = abs(sum_shifted_frac(x, k) - (frac(k * x) + (k - 1) / 2))
            if dev > worst:
                worst = dev
    rows.append(_row("shifted-frac identity (max dev)", worst, 0.0, 1e-12))

    A, B = observables.indicator(0.0, 0.3), observables.indicator(0.2, 0.7)
    tr = engine.correlation_average(r2, A, B, sched, workers)
    rows.append(_row("correlation sqrt2", tr.final, 0.15, 5e-3 * tol_scale))
    half = observables.indicator(0.0, 0.5)
    tr = engine.correlation_average(dynsys.identity(), half, half, sched, workers)
    rows.append(_row("identity-map control (non-ergodic)", tr.final, 0.5, 1e-12))

    tr = engine.triple_intersection_average(r2, r3, half, half, half, sched,
                                            workers)
    rows.append(_row("triple intersection", tr.final, 0.125, 5e-3 * tol_scale))

    consts = (_SQRT2, _SQRT3, _SQRT5)
    worst = 0.0
    for _ in range(20):
        d = rng.choice((2, 3))
        fam = build_family([dynsys.rotation(rng.choice(consts))
                            for _ in range(d)])
        fs = [observables.trig_poly(
            [(kf, rng.uniform(-1, 1), rng.uniform(-1, 1))
             for kf in range(6)]) for _ in range(d)]
        x0 = rng.random()
        pred = predict(fam, fs)
        tr = engine.multiple_average(fam, fs, x0, sched, workers)
        worst = max(worst, abs(tr.final - pred.value))
    rows.append(_row("randomized oracle cross-validation (max dev)", worst,
                     0.0, 5e-3 * tol_scale))

    worst = 0.0
    for _ in range(50):
        f1, f2 = (_random_observable(rng) for _ in range(2))
        p_pair = predict(build_family([r2, r2]), [f1, f2])
        p_prod = predict(build_family([r2]), [observables.product(f1, f2)])
        worst = max(worst, abs(p_pair.value - p_prod.value))
    rows.append(_row("group-collapse equivalence (max dev)", worst, 0.0, 1e-12))

    base = engine.multiple_average(build_family([r2, r3]), [fp, fp], 0.3,
                                   sched, 1)
    worst = 0.0
    for w in (2, 4, 8):
        other = engine.multiple_average(build_family([r2, r3]), [fp, fp], 0.3,
                                        sched, w)
        worst = max(worst, max(abs(a - b)
                               for a, b in zip(base.values, other.values)))
    rows.append(_row("parallel consistency (max dev)", worst, 0.0, 1e-13))
    again = engine.multiple_average(build_family([r2, r3]), [fp, fp], 0.3,
                                    sched, workers)
    rows.append(_row("repeat-run determinism",
                     0.0 if again.values == base.values else 1.0, 0.0, 0.0))

    v = rational_independence([ScalarConstant.rational(1, 2)], 10, 1e-9)
    rows.append(_row("independence (1/2) -> (1,-2)",
                     0.0 if v.relation == (1, -2) else 1.0, 0.0, 0.0))
    v = rational_independence([_SQRT2, ScalarConstant.surd(0, 1, 8)], 10, 1e-9)
    rows.append(_row("independence (sqrt2,sqrt8) -> (0,2,-1)",
                     0.0 if v.relation == (0, 2, -1) else 1.0, 0.0, 0.0))
    v = rational_independence([_SQRT2, _SQRT3], 10, 1e-9)
    rows.append(_row("independence (sqrt2,sqrt3) unresolved at bound 10",
                     0.0 if v.status == "independent-up-to-bound" else 1.0,
                     0.0, 0.0))

    rows.append(_row("quadrature int {x}", integrate([fp]), 0.5, 1e-12))
    rows.append(_row("quadrature int {x}^2", integrate([fp, fp]), 1 / 3, 1e-12))

    return rows, all(r["passed"] for r in rows)


def _random_observable(rng):
    kind = rng.randrange(5)
    if kind == 0:
        return observables.frac_part()
    if kind == 1:
        return observables.power_of_frac(rng.randint(1, 4))
    if kind == 2:
        a = rng.uniform(0.0, 0.8)
        return observables.indicator(a, a + rng.uniform(0.05, 1.0 - a))
    if kind == 3:
        return observables.trig_poly(
            [(k, rng.uniform(-1, 1), rng.uniform(-1, 1)) for k in range(4)])
    knots = sorted(rng.uniform(0.01, 0.99) for _ in range(3))
    return observables.piecewise_linear(
        [(0.0, rng.uniform(-1, 1))] + [(p, rng.uniform(-1, 1)) for p in knots])


def _print_rows(rows):
    width = max(len(r["name"]) for r in rows)
    for r in rows:
        mark = "PASS" if r["passed"] else "FAIL"
        print(f"{mark}  {r['name']:<{width}}  measured={r['measured']:< .12g} "
              f"expected={r['expected']:< .12g} tol={r['tol']:.1e}")


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="torusavg",
        description="Diagonal ergodic averages on the circle: run scenario "
                    "files, predict limits, verify the built-in suite.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario", help="path to a scenario JSON file")
    p_run.add_argument("--outdir", default=".", help="artifact directory")

    p_pred = sub.add_parser("predict", help="print the oracle prediction only")
    p_pred.add_argument("scenario")

    p_ver = sub.add_parser("verify", help="run the built-in verification suite")
    p_ver.add_argument("--quick", action="store_true",
                       help="N=1e5 with 3x relaxed tolerances")
    p_ver.add_argument("--nmax", type=int, default=None)
    p_ver.add_argument("--workers", type=int, default=1)

    args = parser.parse_args(argv)

    if args.command in ("run", "predict"):
        try:
            sc = parse_scenario(Path(args.scenario).read_bytes())
        except OSError as exc:
            print(f"cannot read scenario: {exc}", file=sys.stderr)
            return 2
        except ScenarioError as exc:
            print("scenario is invalid:", file=sys.stderr)
            for e in exc.errors:
                print(f"  - {e}", file=sys.stderr)
            return 2
        if args.command == "predict":
            pred = _prediction_for(sc)
            print(json.dumps({
                "name": sc.name, "value": pred.value,
                "applicable": pred.applicable, "caveats": list(pred.caveats),
                "derivation": [{"kind": f.kind, "indices": list(f.indices),
                                "value": f.value} for f in pred.derivation],
            }, indent=2, sort_keys=True))
            return 0
        return run_scenario(sc, args.outdir)

    n_max = args.nmax if args.nmax is not None else (10 ** 5 if args.quick
                                                     else 10 ** 6)
    tol_scale = 3.0 if args.quick else 1.0
    rows, ok = verify_builtin(n_max=n_max, workers=args.workers,
                              tol_scale=tol_scale)
    _print_rows(rows)
    print(f"{sum(r['passed'] for r in rows)}/{len(rows)} checks passed "
          f"at N={n_max}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
