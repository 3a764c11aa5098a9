"""Closed-form limit predictions and measured-vs-predicted comparison.

The limit of a diagonal average factorizes over the family's equality
partition: each group of identical transformations contributes the Haar
integral of the product of its observables, and an optional finite-order
factor contributes its periodic orbit mean.  Applicability requires every
cross-group quotient rotation to be ergodic (the checkable stand-in for
irreducibility on the circle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .dynsys import (RotationVerdict, TransformFamily, TransformSpec,
                     effective_rotation, finite_order, is_ergodic_rotation,
                     quotient_transform)
from .engine import AverageTrace, Schedule, correlation_average
from .observables import Observable, QuadratureSpec, integrate, periodic_orbit_mean


@dataclass(frozen=True)
class Factor:
    kind: str  # "group_integral" | "single_integral" | "periodic_mean"
    indices: tuple[int, ...]
    value: float


@dataclass(frozen=True)
class Prediction:
    value: float
    derivation: tuple[Factor, ...]
    applicable: bool
    caveats: tuple[str, ...]


def _quotient_verdict(a: TransformSpec, b: TransformSpec,
                      bound: int) -> RotationVerdict:
    """Ergodicity of a o b^{-1}, keeping symbolic knowledge that the
    float-literal fallback of quotient_transform would lose: the difference
    of surds over distinct square-free bases is irrational."""
    ea, eb = effective_rotation(a), effective_rotation(b)
    if (ea.kind == "surd" and eb.kind == "surd" and ea.surd_m != eb.surd_m):
        return RotationVerdict("ergodic")
    return is_ergodic_rotation(quotient_transform(a, b), bound)


def predict(fam: TransformFamily, fs, periodic=None, bound: int = 10,
            quad: QuadratureSpec | None = None) -> Prediction:
    """Predicted limit of the diagonal average for this family.

    ``periodic`` is an optional (g, s_map, x0) triple adding a finite-order
    factor; its contribution depends on x0, so the prediction is bound to
    that starting point.
    """
    fs = list(fs)
    if len(fs) != len(fam.members):
        raise ValueError(f"{len(fs)} observables for {len(fam.members)} transformations")
    factors = []
    caveats = []
    applicable = True
    for group in fam.equality_partition:
        obs = [fs[i] for i in group]
        if len(obs) == 1:
            val = obs[0].exact_integral
            if val is None:
                val = integrate(obs, quad)
            factors.append(Factor("single_integral", tuple(group), val))
        else:
            factors.append(Factor("group_integral", tuple(group),
                                  integrate(obs, quad)))
    if len(fam.equality_partition) > 1:
        caveats.append("irreducibility replaced by the ergodic-quotient "
                       "surrogate on the circle")
        for ga, gb in combinations(fam.equality_partition, 2):
            i, j = ga[0], gb[0]
            verdict = _quotient_verdict(fam.members[i], fam.members[j], bound)
            if verdict.status != "ergodic":
                applicable = False
                detail = (f" with period {verdict.period}"
                          if verdict.period is not None else "")
                caveats.append(f"quotient of members {i} and {j} is "
                               f"{verdict.status}{detail}")
    if periodic is not None:
        g, s_map, x0 = periodic
        finite_order(s_map)  # raises for infinite-order maps
        factors.append(Factor("periodic_mean", (),
                              periodic_orbit_mean(g, s_map, x0)))
    value = math.prod(f.value for f in factors)
    return Prediction(value, tuple(factors), applicable, tuple(caveats))


@dataclass(frozen=True)
class ComparisonReport:
    passed: bool
    final_error: float
    tail: float


def compare(pred: Prediction, trace: AverageTrace, tol: float) -> ComparisonReport:
    """Pass iff the trace's final value is within tol of the prediction.

    The empirical tail is carried along so a failure can be attributed to
    slow convergence rather than a wrong prediction.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if not pred.applicable:
        raise ValueError("prediction is not applicable; nothing to compare")
    err = abs(trace.final - pred.value)
    return ComparisonReport(err <= tol, err, trace.est_tail)


@dataclass(frozen=True)
class PairReport:
    expected: float
    measured: float
    error: float
    passed: bool


@dataclass(frozen=True)
class ErgodicityReport:
    pairs: tuple[PairReport, ...]
    verdict: str  # "consistent-with-ergodic" | "not-ergodic"


def ergodicity_report(t: TransformSpec, pairs, s: Schedule, tol: float,
                      workers: int = 1) -> ErgodicityReport:
    """Correlation diagnostic: every pair (A, B) should average to
    len(A)*len(B) when T is ergodic; a single passing pair proves nothing,
    which is why a list is taken."""
    results = []
    for A, B in pairs:
        expected = (A.params[1] - A.params[0]) * (B.params[1] - B.params[0])
        trace = correlation_average(t, A, B, s, workers)
        err = abs(trace.final - expected)
        results.append(PairReport(expected, trace.final, err, err <= tol))
    verdict = ("consistent-with-ergodic" if all(r.passed for r in results)
               else "not-ergodic")
    return ErgodicityReport(tuple(results), verdict)
