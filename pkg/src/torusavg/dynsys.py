"""Commuting transformation families on the circle.

All constructible kinds are rotations (possibly of finite order), so every
family commutes and preserves Haar measure by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import _dd
from .unitmath import (ScalarConstant, UnitPoint, frac, orbit_point,
                       rational_independence)

MAX_FAMILY_SIZE = 8


@dataclass(frozen=True)
class TransformSpec:
    kind: str  # "rotation" | "rotation_power" | "finite_rotation"
    alpha: ScalarConstant | None = None
    power: int | None = None
    order: int | None = None
    label: str = field(default="", compare=False)


def rotation(alpha: ScalarConstant, label: str = "") -> TransformSpec:
    return TransformSpec("rotation", alpha=alpha, label=label)


def rotation_power(alpha: ScalarConstant, p: int, label: str = "") -> TransformSpec:
    """x -> x + p*alpha."""
    if p < 1:
        raise ValueError("power must be a positive integer")
    return TransformSpec("rotation_power", alpha=alpha, power=p, label=label)


def finite_rotation(q: int, label: str = "") -> TransformSpec:
    """x -> x + 1/q, an order-q map."""
    if q < 1:
        raise ValueError("order must be a positive integer")
    return TransformSpec("finite_rotation", order=q, label=label)


def identity(label: str = "id") -> TransformSpec:
    return rotation(ScalarConstant.rational(0), label=label)


def effective_rotation(spec: TransformSpec) -> ScalarConstant:
    """The single rotation constant a spec reduces to."""
    if spec.kind == "rotation":
        return spec.alpha
    if spec.kind == "rotation_power":
        return spec.alpha.mul_int(spec.power)
    if spec.kind == "finite_rotation":
        return ScalarConstant.rational(1, spec.order)
    raise ValueError(f"unknown transform kind {spec.kind!r}")


def _canonical_constant(c: ScalarConstant):
    """Hashable key for spec equality: same kind, same symbolic constants.

    Deliberately no mod-1 reduction: rotations by alpha and alpha+1 act
    identically on the circle, but the partition keeps them apart and the
    prediction oracle then rejects the family through its periodic-quotient
    check rather than silently merging them.
    """
    if c.kind == "rational":
        return ("rational", c.rat)
    if c.kind == "surd":
        return ("surd", c.surd_a, c.surd_b, c.surd_m)
    return ("literal", c.lit)


def finite_order(spec: TransformSpec) -> int:
    """Order of a finite-order spec; raises for irrational rotations."""
    c = effective_rotation(spec)
    if not c.is_rational():
        raise ValueError("transform does not have finite order")
    return (c.as_fraction() % 1).denominator


@dataclass(frozen=True)
class TransformFamily:
    members: tuple[TransformSpec, ...]
    equality_partition: tuple[tuple[int, ...], ...]


def build_family(specs) -> TransformFamily:
    """Group extensionally-equal members (0-based index groups, in order of
    first appearance)."""
    specs = tuple(specs)
    if not specs:
        raise ValueError("family must be nonempty")
    if len(specs) > MAX_FAMILY_SIZE:
        raise ValueError(f"family size capped at {MAX_FAMILY_SIZE}")
    groups: dict = {}
    for i, s in enumerate(specs):
        groups.setdefault(_canonical_constant(effective_rotation(s)), []).append(i)
    partition = tuple(tuple(g) for g in groups.values())
    return TransformFamily(specs, partition)


def apply(spec: TransformSpec, x, n: int) -> UnitPoint:
    """T^n x."""
    return orbit_point(UnitPoint.from_real(x), effective_rotation(spec), n)


def quotient_transform(a: TransformSpec, b: TransformSpec) -> TransformSpec:
    """Spec of a o b^{-1}: rotation by alpha_a - alpha_b.

    Mixed surd bases cannot subtract exactly and fall back to a literal
    carrying the ``inexact`` precision flag.
    """
    ea, eb = effective_rotation(a), effective_rotation(b)
    diff = ea.sub(eb)
    if diff is None:
        h, l = _dd.dd_add(ea.dd(), _dd.dd_neg(eb.dd()))
        diff = ScalarConstant.literal(h + l, inexact=True)
    return rotation(diff, label=f"({a.label or 'a'})({b.label or 'b'})^-1")


@dataclass(frozen=True)
class RotationVerdict:
    status: str  # "ergodic" | "periodic" | "undetermined-up-to-bound"
    period: int | None = None
    bound: int | None = None


def is_ergodic_rotation(spec: TransformSpec, bound: int = 10) -> RotationVerdict:
    """Rational rotations are periodic, symbolic irrationals uniquely
    ergodic; literals get a bounded integer-relation search."""
    c = effective_rotation(spec)
    if c.is_rational():
        return RotationVerdict("periodic", period=(c.as_fraction() % 1).denominator)
    if c.kind == "surd":
        return RotationVerdict("ergodic")
    v = rational_independence([c], bound=bound, tol=1e-9)
    if v.status == "dependent":
        k0, k1 = v.relation
        if k0 == 0:
            return RotationVerdict("periodic", period=1)
        return RotationVerdict("periodic",
                               period=abs(k1) // math.gcd(abs(k0), abs(k1)))
    return RotationVerdict("undetermined-up-to-bound", bound=bound)
