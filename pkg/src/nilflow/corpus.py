"""Seeded random corpora for experiments and property checks.

Each member is drawn from a generator keyed by (seed, index), so the draw for
member i never depends on how many members are requested, on evaluation
order, or on worker count.
"""

import numpy as np

from .cohomology import Cochain1, VfCochain, VfField, vf_delta0
from .nilrep import NilFunction
from .rigidity import FamilyCoordinates, section_s
from .torus import TorusFunction, TorusVectorField


def member_rng(seed, index):
    """Generator for one corpus member."""
    return np.random.default_rng((int(seed), int(index)))


def _toral_coeffs(rng, dim, degree, decay, real, zero_average):
    # modes are visited in a fixed lexicographic order so a draw consumes the
    # stream identically for every caller
    coeffs = {}
    for flat in range((2 * degree + 1) ** dim):
        k = []
        rem = flat
        for _ in range(dim):
            k.append(rem % (2 * degree + 1) - degree)
            rem //= 2 * degree + 1
        k = tuple(k)
        if real:
            # draw only the half with positive leading nonzero entry and
            # mirror it; the conjugate pair keeps the function real-valued
            lead = next((x for x in k if x != 0), 0)
            if lead <= 0:
                continue
            c = rng.standard_normal() + 1j * rng.standard_normal()
            w = (1.0 + sum(x * x for x in k)) ** (-decay / 2.0)
            coeffs[k] = w * c
            coeffs[tuple(-x for x in k)] = w * c.conjugate()
        else:
            if zero_average and all(x == 0 for x in k):
                continue
            c = rng.standard_normal() + 1j * rng.standard_normal()
            coeffs[k] = (1.0 + sum(x * x for x in k)) ** (-decay / 2.0) * c
    return coeffs


def toral_function(rng, dim=2, degree=8, decay=3.0, real=True, zero_average=True):
    """One band-limited function on the torus with Sobolev-decayed modes."""
    return TorusFunction(
        dim, _toral_coeffs(rng, dim, degree, decay, real, zero_average), real=real
    )


def torus_corpus(seed, count, dim=2, degree=8, decay=3.0, real=True,
                 zero_average=True):
    return [
        toral_function(member_rng(seed, i), dim, degree, decay, real, zero_average)
        for i in range(count)
    ]


def torus_field(rng, dim=2, degree=8, decay=3.0, scale=1.0):
    """One real band-limited vector field on the torus."""
    comps = [
        toral_function(rng, dim, degree, decay, real=True) * scale
        for _ in range(dim)
    ]
    return TorusVectorField(comps)


def nil_function(rng, degree=8, n_max=4, length=8, decay=3.0,
                 zero_average=True):
    """One band-limited function on the nilmanifold: toral modes up to the
    given degree plus representation components for 0 < |n| <= n_max."""
    coeffs = _toral_coeffs(rng, 2, degree, decay, real=False,
                           zero_average=zero_average)
    reps = {}
    j = np.arange(length)
    for n in range(1, n_max + 1):
        for sign in (1, -1):
            w = (1.0 + n * n + n * (2 * j + 1)) ** (-decay / 2.0)
            reps[(sign * n, 0)] = w * (
                rng.standard_normal(length) + 1j * rng.standard_normal(length)
            )
    return NilFunction(toral=TorusFunction(2, coeffs), reps=reps)


def nil_corpus(seed, count, degree=8, n_max=4, length=8, decay=3.0,
               zero_average=True):
    return [
        nil_function(member_rng(seed, i), degree, n_max, length, decay,
                     zero_average)
        for i in range(count)
    ]


def cochain_corpus(seed, count, degree=6, n_max=3, length=8, decay=7.0):
    """Corpus of 1-cochains; components are independent decayed draws."""
    out = []
    for i in range(count):
        rng = member_rng(seed, i)
        f = nil_function(rng, degree, n_max, length, decay, zero_average=False)
        g = nil_function(rng, degree, n_max, length, decay, zero_average=False)
        out.append(Cochain1(f, g))
    return out


def vf_member(rng, q=2, p=1, degree=3, decay=3.0, scale=1.0):
    """One cochain with vector-field coefficients; every slot carries a real
    band-limited toral coefficient so products of slots stay representable."""

    def slot():
        f = toral_function(rng, 2, degree, decay, real=True, zero_average=False)
        return NilFunction(toral=f * scale)

    def field():
        return VfField(
            tuple(slot() for _ in range(q)), tuple(slot() for _ in range(p))
        )

    return VfCochain(field(), field())


def vf_corpus(seed, count, q=2, p=1, degree=3, decay=3.0, scale=1.0):
    return [
        vf_member(member_rng(seed, i), q, p, degree, decay, scale)
        for i in range(count)
    ]


def vf_cocycle_member(rng, algebra, params, mu=0.0, degree=3, decay=3.0,
                      scale=1.0):
    """Perturbation tangent to the commuting deformations: the coboundary of
    a random coefficient change plus a random family direction.  Generic
    cochains are not closed, so quadratic-convergence experiments draw from
    here."""
    q, p = algebra.q, algebra.p

    def slot():
        f = toral_function(rng, 2, degree, decay, real=True, zero_average=False)
        return NilFunction(toral=f * scale)

    H = VfField(tuple(slot() for _ in range(q)), tuple(slot() for _ in range(p)))
    coords = FamilyCoordinates(
        scale * rng.standard_normal(),
        tuple(scale * rng.standard_normal() for _ in range(q + p)),
    )
    cob = vf_delta0(algebra, params.replace(mu=mu), H)
    sec = section_s(params, mu, coords)

    def add(a, b):
        return VfField(
            tuple(x.add(y) for x, y in zip(a.y, b.y)),
            tuple(x.add(y) for x, y in zip(a.z, b.z)),
        )

    return VfCochain(add(cob.x1, sec.x1), add(cob.x2, sec.x2))


def vf_cocycle_corpus(seed, count, algebra, params, mu=0.0, degree=3,
                      decay=3.0, scale=1.0):
    return [
        vf_cocycle_member(member_rng(seed, i), algebra, params, mu, degree,
                          decay, scale)
        for i in range(count)
    ]


def restrict_frequencies(F, n_max):
    """Drop representation components with |n| above n_max."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    reps = {
        key: np.array(v) for key, v in F.reps.items() if abs(key[0]) <= n_max
    }
    return NilFunction(toral=F.toral, reps=reps)
