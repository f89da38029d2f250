"""Transversal local rigidity toolkit: the projection onto family directions,
its section, the cochain regularizer, average-preserving smoothing, and a
verified Newton step for perturbed actions on the Heisenberg model."""

import math
import re
from dataclasses import dataclass

import numpy as np

from .cohomology import (
    Cochain1,
    VfCochain,
    VfField,
    delta1_star_split,
    vf_coboundary_solve,
    vf_delta0,
)
from .errors import (
    DimensionMismatch,
    FormatError,
    ThresholdExceeded,
    UnrepresentableProduct,
)
from .nilrep import (
    NilFunction,
    dpi_apply,
    nil_sobolev_norm,
    parse_nil_function,
    serialize_nil_function,
)
from .torus import TorusFunction, directional_derivative


@dataclass
class FamilyCoordinates:
    """Point of the transversal family: a coordinate-change direction and the
    q+p constant offsets of the generator coefficients."""

    mu1: float
    lam: tuple

    def __post_init__(self):
        self.mu1 = float(self.mu1)
        self.lam = tuple(float(x) for x in self.lam)

    @classmethod
    def zero(cls, q, p):
        return cls(0.0, (0.0,) * (q + p))

    @property
    def vector(self):
        return (self.mu1,) + self.lam


def _avg(F):
    return float(complex(F.toral.average).real)


def project_P(algebra, params, mu, omega):
    """Family coordinates of a vector-field cochain by averaging.

    The first-generator value averages to the Y offsets; the second-generator
    value yields the coordinate-change direction through its leading Y
    component and the Z offsets directly.
    """
    if params.alpha[0] == 0:
        raise ValueError("leading frequency component must be nonzero")
    if len(omega.x1.y) != algebra.q or len(omega.x1.z) != algebra.p:
        raise DimensionMismatch("coefficient counts must match the algebra")
    a = [_avg(h) for h in omega.x1.y]
    mu1 = _avg(omega.x2.y[0]) / float(params.alpha[0])
    b = [_avg(h) for h in omega.x2.z]
    return FamilyCoordinates(mu1, tuple(a) + tuple(b))


def section_s(params, mu, coords):
    """Constant cochain of the family member at coords relative to the base
    action: the generator-coefficient difference rho_{mu+mu1, lam} - rho_{mu, 0}.
    """
    q = len(params.alpha)
    p = len(params.beta)
    lam = coords.lam
    if len(lam) != q + p:
        raise DimensionMismatch("offset vector must have length q + p")
    x1 = VfField(
        tuple(NilFunction.constant(lam[i]) for i in range(q)),
        tuple(NilFunction() for _ in range(p)),
    )
    x2 = VfField(
        tuple(
            NilFunction.constant(coords.mu1 * float(params.alpha[i]))
            for i in range(q)
        ),
        tuple(NilFunction.constant(lam[q + t]) for t in range(p)),
    )
    return VfCochain(x1, x2)


def delta_op(params, omega, witnesses=None):
    """Regularized cochain: subtract the split's error pair, leaving a
    coboundary plus a constant cochain.  Vector-field cochains are treated
    coefficient slot by coefficient slot."""
    if isinstance(omega, Cochain1):
        s = delta1_star_split(params, omega, witnesses)
        return Cochain1(omega.f.sub(s.f_err), omega.g.sub(s.g_err))
    pairs_y = []
    for f, g in zip(omega.x1.y, omega.x2.y):
        s = delta1_star_split(params, Cochain1(f, g), witnesses)
        pairs_y.append((f.sub(s.f_err), g.sub(s.g_err)))
    pairs_z = []
    for f, g in zip(omega.x1.z, omega.x2.z):
        s = delta1_star_split(params, Cochain1(f, g), witnesses)
        pairs_z.append((f.sub(s.f_err), g.sub(s.g_err)))
    return VfCochain(
        VfField(tuple(f for f, _ in pairs_y), tuple(f for f, _ in pairs_z)),
        VfField(tuple(g for _, g in pairs_y), tuple(g for _, g in pairs_z)),
    )


def smoothing_truncate(F, cutoff):
    """Drop toral modes with sup norm beyond the cutoff, representations with
    central frequency beyond it, and Hermite coefficients past index cutoff.
    Averages along the family directions live at k = 0 and are untouched."""
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    keep = {
        k: c
        for k, c in F.toral.coeffs.items()
        if max(abs(k[0]), abs(k[1])) <= cutoff
    }
    length = int(math.floor(cutoff)) + 1
    reps = {
        (n, m): v[:length] for (n, m), v in F.reps.items() if abs(n) <= cutoff
    }
    return NilFunction(
        toral=TorusFunction(2, keep, real=F.toral.real), reps=reps
    )


def nil_multiply(F, G):
    """Pointwise product where it stays inside the coefficient frame: toral
    times toral is a convolution, constants scale anything.  Products involving
    a representation part and a nonconstant factor leave the frame."""
    for A, B in ((F, G), (G, F)):
        if not A.reps and A.toral.degree == 0:
            return B.scaled(complex(A.toral.average))
    if F.reps or G.reps:
        raise UnrepresentableProduct(
            "product of representation data with a nonconstant factor is not "
            "representable in the coefficient frame"
        )
    coeffs = {}
    for k, a in F.toral.coeffs.items():
        for l, b in G.toral.coeffs.items():
            key = (k[0] + l[0], k[1] + l[1])
            coeffs[key] = coeffs.get(key, 0) + a * b
    return NilFunction(
        toral=TorusFunction(2, coeffs, real=F.toral.real and G.toral.real)
    )


_Y_GEN = ("Y1", "Y2")


def _basis_apply(kind, idx, F):
    """Lie derivative of a coefficient function along a basis element."""
    if kind == "Y":
        direction = tuple(1.0 if l == idx else 0.0 for l in range(2))
        toral = directional_derivative(direction, F.toral)
        gen = _Y_GEN[idx]
    else:
        toral = TorusFunction(2, {}, real=F.toral.real)
        gen = "Z"
    reps = {(n, m): dpi_apply(gen, n, v) for (n, m), v in F.reps.items()}
    return NilFunction(toral=toral, reps=reps)


def _require_heisenberg(algebra):
    if algebra.q != 2 or algebra.p != 1:
        raise DimensionMismatch(
            "vector-field brackets are implemented for the Heisenberg shape"
        )


def vf_bracket(algebra, U, V):
    """Bracket of vector fields with function coefficients: structure-constant
    terms feed Y pairs into the center, derivative terms move coefficients
    along the basis elements."""
    _require_heisenberg(algebra)
    q, p = algebra.q, algebra.p
    slots = [("Y", i) for i in range(q)] + [("Z", t) for t in range(p)]
    u = list(U.y) + list(U.z)
    v = list(V.y) + list(V.z)
    out = [NilFunction() for _ in range(q + p)]
    for a, (kind, idx) in enumerate(slots):
        if u[a].is_zero() and v[a].is_zero():
            continue
        for b in range(q + p):
            if not (u[a].is_zero() or v[b].is_zero()):
                out[b] = out[b].add(nil_multiply(u[a], _basis_apply(kind, idx, v[b])))
            if not (v[a].is_zero() or u[b].is_zero()):
                out[b] = out[b].sub(nil_multiply(v[a], _basis_apply(kind, idx, u[b])))
    for t in range(p):
        for l in range(q):
            for i in range(q):
                c = float(algebra.c[l][i][t])
                if c != 0.0:
                    out[q + t] = out[q + t].add(
                        nil_multiply(U.y[l], V.y[i]).scaled(c)
                    )
    return VfField(tuple(out[:q]), tuple(out[q:]))


def _field_sub(A, B):
    return VfField(
        tuple(a.sub(b) for a, b in zip(A.y, B.y)),
        tuple(a.sub(b) for a, b in zip(A.z, B.z)),
    )


def _field_scale(A, s):
    return VfField(
        tuple(a.scaled(s) for a in A.y), tuple(a.scaled(s) for a in A.z)
    )


def _field_norm(A):
    return max(nil_sobolev_norm(h, 0.0) for h in A.y + A.z)


def _strip_constants(field, y_consts, z_consts):
    return VfField(
        tuple(
            h.sub(NilFunction.constant(float(c)))
            for h, c in zip(field.y, y_consts)
        ),
        tuple(
            h.sub(NilFunction.constant(float(c)))
            for h, c in zip(field.z, z_consts)
        ),
    )


def newton_step(algebra, params, mu, omega, witnesses=None, threshold=0.5):
    """One linearized rigidity step at family point mu.

    Regularize the perturbation cochain, project onto the family directions,
    solve the coboundary equation for the remainder, then measure the
    second-order residue: the linear leftover plus the first conjugacy bracket
    [H, omega - D/2] per generator.  The residual must shrink quadratically in
    the perturbation size.
    """
    _require_heisenberg(algebra)
    size = max(_field_norm(omega.x1), _field_norm(omega.x2))
    if size > threshold:
        raise ThresholdExceeded(
            "perturbation norm %.3e exceeds the step threshold %.3e"
            % (size, threshold)
        )
    combined = params.replace(mu=mu)
    reduced = delta_op(combined, omega, witnesses)
    coords = project_P(algebra, params, mu, reduced)
    sec = section_s(params, mu, coords)
    lin = VfCochain(
        _field_sub(reduced.x1, sec.x1), _field_sub(reduced.x2, sec.x2)
    )
    H, resid_const = vf_coboundary_solve(algebra, combined, lin, witnesses)
    D = vf_delta0(algebra, combined, H)
    residual_fields = []
    for om_i, s_i, d_i, yc, zc in (
        (omega.x1, sec.x1, D.x1, resid_const.a1, resid_const.b1),
        (omega.x2, sec.x2, D.x2, resid_const.a2, resid_const.b2),
    ):
        lin_err = _strip_constants(
            _field_sub(_field_sub(om_i, s_i), d_i), yc, zc
        )
        brack = vf_bracket(
            algebra, H, _field_sub(om_i, _field_scale(d_i, 0.5))
        )
        residual_fields.append(
            VfField(
                tuple(a.add(b) for a, b in zip(lin_err.y, brack.y)),
                tuple(a.add(b) for a, b in zip(lin_err.z, brack.z)),
            )
        )
    residual_norm = max(_field_norm(f) for f in residual_fields)
    return coords, H, residual_norm


# --- serialization ----------------------------------------------------------

_SLOT_RE = re.compile(r"(x1|x2)\.(y|z)(\d+)\Z")


def serialize_vf_cochain(omega):
    """Flat text form: every record of a slot's coefficient function is
    prefixed with the slot name, e.g. ``x1.y0 toral 1 2 0.5 0.0``."""
    lines = []
    for gen, fld in (("x1", omega.x1), ("x2", omega.x2)):
        for kind, slots in (("y", fld.y), ("z", fld.z)):
            for idx, F in enumerate(slots):
                prefix = "%s.%s%d " % (gen, kind, idx)
                for rec in serialize_nil_function(F).splitlines():
                    lines.append(prefix + rec)
    return "\n".join(lines) + ("\n" if lines else "")


def parse_vf_cochain(text, q=2, p=1):
    """Inverse of serialize_vf_cochain; slots absent from the text are zero.

    Record syntax after the slot prefix matches parse_nil_function; ``#``
    starts a comment.  Errors carry the line number in the original text.
    """
    per_slot = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        head, _, rest = stripped.partition(" ")
        m = _SLOT_RE.match(head)
        if not m:
            raise FormatError("unknown slot %r" % head, line=lineno)
        gen, kind, idx = m.group(1), m.group(2), int(m.group(3))
        if idx >= (q if kind == "y" else p):
            raise FormatError("slot index out of range: %r" % head, line=lineno)
        per_slot.setdefault((gen, kind, idx), []).append((lineno, rest.strip()))

    def build(key):
        entries = per_slot.get(key, [])
        if not entries:
            return NilFunction()
        # records are re-parsed at their original line positions so any
        # format error reports the right line of the combined file
        buf = [""] * max(l for l, _ in entries)
        for l, rest in entries:
            buf[l - 1] = rest
        return parse_nil_function("\n".join(buf))

    def field(gen):
        return VfField(
            tuple(build((gen, "y", i)) for i in range(q)),
            tuple(build((gen, "z", t)) for t in range(p)),
        )

    return VfCochain(field("x1"), field("x2"))


def load_vf_cochain(path, q=2, p=1):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_vf_cochain(fh.read(), q=q, p=p)
