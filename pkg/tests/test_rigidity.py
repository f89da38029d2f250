import math

import numpy as np
import pytest

from nilflow.algebra import ActionParams, heisenberg
from nilflow.cohomology import Cochain1, VfCochain, VfField, delta0, delta1, vf_delta0
from nilflow.diophantine import fit_witness
from nilflow.errors import DimensionMismatch, ThresholdExceeded, UnrepresentableProduct
from nilflow.nilrep import NilFunction, nil_sobolev_norm
from nilflow.rigidity import (
    FamilyCoordinates,
    delta_op,
    newton_step,
    nil_multiply,
    project_P,
    section_s,
    smoothing_truncate,
    vf_bracket,
)
from nilflow.torus import TorusFunction

PHI = (1 + math.sqrt(5)) / 2


def golden_params(beta=1.0, mu=0.0):
    return ActionParams(alpha=(1.0, PHI), beta=(beta,), mu=mu)


def golden_witnesses():
    return {"alpha": fit_witness((1.0, PHI), 1.0, 50)}


def norm_diff(F, G):
    return nil_sobolev_norm(F.sub(G), 0.0)


def toral_nil(coeffs):
    return NilFunction(toral=TorusFunction(2, coeffs))


def rand_toral(rng, deg=3, real=True):
    coeffs = {}
    for k1 in range(-deg, deg + 1):
        for k2 in range(-deg, deg + 1):
            if (k1, k2) == (0, 0):
                continue
            c = rng.standard_normal() + 1j * rng.standard_normal()
            coeffs[(k1, k2)] = coeffs.get((k1, k2), 0) + c
            if real:
                neg = (-k1, -k2)
                coeffs[neg] = coeffs.get(neg, 0) + c.conjugate()
    return NilFunction(toral=TorusFunction(2, coeffs, real=real))


def rand_field(rng, scale=1.0, deg=2):
    return VfField(
        (rand_toral(rng, deg).scaled(scale), rand_toral(rng, deg).scaled(scale)),
        (rand_toral(rng, deg).scaled(scale),),
    )


# ---------------------------------------------------------------------------
# projection and section


def test_section_of_zero_is_zero():
    sec = section_s(golden_params(), 0.3, FamilyCoordinates.zero(2, 1))
    for h in sec.x1.y + sec.x1.z + sec.x2.y + sec.x2.z:
        assert h.is_zero()


@pytest.mark.parametrize("mu", [-1.0, -0.5, 0.0, 0.5, 1.0])
def test_projection_inverts_section(mu):
    A = heisenberg()
    p = golden_params()
    coords = FamilyCoordinates(0.37, (0.21, -0.11, 0.05))
    got = project_P(A, p, mu, section_s(p, mu, coords))
    assert np.allclose(got.vector, coords.vector, atol=1e-12)


def test_section_is_linear():
    p = golden_params()
    c1 = FamilyCoordinates(0.2, (0.1, -0.3, 0.4))
    c2 = FamilyCoordinates(-0.5, (0.25, 0.0, -0.2))
    c3 = FamilyCoordinates(c1.mu1 + c2.mu1, tuple(a + b for a, b in zip(c1.lam, c2.lam)))
    s1, s2, s3 = (section_s(p, 0.0, c) for c in (c1, c2, c3))
    for a, b, c in zip(
        s1.x1.y + s1.x2.y + s1.x2.z,
        s2.x1.y + s2.x2.y + s2.x2.z,
        s3.x1.y + s3.x2.y + s3.x2.z,
    ):
        assert norm_diff(a.add(b), c) < 1e-12


def test_projection_is_linear():
    rng = np.random.default_rng(5)
    A = heisenberg()
    p = golden_params()
    o1 = VfCochain(rand_field(rng), rand_field(rng))
    o2 = VfCochain(rand_field(rng), rand_field(rng))
    both = VfCochain(
        VfField(
            tuple(a.add(b) for a, b in zip(o1.x1.y, o2.x1.y)),
            tuple(a.add(b) for a, b in zip(o1.x1.z, o2.x1.z)),
        ),
        VfField(
            tuple(a.add(b) for a, b in zip(o1.x2.y, o2.x2.y)),
            tuple(a.add(b) for a, b in zip(o1.x2.z, o2.x2.z)),
        ),
    )
    v1 = np.array(project_P(A, p, 0.0, o1).vector)
    v2 = np.array(project_P(A, p, 0.0, o2).vector)
    v3 = np.array(project_P(A, p, 0.0, both).vector)
    assert np.allclose(v1 + v2, v3, atol=1e-12)


def test_projection_kills_coboundaries():
    rng = np.random.default_rng(7)
    A = heisenberg()
    p = golden_params()
    omega = vf_delta0(A, p, rand_field(rng))
    assert np.allclose(project_P(A, p, 0.0, omega).vector, 0.0, atol=1e-12)


def test_projection_recovers_constant_cocycle():
    A = heisenberg()
    p = golden_params()
    a, mu1, b = (0.3, -0.7), 0.45, (0.12,)
    omega = VfCochain(
        VfField(
            tuple(NilFunction.constant(x) for x in a),
            (NilFunction(),),
        ),
        VfField(
            tuple(NilFunction.constant(mu1 * x) for x in p.alpha),
            tuple(NilFunction.constant(x) for x in b),
        ),
    )
    got = project_P(A, p, 0.0, omega)
    assert got.mu1 == pytest.approx(mu1, abs=1e-14)
    assert got.lam == pytest.approx(a + b, abs=1e-14)


def test_projection_needs_leading_frequency():
    A = heisenberg()
    p = ActionParams(alpha=(0.0, PHI), beta=(1.0,))
    omega = VfCochain(
        VfField((NilFunction(), NilFunction()), (NilFunction(),)),
        VfField((NilFunction(), NilFunction()), (NilFunction(),)),
    )
    with pytest.raises(ValueError):
        project_P(A, p, 0.0, omega)


# ---------------------------------------------------------------------------
# regularizer


def test_delta_op_fixes_cocycles():
    rng = np.random.default_rng(11)
    p = golden_params()
    h0 = rand_toral(rng)
    w = delta0(p, h0)
    w = Cochain1(w.f.add(NilFunction.constant(0.4)), w.g.add(NilFunction.constant(-0.6)))
    out = delta_op(p, w, golden_witnesses())
    scale = max(w.norm(0.0), 1.0)
    assert norm_diff(out.f, w.f) < 1e-12 * scale
    assert norm_diff(out.g, w.g) < 1e-12 * scale


def test_delta_op_reduces_pure_error_to_constants():
    p = golden_params(beta=0.5)
    f = NilFunction(reps={(1, 0): np.array([0.5, -1.0])})
    w = Cochain1(f.add(NilFunction.constant(0.25)), NilFunction.constant(-0.125))
    out = delta_op(p, w)
    assert norm_diff(out.f, NilFunction.constant(0.25)) < 1e-12
    assert norm_diff(out.g, NilFunction.constant(-0.125)) < 1e-12


@pytest.mark.parametrize("mu", [0.0, 0.5])
def test_delta_op_output_is_closed(mu):
    rng = np.random.default_rng(13)
    p = golden_params(mu=mu)
    w = Cochain1(rand_toral(rng), rand_toral(rng))
    out = delta_op(p, w, golden_witnesses())
    scale = max(w.norm(0.0), 1.0)
    assert nil_sobolev_norm(delta1(p, out), 0.0) < 1e-9 * scale
    again = delta_op(p, out, golden_witnesses())
    assert norm_diff(again.f, out.f) < 1e-9 * scale
    assert norm_diff(again.g, out.g) < 1e-9 * scale


def test_delta_op_vector_field_slots():
    rng = np.random.default_rng(17)
    A = heisenberg()
    p = golden_params()
    omega = vf_delta0(A, p, rand_field(rng))
    shifted = VfCochain(
        VfField(
            tuple(h.add(NilFunction.constant(0.1)) for h in omega.x1.y),
            omega.x1.z,
        ),
        omega.x2,
    )
    out = delta_op(p, shifted, golden_witnesses())
    for got, want in zip(
        out.x1.y + out.x1.z + out.x2.y + out.x2.z,
        shifted.x1.y + shifted.x1.z + shifted.x2.y + shifted.x2.z,
    ):
        assert norm_diff(got, want) < 1e-10 * max(nil_sobolev_norm(want, 0.0), 1.0)


# ---------------------------------------------------------------------------
# smoothing


def test_truncate_is_identity_above_support():
    rng = np.random.default_rng(19)
    F = rand_toral(rng, deg=3)
    F = NilFunction(
        toral=F.toral, reps={(2, 0): rng.standard_normal(3) + 0j}
    )
    assert norm_diff(smoothing_truncate(F, 5), F) == 0.0


def test_truncate_preserves_constants():
    F = NilFunction.constant(2.5)
    out = smoothing_truncate(F, 0)
    assert complex(out.toral.average) == 2.5
    assert not out.reps


def test_truncate_commutes_with_projection():
    rng = np.random.default_rng(23)
    A = heisenberg()
    p = golden_params()
    lifted = rand_field(rng, deg=4)
    lifted = VfField(
        (lifted.y[0].add(NilFunction.constant(0.3)), lifted.y[1]), lifted.z
    )
    omega = VfCochain(lifted, rand_field(rng, deg=4))
    cut = VfCochain(
        VfField(
            tuple(smoothing_truncate(h, 2) for h in omega.x1.y),
            tuple(smoothing_truncate(h, 2) for h in omega.x1.z),
        ),
        VfField(
            tuple(smoothing_truncate(h, 2) for h in omega.x2.y),
            tuple(smoothing_truncate(h, 2) for h in omega.x2.z),
        ),
    )
    assert project_P(A, p, 0.0, cut).vector == project_P(A, p, 0.0, omega).vector


def test_truncate_error_bound():
    rng = np.random.default_rng(29)
    from nilflow.nilrep import nil_sobolev_norm as norm

    for trial in range(5):
        toral = rand_toral(rng, deg=8)
        F = NilFunction(
            toral=toral.toral,
            reps={
                (1, 0): rng.standard_normal(4) + 1j * rng.standard_normal(4),
                (5, 0): rng.standard_normal(4) + 1j * rng.standard_normal(4),
            },
        )
        for cutoff in (3, 4):
            diff = F.sub(smoothing_truncate(F, cutoff))
            assert norm(diff, 0.0) <= cutoff ** (-2.0) * norm(F, 2.0) * (1 + 1e-12)


def test_truncate_rejects_negative_cutoff():
    with pytest.raises(ValueError):
        smoothing_truncate(NilFunction(), -1)


# ---------------------------------------------------------------------------
# coefficient products and brackets


def test_multiply_single_modes():
    F = toral_nil({(1, 2): 2.0})
    G = toral_nil({(-1, 3): 0.5})
    out = nil_multiply(F, G)
    assert out.toral.coeff((0, 5)) == pytest.approx(1.0)


def test_multiply_constant_scales_reps():
    F = NilFunction.constant(3.0)
    G = NilFunction(reps={(1, 0): np.array([1.0, 2.0])})
    out = nil_multiply(F, G)
    assert np.allclose(out.rep(1), [3.0, 6.0])


def test_multiply_rejects_unrepresentable():
    rep = NilFunction(reps={(1, 0): np.array([1.0])})
    toral = toral_nil({(1, 0): 1.0})
    with pytest.raises(UnrepresentableProduct):
        nil_multiply(rep, rep)
    with pytest.raises(UnrepresentableProduct):
        nil_multiply(toral, rep)


def test_bracket_hand_example():
    A = heisenberg()
    u = toral_nil({(1, 0): 2.0})
    v = toral_nil({(0, 1): 3.0})
    U = VfField((u, NilFunction()), (NilFunction(),))
    V = VfField((NilFunction(), v), (NilFunction(),))
    out = vf_bracket(A, U, V)
    # -v * (Y2 u) on the first slot, u * (Y1 v) on the second, u*v into Z
    assert out.y[0].is_zero()
    assert out.y[1].toral.coeff((1, 1)) == pytest.approx(0.0)
    assert out.z[0].toral.coeff((1, 1)) == pytest.approx(6.0 * float(A.c[0][1][0]))


def test_bracket_derivative_terms():
    A = heisenberg()
    u = toral_nil({(1, 1): 2.0})
    v = toral_nil({(2, -1): 3.0})
    U = VfField((u, NilFunction()), (NilFunction(),))
    V = VfField((NilFunction(), v), (NilFunction(),))
    out = vf_bracket(A, U, V)
    assert out.y[0].toral.coeff((3, 0)) == pytest.approx(-(2j * math.pi * 1) * 6.0)
    assert out.y[1].toral.coeff((3, 0)) == pytest.approx((2j * math.pi * 2) * 6.0)


def test_bracket_central_direction():
    A = heisenberg()
    h = toral_nil({(1, 0): 1.0})
    g = toral_nil({(0, 2): 1.0})
    U = VfField((NilFunction(), NilFunction()), (h,))
    V = VfField((g, NilFunction()), (NilFunction(),))
    out = vf_bracket(A, U, V)
    assert out.y[0].is_zero()
    assert out.y[1].is_zero()
    # -(g * Y1 h) Z survives; Z applied to toral data vanishes
    assert out.z[0].toral.coeff((1, 2)) == pytest.approx(-(2j * math.pi * 1))


def test_bracket_antisymmetry():
    rng = np.random.default_rng(31)
    A = heisenberg()
    U = rand_field(rng)
    V = rand_field(rng)
    fwd = vf_bracket(A, U, V)
    bwd = vf_bracket(A, V, U)
    for a, b in zip(fwd.y + fwd.z, bwd.y + bwd.z):
        assert norm_diff(a, b.scaled(-1.0)) < 1e-12 * max(
            nil_sobolev_norm(a, 0.0), 1.0
        )


# ---------------------------------------------------------------------------
# newton step


def test_newton_pure_family_shift():
    A = heisenberg()
    p = golden_params()
    coords0 = FamilyCoordinates(0.02, (0.005, -0.01, 0.007))
    omega = section_s(p, 0.5, coords0)
    coords, H, residual = newton_step(A, p, 0.5, omega, golden_witnesses())
    assert np.allclose(coords.vector, coords0.vector, atol=1e-14)
    for h in H.y + H.z:
        assert nil_sobolev_norm(h, 0.0) < 1e-12
    assert residual == 0.0


def _zero_avg_field(rng):
    return rand_field(rng, deg=2)


@pytest.mark.parametrize("mu", [0.0, 0.5])
def test_newton_recovers_coboundary(mu):
    rng = np.random.default_rng(37)
    A = heisenberg()
    p = golden_params()
    combined = p.replace(mu=mu)
    H0 = _zero_avg_field(rng)
    eps = 1e-3
    omega = vf_delta0(A, combined, _field_scale(H0, eps))
    coords, H, residual = newton_step(
        A, p, mu, omega, golden_witnesses(), threshold=10.0
    )
    assert np.max(np.abs(coords.vector)) < 1e-12
    for got, want in zip(H.y + H.z, H0.y + H0.z):
        assert norm_diff(got, want.scaled(eps)) < 1e-9 * eps
    assert residual < 1e5 * eps**2


def _field_scale(F, s):
    return VfField(
        tuple(h.scaled(s) for h in F.y), tuple(h.scaled(s) for h in F.z)
    )


def _vf_add(a, b):
    return VfCochain(
        VfField(
            tuple(x.add(y) for x, y in zip(a.x1.y, b.x1.y)),
            tuple(x.add(y) for x, y in zip(a.x1.z, b.x1.z)),
        ),
        VfField(
            tuple(x.add(y) for x, y in zip(a.x2.y, b.x2.y)),
            tuple(x.add(y) for x, y in zip(a.x2.z, b.x2.z)),
        ),
    )


def test_newton_residual_quadratic():
    rng = np.random.default_rng(41)
    A = heisenberg()
    p = golden_params()
    wit = golden_witnesses()
    H0 = _zero_avg_field(rng)
    sizes = np.logspace(-4, -2, 5)
    residuals = []
    for eps in sizes:
        omega = vf_delta0(A, p, _field_scale(H0, eps))
        _, _, residual = newton_step(A, p, 0.0, omega, wit, threshold=10.0)
        residuals.append(residual)
    slope = np.polyfit(np.log(sizes), np.log(residuals), 1)[0]
    assert 1.7 <= slope <= 2.3
    ratios = np.array(residuals) / sizes**2
    assert np.max(ratios) <= 1.3 * np.min(ratios)


def test_newton_mixed_input():
    rng = np.random.default_rng(43)
    A = heisenberg()
    p = golden_params()
    wit = golden_witnesses()
    H0 = _zero_avg_field(rng)
    coords0 = FamilyCoordinates(0.6, (0.3, -0.2, 0.45))
    sizes = np.logspace(-4, -2, 5)
    residuals = []
    for eps in sizes:
        scaled0 = FamilyCoordinates(
            eps * coords0.mu1, tuple(eps * x for x in coords0.lam)
        )
        omega = _vf_add(
            section_s(p, 0.0, scaled0),
            vf_delta0(A, p, _field_scale(H0, eps)),
        )
        coords, H, residual = newton_step(A, p, 0.0, omega, wit, threshold=10.0)
        assert np.allclose(coords.vector, scaled0.vector, atol=1e-12)
        for got, want in zip(H.y + H.z, H0.y + H0.z):
            assert norm_diff(got, want.scaled(eps)) < 1e-8 * eps
        residuals.append(residual)
    slope = np.polyfit(np.log(sizes), np.log(residuals), 1)[0]
    assert 1.7 <= slope <= 2.3


def test_newton_threshold():
    rng = np.random.default_rng(47)
    A = heisenberg()
    p = golden_params()
    omega = VfCochain(rand_field(rng, scale=5.0), rand_field(rng, scale=5.0))
    with pytest.raises(ThresholdExceeded):
        newton_step(A, p, 0.0, omega)


def test_bracket_requires_heisenberg_shape():
    from nilflow.algebra import TwoStepAlgebra
    from fractions import Fraction

    A3 = TwoStepAlgebra(3, 1, [[[Fraction(0)] for _ in range(3)] for _ in range(3)])
    U = VfField(tuple(NilFunction() for _ in range(3)), (NilFunction(),))
    with pytest.raises(DimensionMismatch):
        vf_bracket(A3, U, U)
