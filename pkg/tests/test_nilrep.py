import math

import numpy as np
import pytest

from nilflow.errors import DimensionMismatch, EmptyCorpus, FormatError
from nilflow.algebra import ActionParams
from nilflow.nilrep import (
    NilFunction,
    RepOperator,
    apply_X1,
    apply_X2,
    cg_decay_report,
    dpi_apply,
    load_nil_function,
    nil_sobolev_norm,
    parse_nil_function,
    pi_norm,
    serialize_nil_function,
)
from nilflow.torus import TorusFunction

PHI = (1 + math.sqrt(5)) / 2


# ---------------------------------------------------------------------------
# quadrature oracle: matrix elements of x and d/dx between explicit Hermite
# functions h_j(x) = H_j(x) exp(-x^2/2) / sqrt(2^j j! sqrt(pi)), integrated
# with Gauss-Hermite nodes (exact for the polynomial integrands involved)


def _oracle_matrices(size):
    from numpy.polynomial import hermite as H

    nodes, weights = H.hermgauss(size + 8)
    vals = np.zeros((size, len(nodes)))
    dvals = np.zeros((size, len(nodes)))
    for j in range(size):
        c = np.zeros(j + 1)
        c[j] = 1.0 / math.sqrt(2.0**j * math.factorial(j) * math.sqrt(math.pi))
        vals[j] = H.hermval(nodes, c)
        dc = H.hermder(c) if j > 0 else np.zeros(1)
        dvals[j] = H.hermval(nodes, dc)
    x_mat = np.einsum("il,l,jl->ij", vals, weights * nodes, vals)
    d_mat = np.einsum("il,l,jl->ij", vals, weights, dvals - nodes * vals)
    return x_mat, d_mat


def test_position_matrix_matches_quadrature():
    size = 10
    x_mat, _ = _oracle_matrices(size)
    ladder = RepOperator.generator("Y2", 1, size).matrix() / (2j * np.pi)
    assert np.max(np.abs(ladder - x_mat)) < 1e-12


def test_derivative_matrix_matches_quadrature():
    size = 10
    _, d_mat = _oracle_matrices(size)
    ladder = RepOperator.generator("Y1", 1, size).matrix()
    assert np.max(np.abs(ladder - d_mat)) < 1e-12


def test_position_on_ground_state():
    out = dpi_apply("Y2", 1, np.array([1.0])) / (2j * np.pi)
    assert np.allclose(out, [0.0, 1.0 / math.sqrt(2)], atol=1e-15)


def test_derivative_on_ground_state():
    out = dpi_apply("Y1", 1, np.array([1.0]))
    assert np.allclose(out, [0.0, -1.0 / math.sqrt(2)], atol=1e-15)


def test_center_acts_by_scalar():
    rng = np.random.default_rng(11)
    for n in (1, -4, 7):
        v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        assert np.allclose(dpi_apply("Z", n, v), 2j * np.pi * n * v, rtol=0, atol=0)


def test_unknown_generator_rejected():
    with pytest.raises(ValueError):
        dpi_apply("Q", 1, np.array([1.0]))
    with pytest.raises(ValueError):
        dpi_apply("Y1", 0, np.array([1.0]))
    with pytest.raises(ValueError):
        RepOperator.generator("W", 2, 4)


def test_ladder_output_has_headroom():
    v = np.ones(5)
    assert len(dpi_apply("Y1", 2, v)) == 6
    assert len(dpi_apply("Y2", 2, v)) == 6
    assert len(dpi_apply("Z", 2, v)) == 5


def test_generator_matrices_skew_adjoint():
    for gen in ("Y1", "Y2", "Z"):
        m = RepOperator.generator(gen, 3, 12).matrix()
        interior = (m + m.conj().T)[:-2, :-2]
        assert np.max(np.abs(interior)) < 1e-12


def test_heisenberg_commutation_relation():
    rng = np.random.default_rng(5)
    for n in (1, -3):
        v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        a = dpi_apply("Y1", n, dpi_apply("Y2", n, v))
        b = dpi_apply("Y2", n, dpi_apply("Y1", n, v))
        comm = a - b
        expected = np.zeros(len(comm), dtype=complex)
        expected[: len(v)] = 2j * np.pi * n * v
        scale = 2 * np.pi * abs(n) * np.max(np.abs(v))
        assert np.max(np.abs(comm - expected)) < 1e-12 * scale


def test_rep_operator_apply_matches_matrix():
    rng = np.random.default_rng(3)
    op = RepOperator(2, 9, y=(0.7, -0.3), z=0.2)
    v = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    assert np.allclose(op.apply(v), op.matrix() @ v, atol=1e-13)
    with pytest.raises(DimensionMismatch):
        op.apply(np.ones(4))


# ---------------------------------------------------------------------------
# flow generator actions


def _params(alpha=(1.0, PHI), beta=1.0 / 3.0, mu=0.0):
    return ActionParams(alpha=alpha, beta=(beta,), mu=mu)


def test_flow_generators_kill_constants():
    F = NilFunction.constant(3.0)
    p = _params()
    assert apply_X1(p, F).is_zero()
    assert apply_X2(p, F).is_zero()


def test_second_generator_is_scalar_on_rep_mode():
    p = _params(beta=0.25)
    F = NilFunction(reps={(1, 0): np.array([1.0, 0.5])})
    G = apply_X2(p, F)
    assert not G.toral.coeffs
    assert np.allclose(G.rep(1), 2j * np.pi * 0.25 * np.array([1.0, 0.5]), atol=0)


def test_first_generator_is_directional_derivative_on_toral():
    p = _params()
    F = NilFunction(toral=TorusFunction(2, {(2, -1): 1.5}))
    G = apply_X1(p, F)
    assert G.toral.coeff((2, -1)) == pytest.approx(
        2j * np.pi * (2 * 1.0 - 1 * PHI) * 1.5
    )
    assert not G.reps


def _random_nil_function(rng, length=5):
    toral = TorusFunction(
        2,
        {
            (1, 0): rng.standard_normal() + 1j * rng.standard_normal(),
            (0, 2): rng.standard_normal() + 1j * rng.standard_normal(),
        },
    )
    reps = {
        (1, 0): rng.standard_normal(length) + 1j * rng.standard_normal(length),
        (-2, 1): rng.standard_normal(length) + 1j * rng.standard_normal(length),
    }
    return NilFunction(toral=toral, reps=reps)


@pytest.mark.parametrize("mu", [0.0, 0.5])
def test_flow_generators_commute(mu):
    rng = np.random.default_rng(17)
    p = _params(mu=mu)
    F = _random_nil_function(rng)
    a = apply_X1(p, apply_X2(p, F))
    b = apply_X2(p, apply_X1(p, F))
    diff = a.sub(b)
    scale = max(nil_sobolev_norm(F, 0), 1e-300) * (2 * np.pi * 2) ** 2
    assert nil_sobolev_norm(diff, 0) < 1e-12 * scale


# ---------------------------------------------------------------------------
# norms


def test_sobolev_norm_of_constant():
    assert nil_sobolev_norm(NilFunction.constant(1.0), 3.0) == pytest.approx(1.0)


def test_sobolev_norm_single_rep_mode():
    for n, j, r in [(1, 0, 2.0), (-3, 4, 1.0), (2, 2, 0.0)]:
        v = np.zeros(j + 1, dtype=complex)
        v[j] = 0.7j
        F = NilFunction(reps={(n, 0): v})
        w = 1.0 + n * n + abs(n) * (2 * j + 1)
        assert nil_sobolev_norm(F, r) == pytest.approx(0.7 * w ** (r / 2.0))


def test_sobolev_norm_monotone_in_order():
    rng = np.random.default_rng(23)
    F = _random_nil_function(rng)
    norms = [nil_sobolev_norm(F, r) for r in (0.0, 1.0, 2.0, 3.5)]
    for a, b in zip(norms, norms[1:]):
        assert b >= a


def test_rep_norm_weight_via_pi_norm():
    assert pi_norm(1) == 1.0
    assert pi_norm(-5) == 5.0
    with pytest.raises(ValueError):
        pi_norm(0)


def test_pi_norm_matches_hyperplane_distance():
    # distance from {lambda(Z) = n} to the origin, minimized over a grid
    for n in (1, -3):
        ys = np.linspace(-5 * abs(n), 5 * abs(n), 201)
        y1, y2 = np.meshgrid(ys, ys)
        dist = np.sqrt(y1**2 + y2**2 + float(n) ** 2)
        assert np.min(dist) == pytest.approx(pi_norm(n))


# ---------------------------------------------------------------------------
# component decay reports


def test_cg_single_mode_closed_form():
    n, j, s, k = 3, 2, 1.0, 2.0
    v = np.zeros(j + 1, dtype=complex)
    v[j] = 2.0
    F = NilFunction(reps={(n, 0): v})
    report = cg_decay_report([F], s, k)
    w = 1.0 + n * n + abs(n) * (2 * j + 1)
    assert report["ratio_max"] == pytest.approx(abs(n) ** k * w ** (-k / 2.0))
    assert report["ratio_max"] <= 1.0


def test_cg_toral_member_reported_vacuous():
    F = NilFunction(toral=TorusFunction(2, {(1, 1): 1.0, (-1, -1): 1.0}, real=True))
    report = cg_decay_report([F], 0.0, 2.0)
    assert report["vacuous"] == 1
    assert report["ratios"][0] is None
    assert report["ratio_max"] == 0.0


def test_cg_empty_corpus_rejected():
    with pytest.raises(EmptyCorpus):
        cg_decay_report([], 0.0, 2.0)


def test_cg_random_corpus_plateau():
    rng = np.random.default_rng(41)
    corpus = []
    for _ in range(6):
        reps = {}
        for n in range(1, 41):
            for sign in (1, -1):
                v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
                # decay fast enough that the worst ratio sits at small |n|
                weights = 1.0 + n * n + n * (2 * np.arange(3) + 1)
                reps[(sign * n, 0)] = v / weights**2
        corpus.append(NilFunction(reps=reps))
    report = cg_decay_report(corpus, 0.0, 2.0)
    assert report["n_max"] == 40
    assert report["plateau_ok"]
    assert report["ratio_max"] <= 1.0
    sums = dict(report["tail_sums"])
    assert sums[40] - sums[20] < sums[20] - sums[10]


# ---------------------------------------------------------------------------
# text format


def test_serialization_roundtrip():
    F = NilFunction(
        toral=TorusFunction(2, {(1, 2): 0.5 + 0.25j, (-1, -2): 0.5 - 0.25j}, real=True),
        reps={(2, 1): np.array([0.0, 1.0 - 0.5j]), (-1, 0): np.array([0.125j])},
    )
    text = serialize_nil_function(F)
    G = parse_nil_function(text)
    assert G.toral.coeffs == F.toral.coeffs
    assert G.toral.real
    assert set(G.reps) == set(F.reps)
    for key in F.reps:
        assert np.array_equal(G.reps[key], F.reps[key])


def test_parse_skips_comments_and_blanks():
    F = parse_nil_function("# header\n\ntoral 1 0 1.0 0.0  # trailing\n")
    assert F.toral.coeff((1, 0)) == 1.0


def test_parse_rejects_malformed_lines():
    with pytest.raises(FormatError) as exc:
        parse_nil_function("toral 1 0 1.0\n")
    assert exc.value.line == 1
    with pytest.raises(FormatError) as exc:
        parse_nil_function("toral 0 0 0.0 0.0\nbogus 1 2 3\n")
    assert exc.value.line == 2
    with pytest.raises(FormatError):
        parse_nil_function("rep 1 0 -1 1.0 0.0\n")


def test_parse_validates_copy_index_bound():
    with pytest.raises(FormatError):
        parse_nil_function("rep 2 2 0 1.0 0.0\n")
    with pytest.raises(FormatError):
        parse_nil_function("rep 0 0 0 1.0 0.0\n")


def test_load_from_file(tmp_path):
    path = tmp_path / "member.txt"
    path.write_text("toral 0 0 2.0 0.0\nrep 1 0 0 1.0 -1.0\n")
    F = load_nil_function(str(path))
    assert F.toral.average == 2.0
    assert F.rep(1)[0] == 1.0 - 1.0j


def test_nil_function_validates_copy_index():
    with pytest.raises(ValueError):
        NilFunction(reps={(1, 1): np.array([1.0])})
    with pytest.raises(ValueError):
        NilFunction(reps={(0, 0): np.array([1.0])})
    with pytest.raises(DimensionMismatch):
        NilFunction(toral=TorusFunction(3))
