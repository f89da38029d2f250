"""Truncated Fourier analysis on the n-torus.

Functions are finite sums f(x) = sum_k c_k exp(2 pi i k.x) stored as sparse
coefficient maps.  The module provides the directional-derivative solver that
divides by the small divisors 2 pi i k.alpha, Sobolev norms, time averages
along linear flows, pseudo-spectral pullback of vector fields under
near-identity diffeomorphisms id + u, and the Newton conjugacy iteration that
flattens a perturbed constant field back to its linear model.

Conventions: enumeration degree is the sup norm of k; composition samples on
an equispaced grid of at least 4K points per dimension and re-expands through
the FFT, keeping modes up to twice the input degree before smoothing.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diophantine import fit_witness
from .errors import (
    DimensionMismatch,
    EmptyCorpus,
    NoConvergence,
    NonInvertible,
    NonzeroAverage,
    Resonance,
)

_EPS = np.finfo(float).eps

# coefficients below this relative size are discarded when re-expanding
_DROP = 1e-16


def _divisor_floor(k, alpha):
    # |k.alpha| at or below roundoff of the dot product counts as resonant
    return 8 * _EPS * sum(abs(ki * ai) for ki, ai in zip(k, alpha))


class TorusFunction:
    """Band-limited function on T^n held as a sparse frequency-coefficient map.

    When ``real`` is set the stored coefficients are symmetrized so that
    coeff(-k) is exactly the conjugate of coeff(k).
    """

    def __init__(self, n, coeffs=None, real=False):
        if n < 1:
            raise DimensionMismatch("need n >= 1")
        self.n = int(n)
        self.real = bool(real)
        clean = {}
        for k, c in (coeffs or {}).items():
            k = tuple(int(x) for x in k)
            if len(k) != self.n:
                raise DimensionMismatch("frequency length must equal n")
            c = complex(c)
            if c != 0:
                clean[k] = clean.get(k, 0) + c
        if self.real:
            sym = {}
            for k, c in clean.items():
                neg = tuple(-x for x in k)
                sym[k] = (c + clean.get(neg, 0).conjugate()) / 2
            scale = max((abs(c) for c in clean.values()), default=0.0)
            for k, c in sym.items():
                if abs(c - clean[k]) > 1e-8 * max(1.0, scale):
                    raise ValueError("coefficients violate the reality constraint")
            clean = {k: c for k, c in sym.items() if c != 0}
        self.coeffs = clean

    @classmethod
    def constant(cls, n, value, real=None):
        if real is None:
            real = abs(complex(value).imag) == 0
        return cls(n, {(0,) * n: value}, real=real)

    @property
    def degree(self):
        return max((max(abs(x) for x in k) for k in self.coeffs), default=0)

    def coeff(self, k):
        return self.coeffs.get(tuple(k), 0j)

    @property
    def average(self):
        c = self.coeffs.get((0,) * self.n, 0j)
        return c.real if self.real else c

    def __add__(self, other):
        if isinstance(other, TorusFunction):
            if other.n != self.n:
                raise DimensionMismatch("dimension mismatch")
            out = dict(self.coeffs)
            for k, c in other.coeffs.items():
                out[k] = out.get(k, 0) + c
            return TorusFunction(self.n, out, real=self.real and other.real)
        return self + TorusFunction.constant(self.n, other)

    def __sub__(self, other):
        return self + (other * -1 if isinstance(other, TorusFunction) else -other)

    def __mul__(self, scalar):
        scalar = complex(scalar)
        return TorusFunction(
            self.n,
            {k: c * scalar for k, c in self.coeffs.items()},
            real=self.real and scalar.imag == 0,
        )

    __rmul__ = __mul__

    def partial(self, axis):
        """d/dx_axis, acting as multiplication by 2 pi i k_axis."""
        return TorusFunction(
            self.n,
            {k: 2j * math.pi * k[axis] * c for k, c in self.coeffs.items()},
            real=self.real,
        )

    def truncated(self, degree, drop_below=0.0):
        """Drop modes beyond the sup-norm degree and, optionally, coefficients
        below drop_below relative to the largest one.  The zero mode is kept."""
        floor = drop_below * max((abs(c) for c in self.coeffs.values()), default=0.0)
        zero = (0,) * self.n
        out = {
            k: c
            for k, c in self.coeffs.items()
            if (max(map(abs, k), default=0) <= degree and abs(c) > floor) or k == zero
        }
        return TorusFunction(self.n, out, real=self.real)

    def evaluate(self, points):
        """Values at an (..., n) array of points, by direct mode summation."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.n:
            raise DimensionMismatch("points must have trailing dimension n")
        vals = np.zeros(pts.shape[:-1], dtype=complex)
        for k, c in self.coeffs.items():
            vals += c * np.exp(2j * np.pi * (pts @ np.asarray(k, dtype=float)))
        return vals.real if self.real else vals

    def grid_values(self, G):
        """Values on the equispaced G^n grid via the inverse FFT."""
        arr = np.zeros((G,) * self.n, dtype=complex)
        for k, c in self.coeffs.items():
            arr[tuple(ki % G for ki in k)] += c
        vals = np.fft.ifftn(arr) * G**self.n
        return vals.real if self.real else vals

    @classmethod
    def from_grid(cls, values, degree, real=None, drop_below=0.0):
        """Re-expand equispaced samples; keeps modes with sup norm <= degree,
        discarding coefficients below drop_below relative to the largest one.
        Alias-free for band-limited data when every axis has > 2*degree points."""
        values = np.asarray(values)
        if real is None:
            real = not np.iscomplexobj(values)
        n = values.ndim
        if min(values.shape) <= 2 * degree:
            raise DimensionMismatch("grid too coarse for the requested degree")
        C = np.fft.fftn(values) / values.size
        window = np.arange(-degree, degree + 1)
        block = C[np.ix_(*[window % s for s in values.shape])]
        floor = drop_below * float(np.max(np.abs(block)))
        coeffs = {}
        for idx in np.argwhere(np.abs(block) > floor):
            k = tuple(int(i) - degree for i in idx)
            coeffs[k] = complex(block[tuple(idx)])
        if real:
            # exact symmetrization absorbs FFT roundoff
            sym = {}
            for k, c in coeffs.items():
                neg = tuple(-x for x in k)
                sym[k] = (c + coeffs.get(neg, 0).conjugate()) / 2
            coeffs = sym
        return cls(n, coeffs, real=real)

    def __repr__(self):
        return "TorusFunction(n=%d, modes=%d, degree=%d%s)" % (
            self.n,
            len(self.coeffs),
            self.degree,
            ", real" if self.real else "",
        )


class TorusVectorField:
    """Vector field on T^n with TorusFunction components."""

    def __init__(self, components):
        comps = tuple(components)
        if not comps:
            raise DimensionMismatch("need at least one component")
        n = comps[0].n
        if any(c.n != n for c in comps):
            raise DimensionMismatch("components live on different tori")
        self.components = comps
        self.n = n

    @classmethod
    def constant(cls, values):
        values = tuple(values)
        n = len(values)
        return cls([TorusFunction.constant(n, v) for v in values])

    @classmethod
    def zero(cls, n):
        return cls.constant((0.0,) * n)

    @property
    def degree(self):
        return max(c.degree for c in self.components)

    def average(self):
        return tuple(c.average for c in self.components)

    def is_zero(self):
        return all(not c.coeffs for c in self.components)

    def __add__(self, other):
        return TorusVectorField(
            [a + b for a, b in zip(self.components, other.components)]
        )

    def __sub__(self, other):
        return TorusVectorField(
            [a - b for a, b in zip(self.components, other.components)]
        )

    def __mul__(self, scalar):
        return TorusVectorField([c * scalar for c in self.components])

    __rmul__ = __mul__

    def shifted(self, values):
        """Add a constant vector."""
        return TorusVectorField(
            [c + TorusFunction.constant(self.n, v) for c, v in zip(self.components, values)]
        )

    def truncated(self, degree, drop_below=0.0):
        return TorusVectorField(
            [c.truncated(degree, drop_below) for c in self.components]
        )

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        out = np.stack([np.real(c.evaluate(pts)) for c in self.components], axis=-1)
        return out

    def __repr__(self):
        return "TorusVectorField(n=%d, degree=%d)" % (self.n, self.degree)


def directional_derivative(alpha, f):
    """Derivative along the constant field alpha: multiplication of each
    coefficient by 2 pi i (k.alpha)."""
    alpha = tuple(float(a) for a in alpha)
    if len(alpha) != f.n:
        raise DimensionMismatch("alpha must have length n")
    return TorusFunction(
        f.n,
        {
            k: 2j * math.pi * sum(ki * ai for ki, ai in zip(k, alpha)) * c
            for k, c in f.coeffs.items()
        },
        real=f.real,
    )


def solve_small_divisor(alpha, f, tol_avg=1e-12):
    """Solve alpha.grad h = f - mean(f) by dividing by 2 pi i (k.alpha).

    The input average must already be below tol_avg; the zero mode of the
    solution is fixed to 0.
    """
    alpha = tuple(float(a) for a in alpha)
    if len(alpha) != f.n:
        raise DimensionMismatch("alpha must have length n")
    zero = (0,) * f.n
    avg = f.coeffs.get(zero, 0j)
    if abs(avg) > tol_avg:
        raise NonzeroAverage(
            "average %r exceeds tolerance %g" % (avg, tol_avg), obstruction=avg
        )
    out = {}
    for k, c in f.coeffs.items():
        if k == zero:
            continue
        ka = sum(ki * ai for ki, ai in zip(k, alpha))
        if abs(ka) <= _divisor_floor(k, alpha):
            raise Resonance("resonant frequency %r for alpha %r" % (k, alpha), mode=k)
        out[k] = c / (2j * math.pi * ka)
    return TorusFunction(f.n, out, real=f.real)


def sobolev_norm(f, r):
    """(sum |c_k|^2 (1 + |k|^2)^r)^(1/2); vector fields aggregate in l2."""
    if isinstance(f, TorusVectorField):
        return math.sqrt(sum(sobolev_norm(c, r) ** 2 for c in f.components))
    total = 0.0
    for k, c in f.coeffs.items():
        w = 1.0 + sum(x * x for x in k)
        total += abs(c) ** 2 * w**r
    return math.sqrt(total)


def tame_ratio_report(alpha, corpus, r, sigma, degrees=None):
    """Solve the derivative equation for every corpus member and report the
    worst ratio ||h||_r / ||f||_{r+sigma}.

    With ``degrees`` (an increasing list of truncation degrees) each member is
    additionally truncated to every degree, and the report records the worst
    ratio per degree plus a plateau flag: consecutive worst ratios within 10%.
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("tame ratio needs at least one function")
    alpha = tuple(float(a) for a in alpha)

    def ratio(f):
        h = solve_small_divisor(alpha, f)
        denom = sobolev_norm(f, r + sigma)
        if denom == 0:
            return 0.0
        return sobolev_norm(h, r) / denom

    ratios = [ratio(f) for f in corpus]
    report = {
        "r": float(r),
        "sigma": float(sigma),
        "count": len(corpus),
        "ratios": ratios,
        "ratio_max": max(ratios),
        "degree_max": max(f.degree for f in corpus),
        "by_degree": None,
        "plateau_ok": None,
    }
    if degrees:
        by_degree = {}
        for D in degrees:
            worst = 0.0
            for f in corpus:
                ft = f.truncated(D)
                if ft.coeffs:
                    worst = max(worst, ratio(ft))
            by_degree[int(D)] = worst
        report["by_degree"] = by_degree
        vals = [by_degree[int(D)] for D in degrees]
        report["plateau_ok"] = all(
            abs(b - a) < 0.10 * max(abs(a), abs(b), 1e-300)
            for a, b in zip(vals, vals[1:])
        )
    return report


def _grid_points(n, G):
    xs = np.arange(G) / G
    mesh = np.meshgrid(*([xs] * n), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, n)


def _displacement_arrays(u, G):
    """Grid values of u and of its Jacobian: shapes (G^n, n) and (G^n, n, n)."""
    n = u.n
    U = np.stack(
        [np.real(c.grid_values(G)).reshape(-1) for c in u.components], axis=-1
    )
    J = np.empty((G**n, n, n))
    for i, c in enumerate(u.components):
        for j in range(n):
            J[:, i, j] = np.real(c.partial(j).grid_values(G)).reshape(-1)
    return U, J


def _check_invertible(U, J):
    sup_u = float(np.max(np.abs(U))) if U.size else 0.0
    sup_j = float(np.max(np.sum(np.abs(J), axis=2))) if J.size else 0.0
    if sup_u >= 0.5:
        raise NonInvertible("displacement sup-norm %.3g >= 1/2" % sup_u)
    if sup_j >= 0.5:
        raise NonInvertible("Jacobian sup-norm %.3g >= 1/2" % sup_j)


def pullback_field(u, X, out_degree=None, grid_factor=4):
    """Pull back the field X under the diffeomorphism id + u.

    Pseudo-spectral: evaluates (I + Du)^-1 X(x + u(x)) on an equispaced grid
    with at least ``grid_factor`` times the input degree points per dimension
    and re-expands, keeping twice the input degree unless out_degree is given.
    """
    if u.n != X.n:
        raise DimensionMismatch("u and X live on different tori")
    n = X.n
    K_in = max(u.degree, X.degree, 1)
    if out_degree is None:
        out_degree = 2 * K_in
    G = max(grid_factor * K_in, 2 * out_degree + 2, 8)
    if G**n > 4e7:
        raise DimensionMismatch("composition grid too large (G=%d, n=%d)" % (G, n))
    pts = _grid_points(n, G)
    U, J = _displacement_arrays(u, G)
    _check_invertible(U, J)
    A = np.eye(n)[None, :, :] + J
    rhs = X.evaluate(pts + U)
    y = np.linalg.solve(A, rhs[..., None])[..., 0]
    comps = [
        TorusFunction.from_grid(y[:, i].reshape((G,) * n), out_degree, real=True)
        for i in range(n)
    ]
    return TorusVectorField(comps)


def _compose_displacement(u_new, u_acc, out_degree, grid_factor=4):
    """Displacement of (id + u_acc) o (id + u_new): u_new + u_acc(x + u_new)."""
    n = u_new.n
    K_in = max(u_new.degree, u_acc.degree, 1)
    G = max(grid_factor * K_in, 2 * out_degree + 2, 8)
    pts = _grid_points(n, G)
    U_new = np.stack(
        [np.real(c.grid_values(G)).reshape(-1) for c in u_new.components], axis=-1
    )
    W = U_new + u_acc.evaluate(pts + U_new)
    comps = [
        TorusFunction.from_grid(
            W[:, i].reshape((G,) * n), out_degree, real=True, drop_below=_DROP
        )
        for i in range(n)
    ]
    return TorusVectorField(comps)


@dataclass
class KamState:
    """State of the Newton conjugacy iteration.

    The invariant maintained by every step: pulling back the constant field
    (omega - lambda_bar) + beta0 under id + u_acc equals the constant field
    omega plus beta_cur, up to the recorded truncation.
    """

    omega: tuple
    beta0: TorusVectorField
    beta_cur: TorusVectorField
    lambda_bar: tuple
    u_acc: TorusVectorField
    residual_history: list = field(default_factory=list)
    residual_history_r2: list = field(default_factory=list)
    trunc_degree: int = 64
    verified_sup_error: float = None

    @classmethod
    def initial(cls, omega, beta, trunc_degree=64):
        omega = tuple(float(w) for w in omega)
        if isinstance(beta, (list, tuple)):
            beta = TorusVectorField(beta)
        if beta.n != len(omega):
            raise DimensionMismatch("omega and beta dimensions disagree")
        return cls(
            omega=omega,
            beta0=beta,
            beta_cur=beta,
            lambda_bar=(0.0,) * len(omega),
            u_acc=TorusVectorField.zero(len(omega)),
            residual_history=[sobolev_norm(beta, 0)],
            residual_history_r2=[sobolev_norm(beta, 2)],
            trunc_degree=int(trunc_degree),
        )

    @property
    def residual(self):
        return self.residual_history[-1]


def kam_step(state):
    """One Newton step: shift the parameter by the current average, solve the
    derivative equation for the coordinate change, compose, and recompute the
    residual by pulling the original field back under the accumulated change."""
    beta = state.beta_cur
    omega = np.asarray(state.omega)
    n = len(state.omega)
    if beta.is_zero():
        return replace(
            state,
            residual_history=state.residual_history + [0.0],
            residual_history_r2=state.residual_history_r2 + [0.0],
        )
    K = state.trunc_degree

    avg = beta.average()
    beta_p = beta.shifted(tuple(-a for a in avg))
    if beta_p.is_zero() and state.u_acc.is_zero():
        # constant perturbation, untouched coordinates: a pure parameter shift
        return replace(
            state,
            beta_cur=TorusVectorField.zero(n),
            lambda_bar=tuple(
                float(l + a) for l, a in zip(state.lambda_bar, avg)
            ),
            residual_history=state.residual_history + [0.0],
            residual_history_r2=state.residual_history_r2 + [0.0],
        )
    scale = max(sobolev_norm(beta, 0), 1e-300)
    u_new = TorusVectorField(
        [
            solve_small_divisor(state.omega, c, tol_avg=1e-10 * scale)
            for c in beta_p.components
        ]
    )

    if state.u_acc.is_zero():
        u_tot = u_new.truncated(K, _DROP)
    else:
        u_tot = _compose_displacement(u_new, state.u_acc, 2 * K).truncated(K, _DROP)

    # pull the original member back under the accumulated change; the
    # parameter increment is solved exactly against the averaged Jacobian.
    # The expansion window is twice the schedule degree so the measured
    # residual is not an artifact of the truncation.
    out_degree = 2 * K
    G = max(4 * K, 2 * out_degree + 2, 8)
    pts = _grid_points(n, G)
    U, J = _displacement_arrays(u_tot, G)
    _check_invertible(U, J)
    Minv = np.linalg.inv(np.eye(n)[None, :, :] + J)
    source = (omega - np.asarray(state.lambda_bar))[None, :] + state.beta0.evaluate(
        pts + U
    )
    P = np.einsum("pij,pj->pi", Minv, source)
    # axis-0 reductions accumulate sequentially and drift ~N*eps; per-column
    # pairwise means keep the average kill at rounding level
    avg_M = np.array([[Minv[:, i, j].mean() for j in range(n)] for i in range(n)])
    P_avg = np.array([P[:, i].mean() for i in range(n)])
    d_lambda = np.linalg.solve(avg_M, P_avg - omega)
    lam = tuple(float(x) for x in np.asarray(state.lambda_bar) + d_lambda)
    G_vals = P - Minv @ d_lambda
    beta_vals = G_vals - omega[None, :]
    beta_next = TorusVectorField(
        [
            TorusFunction.from_grid(
                beta_vals[:, i].reshape((G,) * n), out_degree, real=True, drop_below=_DROP
            )
            for i in range(n)
        ]
    ).truncated(K, _DROP)

    return replace(
        state,
        beta_cur=beta_next,
        lambda_bar=lam,
        u_acc=u_tot,
        residual_history=state.residual_history + [sobolev_norm(beta_next, 0)],
        residual_history_r2=state.residual_history_r2 + [sobolev_norm(beta_next, 2)],
    )


def verify_conjugacy(state, grid_factor=4):
    """Sup-norm distance, on a dense grid, between the pullback of the member
    field (omega - lambda_bar) + beta0 under id + u_acc and the target omega."""
    n = len(state.omega)
    K_in = max(state.u_acc.degree, state.beta0.degree, 1)
    G = max(grid_factor * K_in, 32) + 1  # off the dyadic grid used internally
    pts = _grid_points(n, G)
    U, J = _displacement_arrays(state.u_acc, G)
    A = np.eye(n)[None, :, :] + J
    omega = np.asarray(state.omega)
    source = (omega - np.asarray(state.lambda_bar))[None, :] + state.beta0.evaluate(
        pts + U
    )
    vals = np.linalg.solve(A, source[..., None])[..., 0]
    return float(np.max(np.abs(vals - omega[None, :])))


def kam_iterate(omega, beta, max_iter=10, floor=1e-12, trunc_degree=64):
    """Iterate kam_step until the residual drops below floor.

    Raises NoConvergence when the residual stalls (less than a factor-2 drop),
    grows, the iteration budget runs out, or a step leaves the invertibility
    region; the partial state rides on the exception.  On success the final
    conjugacy is re-verified on a dense grid within 10*floor.
    """
    state = KamState.initial(omega, beta, trunc_degree)
    w = fit_witness(state.omega, gamma=1.0, K=min(trunc_degree, 256))
    if not w.valid:
        raise Resonance(
            "omega %r is resonant up to degree %d" % (state.omega, w.K),
            mode=w.argmin_k,
        )
    for _ in range(max_iter):
        if state.residual < floor:
            break
        prev = state.residual
        try:
            state = kam_step(state)
        except (NonInvertible, Resonance) as exc:
            raise NoConvergence("step failed: %s" % exc, state=state) from exc
        if state.residual >= 0.5 * prev:
            raise NoConvergence(
                "residual stalled at %.3g (previous %.3g)" % (state.residual, prev),
                state=state,
            )
    if state.residual >= floor:
        raise NoConvergence(
            "residual %.3g above floor %.3g after %d iterations"
            % (state.residual, floor, max_iter),
            state=state,
        )
    err = verify_conjugacy(state)
    if err > 10 * floor:
        raise NoConvergence(
            "conjugacy verification error %.3g exceeds %.3g" % (err, 10 * floor),
            state=state,
        )
    state.verified_sup_error = err
    return state


def birkhoff_average(alpha, f, x0, T, steps=1):
    """Time average (1/T) int_0^T f(x0 + t alpha) dt, mode by mode in closed
    form.  ``steps`` splits [0, T] into equal windows whose exact window
    averages are combined; the result is independent of steps up to roundoff.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if T <= 0:
        raise ValueError("T must be positive")
    alpha = np.asarray(alpha, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if alpha.shape != (f.n,) or x0.shape != (f.n,):
        raise DimensionMismatch("alpha and x0 must have length n")
    dt = T / steps
    total = 0j
    for w in range(steps):
        xw = x0 + (w * dt) * alpha
        for k, c in f.coeffs.items():
            ka = float(np.dot(k, alpha))
            phase = c * np.exp(2j * np.pi * np.dot(k, xw))
            if abs(ka) <= _divisor_floor(k, alpha):
                total += phase
            else:
                z = 2j * np.pi * ka * dt
                total += phase * (np.exp(z) - 1.0) / z
    avg = total / steps
    return float(avg.real) if f.real else complex(avg)
