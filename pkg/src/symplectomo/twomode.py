"""Two-mode marginals, kernels and reconstruction.

A two-mode vector quadrature is ``(X1, X2) = Lambda (q1, q2, p1, p2)^T +
(delta1, delta2)`` with the first two rows of the symplectic ``Lambda`` given
by ``(mu_vec, nu_vec)`` and ``(mu_p_vec, nu_p_vec)``.  The single-quadrature
("tilde") marginal uses only the first row.

Four-vectors follow the ordering ``(q1, q2, p1, p2)``; a setting row is the
four-vector ``u = (mu1, mu2, nu1, nu2)``.  Density-matrix indices are mode-1
major: ``(n1, n2) -> n1 * d2 + n2``.

The reconstruction formula ``rho = integral dx du  w K`` holds exactly when
the second row ``(mu_p, nu_p)`` is held constant while ``u`` sweeps the
plane, for any Fourier pair ``(z1, z2)`` (the z2-dependent phases cancel for
constant second row).  Physical joint tomograms constrain the pair to
commute, so tabulated vector tomograms are reduced to their tilde marginal
first; the z2 path is exposed for analytic-state input, where the
quasi-joint characteristic function is available for every pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    DegenerateConfig,
    DegenerateSetting,
    GridTooNarrow,
    InvalidParameter,
    NonzeroMeansUnsupported,
    NotSymplectic,
    UnsupportedVariant,
)
from .kernels import KernelScale, displacement_matrix
from .reconstruct import ReconstructionReport, _finish, _radial_nodes, _trapezoid_weights
from . import states as st

__all__ = [
    "TwoModeSetting",
    "TwoModeTomogram",
    "symplectic_sigma",
    "complete_symplectic",
    "tilde_marginal_gaussian",
    "tilde_marginal_cat",
    "tilde_marginal",
    "tilde_marginal_numeric",
    "vector_marginal_numeric",
    "characteristic_two_mode",
    "wigner_moment_numeric",
    "kernel_two_mode_number",
    "hopf_directions",
    "tabulate_tilde_tomogram",
    "TwoModeConfig",
    "reconstruct_two_mode",
    "reconstruct_two_mode_vector",
    "partial_trace",
]


def symplectic_sigma() -> np.ndarray:
    """Canonical form on (q1, q2, p1, p2)."""
    s = np.zeros((4, 4))
    s[0, 2] = s[1, 3] = 1.0
    s[2, 0] = s[3, 1] = -1.0
    return s


_SIGMA = symplectic_sigma()


@dataclass(frozen=True)
class TwoModeSetting:
    """Measured two-mode quadrature directions.

    ``mu``/``nu`` give the first quadrature ``X1``; ``mu_p``/``nu_p`` are
    optional and, when present, give the second quadrature of a vector
    tomogram.  Vector pairs must commute: ``u1 sigma u2^T = 0``.
    """

    mu: np.ndarray
    nu: np.ndarray
    mu_p: np.ndarray | None = None
    nu_p: np.ndarray | None = None
    delta: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        mu = _frozen_vec(self.mu)
        nu = _frozen_vec(self.nu)
        delta = _frozen_vec(self.delta)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "delta", delta)
        if float(mu @ mu + nu @ nu) == 0.0:
            raise DegenerateSetting("two-mode setting needs |mu|^2 + |nu|^2 > 0")
        if (self.mu_p is None) != (self.nu_p is None):
            raise InvalidParameter("mu_p and nu_p must be given together")
        if self.mu_p is not None:
            mu_p = _frozen_vec(self.mu_p)
            nu_p = _frozen_vec(self.nu_p)
            object.__setattr__(self, "mu_p", mu_p)
            object.__setattr__(self, "nu_p", nu_p)
            u1, u2 = self.row1, self.row2
            comm = float(u1 @ _SIGMA @ u2)
            scale = max(np.linalg.norm(u1) * np.linalg.norm(u2), 1e-300)
            if abs(comm) > 1e-10 * scale:
                raise NotSymplectic(f"X1 and X2 do not commute: u1 sigma u2^T = {comm:.3g}")

    @property
    def row1(self) -> np.ndarray:
        return np.concatenate([self.mu, self.nu])

    @property
    def row2(self) -> np.ndarray:
        if self.mu_p is None:
            raise InvalidParameter("tilde-only setting has no second quadrature")
        return np.concatenate([self.mu_p, self.nu_p])

    @property
    def is_vector(self) -> bool:
        return self.mu_p is not None

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.row1))


def _frozen_vec(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(2).copy()
    if not np.all(np.isfinite(arr)):
        raise InvalidParameter("setting components must be finite")
    arr.flags.writeable = False
    return arr


def complete_symplectic(setting: TwoModeSetting) -> np.ndarray:
    """Deterministic completion of the X rows to a full symplectic Lambda.

    Rows 3 and 4 are the minimum-norm solutions of the canonical pairing
    constraints (a symplectic Gram-Schmidt); the result is verified to
    satisfy ``Lambda sigma Lambda^T = sigma`` to 1e-10.
    """
    u1 = setting.row1
    if setting.is_vector:
        u2 = setting.row2
    else:
        # canonical partner direction for a tilde-only row: a commuting unit
        # row chosen deterministically from the orthogonal complement
        u2 = _default_partner(u1)
    rows = [u1, u2]
    for target in ((1.0, 0.0), (0.0, 1.0, 0.0)):
        A = np.array([r @ _SIGMA for r in rows[: len(target)]])
        b = np.asarray(target, dtype=float)
        try:
            sol = A.T @ np.linalg.solve(A @ A.T, b)
        except np.linalg.LinAlgError as exc:
            raise NotSymplectic("setting rows are linearly dependent") from exc
        rows.append(sol)
    lam = np.array(rows)
    resid = np.max(np.abs(lam @ _SIGMA @ lam.T - _SIGMA))
    if resid > 1e-10:
        raise NotSymplectic(f"completion failed, residual {resid:.3g}")
    return lam


def _default_partner(u1: np.ndarray) -> np.ndarray:
    # pick the commuting candidate of largest norm among sigma-orthogonal
    # projections of the coordinate axes; deterministic in the input
    s1 = _SIGMA @ u1
    best = None
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        cand = e - ((e @ s1) / (s1 @ s1)) * s1
        norm = np.linalg.norm(cand)
        if best is None or norm > best[0] + 1e-12:
            best = (norm, cand)
    return best[1] / best[0]


# ---------------------------------------------------------------------------
# tomogram container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoModeTomogram:
    """Tabulated two-mode marginals.

    Tilde variant: ``values[s, i]`` over ``x1``;  vector variant additionally
    carries ``x2`` and ``values[s, i, j]`` over the outcome plane.
    ``direction_weights`` (tilde only) are the quadrature weights of the
    setting directions on the 3-sphere, required for reconstruction.
    """

    settings: tuple[TwoModeSetting, ...]
    x1: np.ndarray
    values: np.ndarray
    x2: np.ndarray | None = None
    direction_weights: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(self.settings))
        x1 = np.asarray(self.x1, dtype=float)
        v = np.asarray(self.values, dtype=float)
        x1.flags.writeable = False
        object.__setattr__(self, "x1", x1)
        if self.x2 is not None:
            x2 = np.asarray(self.x2, dtype=float)
            x2.flags.writeable = False
            object.__setattr__(self, "x2", x2)
            if v.shape != (len(self.settings), x1.size, x2.size):
                raise InvalidParameter("vector tomogram values must be (n, nx1, nx2)")
        elif v.shape != (len(self.settings), x1.size):
            raise InvalidParameter("tilde tomogram values must be (n, nx1)")
        if np.any(v < -1e-12):
            raise InvalidParameter("densities must be nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.direction_weights is not None:
            w = np.asarray(self.direction_weights, dtype=float)
            if w.shape != (len(self.settings),):
                raise InvalidParameter("one direction weight per setting")
            w.flags.writeable = False
            object.__setattr__(self, "direction_weights", w)

    @property
    def kind(self) -> str:
        return "vector" if self.x2 is not None else "tilde"

    def validate_normalization(self, tol: float = 1e-3) -> None:
        dx1 = self.x1[1] - self.x1[0]
        if self.kind == "tilde":
            integrals = np.trapezoid(self.values, dx=dx1, axis=1)
        else:
            dx2 = self.x2[1] - self.x2[0]
            integrals = np.trapezoid(np.trapezoid(self.values, dx=dx2, axis=2), dx=dx1, axis=1)
        worst = float(np.max(np.abs(integrals - 1.0)))
        if worst > tol:
            raise GridTooNarrow(f"worst two-mode normalization deficit {worst:.3g}")


# ---------------------------------------------------------------------------
# characteristic function (Wigner Fourier transform)
# ---------------------------------------------------------------------------


def characteristic_two_mode(state, w4) -> np.ndarray:
    """``Phi(w) = (2 pi)^-2 integral W(v) exp(i w . v) d4v`` over (q1,q2,p1,p2).

    Equals ``Tr[rho exp(i w . (q1,q2,p1,p2)_op)]``.  The marginal of any
    quadrature row u is recovered as the 1-d inverse transform of
    ``Phi(k u)``.
    """
    w = np.asarray(w4, dtype=float)
    squeeze = w.ndim == 1
    w = np.atleast_2d(w)

    if isinstance(state, st.GaussianTwoMode):
        M = state.M.entries
        quad = np.einsum("...i,ij,...j->...", w, M, w)
        out = np.exp(1j * w @ state.means - 0.5 * quad)
    elif isinstance(state, st.TwoModeCat):
        A = state.A
        sign = 1.0 if state.parity == "plus" else -1.0
        out = 0.0
        for a_vec, b_vec, s in (
            (A, A, 1.0),
            (A, -A, sign),
            (-A, A, sign),
            (-A, -A, 1.0),
        ):
            out = out + s * _cat_term_characteristic(a_vec, b_vec, w)
        out = state.norm_factor_squared * out
    elif isinstance(state, st.ProductState):
        out = st.characteristic_one_mode(state.mode1, w[..., 0], w[..., 2]) * st.characteristic_one_mode(
            state.mode2, w[..., 1], w[..., 3]
        )
    else:
        raise UnsupportedVariant(f"no characteristic function for {type(state).__name__}")
    return out[0] if squeeze else out


def _cat_term_characteristic(A: np.ndarray, B: np.ndarray, w: np.ndarray):
    # dyad |A><B| contributes exp(gamma + sum_i (c_i + i w_i)^2 / 4) with the
    # linear coefficients of its Gaussian Wigner exponent
    c = np.concatenate([np.sqrt(2) * (A + np.conj(B)), 1j * np.sqrt(2) * (np.conj(B) - A)])
    gamma = -(A @ np.conj(B)) - (np.abs(A) ** 2).sum() / 2 - (np.abs(B) ** 2).sum() / 2
    return np.exp(gamma + np.sum((c + 1j * w) ** 2, axis=-1) / 4.0)


# ---------------------------------------------------------------------------
# tilde (single-quadrature) marginals
# ---------------------------------------------------------------------------


def tilde_marginal_gaussian(state: st.GaussianTwoMode, x1, setting: TwoModeSetting):
    """Closed-form Gaussian marginal; variance ``u M u^T`` (zero means only)."""
    if not isinstance(state, st.GaussianTwoMode):
        raise UnsupportedVariant("tilde_marginal_gaussian expects a Gaussian state")
    if np.any(state.means != 0):
        raise NonzeroMeansUnsupported("closed form assumes zero means; use the numeric path")
    u = setting.row1
    s2 = float(u @ state.M.entries @ u)
    x1 = np.asarray(x1, dtype=float)
    return np.exp(-(x1**2) / (2 * s2)) / np.sqrt(2 * np.pi * s2)


def tilde_marginal_cat(state, x1, setting: TwoModeSetting):
    """Closed-form marginal of the even (plus) two-mode cat.

    ``state`` may be a TwoModeCat or the complex amplitude pair
    ``A = (Q + i P)/sqrt 2``.
    """
    if isinstance(state, st.TwoModeCat):
        if state.parity != "plus":
            raise UnsupportedVariant("closed form covers the plus (even) cat only")
        A = state.A
    else:
        A = np.asarray(state, dtype=complex).reshape(2)
    Q = np.sqrt(2) * A.real
    P = np.sqrt(2) * A.imag
    mu, nu = setting.mu, setting.nu
    r2 = float(mu @ mu + nu @ nu)
    x1 = np.asarray(x1, dtype=float)

    a2 = (Q @ Q + P @ P) / 2.0
    n2 = np.exp(a2) / (4.0 * np.cosh(a2))
    env = (-(x1**2) - (nu[0] * P[0] + mu[0] * Q[0]) ** 2 - (nu[1] * P[1] + mu[1] * Q[1]) ** 2) / r2
    osc_exp = (
        -(P[0] ** 2 + Q[0] ** 2) * (nu[1] ** 2 + mu[1] ** 2)
        - (P[1] ** 2 + Q[1] ** 2) * (nu[0] ** 2 + mu[0] ** 2)
        + 2 * (mu[0] * P[0] - nu[0] * Q[0]) * (mu[1] * P[1] - nu[1] * Q[1])
    ) / r2
    hyp_exp = -2 * (nu[0] * P[0] + mu[0] * Q[0]) * (nu[1] * P[1] + mu[1] * Q[1]) / r2
    hyp_arg = 2 * (nu @ P + mu @ Q) * x1 / r2
    # cosh folded into the exponents so extreme amplitudes cannot overflow
    terms = np.exp(env + osc_exp) * np.cos(2 * (mu @ P - nu @ Q) * x1 / r2)
    terms = terms + 0.5 * (np.exp(env + hyp_exp + hyp_arg) + np.exp(env + hyp_exp - hyp_arg))
    return 2.0 * n2 / np.sqrt(np.pi * r2) * terms


def tilde_marginal(state, x1, setting: TwoModeSetting):
    """Single-quadrature marginal for any supported two-mode state.

    Dispatches to the closed forms where they exist, otherwise inverts the
    characteristic function along the setting direction.
    """
    if isinstance(state, st.GaussianTwoMode) and not np.any(state.means != 0):
        return tilde_marginal_gaussian(state, x1, setting)
    if isinstance(state, st.TwoModeCat) and state.parity == "plus":
        return tilde_marginal_cat(state, x1, setting)
    return _tilde_from_characteristic(state, x1, setting)


def _tilde_from_characteristic(state, x1, setting: TwoModeSetting, k_points: int = 2001):
    u = setting.row1
    r = np.linalg.norm(u)
    # widen the frequency window until the characteristic has decayed
    k_max = 20.0 / r
    while abs(characteristic_two_mode(state, k_max * u)) > 1e-10 and k_max < 320.0 / r:
        k_max *= 2.0
    k = np.linspace(-k_max, k_max, k_points)
    phi = characteristic_two_mode(state, k[:, None] * u[None, :])
    x1 = np.asarray(x1, dtype=float)
    kernel = np.exp(-1j * np.outer(x1, k))
    vals = (kernel @ (phi * _trapezoid_weights(k))) / (2 * np.pi)
    out = vals.real
    return out if out.shape else float(out)


def tilde_marginal_numeric(state, x1, setting: TwoModeSetting, extent: float = 9.0, num: int = 81):
    """Independent slow path: 3-d trapezoid reduction of the Wigner function."""
    u = setting.row1
    r = np.linalg.norm(u)
    e = u / r
    basis = _null_basis(e[None, :])
    t = np.linspace(-extent, extent, num)
    T1, T2, T3 = np.meshgrid(t, t, t, indexing="ij")
    offsets = basis @ np.stack([T1.ravel(), T2.ravel(), T3.ravel()])
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    out = np.empty(x1.size)
    dt = t[1] - t[0]
    for i, xv in enumerate(x1):
        v = (xv / r) * e[:, None] + offsets
        W = st.wigner_two_mode(state, v[:2], v[2:])
        W = W.reshape(num, num, num)
        out[i] = (
            np.trapezoid(np.trapezoid(np.trapezoid(W, dx=dt, axis=2), dx=dt, axis=1), dx=dt, axis=0)
            / ((2 * np.pi) ** 2 * r)
        )
    return out if out.size > 1 else float(out[0])


def _null_basis(rows: np.ndarray) -> np.ndarray:
    """Orthonormal basis (4 x k) of the orthogonal complement of the rows."""
    _, s, vt = np.linalg.svd(rows)
    rank = int(np.sum(s > 1e-12))
    return vt[rank:].T


def vector_marginal_numeric(state, x, setting: TwoModeSetting, extent: float = 9.0, num: int = 161):
    """Joint density of (X1, X2) by 2-d quadrature over the constraint plane.

    Requires a commuting (symplectic) vector setting; marginalizing the
    result over x2 reproduces the tilde marginal.
    """
    if not setting.is_vector:
        raise NotSymplectic("vector marginal needs the second quadrature row")
    U = np.vstack([setting.row1, setting.row2])
    gram = U @ U.T
    try:
        foot = U.T @ np.linalg.solve(gram, np.asarray(x, dtype=float).reshape(2))
    except np.linalg.LinAlgError as exc:
        raise NotSymplectic("setting rows are linearly dependent") from exc
    basis = _null_basis(U)
    t = np.linspace(-extent, extent, num)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    v = foot[:, None] + basis @ np.stack([T1.ravel(), T2.ravel()])
    W = st.wigner_two_mode(state, v[:2], v[2:]).reshape(num, num)
    dt = t[1] - t[0]
    integral = np.trapezoid(np.trapezoid(W, dx=dt, axis=1), dx=dt, axis=0)
    return float(integral / ((2 * np.pi) ** 2 * np.sqrt(np.linalg.det(gram))))


def wigner_moment_numeric(state, setting: TwoModeSetting, power=2, extent: float = 10.0, num: int = 61):
    """Moments ``integral X1^power W / (2 pi)^2`` as a direct 4-d Wigner integral.

    ``power`` may be an int or a sequence (all computed in one sweep).
    Chunked trapezoid over ``(q1, q2, p1, p2)``; the deliberately independent
    oracle for the closed-form Gaussian variance.
    """
    powers = (power,) if np.isscalar(power) else tuple(power)
    u = setting.row1
    g = np.linspace(-extent, extent, num)
    dg = g[1] - g[0]
    Q2, P1, P2 = np.meshgrid(g, g, g, indexing="ij")
    acc = np.zeros(len(powers))
    for q1 in g:
        v = np.stack([np.full(Q2.size, q1), Q2.ravel(), P1.ravel(), P2.ravel()])
        W = st.wigner_two_mode(state, v[:2], v[2:])
        x1 = u @ v
        for i, k in enumerate(powers):
            acc[i] += np.sum(W * x1**k) if k else np.sum(W)
    out = acc * dg**4 / (2 * np.pi) ** 2
    return float(out[0]) if np.isscalar(power) else out


# ---------------------------------------------------------------------------
# two-mode kernel
# ---------------------------------------------------------------------------


def _per_mode_zetas(setting: TwoModeSetting, z1: float, z2: float) -> np.ndarray:
    zetas = -(z1 / np.sqrt(2)) * (setting.nu - 1j * setting.mu)
    if z2 != 0.0:
        if not setting.is_vector:
            raise InvalidParameter("z2 != 0 needs the second quadrature row")
        zetas = zetas - (z2 / np.sqrt(2)) * (setting.nu_p - 1j * setting.mu_p)
    return zetas


def kernel_two_mode_number(
    n_row: tuple[int, int],
    n_col: tuple[int, int],
    x,
    setting: TwoModeSetting,
    scales: tuple[float, float] = (1.0, 0.0),
) -> complex:
    """``<n_row| K |n_col>`` for the two-mode kernel; factorizes over modes.

    ``K = (z1^4 / (2 pi)^2) exp(-i (z1 x1 + z2 x2)) D1(zeta1) D2(zeta2)`` with
    per-mode displacement arguments built from the first row (scaled by z1)
    and, for z2 != 0, the second row.  ``scales = (z1, 0)`` is the kernel for
    tilde marginals.

    As in the one-mode case the elements are bounded only in the number (or
    coherent) basis; the quadrature representation is distributional, so
    sample averaging of matrix elements is possible here alone.
    """
    z1, z2 = float(scales[0]), float(scales[1])
    if z1 == 0.0:
        raise InvalidParameter("z1 must be nonzero")
    x = np.asarray(x, dtype=float).reshape(2)
    zetas = _per_mode_zetas(setting, z1, z2)
    pref = z1**4 / (2 * np.pi) ** 2 * np.exp(-1j * (z1 * x[0] + z2 * x[1]))
    d1 = displacement_matrix(np.asarray(zetas[0]), max(n_row[0], n_col[0]) + 1)
    d2 = displacement_matrix(np.asarray(zetas[1]), max(n_row[1], n_col[1]) + 1)
    return complex(pref * d1[n_row[0], n_col[0]] * d2[n_row[1], n_col[1]])


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoModeConfig:
    """Quadrature sizes for the 4-d (mu_vec, nu_vec) integration.

    The radial/Hopf product grid covers the 3-sphere of directions times the
    radius, with the radial extent again set by the kernel damping
    ``exp(-z1^2 R^2 / 4)``.
    """

    scale: KernelScale = field(default_factory=KernelScale)
    dims: tuple[int, int] = (12, 12)
    r_max: float | None = None
    n_r: int = 48
    n_t: int = 12
    n_psi: int = 12
    projection: str = "hermitize"

    def __post_init__(self):
        d1, d2 = self.dims
        if d1 < 1 or d2 < 1:
            raise DegenerateConfig("per-mode dims must be positive")
        if self.projection not in ("none", "hermitize", "clip"):
            raise DegenerateConfig(f"unknown projection {self.projection!r}")
        r_max = self.resolve_r_max()
        if r_max * abs(self.scale.z) < 6.0:
            raise DegenerateConfig("r_max * |z1| must be >= 6")

    def resolve_r_max(self) -> float:
        return self.r_max if self.r_max is not None else 8.0 / abs(self.scale.z)


def hopf_directions(n_t: int, n_psi: int) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature on the 3-sphere of setting directions.

    Directions ``(mu1, mu2, nu1, nu2) = (sqrt(t) cos psi1, sqrt(1-t) cos psi2,
    sqrt(t) sin psi1, sqrt(1-t) sin psi2)`` with Gauss-Legendre ``t`` and
    uniform angles; weights sum to the sphere area ``2 pi^2``.
    """
    tg, tw = leggauss(n_t)
    t = 0.5 * (tg + 1.0)
    wt = 0.5 * tw
    psi = 2 * np.pi * np.arange(n_psi) / n_psi
    wpsi = 2 * np.pi / n_psi
    dirs, weights = [], []
    for tv, twv in zip(t, wt):
        for p1 in psi:
            for p2 in psi:
                dirs.append(
                    [
                        np.sqrt(tv) * np.cos(p1),
                        np.sqrt(1 - tv) * np.cos(p2),
                        np.sqrt(tv) * np.sin(p1),
                        np.sqrt(1 - tv) * np.sin(p2),
                    ]
                )
                weights.append(0.5 * twv * wpsi * wpsi)
    return np.asarray(dirs), np.asarray(weights)


def _default_x1_grid(state, setting: TwoModeSetting, num: int = 1201) -> np.ndarray:
    from .marginals import _sigma_and_span

    u = setting.row1
    if isinstance(state, st.GaussianTwoMode):
        s2 = float(u @ state.M.entries @ u)
        half = 8.0 * np.sqrt(s2) + abs(float(u @ state.means))
    elif isinstance(state, st.TwoModeCat):
        r = np.linalg.norm(u)
        shift = np.sqrt(2) * float(np.sum(np.abs(setting.mu * state.A.real)) + np.sum(np.abs(setting.nu * state.A.imag)))
        half = 8.0 * r / np.sqrt(2) + 2 * shift
    elif isinstance(state, st.ProductState):
        # per-mode widths of the one-mode marginals add in quadrature
        var, span = 0.0, 0.0
        for mode, j in ((state.mode1, 0), (state.mode2, 1)):
            rj = float(np.hypot(setting.mu[j], setting.nu[j]))
            if rj == 0.0:
                continue
            from .marginals import QuadratureSetting as _QS

            sj, spj = _sigma_and_span(mode, _QS(setting.mu[j], setting.nu[j]))
            var += sj**2
            span += spj
        half = 8.0 * np.sqrt(var) + span
    else:
        half = 10.0 * np.linalg.norm(u)
    return np.linspace(-half, half, num)


def tabulate_tilde_tomogram(
    state,
    settings=None,
    x_grid: np.ndarray | None = None,
    num: int = 1201,
    n_t: int = 12,
    n_psi: int = 12,
) -> TwoModeTomogram:
    """Tabulate tilde marginals, by default on the Hopf direction grid.

    The returned tomogram carries the direction weights needed by
    ``reconstruct_two_mode``.
    """
    if settings is None:
        dirs, weights = hopf_directions(n_t, n_psi)
        settings = [TwoModeSetting(mu=d[:2], nu=d[2:]) for d in dirs]
    else:
        settings = list(settings)
        weights = None
    if x_grid is None:
        half = max(float(_default_x1_grid(state, s, 3)[-1]) for s in settings)
        x_grid = np.linspace(-half, half, num)
    rows = np.asarray([tilde_marginal(state, x_grid - s.delta[0], s) for s in settings])
    tomo = TwoModeTomogram(tuple(settings), x_grid, rows, direction_weights=weights)
    tomo.validate_normalization()
    return tomo


def _assemble_two_mode(chi_fn, cfg: TwoModeConfig) -> np.ndarray:
    """Accumulate ``sum w R^3 chi(u) (z^4/(2pi)^2) D1 x D2`` over the 4-d grid.

    ``chi_fn(u_batch)`` returns ``integral w-tilde exp(-i z1 x1) dx1`` for a
    batch of setting rows ``u`` (shape (n, 4)).
    """
    z1 = cfg.scale.z
    d1, d2 = cfg.dims
    R, wR = _radial_nodes(cfg.resolve_r_max(), cfg.n_r)
    tg, tw = leggauss(cfg.n_t)
    t = 0.5 * (tg + 1.0)
    wt = 0.5 * tw
    psi = 2 * np.pi * np.arange(cfg.n_psi) / cfg.n_psi
    wpsi = 2 * np.pi / cfg.n_psi
    cosp, sinp = np.cos(psi), np.sin(psi)

    rho4 = np.zeros((d1, d1, d2, d2), dtype=complex)
    for Rv, wRv in zip(R, wR):
        for tv, wtv in zip(t, wt):
            r1 = Rv * np.sqrt(tv)
            r2 = Rv * np.sqrt(1.0 - tv)
            zeta1 = -(z1 / np.sqrt(2)) * r1 * (sinp - 1j * cosp)
            zeta2 = -(z1 / np.sqrt(2)) * r2 * (sinp - 1j * cosp)
            D1 = displacement_matrix(zeta1, d1)
            D2 = displacement_matrix(zeta2, d2)
            u = np.empty((cfg.n_psi, cfg.n_psi, 4))
            u[..., 0] = r1 * cosp[:, None]
            u[..., 1] = r2 * cosp[None, :]
            u[..., 2] = r1 * sinp[:, None]
            u[..., 3] = r2 * sinp[None, :]
            chi = chi_fn(u.reshape(-1, 4)).reshape(cfg.n_psi, cfg.n_psi)
            T = chi * (wRv * Rv**3 * 0.5 * wtv * wpsi * wpsi * z1**4 / (2 * np.pi) ** 2)
            inner = np.einsum("ab,bkl->akl", T, D2)
            rho4 += np.einsum("anm,akl->nmkl", D1, inner)
    # reorder (n1, m1, n2, m2) -> (n1, n2, m1, m2), flatten mode-1 major
    return rho4.transpose(0, 2, 1, 3).reshape(d1 * d2, d1 * d2)


def reconstruct_two_mode(source, cfg: TwoModeConfig) -> ReconstructionReport:
    """Two-mode density matrix from tilde data (or the tilde reduction of vector data).

    ``source`` is a TwoModeTomogram or an analytic TwoModeState.  Vector
    tomograms are first marginalized over x2 (their single-quadrature content
    determines the state already); tilde tomograms need direction weights and
    a common direction radius.
    """
    z1 = cfg.scale.z

    if isinstance(source, TwoModeTomogram):
        tomo = source
        if tomo.kind == "vector":
            dx2 = tomo.x2[1] - tomo.x2[0]
            rows = np.trapezoid(tomo.values, dx=dx2, axis=2)
            weights = tomo.direction_weights
            if weights is None:
                raise DegenerateConfig("two-mode reconstruction needs direction weights")
            tomo = TwoModeTomogram(tomo.settings, tomo.x1, rows, direction_weights=weights)
        if tomo.direction_weights is None:
            raise DegenerateConfig("two-mode reconstruction needs direction weights")
        radii = np.array([s.radius for s in tomo.settings])
        r0 = float(radii.mean())
        if np.max(np.abs(radii - r0)) > 1e-9 * max(r0, 1.0):
            raise DegenerateConfig("tilde settings must share a common radius")
        dirs = np.array([s.row1 / r0 for s in tomo.settings])
        deltas = np.array([s.delta[0] for s in tomo.settings])
        R, wR = _radial_nodes(cfg.resolve_r_max(), cfg.n_r)
        tw = _trapezoid_weights(tomo.x1)
        phase = np.exp(-1j * np.outer(tomo.x1, z1 * R / r0))
        chi = (tomo.values * tw[None, :]) @ phase
        chi = chi * np.exp(1j * np.outer(deltas, z1 * R / r0))
        d1, d2 = cfg.dims
        rho4 = np.zeros((d1, d1, d2, d2), dtype=complex)
        for k, (Rv, wRv) in enumerate(zip(R, wR)):
            rows_u = dirs * Rv
            zeta = -(z1 / np.sqrt(2)) * (rows_u[:, 2:] - 1j * rows_u[:, :2])
            D1 = displacement_matrix(zeta[:, 0], d1)
            D2 = displacement_matrix(zeta[:, 1], d2)
            coeff = tomo.direction_weights * chi[:, k] * (wRv * Rv**3 * z1**4 / (2 * np.pi) ** 2)
            rho4 += np.einsum("s,snm,skl->nmkl", coeff, D1, D2)
        raw = rho4.transpose(0, 2, 1, 3).reshape(d1 * d2, d1 * d2)
        settings_used = len(tomo.settings)
    else:
        state = source

        def chi_fn(u_batch: np.ndarray) -> np.ndarray:
            return characteristic_two_mode(state, -z1 * u_batch)

        raw = _assemble_two_mode(chi_fn, cfg)
        settings_used = cfg.n_t * cfg.n_psi**2

    return _finish(raw, cfg.projection, settings_used, 0, check_trace=True, dims=cfg.dims)


def reconstruct_two_mode_vector(
    state, second_row: np.ndarray, cfg: TwoModeConfig, z2: float = 1.0
) -> ReconstructionReport:
    """Vector-kernel reconstruction with a constant second quadrature row.

    Sweeps the first row over the 4-d polar grid while ``(mu_p, nu_p) =
    second_row`` stays fixed, using the joint characteristic function of the
    analytic state.  Exact for any ``z2`` (tested), which is the freedom the
    vector kernel exposes.
    """
    u2 = np.asarray(second_row, dtype=float).reshape(4)
    z1 = cfg.scale.z

    def chi_fn(u_batch: np.ndarray) -> np.ndarray:
        return characteristic_two_mode(state, -z1 * u_batch - z2 * u2[None, :])

    d1, d2 = cfg.dims
    # same assembly as the tilde path, with the constant z2 offset folded into
    # the per-mode displacement arguments
    R, wR = _radial_nodes(cfg.resolve_r_max(), cfg.n_r)
    tg, tw_ = leggauss(cfg.n_t)
    t = 0.5 * (tg + 1.0)
    wt = 0.5 * tw_
    psi = 2 * np.pi * np.arange(cfg.n_psi) / cfg.n_psi
    wpsi = 2 * np.pi / cfg.n_psi
    cosp, sinp = np.cos(psi), np.sin(psi)
    off = -(z2 / np.sqrt(2)) * (u2[2:] - 1j * u2[:2])

    rho4 = np.zeros((d1, d1, d2, d2), dtype=complex)
    for Rv, wRv in zip(R, wR):
        for tv, wtv in zip(t, wt):
            r1 = Rv * np.sqrt(tv)
            r2 = Rv * np.sqrt(1.0 - tv)
            zeta1 = -(z1 / np.sqrt(2)) * r1 * (sinp - 1j * cosp) + off[0]
            zeta2 = -(z1 / np.sqrt(2)) * r2 * (sinp - 1j * cosp) + off[1]
            D1 = displacement_matrix(zeta1, d1)
            D2 = displacement_matrix(zeta2, d2)
            u = np.empty((cfg.n_psi, cfg.n_psi, 4))
            u[..., 0] = r1 * cosp[:, None]
            u[..., 1] = r2 * cosp[None, :]
            u[..., 2] = r1 * sinp[:, None]
            u[..., 3] = r2 * sinp[None, :]
            chi = chi_fn(u.reshape(-1, 4)).reshape(cfg.n_psi, cfg.n_psi)
            T = chi * (wRv * Rv**3 * 0.5 * wtv * wpsi * wpsi * z1**4 / (2 * np.pi) ** 2)
            inner = np.einsum("ab,bkl->akl", T, D2)
            rho4 += np.einsum("anm,akl->nmkl", D1, inner)
    raw = rho4.transpose(0, 2, 1, 3).reshape(d1 * d2, d1 * d2)
    return _finish(raw, cfg.projection, cfg.n_t * cfg.n_psi**2, 0, check_trace=True, dims=cfg.dims)


def partial_trace(rho: st.FockDensityMatrix, keep: int = 1) -> st.FockDensityMatrix:
    """Reduce a two-mode matrix to one mode (``keep`` = 1 or 2)."""
    if rho.dims is None:
        raise InvalidParameter("partial trace needs a two-mode matrix with dims")
    d1, d2 = rho.dims
    four = rho.entries.reshape(d1, d2, d1, d2)
    if keep == 1:
        reduced = np.einsum("ikjk->ij", four)
    elif keep == 2:
        reduced = np.einsum("kikj->ij", four)
    else:
        raise InvalidParameter("keep must be 1 or 2")
    return st.FockDensityMatrix(reduced)
