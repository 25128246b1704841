"""Reconstruction kernel operators for symplectic and homodyne tomography.

For the generalized quadrature ``X = mu q + nu p + delta`` and a Fourier
component ``z``, the kernel is a scaled displacement operator::

    K(x; mu, nu, z) = (z^2 / 2 pi) exp(-i z x) D(zeta),
    zeta = -(z / sqrt(2)) (nu - i mu),

so every matrix element reduces to a displacement-operator element.  The
number-basis elements are bounded (Gaussian envelope ``exp(-z^2 (mu^2+nu^2)/4)``
times a polynomial), which is what makes sample averaging of the density
matrix possible in this basis; the coordinate-basis kernel is distributional
and is therefore exposed as a phase factor plus a delta-support residual, not
as a computation path.

Degenerate directions ``mu = nu = 0`` are meaningless for a marginal but keep
the kernel finite, so the kernel evaluators also accept plain ``(mu, nu)``
tuples that bypass the setting validation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import CutoffTooSmall, InvalidParameter
from .marginals import QuadratureSetting

__all__ = [
    "KernelScale",
    "HomodyneSetting",
    "displacement_element",
    "displacement_matrix",
    "kernel_number",
    "kernel_matrix",
    "kernel_coherent",
    "kernel_coordinate_phase",
    "kernel_homodyne_number",
    "homodyne_displacement_table",
]


@dataclass(frozen=True)
class KernelScale:
    """Fourier component ``z`` selecting one self-consistent kernel."""

    z: float = 1.0

    def __post_init__(self):
        if self.z == 0 or not np.isfinite(self.z):
            raise InvalidParameter("kernel scale z must be a nonzero finite real")
        object.__setattr__(self, "z", float(self.z))


@dataclass(frozen=True)
class HomodyneSetting:
    """Rotated-quadrature measurement: phase ``phi`` and outcome ``x_phi``."""

    phi: float
    x_phi: float

    def __post_init__(self):
        object.__setattr__(self, "phi", float(self.phi) % (2 * np.pi))
        object.__setattr__(self, "x_phi", float(self.x_phi))


def _mu_nu(setting) -> tuple[float, float]:
    if isinstance(setting, QuadratureSetting):
        return setting.mu, setting.nu
    mu, nu = setting[0], setting[1]
    return float(mu), float(nu)


def kernel_displacement_argument(setting, scale: KernelScale) -> complex:
    mu, nu = _mu_nu(setting)
    return -(scale.z / np.sqrt(2)) * (nu - 1j * mu)


# ---------------------------------------------------------------------------
# displacement-operator matrix elements
# ---------------------------------------------------------------------------
#
# <m|D(zeta)|n> = sqrt(n!/m!) zeta^(m-n) e^{-|zeta|^2/2} L_n^{(m-n)}(|zeta|^2)   (m >= n)
# <m|D(zeta)|n> = sqrt(m!/n!) (-conj(zeta))^(n-m) e^{-|zeta|^2/2} L_m^{(n-m)}(|zeta|^2)
#
# Factorial prefactors are computed in log domain.  The associated Laguerre
# values come from the three-term recurrence, which stays accurate through
# n, m ~ 200; the explicit alternating series (kept below as a cross-check)
# loses all double precision once n |zeta|^2 is large.


def _laguerre_table(y: np.ndarray, dim: int) -> list[np.ndarray]:
    """tables[d][p] = L_p^{(d)}(y) for p + d <= dim - 1, vectorized over y."""
    tables = []
    for d in range(dim):
        pmax = dim - d
        L = np.empty((pmax,) + y.shape)
        L[0] = 1.0
        if pmax > 1:
            L[1] = 1.0 + d - y
        for k in range(1, pmax - 1):
            L[k + 1] = ((2 * k + 1 + d - y) * L[k] - (k + d) * L[k - 1]) / (k + 1)
        tables.append(L)
    return tables


def displacement_matrix(zetas, dim: int) -> np.ndarray:
    """All matrix elements ``<m|D(zeta)|n>`` for m, n < dim, batched over zeta.

    Returns an array of shape ``zetas.shape + (dim, dim)``.
    """
    zetas = np.asarray(zetas, dtype=complex)
    y = (zetas * zetas.conj()).real
    out = np.zeros(zetas.shape + (dim, dim), dtype=complex)
    logfact = gammaln(np.arange(dim) + 1.0)
    envelope = np.exp(-y / 2)
    tables = _laguerre_table(y, dim)
    for d in range(dim):
        L = tables[d]
        for p in range(dim - d):
            m = p + d
            pref = np.exp(0.5 * (logfact[p] - logfact[m]))
            if d == 0:
                out[..., m, p] = pref * envelope * L[p]
            else:
                out[..., m, p] = pref * zetas**d * envelope * L[p]
                out[..., p, m] = pref * (-zetas.conj()) ** d * envelope * L[p]
    return out


def displacement_element(m: int, n: int, zeta: complex) -> complex:
    """Single element ``<m|D(zeta)|n>``."""
    if m < 0 or n < 0:
        raise InvalidParameter("number-state indices must be nonnegative")
    zeta = complex(zeta)
    y = abs(zeta) ** 2
    p, d = (n, m - n) if m >= n else (m, n - m)
    L = _laguerre_table(np.array(y), p + d + 1)[d][p]
    pref = np.exp(0.5 * (gammaln(p + 1) - gammaln(p + d + 1)))
    phase = zeta**d if m >= n else (-np.conj(zeta)) ** d
    return complex(pref * phase * np.exp(-y / 2) * L)


def _displacement_element_series(m: int, n: int, zeta: complex) -> complex:
    """Reference evaluation of <m|D|n> (m >= n) as the explicit normally-ordered sum.

    Log-domain terms summed largest-first; reliable only while the alternating
    cancellation stays well inside double precision, hence test-only.
    """
    if m < n:
        raise InvalidParameter("series form expects m >= n")
    d = m - n
    A = zeta
    B = -np.conj(zeta)
    logs, phases = [], []
    for l in range(n + 1):
        logs.append(
            0.5 * (gammaln(n + 1) + gammaln(m + 1))
            - gammaln(n - l + 1)
            - gammaln(l + d + 1)
            - gammaln(l + 1)
        )
        phases.append(A ** (l + d) * B**l)
    logs = np.array(logs)
    mags = np.array([abs(ph) for ph in phases])
    with np.errstate(divide="ignore"):
        weight = logs + np.log(np.where(mags > 0, mags, 1.0))
    order = np.argsort(weight)[::-1]
    shift = weight[order[0]]
    total = 0.0 + 0.0j
    for idx in order:
        if mags[idx] == 0:
            continue
        total += np.exp(weight[idx] - shift) * (phases[idx] / mags[idx])
    return complex(np.exp(shift) * total * np.exp(-abs(zeta) ** 2 / 2))


# ---------------------------------------------------------------------------
# kernel in the three representations
# ---------------------------------------------------------------------------


def _prefactor(x: float, scale: KernelScale) -> complex:
    return scale.z**2 / (2 * np.pi) * np.exp(-1j * scale.z * x)


def kernel_number(
    n_row: int, n_col: int, x: float, setting, scale: KernelScale = KernelScale()
) -> complex:
    """Number-basis kernel element ``<n_row| K(x; mu, nu, z) |n_col>``.

    For ``n_row < n_col`` the conjugation identity
    ``K(x, mu, nu)^dag = K(-x, -mu, -nu)`` is applied.
    """
    if n_row < 0 or n_col < 0:
        raise InvalidParameter("number-state indices must be nonnegative")
    mu, nu = _mu_nu(setting)
    if n_row < n_col:
        return np.conj(kernel_number(n_col, n_row, -x, (-mu, -nu), scale))
    zeta = kernel_displacement_argument((mu, nu), scale)
    return _prefactor(x, scale) * displacement_element(n_row, n_col, zeta)


def kernel_matrix(x: float, setting, scale: KernelScale, dim: int) -> np.ndarray:
    """Dense ``dim x dim`` number-basis kernel at one (x, setting) point."""
    zeta = kernel_displacement_argument(setting, scale)
    return _prefactor(x, scale) * displacement_matrix(np.asarray(zeta), dim)


def kernel_coherent(
    alpha: complex, beta: complex, x: float, setting, scale: KernelScale = KernelScale()
) -> complex:
    """Coherent-basis kernel element ``<alpha| K |beta>`` (closed form)."""
    mu, nu = _mu_nu(setting)
    z = scale.z
    overlap = np.exp(-abs(alpha) ** 2 / 2 - abs(beta) ** 2 / 2 + np.conj(alpha) * beta)
    return (
        _prefactor(x, scale)
        * np.exp(-(z / np.sqrt(2)) * (nu - 1j * mu) * np.conj(alpha))
        * np.exp((z / np.sqrt(2)) * (nu + 1j * mu) * beta)
        * np.exp(-(z**2) * (mu**2 + nu**2) / 4)
        * overlap
    )


def kernel_coordinate_phase(
    q_row: float, q_col: float, x: float, setting, scale: KernelScale = KernelScale()
) -> tuple[complex, float]:
    """Coordinate-basis kernel as (phase factor, delta-constraint residual).

    The element is ``phase * delta(q_col - z nu - q_row)``: supported only
    where the returned residual vanishes, and unbounded there — which is why
    sampling-based reconstruction works in the number or coherent basis only.
    """
    mu, nu = _mu_nu(setting)
    z = scale.z
    phase = _prefactor(x, scale) * np.exp(1j * z**2 * mu * nu / 2) * np.exp(1j * z * mu * q_row)
    residual = q_col - z * nu - q_row
    return complex(phase), float(residual)


# ---------------------------------------------------------------------------
# homodyne kernel (radial integral over the rotation subgroup)
# ---------------------------------------------------------------------------


def homodyne_displacement_table(phi: float, dim: int, r_grid: np.ndarray) -> np.ndarray:
    """``<n| exp(-i r x_phi) |m>`` for every r in ``r_grid``; shape (len(r), dim, dim).

    ``exp(-i r x_phi)`` is the displacement ``D(-i r e^{i phi} / sqrt 2)``,
    i.e. the z = 1 kernel exponential evaluated on the polar ray
    ``(mu, nu) = -r (cos phi, sin phi)``.
    """
    zetas = -1j * r_grid * np.exp(1j * phi) / np.sqrt(2)
    return displacement_matrix(zetas, dim)


def kernel_homodyne_number(
    n_row: int,
    n_col: int,
    homodyne: HomodyneSetting,
    r_cutoff: float = 12.0,
    regularizer_eps: float = 1e-4,
    num: int = 4001,
) -> complex:
    """Homodyne kernel element via the regularized radial integral.

    The radial integral runs over the full line with ``|r|/2`` weight,

    ``K_phi(x) = (1/4pi) int_{-R}^{R} dr |r| exp(i r (x - x_phi_hat))
    exp(-eps r^2)``,

    the Hermitian combination of the two half-line integrals.  Integrating
    the half-line form over the full phase circle gives the same density
    matrix, but only this combination satisfies
    ``conj(<n|K_phi(x)|m>) = <m|K_phi(x)|n>`` element by element.
    ``CutoffTooSmall`` is raised when the Gaussian tail estimate at ``R``
    exceeds ``1e-3`` of the element scale.
    """
    if r_cutoff <= 0:
        raise InvalidParameter("r_cutoff must be positive")
    if regularizer_eps < 0:
        raise InvalidParameter("regularizer_eps must be nonnegative")
    dim = max(n_row, n_col) + 1
    r = np.linspace(0.0, r_cutoff, num)
    table = homodyne_displacement_table(homodyne.phi, dim, r)
    damp = r * np.exp(-regularizer_eps * r**2) * np.exp(1j * r * homodyne.x_phi)
    half_nm = np.trapezoid(damp * table[:, n_row, n_col], dx=r[1] - r[0]) / (2 * np.pi)
    half_mn = np.trapezoid(damp * table[:, n_col, n_row], dx=r[1] - r[0]) / (2 * np.pi)
    value = 0.5 * (half_nm + np.conj(half_mn))
    # the integrand decays like exp(-r^2/4); bound the discarded tail by the
    # boundary magnitude times int_R^inf r exp(-(r^2-R^2)/4) dr = 2
    tail = 2.0 * abs(damp[-1] * table[-1, n_row, n_col]) / (2 * np.pi)
    scale = max(abs(value), 1.0 / (2 * np.pi))
    if tail > 1e-3 * scale:
        raise CutoffTooSmall(f"radial tail estimate {tail:.3g} at r_cutoff {r_cutoff}")
    return complex(value)
