"""Special functions on the unit disk.

Eigenvalues ``lambda_l^m``, associated Legendre functions, projected
spherical harmonics (PSHs), the Poisson kernel and the kinetic moments
``L+`` / ``L-``.

The PSH ``y_l^m`` is the ordinary orthonormal spherical harmonic on the
upper hemisphere, pulled back to the disk through ``cos(polar) = omega``,
``omega(x) = sqrt(1 - r_x^2)``.  The ``(-1)^m`` normalisation factor is
paired with the phase-free Ferrers function; this is the only pairing
under which the ladder relations for ``L+/-`` hold with the positive
square-root coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


@dataclass(frozen=True)
class ModeIndex:
    """PSH index pair ``(l, m)`` with ``|m| <= l``."""

    l: int
    m: int

    def __post_init__(self):
        if self.l < 0 or abs(self.m) > self.l:
            raise DomainError(f"invalid mode (l={self.l}, m={self.m}): need |m| <= l")

    @property
    def parity(self) -> str:
        return "even" if (self.l + self.m) % 2 == 0 else "odd"

    @property
    def is_even(self) -> bool:
        return (self.l + self.m) % 2 == 0


@dataclass(frozen=True)
class PolarPoint:
    """Point ``(r cos theta, r sin theta)`` of the plane."""

    r: float
    theta: float

    def __post_init__(self):
        if self.r < 0:
            raise DomainError(f"negative radius {self.r}")

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.r * np.cos(self.theta), self.r * np.sin(self.theta)])

    @classmethod
    def from_xy(cls, x: float, y: float) -> "PolarPoint":
        return cls(float(np.hypot(x, y)), float(np.arctan2(y, x) % (2 * np.pi)))

    def omega(self, a: float = 1.0) -> float:
        return float(np.sqrt(max(a * a - self.r * self.r, 0.0)))


def _as_mode(mode) -> ModeIndex:
    if isinstance(mode, ModeIndex):
        return mode
    return ModeIndex(*mode)


# ---------------------------------------------------------------------------
# eigenvalues


def _log_lambda(l: int, m: int) -> float:
    return (gammaln((l + m + 1) / 2) + gammaln((l - m + 1) / 2)
            - gammaln((l + m + 2) / 2) - gammaln((l - m + 2) / 2))


def lam(mode) -> float:
    """Eigenvalue ``lambda_l^m`` (log-Gamma evaluation, stable to l = 1e4)."""
    mode = _as_mode(mode)
    # symmetric in m by construction
    return float(np.exp(_log_lambda(mode.l, abs(mode.m))))


def _weighted_lambda(k: int, l: int, m: int) -> float:
    """``k * lambda_l^m`` where ``k`` is the factor ``l - |m| ... `` that may
    vanish together with a pole of ``Gamma((l - |m| + 1)/2)``.

    Only used for the neighbours ``m = +-(l + 1)`` of the recursion, where
    ``k = l - |m| + 1 = 0`` multiplies ``Gamma(0)``; the product is taken in
    the limit ``s Gamma(s) -> 1``.
    """
    mm = abs(m)
    if mm <= l:
        return k * float(np.exp(_log_lambda(l, mm)))
    if mm != l + 1:
        raise DomainError(f"order {m} too far outside degree {l}")
    if k == 0:
        # k Gamma(k/2) -> 2 as k -> 0
        log_rest = (gammaln((l + mm + 1) / 2) - gammaln((l + mm + 2) / 2)
                    - gammaln((l - mm + 2) / 2))
        return 2.0 * float(np.exp(log_rest))
    return np.inf


def lambda_recursion_residual(mode) -> float:
    """Residual of ``4/lam(l,m) = (1/2)[(l+m)(l-m+1) lam(l,m-1) + (l-m)(l+m+1) lam(l,m+1)]``.

    For ``|m| = l`` the outer neighbour is evaluated as the limit
    ``s Gamma(s) -> 1``; ``(0, 0)`` is excluded.
    """
    mode = _as_mode(mode)
    l, m = mode.l, mode.m
    if l == 0:
        raise DomainError("the recursion is excluded at (l, m) = (0, 0)")
    lhs = 4.0 / lam(mode)
    t_minus = (l - m + 1) * _weighted_lambda(l + m, l, m - 1)
    t_plus = (l + m + 1) * _weighted_lambda(l - m, l, m + 1)
    return lhs - 0.5 * (t_minus + t_plus)


# ---------------------------------------------------------------------------
# Legendre functions


def _check_lm(l: int, m: int):
    if l < 0 or abs(m) > l:
        raise DomainError(f"invalid degree/order (l={l}, m={m})")


def assoc_legendre(l: int, m: int, t):
    """Associated Legendre function ``P_l^m(t)`` with the Condon-Shortley phase.

    Upward recurrence in ``l`` at fixed ``m`` from the closed diagonal
    ``P_m^m = (-1)^m (2m-1)!! (1-t^2)^{m/2}``.  Negative orders use
    ``P_l^{-m} = (-1)^m (l-m)!/(l+m)! P_l^m``.
    """
    _check_lm(l, m)
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + 1e-14):
        raise DomainError("argument outside [-1, 1]")
    t = np.clip(t, -1.0, 1.0)
    mm = abs(m)
    s = np.sqrt((1.0 - t) * (1.0 + t))
    pmm = np.ones_like(t)
    for k in range(1, mm + 1):
        pmm = -pmm * (2 * k - 1) * s
    if l == mm:
        out = pmm
    else:
        p_prev, p_cur = pmm, t * (2 * mm + 1) * pmm
        for ll in range(mm + 2, l + 1):
            p_prev, p_cur = p_cur, ((2 * ll - 1) * t * p_cur - (ll + mm - 1) * p_prev) / (ll - mm)
        out = p_cur
    if m < 0:
        out = (-1) ** mm * np.exp(gammaln(l - mm + 1) - gammaln(l + mm + 1)) * out
    return out


def _normalized_legendre(l: int, m: int, t, s):
    """Orthonormal Ferrers function ``sqrt((2l+1)/4pi (l-m)!/(l+m)!) P_l^m``
    with CS phase for ``m >= 0``; ``t`` and ``s = sqrt(1 - t^2)`` are both
    passed so neither is recovered by cancellation.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    pmm = np.full(np.broadcast(t, s).shape, np.sqrt(1.0 / (4 * np.pi)))
    for k in range(1, m + 1):
        pmm = -pmm * np.sqrt((2 * k + 1) / (2 * k)) * s
    if l == m:
        return pmm
    p_prev, p_cur = pmm, np.sqrt(2 * m + 3) * t * pmm
    for ll in range(m + 2, l + 1):
        a = np.sqrt((4 * ll * ll - 1) / (ll * ll - m * m))
        b = np.sqrt(((ll - 1) ** 2 - m * m) / (4 * (ll - 1) ** 2 - 1))
        p_prev, p_cur = p_cur, a * (t * p_cur - b * p_prev)
    return p_cur


def normalized_legendre_table(l_max: int, t, s) -> np.ndarray:
    """All orthonormal Ferrers values ``N_l^m(t)`` for ``0 <= m <= l <= l_max``.

    Returns an array of shape ``(l_max + 1, l_max + 1) + t.shape`` indexed
    ``[l, m]``; entries with ``m > l`` are zero.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.zeros((l_max + 1, l_max + 1) + np.broadcast(t, s).shape)
    diag = np.full(out.shape[2:], np.sqrt(1.0 / (4 * np.pi)))
    for m in range(l_max + 1):
        if m > 0:
            diag = -diag * np.sqrt((2 * m + 1) / (2 * m)) * s
        out[m, m] = diag
        if m == l_max:
            break
        out[m + 1, m] = np.sqrt(2 * m + 3) * t * diag
        for ll in range(m + 2, l_max + 1):
            a = np.sqrt((4 * ll * ll - 1) / (ll * ll - m * m))
            b = np.sqrt(((ll - 1) ** 2 - m * m) / (4 * (ll - 1) ** 2 - 1))
            out[ll, m] = a * (t * out[ll - 1, m] - b * out[ll - 2, m])
    return out


def gamma_lm(mode) -> float:
    """Prefactor ``(-1)^m sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!)``."""
    mode = _as_mode(mode)
    l, m = mode.l, mode.m
    return (-1) ** (m % 2) * float(np.exp(0.5 * (np.log((2 * l + 1) / (4 * np.pi))
                                                  + gammaln(l - m + 1) - gammaln(l + m + 1))))


def psh_rt(l: int, m: int, r, theta, omega=None):
    """Vectorised ``y_l^m`` at polar coordinates ``(r, theta)`` of the unit disk.

    ``omega`` may be supplied when it is known more accurately than
    ``sqrt(1 - r^2)`` (e.g. near the rim).
    """
    _check_lm(l, m)
    r = np.asarray(r, dtype=float)
    if np.any(r > 1.0 + 1e-12):
        raise DomainError("PSHs are defined on the closed unit disk only")
    if omega is None:
        omega = np.sqrt(np.clip((1.0 - r) * (1.0 + r), 0.0, None))
    mm = abs(m)
    val = _normalized_legendre(l, mm, omega, np.minimum(r, 1.0)) * np.exp(1j * mm * np.asarray(theta))
    if m < 0:
        val = (-1) ** mm * np.conj(val)
    return val


def psh(mode, x: PolarPoint) -> complex:
    """Projected spherical harmonic ``y_l^m(x)`` on the unit disk."""
    mode = _as_mode(mode)
    if x.r > 1.0:
        raise DomainError(f"r = {x.r} outside the unit disk")
    return complex(psh_rt(mode.l, mode.m, x.r, x.theta))


def enumerate_modes(l_max: int, parity: str | None = None):
    """All modes with ``l <= l_max`` (optionally of one parity), in (l, m) order."""
    out = []
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            if parity is None or ("even" if (l + m) % 2 == 0 else "odd") == parity:
                out.append(ModeIndex(l, m))
    return out


# ---------------------------------------------------------------------------
# Poisson kernel


def poisson_kernel(rho, theta):
    """``(1/2pi) (1 - rho^2) / (1 + rho^2 - 2 rho cos theta)`` for ``|rho| < 1``."""
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) >= 1.0):
        raise DomainError("Poisson kernel needs |rho| < 1")
    return (1.0 - rho * rho) / (2 * np.pi * (1.0 + rho * rho - 2 * rho * np.cos(theta)))


def poisson_kernel_series(rho, theta, n_terms: int):
    """Symmetric partial sum ``(1/2pi) sum_{|n|<=N} rho^|n| e^{i n theta}`` (real part)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) >= 1.0):
        raise DomainError("Poisson kernel needs |rho| < 1")
    n = np.arange(1, n_terms + 1)
    terms = np.power.outer(rho, n) * np.cos(np.multiply.outer(theta, n))
    return (1.0 + 2.0 * terms.sum(axis=-1)) / (2 * np.pi)


# ---------------------------------------------------------------------------
# kinetic moments


def kinetic_coefficient(l: int, m: int, sign: int) -> float:
    """``sqrt((l - m)(l + m + 1))`` for ``sign=+1``, ``sqrt((l + m)(l - m + 1))`` for ``-1``."""
    if sign > 0:
        return float(np.sqrt(max((l - m) * (l + m + 1), 0)))
    return float(np.sqrt(max((l + m) * (l - m + 1), 0)))


def kinetic_psh_rt(l: int, m: int, sign: int, r, theta, omega=None):
    """Vectorised analytic ``L_sign y_l^m = c y_l^{m+sign} / omega``."""
    r = np.asarray(r, dtype=float)
    if omega is None:
        omega = np.sqrt(np.clip((1.0 - r) * (1.0 + r), 0.0, None))
    if np.any(omega <= 0.0):
        raise DomainError("kinetic moments of PSHs are singular on the rim r = 1")
    mp = m + (1 if sign > 0 else -1)
    c = kinetic_coefficient(l, m, sign)
    if c == 0.0 or abs(mp) > l:
        return np.zeros(np.broadcast(r, theta).shape, dtype=complex)
    return c * psh_rt(l, mp, r, theta, omega) / omega


def kinetic_psh(mode, sign, x: PolarPoint) -> complex:
    """``L+ y_l^m`` (``sign`` in ``{+1, '+'}``) or ``L- y_l^m`` at ``x``."""
    mode = _as_mode(mode)
    sgn = _sign(sign)
    if x.r >= 1.0:
        raise DomainError("kinetic moments of PSHs are singular on the rim r = 1")
    return complex(kinetic_psh_rt(mode.l, mode.m, sgn, x.r, x.theta))


def _sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def kinetic_fd(f: Callable[[float, float], complex], sign, x: PolarPoint, h: float = 1e-4) -> complex:
    """Central-difference ``L+/- f = e^{+-i theta} (+-df/dr + (i/r) df/dtheta)``.

    ``f`` is called as ``f(r, theta)``.
    """
    sgn = _sign(sign)
    if x.r <= h:
        raise ValueError(f"step h = {h} too large for r = {x.r}")
    r, th = x.r, x.theta
    dr = (f(r + h, th) - f(r - h, th)) / (2 * h)
    dth = (f(r, th + h) - f(r, th - h)) / (2 * h)
    return complex(np.exp(1j * sgn * th) * (sgn * dr + 1j * dth / r))
