"""Quadrature checks of the PSH eigenrelations and Calderon-type identities on the unit disk.

Strong checks (V, V-bar) integrate in polar coordinates centred at the
evaluation point, where the ``1/|x - y|`` singularity is cancelled by the
Jacobian and the rim factor ``omega^{-1}`` by ``rho = R (1 - u^2)``.

Weak checks (W, W-bar) use the curl-curl forms with PSH gradients from the
kinetic moments and reduce the 4-D integral by rotation invariance to a
2-D radial integral against the Fourier modes ``k_mu(r, s)`` of the kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .diskgeom import gauss01, weighted_disk_quad, weighted_rule_polar
from .kernels import OperatorKind
from .solve import SpectrumReport, mass_sandwich, preconditioned_extremes
from .specfun import DomainError, ModeIndex, PolarPoint, kinetic_coefficient, lam, psh_rt

_TWO_PI2 = 2.0 / np.pi ** 2


@dataclass(frozen=True)
class IdentityReport:
    """Computed versus reference values of one identity.

    ``rel_err = max|computed - reference| / max(max|reference|, scale)``;
    ``scale`` is the natural size of the identity and matters only when the
    reference vanishes (orthogonality checks).
    """

    identity: str
    modes: tuple
    computed: complex | np.ndarray
    reference: complex | np.ndarray
    rel_err: float
    params: dict = field(default_factory=dict)

    @classmethod
    def build(cls, identity, modes, computed, reference, params=None, scale=1e-300):
        c = np.asarray(computed)
        r = np.asarray(reference)
        err = float(np.max(np.abs(c - r)) / max(float(np.max(np.abs(r))), scale))
        unwrap = lambda v: v.item() if v.ndim == 0 else v  # noqa: E731
        return cls(identity, tuple(modes), unwrap(c), unwrap(r), err, dict(params or {}))

    def passed(self, tol: float) -> bool:
        return self.rel_err <= tol


def _mode(mode) -> ModeIndex:
    return mode if isinstance(mode, ModeIndex) else ModeIndex(*mode)


def _point(p) -> PolarPoint:
    return p if isinstance(p, PolarPoint) else PolarPoint(*p)


# ------------------------------------------------------------- strong checks


@lru_cache(maxsize=32)
def _u_rule(n):
    return gauss01(n)


def apply_weighted(kind, x: PolarPoint, g, n_u: int = 40, n_phi: int = 80) -> complex:
    """``int K(x, y) g(y) / omega(y) dy`` over the unit disk for ``K`` of V or V-bar.

    ``g(r, theta, omega)`` must be smooth on the closed disk.
    """
    kind = OperatorKind(kind)
    if kind not in (OperatorKind.V, OperatorKind.VBAR):
        raise ValueError("strong evaluation is available for V and V-bar only")
    if x.r >= 1.0:
        raise DomainError("evaluation point must be interior")
    xv = x.xy
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    e = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    xe = e @ xv
    c = (1.0 - x.r) * (1.0 + x.r)
    disc = np.sqrt(xe * xe + c)
    R = disc - xe
    # R * rho_minus = -c; avoids cancellation in -xe - disc
    rho_minus = -c / R
    u, wu = _u_rule(n_u)
    rho = R[:, None] * (1.0 - u[None, :] ** 2)
    gap = np.sqrt(rho - rho_minus[:, None])
    om_y = u[None, :] * np.sqrt(R)[:, None] * gap
    # d rho / omega = 2 sqrt(R) / sqrt(rho - rho_minus) du
    jac = 2.0 * np.sqrt(R)[:, None] / gap * wu[None, :] * (2 * np.pi / n_phi)
    y = xv[None, None, :] + rho[..., None] * e[:, None, :]
    ry = np.minimum(np.hypot(y[..., 0], y[..., 1]), 1.0)
    ty = np.arctan2(y[..., 1], y[..., 0])
    if kind is OperatorKind.V:
        dk = 1.0 / (4 * np.pi)
    else:
        dk = _TWO_PI2 * np.arctan2(x.omega() * om_y, rho)
    return complex(np.sum(dk * g(ry, ty, om_y) * jac))


def _psh_g(mode):
    return lambda r, t, om: psh_rt(mode.l, mode.m, r, t, om)


def _strong(identity, kind, mode, points, factor, n_u, n_phi):
    pts = [_point(p) for p in points]
    for p in pts:
        if p.r > 0.8 + 1e-12:
            raise DomainError("evaluation points must satisfy r <= 0.8")
    comp = np.array([apply_weighted(kind, p, _psh_g(mode), n_u, n_phi) for p in pts])
    ref = np.array([factor * complex(psh_rt(mode.l, mode.m, p.r, p.theta)) for p in pts])
    return IdentityReport.build(identity, [(mode.l, mode.m)], comp, ref,
                                {"n_u": n_u, "n_phi": n_phi, "points": [(p.r, p.theta) for p in pts]})


def verify_wolfe(mode, eval_points, n_u: int = 40, n_phi: int = 80) -> IdentityReport:
    """Strong check of ``V(y/omega) = (lambda/4) y`` for ``l + m`` even."""
    mode = _mode(mode)
    if not mode.is_even:
        raise DomainError("the V eigenrelation holds for l + m even")
    return _strong("wolfe", OperatorKind.V, mode, eval_points, lam(mode) / 4, n_u, n_phi)


def verify_vbar(mode, eval_points, n_u: int = 40, n_phi: int = 80) -> IdentityReport:
    """Strong check of ``V-bar(y/omega) = lambda y`` for ``l + m`` odd."""
    mode = _mode(mode)
    if mode.is_even:
        raise DomainError("the V-bar eigenrelation holds for l + m odd")
    return _strong("vbar", OperatorKind.VBAR, mode, eval_points, lam(mode), n_u, n_phi)


def parity_exclusion(mode, eval_points, n_u: int = 40, n_phi: int = 80) -> float:
    """Spread of ``V(y/omega)(x) / y(x)`` over points for an odd mode.

    A diagonal action would give a constant ratio; the returned relative
    spread ``(max - min) / mean`` is clearly nonzero for the true operator.
    """
    mode = _mode(mode)
    if mode.is_even:
        raise DomainError("parity exclusion concerns l + m odd")
    ratios = []
    for p in map(_point, eval_points):
        num = apply_weighted("V", p, _psh_g(mode), n_u, n_phi)
        den = complex(psh_rt(mode.l, mode.m, p.r, p.theta))
        ratios.append((num / den).real)
    ratios = np.array(ratios)
    return float((ratios.max() - ratios.min()) / abs(ratios.mean()))


# --------------------------------------------------------------- weak checks


def _fourier_kernel(kind, mu: int, alpha, beta, n_tau: int, n_psi: int):
    """``k_mu(r, s) = int_0^{2 pi} cos(mu psi) K(|x - y|) dpsi`` at ``r = sin(alpha)``, ``s = sin(beta)``.

    On ``[0, 1]`` the substitution ``psi = eps sinh tau`` with
    ``eps = |r - s| / sqrt(r s)`` resolves the near-diagonal peak.
    """
    alpha = np.asarray(alpha, dtype=float)[..., None]
    beta = np.asarray(beta, dtype=float)[..., None]
    r, s = np.sin(alpha), np.sin(beta)
    # r - s without cancellation near alpha = beta
    diff = 2 * np.cos(0.5 * (alpha + beta)) * np.sin(0.5 * (alpha - beta))
    om = np.cos(alpha) * np.cos(beta)

    def kern(psi):
        d = np.sqrt(diff ** 2 + 4 * r * s * np.sin(psi / 2) ** 2)
        if kind is OperatorKind.V:
            return np.cos(mu * psi) / (4 * np.pi * d)
        return np.cos(mu * psi) * _TWO_PI2 * np.arctan2(om, d) / d

    eps = np.abs(diff) / np.sqrt(r * s)
    tmax = np.arcsinh(1.0 / eps)
    t, wt = gauss01(n_tau)
    tau = tmax * t
    psi = eps * np.sinh(tau)
    part1 = np.sum(kern(psi) * eps * np.cosh(tau) * tmax * wt, axis=-1)
    p, wp = gauss01(n_psi)
    psi2 = 1.0 + (np.pi - 1.0) * p
    part2 = np.sum(kern(psi2) * (np.pi - 1.0) * wp, axis=-1)
    return 2.0 * (part1 + part2)


def radial_form(kind, mu: int, f_tilde, g_tilde, n_outer: int = 40, n_inner: int = 40,
                n_tau: int = 48, n_psi: int = 32) -> complex:
    """``int int K(x, y) F(y) conj(G(x)) dx dy`` for ``F = f_tilde(r) e^{i mu theta} / omega``.

    ``f_tilde`` and ``g_tilde`` take the angle ``alpha`` with ``r = sin(alpha)``
    so that ``dr / omega = d alpha``.  The logarithmic diagonal singularity
    of ``k_mu`` is handled by splitting the inner integral at ``beta = alpha``
    with cubic grading towards the split.
    """
    kind = OperatorKind(kind)
    a, wa = gauss01(n_outer)
    alpha = 0.5 * np.pi * a
    wa = 0.5 * np.pi * wa
    t, wt = gauss01(n_inner)
    g3, dg3 = t ** 3, 3 * t ** 2 * wt
    lo = alpha[:, None] * (1.0 - g3[None, :])
    wlo = alpha[:, None] * dg3[None, :]
    hi = alpha[:, None] + (0.5 * np.pi - alpha[:, None]) * g3[None, :]
    whi = (0.5 * np.pi - alpha[:, None]) * dg3[None, :]
    beta = np.concatenate([lo, hi], axis=1)
    wb = np.concatenate([wlo, whi], axis=1)
    s = np.sin(beta)
    k = _fourier_kernel(kind, mu, np.broadcast_to(alpha[:, None], beta.shape), beta, n_tau, n_psi)
    inner = np.sum(f_tilde(beta) * s * k * wb, axis=1)
    return complex(2 * np.pi * np.sum(np.conj(g_tilde(alpha)) * np.sin(alpha) * inner * wa))


def _raised(l, m):
    return lambda ang: psh_rt(l, m, np.sin(ang), 0.0, np.cos(ang))


def psh_dual_weight(mode, n_r: int = 64, n_theta: int = 128) -> complex:
    """``<y_l^m, omega^{-1}>`` by the weighted disk rule."""
    mode = _mode(mode)
    rule = weighted_disk_quad(1.0, n_r, n_theta)
    r, th, om = weighted_rule_polar(rule, 1.0)
    return complex(np.sum(rule.weights * psh_rt(mode.l, mode.m, r, th, om)))


def kinetic_form(kind, mode1, mode2, **quad) -> complex:
    """Curl-curl form ``int int K curl y1 . curl conj(y2)`` via kinetic moments.

    Uses ``grad u . grad v = -(1/2)(L+u L-v + L-u L+v)`` and
    ``L-(conj f) = -conj(L+ f)``, so the form equals
    ``(1/2) sum_{+-} c1 c2 B(y1^{m1+-1}/omega, y2^{m2+-1}/omega)``.
    Modes of different order give exactly zero by rotation invariance.
    """
    m1, m2 = _mode(mode1), _mode(mode2)
    if m1.m != m2.m:
        return 0j
    total = 0j
    for sgn in (1, -1):
        c1 = kinetic_coefficient(m1.l, m1.m, sgn)
        c2 = kinetic_coefficient(m2.l, m2.m, sgn)
        mu = m1.m + sgn
        if c1 == 0.0 or c2 == 0.0 or abs(mu) > min(m1.l, m2.l):
            continue
        total += 0.5 * c1 * c2 * radial_form(kind, mu, _raised(m1.l, mu), _raised(m2.l, mu), **quad)
    return total


def verify_krenk(mode1, mode2, **quad) -> IdentityReport:
    """Weak check ``<W y1, conj y2> = delta / (2 lambda)`` for odd modes."""
    m1, m2 = _mode(mode1), _mode(mode2)
    if m1.is_even or m2.is_even:
        raise DomainError("the W eigenrelation holds for l + m odd")
    comp = kinetic_form(OperatorKind.V, m1, m2, **quad)
    diag = 0.5 / lam(m1)
    ref = diag if m1 == m2 else 0.0
    return IdentityReport.build("krenk", [(m1.l, m1.m), (m2.l, m2.m)], comp, ref, quad, scale=diag)


def wbar_form(mode1, mode2, **quad) -> complex:
    """Regularized W-bar form: V-bar curl-curl part plus ``(2/pi^2) <y1,1/omega> conj<y2,1/omega>``."""
    curl = kinetic_form(OperatorKind.VBAR, mode1, mode2, **quad)
    reg = _TWO_PI2 * psh_dual_weight(mode1) * np.conj(psh_dual_weight(mode2))
    return curl + reg


def verify_wbar_modes(mode1, mode2, **quad) -> IdentityReport:
    """Weak check ``<W-bar y1, conj y2> = 2 delta / lambda`` for even modes."""
    m1, m2 = _mode(mode1), _mode(mode2)
    if not (m1.is_even and m2.is_even):
        raise DomainError("the W-bar eigenrelation holds for l + m even")
    comp = wbar_form(m1, m2, **quad)
    diag = 2.0 / lam(m1)
    ref = diag if m1 == m2 else 0.0
    return IdentityReport.build("wbar", [(m1.l, m1.m), (m2.l, m2.m)], comp, ref, quad, scale=diag)


def radial_bump(x, y):
    return np.exp(-4.0 * (x * x + y * y))


def verify_wbar_one(n_r: int = 64, n_theta: int = 128) -> list[IdentityReport]:
    """``<W-bar 1, v>`` through the regularized form against ``(4/pi) <omega^{-1}, v>``.

    The curl term vanishes for the constant, leaving
    ``(2/pi^2) <1, 1/omega> <v, 1/omega>``; test functions are ``1``,
    ``y_2^0`` and a Gaussian radial bump.
    """
    rule = weighted_disk_quad(1.0, n_r, n_theta)
    r, th, om = weighted_rule_polar(rule, 1.0)
    x, y = rule.nodes[:, 0], rule.nodes[:, 1]
    tests = {
        "one": np.ones_like(r),
        "y20": psh_rt(2, 0, r, th, om).real,
        "bump": radial_bump(x, y),
    }
    q1 = float(np.sum(rule.weights))
    out = []
    for name, v in tests.items():
        qv = float(np.sum(rule.weights * v))
        regularized = _TWO_PI2 * q1 * qv
        direct = (4.0 / np.pi) * qv
        out.append(IdentityReport.build(f"wbar1:{name}", [(0, 0)], regularized, direct,
                                        {"n_r": n_r, "n_theta": n_theta}, scale=1.0))
    return out


def composition_product(mode, point=(0.3, 0.9), **quad) -> IdentityReport:
    """``(V eigenvalue) x (W-bar eigenvalue)`` for an even mode; equals 1 if ``W-bar V = Id``.

    The V eigenvalue is ``V(y/omega)(x) / y(x)`` at ``point``; the W-bar one
    is the diagonal weak form divided by the norm ``1/2``.
    """
    mode = _mode(mode)
    if not mode.is_even:
        raise DomainError("composition is tested on l + m even")
    p = _point(point)
    y = complex(psh_rt(mode.l, mode.m, p.r, p.theta))
    v_eig = apply_weighted("V", p, _psh_g(mode)) / y
    w_eig = wbar_form(mode, mode, **quad) / 0.5
    return IdentityReport.build("composition", [(mode.l, mode.m)], (v_eig * w_eig).real, 1.0,
                                {"point": (p.r, p.theta), **quad})


# ---------------------------------------------------------------- discrete


def _check_spd(name, A):
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        from .solve import DefinitenessError
        raise DefinitenessError(f"{name} is not positive definite") from exc


def calderon_discrete(Vh, Wbar_h, M) -> SpectrumReport:
    """Extreme eigenvalues of ``(M^{-1} W-bar_h M^{-1}) V_h`` (all on P1)."""
    A, B, M = (np.asarray(getattr(X, "entries", X), dtype=float) for X in (Vh, Wbar_h, M))
    for name, X in (("V_h", A), ("W-bar_h", B), ("M", M)):
        _check_spd(name, X)
    return preconditioned_extremes(A, mass_sandwich(B, M))


def calderon_discrete_dual(Wh, Vbar_h, M0) -> SpectrumReport:
    """Extreme eigenvalues of ``(M0^{-1} V-bar_h M0^{-1}) W_h`` (all on P1_0)."""
    return calderon_discrete(Wh, Vbar_h, M0)
