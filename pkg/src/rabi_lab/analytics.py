"""Closed-form criticality results for the indirect Rabi model.

Two families of formulas live here.  The *dimensionless* ones are the
classical-oscillator limit written in ``g_tilde``/``j_tilde`` (and
``d_tilde`` for the A^2 term); the *exact* ones keep the finite detunings
and go through :func:`~rabi_lab.hamiltonians.effective_params`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .hamiltonians import (
    ModelParams,
    UnstableFrameError,
    a2_params,
    anisotropic_params,
    effective_params,
)

DEFAULT_BOUNDARY_TOL = 1e-6


class PhaseLabel(str, enum.Enum):
    NP = "NP"
    SP = "SP"
    UP = "UP"
    BOUNDARY = "BOUNDARY"

    def __str__(self):
        return self.value


class PhaseError(ValueError):
    """A phase-specific solution was requested outside its phase."""


@dataclass(frozen=True)
class NpSolution:
    epsilon_np: float
    e_g: float
    r_np: float
    r: float

    def rescaled_occupation(self, params: ModelParams) -> float:
        """Rescaled ``<b^dag b>`` of the squeezed-vacuum ground state."""
        return (math.exp(-4 * self.r) * params.omega_b / params.omega_q
                * math.sinh(self.r + self.r_np) ** 2)


@dataclass(frozen=True)
class SpSolution:
    alpha: float
    theta: float
    r_sp: float
    epsilon_sp: float
    e_g_tilde: float
    spin_minus_coeffs: tuple  # amplitudes of (|down>, |up>) in |down>_+/-
    r: float
    branch: str

    @property
    def coherence(self) -> float:
        """Lab-frame ``<b>`` of the symmetry-broken ground state."""
        return math.exp(self.r) * self.alpha

    @property
    def spinor(self) -> np.ndarray:
        """``|down>_+/-`` in the ``(|up>, |down>)`` basis."""
        down, up = self.spin_minus_coeffs
        return np.array([up, down], dtype=complex)


def critical_coupling_dimensionless(j_tilde: float) -> float:
    if not 0 < j_tilde < 1:
        raise ValueError(f"j_tilde must lie in (0, 1), got {j_tilde!r}")
    return math.sqrt(1 - j_tilde**2) / j_tilde


def critical_coupling_dimensional(params: ModelParams) -> float:
    """Coupling ``g`` at which the normal-phase excitation energy vanishes."""
    p = params
    eff = effective_params(p)  # raises when the squeezed frame is unstable
    sum_b = 1 / p.delta_b + 1 / p.eta_b
    total = sum_b + 1 / p.delta_q + 1 / p.eta_q
    if p.J == 0:
        return math.inf
    return math.sqrt(p.omega_q * (p.omega_b - 4 * eff.xi)) / (p.J * total)


def _eq6(g_tilde, j_tilde):
    gj2 = (g_tilde * j_tilde) ** 2
    return gj2 / (4 - 4 * j_tilde**2) - (1 - j_tilde**2) / (4 * gj2)


def order_parameter_analytic(g_tilde: float, j_tilde: float, form: str = "dimensionless",
                             omega_a: float = 40.0, omega_q: float = 5.0,
                             omega_b: float = 1.0) -> float:
    """Rescaled occupation ``n_b`` of the ground state.

    ``form="dimensionless"`` uses the classical-oscillator limit;
    ``form="exact"`` keeps the finite frequencies passed in.
    """
    if form == "dimensionless":
        if not 0 <= j_tilde < 1:
            raise UnstableFrameError(f"squeezed frame unstable for j_tilde = {j_tilde}")
        if g_tilde <= 0 or j_tilde == 0:
            return 0.0
        if g_tilde <= critical_coupling_dimensionless(j_tilde):
            return 0.0
        return max(_eq6(g_tilde, j_tilde), 0.0)
    if form == "exact":
        params = ModelParams.from_dimensionless(g_tilde, j_tilde, omega_a, omega_q, omega_b)
        return order_parameter_exact(params)
    raise ValueError(f"unknown form {form!r}; use 'dimensionless' or 'exact'")


def order_parameter_exact(params: ModelParams) -> float:
    eff = effective_params(params)
    if eff.chi == 0 or params.g <= critical_coupling_dimensional(params):
        return 0.0
    stiffness = params.omega_q * (params.omega_b - 4 * eff.xi)
    return max(eff.chi**2 / stiffness - stiffness / (16 * eff.chi**2), 0.0)


def reduced_coupling(params: ModelParams) -> float:
    """``chi_r' = 2 chi_r / sqrt(omega_r omega_q)``; equals 1 at the critical point."""
    eff = effective_params(params)
    return 2 * eff.chi_r / math.sqrt(eff.omega_r * params.omega_q)


def _sqrt_or_none(x):
    return math.sqrt(x) if x >= 0 else None


def excitation_energies(params: ModelParams):
    """``(epsilon_np, epsilon_sp)``; a branch outside its phase is ``None``."""
    eff = effective_params(params)
    w, chi, wq = eff.omega_r, eff.chi_r, params.omega_q
    ratio = 4 * chi**2 / (wq * w)  # chi_r'^2
    eps_np = _sqrt_or_none(w**2 * (1 - ratio)) if ratio <= 1 else None
    eps_sp = _sqrt_or_none(w**2 * (1 - ratio**-2)) if ratio >= 1 else None
    return eps_np, eps_sp


def np_solution(params: ModelParams) -> NpSolution:
    eff = effective_params(params)
    w, chi, wq = eff.omega_r, eff.chi_r, params.omega_q
    ratio = 4 * chi**2 / (wq * w)
    if ratio >= 1:
        raise PhaseError("parameters lie in the superradiant phase (SP); use sp_solution")
    eps = w * math.sqrt(1 - ratio)
    return NpSolution(
        epsilon_np=eps,
        e_g=(eps - w) / 2 - wq / 2 + eff.c_r,
        r_np=-0.25 * math.log(1 - ratio),
        r=eff.r,
    )


def sp_solution(params: ModelParams, branch: str = "+") -> SpSolution:
    if branch not in ("+", "-"):
        raise ValueError("branch must be '+' or '-'")
    eff = effective_params(params)
    w, chi, wq = eff.omega_r, eff.chi_r, params.omega_q
    if chi == 0 or 4 * chi**2 / (wq * w) <= 1:
        raise PhaseError("parameters lie in the normal phase (NP); use np_solution")
    red2 = 4 * chi**2 / (w * wq)
    sign = 1.0 if branch == "+" else -1.0
    alpha = sign * math.sqrt(wq / (4 * w) * (red2 - 1 / red2))
    theta = 0.5 * math.atan(-4 * chi * alpha / wq)
    cos2 = w * wq / (4 * chi**2)
    down = math.sqrt((1 + cos2) / 2)
    up = sign * math.sqrt((1 - cos2) / 2)
    q = wq**2 * w**2 / (16 * chi**4)
    return SpSolution(
        alpha=alpha,
        theta=theta,
        r_sp=-0.25 * math.log(1 - q),
        epsilon_sp=w * math.sqrt(1 - q),
        e_g_tilde=(0.5 * (math.sqrt(w**2 - wq**2 * w**4 / (16 * chi**4)) - w)
                   - chi**2 / w - wq**2 * w / (16 * chi**2) + eff.c_r),
        spin_minus_coeffs=(down, up),
        r=eff.r,
        branch=branch,
    )


# --- A^2 term ---------------------------------------------------------------

def a2_boundary_value(g_tilde: float, j_tilde: float, d_tilde: float) -> float:
    """Left-hand side of the approximate NP/SP boundary with the A^2 term.

    NP below 1, SP above 1.
    """
    s = 1 + d_tilde * g_tilde**2
    if not s - j_tilde**2 > 0:
        raise UnstableFrameError(
            f"unstable phase: j_tilde = {j_tilde} >= sqrt(1 + d_tilde g_tilde^2) = {math.sqrt(s):.6g}"
        )
    return g_tilde * j_tilde / s / math.sqrt(1 - j_tilde**2 / s)


def a2_order_parameter(g_tilde: float, j_tilde: float, d_tilde: float) -> float:
    b = a2_boundary_value(g_tilde, j_tilde, d_tilde)
    if b <= 1:
        return 0.0
    s = 1 + d_tilde * g_tilde**2
    gj2 = (g_tilde * j_tilde) ** 2
    return max(gj2 / (4 * s * (s - j_tilde**2)) - s * (s - j_tilde**2) / (4 * gj2), 0.0)


def a2_boundary_value_exact(params: ModelParams, d_tilde: float) -> float:
    """``2 chi_r^A / sqrt(omega_r^A omega_q)`` at finite frequencies.

    This is 1 where the A^2-frame excitation energy vanishes; it tends to
    :func:`a2_boundary_value` as ``omega_a / omega_b`` grows.
    """
    a2 = a2_params(params, d_tilde)
    return 2 * a2.chi_r_A / math.sqrt(a2.omega_r_A * params.omega_q)


def a2_boundary_roots(j_tilde: float, d_tilde: float) -> list:
    """All ``g_tilde > 0`` where the approximate A^2 boundary value equals 1.

    With ``u = g_tilde^2`` the condition is the quadratic
    ``d^2 u^2 + (2d - d J^2 - J^2) u + (1 - J^2) = 0``.
    """
    if d_tilde == 0:
        if 0 < j_tilde < 1:
            return [critical_coupling_dimensionless(j_tilde)]
        return []
    a = d_tilde**2
    b = 2 * d_tilde - d_tilde * j_tilde**2 - j_tilde**2
    c = 1 - j_tilde**2
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    roots = sorted({(-b - sq) / (2 * a), (-b + sq) / (2 * a)})
    out = []
    for u in roots:
        # only roots on the stable side count
        if u > 0 and 1 + d_tilde * u - j_tilde**2 > 0:
            out.append(math.sqrt(u))
    return out


def a2_threshold_j_tilde(d_tilde: float, g_tilde_floor: float) -> float:
    """``j_tilde`` at which the lower NP/SP boundary falls to ``g_tilde_floor``.

    Above this hopping the SP extends down to the floor of a finite
    ``g_tilde`` window.  Solves ``a2_boundary_value(floor, J, D) = 1`` on
    ``J`` in ``(0, sqrt(1 + D floor^2))``.
    """
    s = 1 + d_tilde * g_tilde_floor**2
    f = lambda j: a2_boundary_value(g_tilde_floor, j, d_tilde) - 1  # noqa: E731
    hi = math.sqrt(s) * (1 - 1e-12)
    return brentq(f, 1e-9, hi, xtol=1e-14)


def a2_no_sp_threshold_j_tilde(d_tilde: float) -> float:
    """Smallest ``j_tilde`` for which any ``g_tilde`` reaches the SP (``d_tilde < 1``).

    It is where the boundary quadratic becomes tangent (zero discriminant).
    """
    if not 0 < d_tilde < 1:
        raise ValueError("tangency threshold exists only for 0 < d_tilde < 1")
    # (2d - (1+d) x)^2 = 4 d^2 (1 - x), x = J^2
    a = (1 + d_tilde) ** 2
    b = -4 * d_tilde * (1 + d_tilde) + 4 * d_tilde**2
    x = -b / a  # the other root is x = 0
    return math.sqrt(x)


def classify_phase(g_tilde: float, j_tilde: float, d_tilde: float = 0.0,
                   tol: float = DEFAULT_BOUNDARY_TOL) -> PhaseLabel:
    s = 1 + d_tilde * g_tilde**2
    if j_tilde**2 >= s:
        return PhaseLabel.UP
    b = a2_boundary_value(g_tilde, j_tilde, d_tilde)
    if abs(b - 1) <= tol:
        return PhaseLabel.BOUNDARY
    return PhaseLabel.SP if b > 1 else PhaseLabel.NP


def classify_phase_exact(params: ModelParams, d_tilde: float = 0.0,
                         tol: float = DEFAULT_BOUNDARY_TOL) -> PhaseLabel:
    """Phase from the finite-frequency frames instead of the limit formulas."""
    try:
        value = a2_boundary_value_exact(params, d_tilde) if d_tilde else reduced_coupling(params)
    except UnstableFrameError:
        return PhaseLabel.UP
    if abs(value - 1) <= tol:
        return PhaseLabel.BOUNDARY
    return PhaseLabel.SP if value > 1 else PhaseLabel.NP


def anisotropic_boundary_value(params: ModelParams, j1: float, j2: float) -> float:
    """``(chi_1r + chi_2r) / sqrt(omega_r' omega_q)``; the SP lies above 1."""
    ap = anisotropic_params(params, j1, j2)
    return (ap.chi1r + ap.chi2r) / math.sqrt(ap.omega_r_prime * params.omega_q)


def classify_phase_anisotropic(params: ModelParams, j1: float, j2: float,
                               tol: float = DEFAULT_BOUNDARY_TOL) -> PhaseLabel:
    try:
        value = anisotropic_boundary_value(params, j1, j2)
    except UnstableFrameError:
        return PhaseLabel.UP
    if abs(value - 1) <= tol:
        return PhaseLabel.BOUNDARY
    return PhaseLabel.SP if value > 1 else PhaseLabel.NP
