"""Indirect Rabi model Hamiltonians and their frame coefficients.

Frequencies are in units of ``omega_b`` throughout the package (figures and
the CLI fix ``omega_b = 1``), but the formulas keep ``omega_b`` explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    MODE_A,
    MODE_B,
    SPIN,
    HermitianOperator,
    Truncation,
    embed_product,
    fock_lowering,
    fock_number,
    fock_quadrature_squared,
    pauli,
)


class UnstableFrameError(ValueError):
    """A squeezing frame needed by the reduction has no real squeeze parameter."""


@dataclass(frozen=True)
class ModelParams:
    omega_a: float = 40.0
    omega_b: float = 1.0
    omega_q: float = 5.0
    g: float = 0.0
    J: float = 0.0

    def __post_init__(self):
        for name in ("omega_a", "omega_b", "omega_q"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.g < 0 or self.J < 0:
            raise ValueError("couplings g and J must be non-negative")

    @classmethod
    def from_dimensionless(cls, g_tilde, j_tilde, omega_a=40.0, omega_q=5.0, omega_b=1.0):
        g = g_tilde * math.sqrt(omega_a * omega_q) / 2
        J = j_tilde * math.sqrt(omega_a * omega_b) / 2
        return cls(omega_a=omega_a, omega_b=omega_b, omega_q=omega_q, g=g, J=J)

    @property
    def delta_b(self):
        return self.omega_a - self.omega_b

    @property
    def delta_q(self):
        return self.omega_a - self.omega_q

    @property
    def eta_b(self):
        return self.omega_a + self.omega_b

    @property
    def eta_q(self):
        return self.omega_a + self.omega_q

    @property
    def dimensionless(self) -> DimensionlessCouplings:
        return DimensionlessCouplings(
            g_tilde=2 * self.g / math.sqrt(self.omega_a * self.omega_q),
            j_tilde=2 * self.J / math.sqrt(self.omega_a * self.omega_b),
        )

    def replace(self, **changes) -> ModelParams:
        values = dict(omega_a=self.omega_a, omega_b=self.omega_b, omega_q=self.omega_q,
                      g=self.g, J=self.J)
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class DimensionlessCouplings:
    g_tilde: float
    j_tilde: float

    def to_params(self, omega_a=40.0, omega_q=5.0, omega_b=1.0) -> ModelParams:
        return ModelParams.from_dimensionless(self.g_tilde, self.j_tilde, omega_a, omega_q, omega_b)


@dataclass(frozen=True)
class EffectiveParams:
    mu_q: float
    nu_q: float
    mu_b: float
    nu_b: float
    chi: float
    xi: float
    c_coeff: float
    f_coeff: float
    r: float
    omega_r: float
    chi_r: float
    c_r: float


@dataclass(frozen=True)
class A2Params:
    d_tilde: float
    r_a: float
    omega_a_bar: float
    g_bar: float
    j_bar: float
    r_A: float
    omega_r_A: float
    chi_r_A: float

    def barred_model(self, params: ModelParams) -> ModelParams:
        """The A^2-free model with renormalized auxiliary frequency and couplings."""
        return params.replace(omega_a=self.omega_a_bar, g=self.g_bar, J=self.j_bar)


@dataclass(frozen=True)
class AnisotropicParams:
    j1: float
    j2: float
    chi1: float
    chi2: float
    xi1: float
    xi2: float
    r_prime: float
    omega_r_prime: float
    chi1r: float
    chi2r: float
    c_r_prime: float
    c1_coeff: float  # dropped C1 (2 a^dag a + 1)
    c2_coeff: float  # dropped C2 (a^2 + a^dag^2)
    f_coeff: float


def _squeeze_parameter(argument, what):
    if not argument > 0:
        raise UnstableFrameError(
            f"squeezed frame unstable: {what} = {argument:.6g} <= 0"
        )
    return -0.25 * math.log(argument)


def _require_large_detuning(params: ModelParams):
    if params.delta_b <= 0 or params.delta_q <= 0:
        raise ValueError(
            "effective reduction needs omega_a > omega_b and omega_a > omega_q "
            f"(got omega_a={params.omega_a}, omega_b={params.omega_b}, omega_q={params.omega_q})"
        )


def effective_params(params: ModelParams) -> EffectiveParams:
    """Coefficients of the auxiliary-mode elimination and the squeezed frame."""
    _require_large_detuning(params)
    p = params
    g, J = p.g, p.J
    chi = g * J * (1 / p.delta_b + 1 / p.eta_b + 1 / p.delta_q + 1 / p.eta_q) / 2
    xi = J**2 * (1 / p.delta_b + 1 / p.eta_b) / 2
    c_coeff = J**2 / 2 * (1 / p.delta_b - 1 / p.eta_b)
    f_coeff = -(g**2) / 2 * (1 / p.delta_q - 1 / p.eta_q)
    r = _squeeze_parameter(1 - 4 * xi / p.omega_b, "1 - 4 xi / omega_b")
    return EffectiveParams(
        mu_q=g / p.eta_q,
        nu_q=g / p.delta_q,
        mu_b=J / p.eta_b,
        nu_b=J / p.delta_b,
        chi=chi,
        xi=xi,
        c_coeff=c_coeff,
        f_coeff=f_coeff,
        r=r,
        omega_r=p.omega_b * math.exp(-2 * r),
        chi_r=chi * math.exp(r),
        c_r=p.omega_b / 2 * (math.exp(-2 * r) - 1),
    )


def _spin_boson_parts(trunc: Truncation):
    nb = trunc.n_b_max
    b = fock_lowering(nb)
    return {
        "sz": embed_product({SPIN: pauli("z").real}, trunc),
        "sx": embed_product({SPIN: pauli("x").real}, trunc),
        "sp": embed_product({SPIN: pauli("plus").real}, trunc),
        "sm": embed_product({SPIN: pauli("minus").real}, trunc),
        "nb": embed_product({MODE_B: fock_number(nb)}, trunc),
        "xb": embed_product({MODE_B: b + b.T}, trunc),
        "xb2": embed_product({MODE_B: fock_quadrature_squared(nb)}, trunc),
        "b": b,
    }


def _require_no_a(trunc: Truncation, what: str):
    if trunc.include_a:
        raise ValueError(f"{what} acts on (mode_b, spin); use Truncation.effective(n_b_max)")


def build_full(params: ModelParams, trunc: Truncation) -> HermitianOperator:
    """Qubit + auxiliary mode a + mode b, coupled only through a."""
    if not trunc.include_a:
        raise ValueError("full model requires auxiliary mode")
    return _full_hamiltonian(params, trunc, hopping=(params.J, params.J))


def build_full_anisotropic(params: ModelParams, j1: float, j2: float,
                           trunc: Truncation) -> HermitianOperator:
    """Full model with hopping ``j1 (a b^dag + a^dag b) + j2 (a b + a^dag b^dag)``."""
    if not trunc.include_a:
        raise ValueError("full model requires auxiliary mode")
    return _full_hamiltonian(params, trunc, hopping=(j1, j2))


def build_full_a2(params: ModelParams, d_tilde: float, trunc: Truncation) -> HermitianOperator:
    """Full model plus ``D (a^dag + a)^2`` with ``D = d_tilde g^2 / omega_q``."""
    if not trunc.include_a:
        raise ValueError("full model requires auxiliary mode")
    if d_tilde < 0:
        raise ValueError("d_tilde must be >= 0")
    h = _full_hamiltonian(params, trunc, hopping=(params.J, params.J))
    xa2 = embed_product({MODE_A: fock_quadrature_squared(trunc.n_a_max)}, trunc)
    return h + xa2 * (d_tilde * params.g**2 / params.omega_q)


def _full_hamiltonian(params, trunc, hopping):
    j1, j2 = hopping
    a = fock_lowering(trunc.n_a_max)
    b = fock_lowering(trunc.n_b_max)
    ops = lambda **kw: embed_product(kw, trunc)  # noqa: E731
    h = (
        ops(spin=pauli("z").real) * (params.omega_q / 2)
        + ops(mode_a=fock_number(trunc.n_a_max)) * params.omega_a
        + ops(mode_b=fock_number(trunc.n_b_max)) * params.omega_b
        + ops(mode_a=a + a.T, spin=pauli("x").real) * params.g
    )
    if j1 == j2:
        h = h + ops(mode_a=a + a.T, mode_b=b + b.T) * j1
    else:
        h = (h + (ops(mode_a=a, mode_b=b.T) + ops(mode_a=a.T, mode_b=b)) * j1
             + (ops(mode_a=a, mode_b=b) + ops(mode_a=a.T, mode_b=b.T)) * j2)
    return h


def build_effective(params: ModelParams, trunc: Truncation) -> HermitianOperator:
    """Spin-boson model left after eliminating the auxiliary mode."""
    _require_no_a(trunc, "the effective model")
    eff = effective_params(params)
    t = _spin_boson_parts(trunc)
    return (t["sz"] * (params.omega_q / 2) + t["nb"] * params.omega_b
            - t["xb"] @ t["sx"] * eff.chi - t["xb2"] * eff.xi)


def _rabi(omega_q, omega, coupling, constant, trunc):
    t = _spin_boson_parts(trunc)
    h = t["sz"] * (omega_q / 2) + t["nb"] * omega - t["xb"] @ t["sx"] * coupling
    if constant:
        h = h + HermitianOperator(h.basis, sp.identity(h.dim, format="csr") * constant)
    return h


def build_squeezed_rabi(params: ModelParams, trunc: Truncation) -> HermitianOperator:
    """Effective model in the frame that removes the ``(b + b^dag)^2`` term.

    The frame constant ``C_r`` sits on the diagonal so energies compare
    directly with :func:`build_effective`.
    """
    _require_no_a(trunc, "the squeezed Rabi model")
    eff = effective_params(params)
    return _rabi(params.omega_q, eff.omega_r, eff.chi_r, eff.c_r, trunc)


def a2_params(params: ModelParams, d_tilde: float) -> A2Params:
    """Renormalized couplings and effective-frame values with the A^2 term."""
    if d_tilde < 0:
        raise ValueError("d_tilde must be >= 0")
    p = params
    r_a = -0.25 * math.log1p(4 * d_tilde * p.g**2 / (p.omega_a * p.omega_q))
    omega_a_bar = p.omega_a * math.exp(-2 * r_a)
    g_bar = p.g * math.exp(r_a)
    j_bar = p.J * math.exp(r_a)
    d_b, d_q = omega_a_bar - p.omega_b, omega_a_bar - p.omega_q
    e_b, e_q = omega_a_bar + p.omega_b, omega_a_bar + p.omega_q
    if d_b <= 0 or d_q <= 0:
        raise ValueError("renormalized detunings must be positive")
    argument = 1 - 2 * j_bar**2 * (1 / d_b + 1 / e_b) / p.omega_b
    if not argument > 0:
        raise UnstableFrameError(
            f"unstable phase: 1 - 2 J_bar^2 (1/Delta_b + 1/eta_b) / omega_b = {argument:.6g} <= 0"
        )
    r_A = -0.25 * math.log(argument)
    chi_r_A = g_bar * j_bar * math.exp(r_A) / 2 * (1 / d_q + 1 / e_q + 1 / d_b + 1 / e_b)
    return A2Params(
        d_tilde=d_tilde, r_a=r_a, omega_a_bar=omega_a_bar, g_bar=g_bar, j_bar=j_bar,
        r_A=r_A, omega_r_A=p.omega_b * math.exp(-2 * r_A), chi_r_A=chi_r_A,
    )


def build_effective_a2(params: ModelParams, d_tilde: float, trunc: Truncation) -> HermitianOperator:
    """Effective Rabi model with the A^2 term, in its squeezed frame (no constant)."""
    _require_no_a(trunc, "the effective A^2 model")
    a2 = a2_params(params, d_tilde)
    return _rabi(params.omega_q, a2.omega_r_A, a2.chi_r_A, 0.0, trunc)


def anisotropic_params(params: ModelParams, j1: float, j2: float) -> AnisotropicParams:
    """Effective couplings for unequal rotating (j1) and counter-rotating (j2) hopping.

    ``params.J`` is ignored.
    """
    _require_large_detuning(params)
    if j1 < 0 or j2 < 0:
        raise ValueError("hopping amplitudes must be non-negative")
    p, g = params, params.g
    chi1 = (g * j2 / p.eta_b + g * j1 / p.delta_b + g * j2 / p.eta_q + g * j1 / p.delta_q) / 2
    chi2 = (g * j2 / p.eta_b + g * j1 / p.delta_b + g * j2 / p.delta_q + g * j1 / p.eta_q) / 2
    xi1 = (j2**2 / p.eta_b + j1**2 / p.delta_b) / 2
    xi2 = (j1 * j2 / p.delta_b + j1 * j2 / p.eta_b) / 2
    stiffness = p.omega_b - 2 * xi1 + 2 * xi2
    if not stiffness > 0:
        raise UnstableFrameError(f"unstable regime: omega_b - 2 xi1 + 2 xi2 = {stiffness:.6g} <= 0")
    r = _squeeze_parameter(1 - 4 * xi2 / stiffness, "1 - 4 xi2 / (omega_b - 2 xi1 + 2 xi2)")
    ch, shh = math.cosh(2 * r), math.sinh(2 * r)
    # a-mode terms dropped by the reduction, kept as diagnostics
    c1 = (j1**2 / p.delta_b - j2**2 / p.eta_b) / 2
    c2 = j1 * j2 / 2 * (1 / p.delta_b - 1 / p.eta_b)
    f_coeff = -(g**2) / 2 * (1 / p.delta_q - 1 / p.eta_q)
    return AnisotropicParams(
        j1=j1, j2=j2, chi1=chi1, chi2=chi2, xi1=xi1, xi2=xi2, r_prime=r,
        omega_r_prime=(p.omega_b - 2 * xi1) * ch - 2 * xi2 * shh,
        chi1r=((chi1 + chi2) * math.exp(r) + (chi1 - chi2) * math.exp(-r)) / 2,
        chi2r=((chi1 + chi2) * math.exp(r) - (chi1 - chi2) * math.exp(-r)) / 2,
        c_r_prime=p.omega_b / 2 * (ch - 1) - xi1 * ch - xi2 * shh,
        c1_coeff=c1, c2_coeff=c2, f_coeff=f_coeff,
    )


def _anisotropic_couplings(t, rotating, counter):
    b = t["b"]
    trunc_basis = t["sz"].basis
    ops = lambda **kw: embed_product(kw, trunc_basis)  # noqa: E731
    sp_, sm_ = pauli("plus").real, pauli("minus").real
    rot = ops(mode_b=b.T, spin=sm_) + ops(mode_b=b, spin=sp_)
    ctr = ops(mode_b=b.T, spin=sp_) + ops(mode_b=b, spin=sm_)
    return rot * (-rotating) + ctr * (-counter)


def build_anisotropic_effective(params: ModelParams, j1: float, j2: float,
                                trunc: Truncation) -> HermitianOperator:
    _require_no_a(trunc, "the anisotropic effective model")
    ap = anisotropic_params(params, j1, j2)
    t = _spin_boson_parts(trunc)
    nb = trunc.n_b_max
    b = t["b"]
    pair = embed_product({MODE_B: (b @ b + (b @ b).T).tocsr()}, trunc)
    # b^dag b + b b^dag = 2 n + 1, exact on the retained levels
    sym_number = embed_product({MODE_B: sp.diags(2 * np.arange(nb + 1) + 1.0)}, trunc)
    return (t["sz"] * (params.omega_q / 2) + t["nb"] * params.omega_b
            + _anisotropic_couplings(t, ap.chi1, ap.chi2)
            - pair * ap.xi2 - sym_number * ap.xi1)


def build_anisotropic_squeezed(params: ModelParams, j1: float, j2: float,
                               trunc: Truncation) -> HermitianOperator:
    """Anisotropic Rabi form of the effective model, frame constant included."""
    _require_no_a(trunc, "the anisotropic squeezed model")
    ap = anisotropic_params(params, j1, j2)
    t = _spin_boson_parts(trunc)
    h = (t["sz"] * (params.omega_q / 2) + t["nb"] * ap.omega_r_prime
         + _anisotropic_couplings(t, ap.chi1r, ap.chi2r))
    return h + HermitianOperator(h.basis, sp.identity(h.dim, format="csr") * ap.c_r_prime)


def fn_validity(params: ModelParams, d_tilde: float = 0.0, hopping=None) -> dict:
    """Size of the dropped a-mode terms relative to the kept couplings.

    Returns ``{"c_ratio": |C| / xi, "f_ratio": |F| / chi}``; both should be
    well below 1 for the reduction to hold.  With the A^2 term the ratios are
    taken for the renormalized model.  With ``hopping=(j1, j2)`` each dropped
    a-mode term is compared with the b-mode term of the same operator
    structure (``C1`` with ``xi1``, ``C2`` with ``xi2``) and ``F`` with the
    weaker of ``chi1`` and ``chi2``.
    """
    ratio = lambda num, den: abs(num) / den if den > 0 else (0.0 if num == 0 else math.inf)  # noqa: E731
    if hopping is not None:
        ap = anisotropic_params(params, *hopping)
        return {"c_ratio": max(ratio(ap.c1_coeff, ap.xi1), ratio(ap.c2_coeff, ap.xi2)),
                "f_ratio": ratio(ap.f_coeff, min(ap.chi1, ap.chi2))}
    if d_tilde:
        params = a2_params(params, d_tilde).barred_model(params)
    p = params
    xi = p.J**2 * (1 / p.delta_b + 1 / p.eta_b) / 2
    chi = p.g * p.J * (1 / p.delta_b + 1 / p.eta_b + 1 / p.delta_q + 1 / p.eta_q) / 2
    c = p.J**2 / 2 * (1 / p.delta_b - 1 / p.eta_b)
    f = -(p.g**2) / 2 * (1 / p.delta_q - 1 / p.eta_q)
    return {"c_ratio": ratio(c, xi), "f_ratio": ratio(f, chi)}
