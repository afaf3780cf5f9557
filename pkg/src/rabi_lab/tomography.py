"""Reduced states, qubit projection, Wigner functions and the analytic squeezed cat."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .hamiltonians import ModelParams
from .hilbert import MODE_B, SPIN, BasisDescriptor, Truncation, fock_lowering

NORM_TOL = 1e-6
MIN_PROBABILITY = 1e-12
TAIL_FRACTION = 0.1
TAIL_LIMIT = 1e-4
CAT_DEFECT_LIMIT = 1e-3
QUADRATURES = "x = (a + a^dag)/sqrt(2), y = (a - a^dag)/(sqrt(2) i)"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """State of one bosonic factor on Fock levels ``0..dim-1``."""

    matrix: np.ndarray = field(repr=False)
    label: str = MODE_B

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, psi, label: str = MODE_B) -> DensityMatrix:
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()), label)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def basis(self) -> BasisDescriptor:
        return BasisDescriptor(((self.label, self.dim),))

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.vdot(self.matrix, self.matrix).real)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(la.eigvalsh(self.matrix)[0])

    def populations(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    def tail_population(self, fraction: float = TAIL_FRACTION) -> float:
        """Population in the top ``fraction`` of retained Fock levels."""
        top = max(1, int(math.ceil(fraction * self.dim)))
        return float(self.populations()[-top:].sum())


@dataclass(frozen=True, eq=False)
class WignerGrid:
    x_values: np.ndarray
    y_values: np.ndarray
    values: np.ndarray = field(repr=False)  # values[i, j] = W(x_i, y_j)
    convention: str = QUADRATURES
    tail_population: float = 0.0
    tail_warning: bool = False
    imag_residue: float = 0.0

    def integral(self) -> float:
        dx = self.x_values[1] - self.x_values[0]
        dy = self.y_values[1] - self.y_values[0]
        return float(self.values.sum() * dx * dy)

    @property
    def min(self) -> float:
        return float(self.values.min())

    def marginal_x(self) -> np.ndarray:
        dy = self.y_values[1] - self.y_values[0]
        return self.values.sum(axis=1) * dy

    def lobe_centers(self) -> tuple:
        """Peaks of the ``x`` marginal on the left and right half lines.

        The marginal averages out interference fringes along ``y``, so its
        maxima sit on the cat components rather than the central fringe.
        """
        x = self.x_values
        marginal = self.marginal_x()
        left, right = x < 0, x > 0
        return float(x[left][np.argmax(marginal[left])]), float(x[right][np.argmax(marginal[right])])


def _factor_tensor(state, basis: BasisDescriptor) -> np.ndarray:
    psi = np.asarray(state)
    if psi.shape != (basis.dim,):
        raise ValueError(f"state of shape {psi.shape} does not match basis dimension {basis.dim}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > NORM_TOL:
        raise ValueError(f"state norm {norm:.8g} deviates from 1")
    return psi.reshape(basis.dims)


def reduce(state, basis, keep: str = MODE_B) -> DensityMatrix:
    """Partial trace of a pure composite state or a composite density matrix."""
    basis = basis if isinstance(basis, BasisDescriptor) else basis.basis
    axis = basis.labels.index(keep) if keep in basis.labels else None
    if axis is None:
        raise KeyError(f"basis has no factor {keep!r}; factors are {basis.labels}")
    arr = np.asarray(state)
    if arr.ndim == 1:
        psi = np.moveaxis(_factor_tensor(arr, basis), axis, 0).reshape(basis.dims[axis], -1)
        return DensityMatrix(psi @ psi.conj().T, keep)
    if arr.shape != (basis.dim, basis.dim):
        raise ValueError(f"density of shape {arr.shape} does not match basis dimension {basis.dim}")
    tr = np.trace(arr).real
    if abs(tr - 1) > NORM_TOL:
        raise ValueError(f"density trace {tr:.8g} deviates from 1")
    n = len(basis.dims)
    rho = arr.reshape(basis.dims * 2)
    letters = "abcdefghijklmnop"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i != axis:
            col[i] = row[i]
    spec = "".join(row) + "".join(col) + "->" + row[axis] + col[axis]
    return DensityMatrix(np.einsum(spec, rho), keep)


def project_qubit(state, basis, spinor) -> tuple:
    """Condition a composite state on finding the qubit in ``spinor``.

    ``spinor`` is given in the ``(|up>, |down>)`` basis.  Returns the
    renormalized state of the remaining factors and the outcome probability.
    """
    basis = basis if isinstance(basis, BasisDescriptor) else basis.basis
    spinor = np.asarray(spinor, dtype=complex)
    if spinor.shape != (2,) or abs(np.linalg.norm(spinor) - 1) > 1e-10:
        raise ValueError("spinor must be a normalized 2-component vector")
    psi = np.moveaxis(_factor_tensor(state, basis), basis.labels.index(SPIN), -1)
    rest = psi @ spinor.conj()
    prob = float(np.vdot(rest, rest).real)
    if prob < MIN_PROBABILITY:
        raise ValueError("measurement outcome has vanishing probability")
    return rest.reshape(-1) / math.sqrt(prob), prob


def _quadrature_eig(dim: int):
    a = fock_lowering(dim - 1).toarray()
    x = (a + a.T) / math.sqrt(2)
    p = (a - a.T) / (math.sqrt(2) * 1j)
    lx, vx = la.eigh(x)
    lp, vp = la.eigh(p)
    return lx, vx, lp, vp


def wigner(rho: DensityMatrix, x_values: Sequence[float], y_values: Optional[Sequence[float]] = None,
           pad: Optional[int] = None) -> WignerGrid:
    """Wigner function from the displaced-parity formula.

    ``W = (2/pi) Tr[rho D(beta) Pi D^dag(beta)]`` is the density per unit
    ``d^2 beta`` with ``beta = (x + i y)/sqrt(2)``; since
    ``d^2 beta = dx dy / 2`` the returned density per ``dx dy`` carries
    ``1/pi`` and integrates to 1 over the plane.  ``D^dag(beta)`` factorizes into
    exponentials of the two quadratures, each applied through its own
    eigendecomposition on a padded Fock space so the displaced states stay
    clear of the working cutoff.
    """
    x = np.asarray(x_values, dtype=float)
    y = x.copy() if y_values is None else np.asarray(y_values, dtype=float)
    beta_max = math.hypot(np.abs(x).max(), np.abs(y).max()) / math.sqrt(2)
    if pad is None:
        pad = int(math.ceil(beta_max**2 + 6 * beta_max)) + 40
    n = rho.dim
    m = n + pad
    lx, vx, lp, vp = _quadrature_eig(m)
    parity = (-1.0) ** np.arange(m)
    q = vx.T @ (parity[:, None] * vx)  # parity in the x eigenbasis, real symmetric
    phase_y = np.exp(-1j * np.outer(lx, y))

    weights, vecs = la.eigh(rho.matrix)
    keep = weights > 1e-14 * max(weights.max(), 1e-300)
    components = []
    for w, v in zip(weights[keep], vecs[:, keep].T):
        padded = np.zeros(m, dtype=complex)
        padded[:n] = v
        components.append((w, vp.conj().T @ padded))

    values = np.zeros((len(x), len(y)))
    residue = 0.0
    for i, xi in enumerate(x):
        acc = np.zeros(len(y), dtype=complex)
        rot = np.exp(1j * xi * lp)
        for w, vp_coeffs in components:
            u = vx.T @ (vp @ (rot * vp_coeffs))
            c = u[:, None] * phase_y
            acc += w * np.sum(c.conj() * (q @ c), axis=0)
        values[i] = acc.real
        residue = max(residue, float(np.abs(acc.imag).max()))
    values /= math.pi
    tail = rho.tail_population()
    return WignerGrid(x, y, values, tail_population=tail, tail_warning=tail > TAIL_LIMIT,
                      imag_residue=residue / math.pi)


# --- Gaussian operations ---------------------------------------------------

def _generators(dim: int):
    b = fock_lowering(dim - 1)
    return b, b.T.tocsr()


def _padded_dim(cutoff: int, pad: Optional[int]) -> int:
    return cutoff + 1 + (pad if pad is not None else max(cutoff + 1, 80))


def squeeze_operator(r: float, cutoff: int, pad: Optional[int] = None) -> np.ndarray:
    """``S(r) = exp[r/2 (b^dag^2 - b^2)]`` on levels ``0..cutoff``.

    The exponential is taken on a padded space and then cut back, which keeps
    matrix elements between low levels accurate.
    """
    m = _padded_dim(cutoff, pad)
    b, bd = _generators(m)
    gen = (r / 2) * (bd @ bd - b @ b)
    return la.expm(gen.toarray())[: cutoff + 1, : cutoff + 1]


def displacement_operator(alpha: complex, cutoff: int, pad: Optional[int] = None) -> np.ndarray:
    """``D(alpha) = exp(alpha b^dag - alpha^* b)`` on levels ``0..cutoff``."""
    m = _padded_dim(cutoff, pad)
    b, bd = _generators(m)
    gen = alpha * bd - np.conj(alpha) * b
    return la.expm(gen.toarray())[: cutoff + 1, : cutoff + 1]


def gaussian_state(cutoff: int, alpha: complex = 0.0, r_inner: float = 0.0, r_outer: float = 0.0,
                   pad: Optional[int] = None) -> tuple:
    """``S(r_outer) D(alpha) S(r_inner)|0>`` cut to ``0..cutoff``.

    Returns the truncated (unnormalized) vector and the norm lost to the cut.
    """
    m = _padded_dim(cutoff, pad)
    b, bd = _generators(m)
    v = np.zeros(m, dtype=complex)
    v[0] = 1.0
    for gen in (
        (r_inner / 2) * (bd @ bd - b @ b),
        alpha * bd - np.conj(alpha) * b,
        (r_outer / 2) * (bd @ bd - b @ b),
    ):
        if gen.nnz:
            v = sla.expm_multiply(sp.csc_matrix(gen), v)
    head = v[: cutoff + 1]
    return head, float(1 - np.vdot(head, head).real)


# --- analytic squeezed cat ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class AnalyticCatState:
    """Equal superposition of the two symmetry-broken superradiant branches.

    ``branches`` are the normalized composite vectors
    ``S(r) D(+-alpha) S(r_sp)|0> (x) |down>_+-`` on ``(mode_b, spin)``.
    """

    state: np.ndarray = field(repr=False)
    branches: tuple = field(repr=False)
    truncation: Truncation
    alpha: float
    r: float
    r_sp: float
    spinors: tuple
    renormalization_defect: float
    frame: str = "lab"

    @property
    def lobe_center(self) -> float:
        """Expected ``|x|`` of each Wigner lobe."""
        shift = self.r if self.frame == "lab" else 0.0
        return math.sqrt(2) * math.exp(shift) * abs(self.alpha)


def cat_state(alpha: float, r: float, r_sp: float, spinor_plus, spinor_minus, cutoff: int,
              frame: str = "lab") -> AnalyticCatState:
    """Materialize the cat on Fock levels ``0..cutoff`` from its parameters."""
    if frame not in ("lab", "squeezed"):
        raise ValueError("frame must be 'lab' or 'squeezed'")
    outer = r if frame == "lab" else 0.0
    trunc = Truncation.effective(cutoff)
    branches = []
    worst = 0.0
    for sign, spinor in ((1, spinor_plus), (-1, spinor_minus)):
        boson, defect = gaussian_state(cutoff, sign * alpha, r_sp, outer)
        worst = max(worst, defect)
        spinor = np.asarray(spinor, dtype=complex)
        vec = np.kron(boson, spinor / np.linalg.norm(spinor))
        branches.append(vec / np.linalg.norm(vec))
    if worst > CAT_DEFECT_LIMIT:
        raise ValueError(f"cutoff too small for cat amplitude (lost norm {worst:.3g})")
    total = branches[0] + branches[1]
    return AnalyticCatState(
        state=total / np.linalg.norm(total),
        branches=tuple(branches),
        truncation=trunc,
        alpha=alpha,
        r=r,
        r_sp=r_sp,
        spinors=(np.asarray(spinor_plus, dtype=complex), np.asarray(spinor_minus, dtype=complex)),
        renormalization_defect=worst,
        frame=frame,
    )


def analytic_cat(params: ModelParams, cutoff: int, frame: str = "lab") -> AnalyticCatState:
    """Closed-form superradiant ground state of the effective model."""
    from .analytics import sp_solution

    plus = sp_solution(params, "+")
    minus = sp_solution(params, "-")
    return cat_state(plus.alpha, plus.r, plus.r_sp, plus.spinor, minus.spinor, cutoff, frame)


def measurement_spinor(params: ModelParams, sign: int = 1) -> np.ndarray:
    """Normalized ``|down>_+ + sign |down>_-`` in the ``(|up>, |down>)`` basis.

    The two branch spinors are not orthogonal, so the plain sum carries norm
    ``sqrt(2 (1 + <down_+|down_->))``; it is normalized here.
    """
    from .analytics import sp_solution

    v = sp_solution(params, "+").spinor + sign * sp_solution(params, "-").spinor
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise ValueError("measurement outcome has vanishing probability")
    return v / norm


def subspace_overlap(ed_states, analytic) -> float:
    """Mean squared cosine of the principal angles between two 2-D subspaces."""
    a = np.asarray(ed_states)
    b = np.column_stack(analytic.branches) if isinstance(analytic, AnalyticCatState) else np.asarray(analytic)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    cosines = la.svdvals(qa.conj().T @ qb)
    return float(np.mean(np.clip(cosines, 0, 1) ** 2))


def lab_to_squeezed(psi_b: np.ndarray, r: float, pad: Optional[int] = None) -> np.ndarray:
    """Map a single-mode state into the frame ``S(r)^dag |psi>``."""
    cutoff = len(psi_b) - 1
    return squeeze_operator(-r, cutoff, pad) @ psi_b
