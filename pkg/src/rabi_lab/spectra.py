"""Lowest eigenpairs and ground-state observables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .hilbert import (
    MODE_A,
    MODE_B,
    HermitianOperator,
    Truncation,
    embed_product,
    fock_lowering,
    fock_number,
    parity_diagonal,
)

# at or below this dimension lowest_eigenpairs diagonalizes densely
DENSE_SOLVE_LIMIT = 1500
HERMITICITY_TOL = 1e-12


class EigensolverError(RuntimeError):
    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)  # columns
    residual_norms: np.ndarray

    @property
    def k(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class GroundStateResult:
    energy: float
    n_b_rescaled: float
    n_a_rescaled: Optional[float]
    b_occupation: float
    a_occupation: Optional[float]
    b_coherence: complex
    parity_expectation: float
    gap_01: float
    truncation_used: Truncation
    converged: bool = True
    quasi_degenerate: bool = False
    broken_coherence: Optional[tuple] = None
    eigenvalues: np.ndarray = field(default=None, repr=False)
    state: np.ndarray = field(default=None, repr=False)
    excited_state: np.ndarray = field(default=None, repr=False)

    def with_converged(self, flag: bool) -> GroundStateResult:
        from dataclasses import replace

        return replace(self, converged=flag)


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column real and positive."""
    vecs = np.array(vecs)
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        # first entry within rounding of the maximum, so ties resolve stably
        i = np.argmax(np.abs(col) > np.abs(col).max() * (1 - 1e-8))
        phase = col[i] / abs(col[i])
        vecs[:, j] = col / phase
    if np.iscomplexobj(vecs) and not np.any(vecs.imag):
        vecs = vecs.real
    return vecs


def _as_matrix(h):
    if isinstance(h, HermitianOperator):
        return h.sparse
    if sp.issparse(h):
        return h.tocsr()
    return np.asarray(h)


def lowest_eigenpairs(h, k: int = 1, tol: float = 1e-9, method: str = "auto",
                      maxiter: Optional[int] = None) -> SpectralResult:
    """``k`` lowest eigenpairs of a Hermitian operator.

    Residuals are checked against ``tol`` times the largest absolute matrix
    element (the natural energy scale of the truncated operator).
    """
    m = _as_matrix(h)
    n = m.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    scale = float(abs(m).max()) if (sp.issparse(m) and m.nnz) or not sp.issparse(m) else 0.0
    scale = max(scale, 1.0)
    herm = m - m.conj().T
    defect = float(abs(herm).max()) if (not sp.issparse(herm) or herm.nnz) else 0.0
    if defect > HERMITICITY_TOL * scale:
        raise ValueError(f"operator is not Hermitian (defect {defect:.3g})")
    if method == "auto":
        method = "dense" if n <= DENSE_SOLVE_LIMIT or k >= n - 1 else "iterative"
    if method == "dense":
        dense = m.toarray() if sp.issparse(m) else m
        vals, vecs = la.eigh(dense, subset_by_index=(0, k - 1))
    elif method == "iterative":
        if k >= n - 1:
            raise ValueError("iterative solver needs k < dim - 1")
        v0 = np.ones(n, dtype=m.dtype) / math.sqrt(n)
        try:
            vals, vecs = sla.eigsh(m, k=k, which="SA", v0=v0, tol=0, maxiter=maxiter)
        except sla.ArpackNoConvergence as exc:
            best = None
            if len(exc.eigenvalues):
                res = np.linalg.norm(m @ exc.eigenvectors - exc.eigenvectors * exc.eigenvalues, axis=0)
                best = float(res.min())
            raise EigensolverError(f"eigsh did not converge for k={k}", best) from exc
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(vals)
    vals, vecs = vals[order], _fix_phase(vecs[:, order])
    residuals = np.linalg.norm(m @ vecs - vecs * vals, axis=0)
    worst = float(residuals.max())
    if worst > tol * scale:
        raise EigensolverError(f"residual {worst:.3g} exceeds tolerance {tol * scale:.3g}", worst)
    return SpectralResult(eigenvalues=np.asarray(vals, dtype=float), eigenvectors=vecs,
                          residual_norms=residuals)


def lowest_eigenpairs_by_parity(h: HermitianOperator, k: int = 2, tol: float = 1e-9,
                                method: str = "auto") -> SpectralResult:
    """Solve even and odd parity sectors separately and merge.

    Returned vectors are exact parity eigenstates, which keeps quasi-degenerate
    superradiant doublets from mixing arbitrarily inside the solver.
    """
    diag = parity_diagonal(h.basis)
    m = h.sparse
    even, odd = np.flatnonzero(diag > 0), np.flatnonzero(diag < 0)
    leak = m[even][:, odd]
    if leak.nnz and abs(leak).max() > HERMITICITY_TOL * max(abs(m).max(), 1.0):
        raise ValueError("operator does not commute with the parity operator")
    values, vectors, residuals = [], [], []
    for idx in (even, odd):
        block = m[idx][:, idx]
        kk = min(k, len(idx))
        res = lowest_eigenpairs(block, kk, tol=tol, method=method)
        full = np.zeros((h.dim, kk), dtype=res.eigenvectors.dtype)
        full[idx] = res.eigenvectors
        values.append(res.eigenvalues)
        vectors.append(full)
        residuals.append(res.residual_norms)
    vals = np.concatenate(values)
    vecs = np.concatenate(vectors, axis=1)
    resid = np.concatenate(residuals)
    order = np.argsort(vals, kind="stable")[:k]
    return SpectralResult(vals[order], vecs[:, order], resid[order])


def _frame_lowering(nb: int, frame_squeeze: float) -> sp.csr_matrix:
    """``S(r)^dag b S(r) = b cosh r + b^dag sinh r`` on the truncated mode."""
    b = fock_lowering(nb)
    if frame_squeeze == 0:
        return b
    return (b * math.cosh(frame_squeeze) + b.T * math.sinh(frame_squeeze)).tocsr()


def _frame_number(nb: int, frame_squeeze: float) -> sp.csr_matrix:
    if frame_squeeze == 0:
        return fock_number(nb)
    r = frame_squeeze
    b = fock_lowering(nb)
    n = np.arange(nb + 1, dtype=float)
    # cosh(2r) n + sinh^2 r + sinh(2r)/2 (b^2 + b^dag^2), exact on retained levels
    return (sp.diags(math.cosh(2 * r) * n + math.sinh(r) ** 2)
            + (b @ b + (b @ b).T) * (math.sinh(2 * r) / 2)).tocsr()


def broken_symmetry_coherence(v0: np.ndarray, v1: np.ndarray, b_op: HermitianOperator):
    """The two ``<b>`` values of the maximally polarized states in ``span(v0, v1)``.

    Maximizes ``|<c|b|c>|`` over unit ``c`` in the doublet (the numerical
    radius of the 2x2 block) and returns ``(<b>_+, <b>_-)`` of the extremal
    pair of orthogonal combinations.
    """
    basis = np.column_stack([v0, v1])
    block = basis.conj().T @ (b_op.sparse @ basis)
    best = None
    for theta in np.linspace(0, 2 * np.pi, 721)[:-1]:
        herm = (np.exp(1j * theta) * block + np.exp(-1j * theta) * block.conj().T) / 2
        w, u = np.linalg.eigh(herm)
        if best is None or w[-1] > best[0]:
            best = (w[-1], u)
    _, u = best
    plus, minus = u[:, -1], u[:, 0]
    return complex(plus.conj() @ block @ plus), complex(minus.conj() @ block @ minus)


def ground_observables(h: HermitianOperator, params=None, trunc: Optional[Truncation] = None,
                       squeeze_r: float = 0.0, frame_squeeze: float = 0.0, k: int = 2,
                       tol: float = 1e-9, degeneracy_tol: float = 1e-6,
                       method: str = "auto", use_parity: bool = True) -> GroundStateResult:
    """Ground-state energy, rescaled occupations, coherence and parity.

    ``squeeze_r`` is the ``r`` in the rescaling ``exp(-4 r) omega_b / omega_q``
    (0 for models without an effective frame).  ``frame_squeeze`` is the
    squeeze that maps the Hamiltonian's frame back to the lab frame, so
    occupations are reported for ``S(frame_squeeze)|psi>``.
    """
    if k < 2:
        raise ValueError("ground_observables needs k >= 2 for the gap")
    basis = h.basis
    if trunc is None:
        nb = basis.local_dim(MODE_B) - 1
        na = basis.local_dim(MODE_A) - 1 if MODE_A in basis.labels else 0
        trunc = Truncation(n_a_max=na, n_b_max=nb, include_a=MODE_A in basis.labels)
    solver = lowest_eigenpairs_by_parity if use_parity else lowest_eigenpairs
    res = solver(h, k=k, tol=tol, method=method)
    psi = res.eigenvectors[:, 0]
    nb = trunc.n_b_max
    b_op = embed_product({MODE_B: _frame_lowering(nb, frame_squeeze)}, basis)
    nb_op = embed_product({MODE_B: _frame_number(nb, frame_squeeze)}, basis)
    n_b = float(nb_op.expect(psi).real)
    n_a = None
    if MODE_A in basis.labels:
        n_a = float(embed_product({MODE_A: fock_number(trunc.n_a_max)}, basis).expect(psi).real)
    if params is not None:
        factor = math.exp(-4 * squeeze_r) * params.omega_b / params.omega_q
    else:
        factor = 1.0
    parity = float(np.real(np.vdot(psi, parity_diagonal(basis) * psi)))
    gap = float(res.eigenvalues[1] - res.eigenvalues[0])
    omega_b = params.omega_b if params is not None else 1.0
    quasi = gap < degeneracy_tol * omega_b
    broken = None
    if quasi:
        broken = broken_symmetry_coherence(psi, res.eigenvectors[:, 1], b_op)
    return GroundStateResult(
        energy=float(res.eigenvalues[0]),
        n_b_rescaled=factor * n_b,
        n_a_rescaled=None if n_a is None else factor * n_a,
        b_occupation=n_b,
        a_occupation=n_a,
        b_coherence=complex(b_op.expect(psi)),
        parity_expectation=parity,
        gap_01=gap,
        truncation_used=trunc,
        quasi_degenerate=quasi,
        broken_coherence=broken,
        eigenvalues=res.eigenvalues,
        state=psi,
        excited_state=res.eigenvectors[:, 1],
    )


def converge_in_truncation(builder: Callable[[Truncation], HermitianOperator],
                           schedule: Sequence[Truncation], obs_tol: float = 1e-4,
                           **observable_kwargs) -> GroundStateResult:
    """Escalate cutoffs until ``n_b`` and the energy settle to within ``obs_tol``.

    Extra keyword arguments go to :func:`ground_observables`.
    """
    schedule = list(schedule)
    if len(schedule) < 2:
        raise ValueError("schedule needs at least two truncations")
    for prev, cur in zip(schedule, schedule[1:]):
        if cur.n_a_max < prev.n_a_max or cur.n_b_max < prev.n_b_max or cur == prev:
            raise ValueError("schedule must be strictly increasing")
    previous = None
    result = None
    for trunc in schedule:
        result = ground_observables(builder(trunc), trunc=trunc, **observable_kwargs)
        if previous is not None:
            if (abs(result.n_b_rescaled - previous.n_b_rescaled) < obs_tol
                    and abs(result.energy - previous.energy) < obs_tol):
                return result.with_converged(True)
        previous = result
    return result.with_converged(False)


def degeneracy_gap(h: HermitianOperator, tol: float = 1e-6, omega_b: float = 1.0,
                   use_parity: bool = True):
    """Gap between the two lowest levels and whether it counts as degenerate."""
    solver = lowest_eigenpairs_by_parity if use_parity else lowest_eigenpairs
    res = solver(h, k=2)
    gap = float(res.eigenvalues[1] - res.eigenvalues[0])
    return gap, gap < tol * omega_b
