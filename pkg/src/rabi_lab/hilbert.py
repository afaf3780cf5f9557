"""Truncated Fock-space operator algebra for the qubit + two-mode system.

Composite spaces are ordered ``(mode_a, mode_b, spin)`` with row-major
flattening; ``mode_a`` is dropped for the effective models.  The spin basis
is ``(|up>, |down>)`` so that ``sigma_z = diag(+1, -1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

MODE_A = "mode_a"
MODE_B = "mode_b"
SPIN = "spin"
FACTOR_LABELS = (MODE_A, MODE_B, SPIN)

# composite dimension at and above which operators prefer sparse storage
DENSE_LIMIT = 4096


@dataclass(frozen=True)
class Truncation:
    """Fock cutoffs of the two bosonic modes.

    ``n_a_max`` and ``n_b_max`` are the highest retained Fock levels, so the
    local dimensions are ``n_max + 1``.
    """

    n_a_max: int = 0
    n_b_max: int = 60
    include_a: bool = True

    def __post_init__(self):
        for name in ("n_a_max", "n_b_max"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def dim(self) -> int:
        na = self.n_a_max + 1 if self.include_a else 1
        return na * (self.n_b_max + 1) * 2

    @property
    def basis(self) -> BasisDescriptor:
        factors = []
        if self.include_a:
            factors.append((MODE_A, self.n_a_max + 1))
        factors.append((MODE_B, self.n_b_max + 1))
        factors.append((SPIN, 2))
        return BasisDescriptor(tuple(factors))

    @classmethod
    def effective(cls, n_b_max: int) -> Truncation:
        return cls(n_a_max=0, n_b_max=n_b_max, include_a=False)


@dataclass(frozen=True)
class BasisDescriptor:
    """Ordered tensor factors ``((label, local_dim), ...)``, row-major."""

    factors: tuple

    def __post_init__(self):
        labels = [label for label, _ in self.factors]
        order = [FACTOR_LABELS.index(label) for label in labels]
        if order != sorted(order) or len(set(labels)) != len(labels):
            raise ValueError(f"factors must follow the order {FACTOR_LABELS}, got {labels}")

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple:
        return tuple(d for _, d in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def local_dim(self, label: str) -> int:
        for name, d in self.factors:
            if name == label:
                return d
        raise KeyError(f"basis has no factor {label!r}; factors are {self.labels}")

    def encode(self, **levels) -> int:
        """Composite index of a product state, e.g. ``encode(mode_b=1, spin=0)``."""
        missing = set(self.labels) - set(levels)
        if missing:
            raise ValueError(f"missing levels for {sorted(missing)}")
        idx = tuple(levels[label] for label in self.labels)
        return int(np.ravel_multi_index(idx, self.dims))

    def decode(self, index: int) -> dict:
        idx = np.unravel_index(index, self.dims)
        return {label: int(i) for label, i in zip(self.labels, idx)}


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Operator on a composite basis.

    Stored sparse; ``matrix`` hands out a dense array below ``DENSE_LIMIT``
    and the CSR matrix above it.
    """

    basis: BasisDescriptor
    sparse: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        m = sp.csr_matrix(self.sparse)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match basis dimension {self.basis.dim}"
            )
        if np.iscomplexobj(m.data) and not np.any(m.data.imag):
            m = m.real.tocsr()
        m.sort_indices()
        object.__setattr__(self, "sparse", m)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @cached_property
    def dense(self) -> np.ndarray:
        return self.sparse.toarray()

    @property
    def matrix(self):
        return self.dense if self.dim < DENSE_LIMIT else self.sparse

    def hermiticity_defect(self) -> float:
        """``max|M - M^dag| / max|M|`` (0 for the zero operator)."""
        m = self.sparse
        scale = abs(m).max() if m.nnz else 0.0
        if scale == 0:
            return 0.0
        diff = m - m.conj().T
        return (abs(diff).max() if diff.nnz else 0.0) / scale

    def __add__(self, other):
        _check_same_basis(self, other)
        return HermitianOperator(self.basis, self.sparse + other.sparse)

    def __sub__(self, other):
        _check_same_basis(self, other)
        return HermitianOperator(self.basis, self.sparse - other.sparse)

    def __mul__(self, scalar):
        return HermitianOperator(self.basis, self.sparse * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        _check_same_basis(self, other)
        return HermitianOperator(self.basis, self.sparse @ other.sparse)

    def commutator(self, other) -> HermitianOperator:
        return self @ other - other @ self

    def expect(self, state: np.ndarray) -> complex:
        return complex(np.vdot(state, self.sparse @ state))


def _check_same_basis(a, b):
    if a.basis != b.basis:
        raise ValueError(f"basis mismatch: {a.basis.factors} vs {b.basis.factors}")


def fock_lowering(cutoff: int) -> sp.csr_matrix:
    """Annihilation operator on Fock levels ``0..cutoff``."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    return sp.diags(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1,
                    shape=(cutoff + 1, cutoff + 1), format="csr")


def fock_number(cutoff: int) -> sp.csr_matrix:
    return sp.diags(np.arange(cutoff + 1, dtype=float), 0, format="csr")


def fock_quadrature_squared(cutoff: int) -> sp.csr_matrix:
    """``(b + b^dag)^2`` with matrix elements exact on the retained levels.

    The product of two truncated ``b + b^dag`` misses the intermediate state
    above the cutoff; this builds ``b^2 + b^dag^2 + 2 b^dag b + 1`` instead.
    """
    b = fock_lowering(cutoff)
    n = np.arange(cutoff + 1, dtype=float)
    return (b @ b + (b @ b).T + sp.diags(2 * n + 1)).tocsr()


def fock_parity(cutoff: int) -> sp.csr_matrix:
    return sp.diags((-1.0) ** np.arange(cutoff + 1), 0, format="csr")


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    # sigma_+ = |up><down|
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
}


def pauli(which: str) -> np.ndarray:
    """Pauli or ladder matrix in the ``(|up>, |down>)`` basis."""
    try:
        return _PAULI[which].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli operator {which!r}; use one of {sorted(_PAULI)}") from None


def embed(op, slot: str, trunc) -> HermitianOperator:
    """Tensor a single-factor operator with identities on the other factors."""
    basis = trunc if isinstance(trunc, BasisDescriptor) else trunc.basis
    local = basis.local_dim(slot)
    op = sp.csr_matrix(op)
    if op.shape != (local, local):
        raise ValueError(
            f"operator of shape {op.shape} cannot act on {slot!r} of dimension {local}"
        )
    out = sp.identity(1, format="csr")
    for label, d in basis.factors:
        out = sp.kron(out, op if label == slot else sp.identity(d, format="csr"), format="csr")
    return HermitianOperator(basis, out)


def embed_product(ops: dict, trunc) -> HermitianOperator:
    """Tensor product of per-factor operators, identity on unlisted factors."""
    basis = trunc if isinstance(trunc, BasisDescriptor) else trunc.basis
    unknown = set(ops) - set(basis.labels)
    if unknown:
        raise ValueError(f"basis has no factors {sorted(unknown)}")
    out = sp.identity(1, format="csr")
    for label, d in basis.factors:
        op = sp.csr_matrix(ops[label]) if label in ops else sp.identity(d, format="csr")
        if op.shape != (d, d):
            raise ValueError(f"operator of shape {op.shape} cannot act on {label!r} of dimension {d}")
        out = sp.kron(out, op, format="csr")
    return HermitianOperator(basis, out)


def parity_diagonal(basis: BasisDescriptor) -> np.ndarray:
    """Diagonal of ``exp(i pi [n_a + n_b + (1 + sigma_z)/2])``."""
    diag = np.ones(1)
    for label, d in basis.factors:
        if label == SPIN:
            local = np.array([-1.0, 1.0])  # up carries one excitation
        else:
            local = (-1.0) ** np.arange(d)
        diag = np.kron(diag, local)
    return diag


def parity_operator(trunc) -> HermitianOperator:
    basis = trunc if isinstance(trunc, BasisDescriptor) else trunc.basis
    return HermitianOperator(basis, sp.diags(parity_diagonal(basis), format="csr"))
