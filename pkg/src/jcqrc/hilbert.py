"""Operator algebra on a truncated qubit-boson Hilbert space.

Conventions used by every module in this package:

* Factor order is qubit (x) boson, always.  The joint index of the basis
  state |q, n> is ``q * boson_dim + n``.
* Qubit basis order is (|e>, |g>), so ``sigma_z = diag(+1, -1)``.
* Matrices are dense complex numpy arrays; everything is small enough
  (joint dimension <= 80) that sparse storage would only add overhead.

For the two-qubit reservoir variants the "boson" factor is a second
qubit of dimension 2; the same layout machinery applies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class SpaceLayout:
    """Dimensions of the joint qubit (x) boson space."""

    boson_dim: int
    qubit_dim: int = 2

    def __post_init__(self) -> None:
        if self.qubit_dim != 2:
            raise ValueError(f"qubit_dim must be 2, got {self.qubit_dim}")
        if self.boson_dim < 2:
            raise ValueError(f"boson_dim must be >= 2, got {self.boson_dim}")

    @property
    def dim(self) -> int:
        return self.qubit_dim * self.boson_dim


class BosonOps(NamedTuple):
    c: np.ndarray
    c_dag: np.ndarray
    number: np.ndarray


class QubitOps(NamedTuple):
    sz: np.ndarray
    sp: np.ndarray
    sm: np.ndarray
    sx: np.ndarray


def dag(a: np.ndarray) -> np.ndarray:
    """Adjoint (conjugate transpose)."""
    return a.conj().T


def boson_ops(boson_dim: int) -> BosonOps:
    """Annihilation, creation, and number operators on the truncated mode.

    ``c[n-1, n] = sqrt(n)``; the truncated commutator [c, c+] equals the
    identity except at the last diagonal entry, which is -(boson_dim - 1).
    """
    if boson_dim < 2:
        raise ValueError(f"boson_dim must be >= 2, got {boson_dim}")
    c = np.zeros((boson_dim, boson_dim), dtype=complex)
    for n in range(1, boson_dim):
        c[n - 1, n] = np.sqrt(n)
    c_dag = dag(c)
    return BosonOps(c=c, c_dag=c_dag, number=c_dag @ c)


def qubit_ops() -> QubitOps:
    """Pauli-style qubit operators in the (|e>, |g>) basis."""
    sz = np.diag([1.0 + 0j, -1.0])
    sp = np.array([[0, 1], [0, 0]], dtype=complex)  # |e><g|
    sm = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e|
    return QubitOps(sz=sz, sp=sp, sm=sm, sx=sp + sm)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product under the fixed qubit (x) boson factor order."""
    return np.kron(a, b)


def qubit_operator(op: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    """Embed a qubit-factor operator on the joint space."""
    if op.shape != (layout.qubit_dim, layout.qubit_dim):
        raise ValueError(f"expected {layout.qubit_dim}x{layout.qubit_dim} operator, got {op.shape}")
    return np.kron(op, np.eye(layout.boson_dim))


def boson_operator(op: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    """Embed a boson-factor operator on the joint space."""
    if op.shape != (layout.boson_dim, layout.boson_dim):
        raise ValueError(f"expected {layout.boson_dim}x{layout.boson_dim} operator, got {op.shape}")
    return np.kron(np.eye(layout.qubit_dim), op)


def partial_trace_qubit(rho: np.ndarray, layout: SpaceLayout) -> np.ndarray:
    """Trace out the qubit factor: rho_b[m, n] = sum_q rho[(q, m), (q, n)]."""
    d = layout.dim
    if rho.shape != (d, d):
        raise ValueError(f"density matrix shape {rho.shape} does not match layout dim {d}")
    r = rho.reshape(layout.qubit_dim, layout.boson_dim, layout.qubit_dim, layout.boson_dim)
    return np.einsum("qmqn->mn", r)


def expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    """Expectation value tr(rho op)."""
    if rho.shape != op.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"shape mismatch: rho {rho.shape} vs op {op.shape}")
    # tr(A B) = sum_ij A_ij B_ji
    return complex(np.sum(rho * op.T))
