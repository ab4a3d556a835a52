"""Readout layer: reservoir state -> real feature vector, plus diagnostics.

Observable sets
---------------
``moments`` (default for bosonic models): expectation values of 22
higher-order moments of {c, c+, N} evaluated on the reduced boson state,
in this fixed order::

    N, N^2, N^3, N^4,
    c+, c+^2, c+^3, c+^4, c+^5,
    N c+, N c, N c+^2, N c^2, N c+^3, N c^3, N c+^4, N c^4, N c+^5, N c^5,
    N^2 c+, N^2 c, N^2 c+^2

The four number moments are Hermitian and contribute their real part only;
each of the remaining 18 operators contributes (Re, Im), giving 40 features.

``rdm_small``: matrix elements of the reduced boson state,
Re(rho_b[i, j]) for levels i <= j < 10 (55 values) followed by
Im(rho_b[i, j]) for i < j < 6 (15 values), 70 features.  With
``truncate_to_40`` only the first 40 in that order are kept.

``rdm_full``: Re for i <= j and Im for i < j over all levels
(n_levels^2 features; 225 at the default truncation of 15).

``qubit_pair`` (two-qubit models): Re and Im of <sz_2>, <s+_2>, <s-_2>,
6 features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .hilbert import SpaceLayout, boson_ops, partial_trace_qubit, qubit_ops
from .models import ReservoirConfig

OBSERVABLE_SETS = ("moments", "rdm_small", "rdm_full", "qubit_pair")


def compatible_sets(model: str) -> tuple[str, ...]:
    if model in ("jc", "djc"):
        return ("moments", "rdm_small", "rdm_full")
    return ("qubit_pair",)


def default_observables(model: str) -> str:
    return "moments" if model in ("jc", "djc") else "qubit_pair"


def _moment_operators(boson_dim: int) -> list[tuple[str, np.ndarray, bool]]:
    """The 22 moment operators as (name, matrix, hermitian) in readout order."""
    b = boson_ops(boson_dim)
    num = b.number
    n2 = num @ num
    cd = [np.linalg.matrix_power(b.c_dag, k) for k in range(6)]
    cc = [np.linalg.matrix_power(b.c, k) for k in range(6)]
    ops: list[tuple[str, np.ndarray, bool]] = [
        ("N", num, True),
        ("N^2", n2, True),
        ("N^3", n2 @ num, True),
        ("N^4", n2 @ n2, True),
    ]
    for k in range(1, 6):
        ops.append((f"cdag^{k}" if k > 1 else "cdag", cd[k], False))
    for k in range(1, 6):
        ops.append((f"N*cdag^{k}" if k > 1 else "N*cdag", num @ cd[k], False))
        ops.append((f"N*c^{k}" if k > 1 else "N*c", num @ cc[k], False))
    ops.append(("N^2*cdag", n2 @ cd[1], False))
    ops.append(("N^2*c", n2 @ cc[1], False))
    ops.append(("N^2*cdag^2", n2 @ cd[2], False))
    return ops


class FeatureExtractor:
    """Precompiled map from a joint density matrix to the feature vector.

    Deterministic and purely a function of rho; safe to share across
    threads once constructed.
    """

    def __init__(self, kind: str, layout: SpaceLayout, truncate_to_40: bool = False):
        if kind not in OBSERVABLE_SETS:
            raise ValueError(f"unknown observable set {kind!r}; expected one of {OBSERVABLE_SETS}")
        self.kind = kind
        self.layout = layout
        nb = layout.boson_dim
        names: list[str] = []
        if kind == "moments":
            ops = _moment_operators(nb)
            # tr(rho_b O) = sum(rho_b * O^T): stack transposed operators once
            self._ops_t = np.array([op.T for _, op, _ in ops])
            self._herm = np.array([h for _, _, h in ops])
            for name, _, herm in ops:
                names.append(f"re<{name}>")
                if not herm:
                    names.append(f"im<{name}>")
        elif kind in ("rdm_small", "rdm_full"):
            re_max = min(10, nb) if kind == "rdm_small" else nb
            im_max = min(6, nb) if kind == "rdm_small" else nb
            if kind == "rdm_small" and nb < 10:
                raise ValueError(f"rdm_small needs n_levels >= 10, got {nb}")
            re_idx = [(i, j) for i in range(re_max) for j in range(i, re_max)]
            im_idx = [(i, j) for i in range(im_max) for j in range(i + 1, im_max)]
            names = [f"re(rho_b[{i},{j}])" for i, j in re_idx]
            names += [f"im(rho_b[{i},{j}])" for i, j in im_idx]
            if truncate_to_40 and kind == "rdm_small":
                re_idx = re_idx[:40]
                im_idx = []
                names = names[:40]
            self._re_idx = tuple(np.array(ix) for ix in zip(*re_idx)) if re_idx else None
            self._im_idx = tuple(np.array(ix) for ix in zip(*im_idx)) if im_idx else None
        else:  # qubit_pair
            q = qubit_ops()
            ops2 = [("sz_2", np.kron(np.eye(2), q.sz)), ("sp_2", np.kron(np.eye(2), q.sp)),
                    ("sm_2", np.kron(np.eye(2), q.sm))]
            self._pair_ops_t = np.array([op.T for _, op in ops2])
            for name, _ in ops2:
                names += [f"re<{name}>", f"im<{name}>"]
        self.names = tuple(names)
        self.n_features = len(names)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        if self.kind == "qubit_pair":
            vals = np.einsum("ij,kij->k", rho, self._pair_ops_t)
            return np.column_stack([vals.real, vals.imag]).reshape(-1)
        rho_b = partial_trace_qubit(rho, self.layout)
        if self.kind == "moments":
            vals = np.einsum("ij,kij->k", rho_b, self._ops_t)
            out = np.empty(self.n_features)
            pos = 0
            for val, herm in zip(vals, self._herm):
                out[pos] = val.real
                pos += 1
                if not herm:
                    out[pos] = val.imag
                    pos += 1
            return out
        parts = []
        if self._re_idx is not None:
            parts.append(rho_b[self._re_idx].real)
        if self._im_idx is not None:
            parts.append(rho_b[self._im_idx].imag)
        return np.concatenate(parts)


def extract_features(
    rho: np.ndarray, kind: str, layout: SpaceLayout, truncate_to_40: bool = False
) -> np.ndarray:
    """One-shot feature extraction; build a FeatureExtractor for loops."""
    return FeatureExtractor(kind, layout, truncate_to_40=truncate_to_40)(rho)


@dataclass(frozen=True)
class WignerGrid:
    """Rectangular quadrature grid for Wigner evaluation."""

    x_min: float = -4.0
    x_max: float = 4.0
    p_min: float = -4.0
    p_max: float = 4.0
    resolution: int = 101

    def __post_init__(self) -> None:
        if self.resolution < 2:
            raise ValueError(f"resolution must be >= 2, got {self.resolution}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)
                and np.isfinite(self.p_min) and np.isfinite(self.p_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_min >= self.x_max or self.p_min >= self.p_max:
            raise ValueError("grid bounds must satisfy min < max")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.resolution)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.resolution)


def wigner(rho_b: np.ndarray, grid: WignerGrid, eval_levels: int | None = None) -> np.ndarray:
    """Wigner distribution of a boson density matrix, sampled on the grid.

    Uses the displaced-parity form W(x, p) = tr(rho D(a) P D(a)+) / pi with
    a = (x + i p) / sqrt(2) and parity P = diag((-1)^n); the displacement is
    exponentiated numerically.  To keep far-from-origin samples accurate the
    operators are built on an enlarged Fock space (``eval_levels``, chosen
    automatically from the grid extent) into which rho_b embeds exactly.

    Returns W with shape (resolution, resolution); W[i, j] = W(x[j], p[i]).
    """
    nb = rho_b.shape[0]
    if rho_b.shape != (nb, nb):
        raise ValueError(f"rho_b must be square, got {rho_b.shape}")
    tr = np.trace(rho_b)
    if abs(tr - 1.0) > 1e-6:
        raise ValueError(f"rho_b trace {tr} deviates from 1 beyond 1e-6")
    if eval_levels is None:
        # displaced vacuum at the grid corner has mean photon number |a|^2;
        # pad well past its support so truncation reflections stay negligible
        amax2 = max(abs(grid.x_min), abs(grid.x_max)) ** 2 / 2 \
            + max(abs(grid.p_min), abs(grid.p_max)) ** 2 / 2
        eval_levels = max(nb, int(np.ceil(amax2 + 5.0 * np.sqrt(amax2) + 10)))
    b = boson_ops(eval_levels)
    parity = np.diag((-1.0) ** np.arange(eval_levels))
    xs, ps = grid.x, grid.p
    w = np.empty((grid.resolution, grid.resolution))
    rho_t = rho_b.T  # tr(rho A) = sum(rho * A^T) restricted to the top block
    for i, p in enumerate(ps):
        for j, x in enumerate(xs):
            a = (x + 1j * p) / np.sqrt(2)
            disp = expm(a * b.c_dag - np.conj(a) * b.c)
            kernel = disp @ parity @ disp.conj().T
            w[i, j] = np.sum(rho_t * kernel[:nb, :nb]).real / np.pi
    return w


def response_curve(
    config: ReservoirConfig,
    beta_grid: np.ndarray,
    settle_inputs: int = 50,
    observables: str | None = None,
    method=None,
    scale: bool = False,
) -> np.ndarray:
    """Steady response of the features to a constant input amplitude.

    For each beta the reservoir is driven from its start state with that
    constant amplitude for ``settle_inputs`` intervals (washing out the
    initial condition) and the feature vector of the final state is
    recorded.  Returns an array of shape (len(beta_grid), n_features); with
    ``scale`` each feature is min-max mapped to [-1, 1] across the grid
    (presentation scaling).
    """
    from .dynamics import IntervalPropagator, initial_state  # local import to avoid cycle

    beta_grid = np.asarray(beta_grid, dtype=float)
    if settle_inputs < 1:
        raise ValueError(f"settle_inputs must be >= 1, got {settle_inputs}")
    extractor = FeatureExtractor(observables or default_observables(config.model), config.layout())
    prop = IntervalPropagator(config, method)
    rows = np.empty((len(beta_grid), extractor.n_features))
    for i, beta in enumerate(beta_grid):
        prop.prime(np.array([beta]))
        rho = initial_state(config)
        for _ in range(settle_inputs):
            rho = prop.propagate(rho, float(beta))[-1]
        rows[i] = extractor(rho)
    if scale:
        lo, hi = rows.min(axis=0), rows.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        rows = 2.0 * (rows - lo) / span - 1.0
    return rows
