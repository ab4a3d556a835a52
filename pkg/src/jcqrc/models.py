"""Reservoir Hamiltonians in the rotating frame of the driving fields.

Four reservoir models are supported:

* ``jc``      -- qubit-boson system with excitation exchange:
                 H = (delta_b + delta) sz + delta_b c+c + chi (c s+ + c+ s-)
                     + i beta (c - c+) + alpha sx
* ``djc``     -- dispersive limit, driven at resonance:
                 H = chi c+c sz + i beta (c - c+) + alpha sx
* ``qq_jc``   -- two-qubit analogue of ``jc``; the boson is replaced by a
                 second qubit via c -> s-, c+ -> s+, c+c -> (sz + 1)/2, and
                 the drive acts as beta sx on qubit 2.
* ``qq_djc``  -- two-qubit analogue of ``djc``.

``beta`` is the instantaneous input amplitude (one value per input step);
``alpha`` is a fixed qubit drive.  All frequencies are dimensionless
(hbar = 1).  For ``djc`` the resonance condition is baked in: ``delta_b``
and ``delta`` do not enter the Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import SpaceLayout, boson_ops, qubit_ops

MODELS = ("jc", "djc", "qq_jc", "qq_djc")
BOSONIC_MODELS = ("jc", "djc")


@dataclass(frozen=True)
class ReservoirConfig:
    """Model choice plus the physical and readout parameters of one reservoir.

    ``chi`` is the exchange coupling for ``jc``/``qq_jc`` and the dispersive
    shift for ``djc``/``qq_djc``.  ``dt`` is the duration of one input
    interval, ``virtual_nodes`` the number of equidistant read times within
    it, and ``n_levels`` the boson truncation (ignored for two-qubit models).
    """

    model: str = "jc"
    delta_b: float = 1.0
    delta: float = 0.0
    chi: float = 1.0
    alpha: float = 0.0
    kappa: float = 0.1
    dt: float = 10.0
    virtual_nodes: int = 5
    n_levels: int = 15
    ridge_lambda: float = 0.05
    seed: int = 1234

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.virtual_nodes < 1:
            raise ValueError(f"virtual_nodes must be >= 1, got {self.virtual_nodes}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.is_bosonic and self.n_levels < 2:
            raise ValueError(f"n_levels must be >= 2, got {self.n_levels}")
        if self.ridge_lambda < 0:
            raise ValueError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")

    @property
    def is_bosonic(self) -> bool:
        return self.model in BOSONIC_MODELS

    def layout(self) -> SpaceLayout:
        """Joint-space layout; two-qubit models use a dimension-2 second factor."""
        return SpaceLayout(boson_dim=self.n_levels if self.is_bosonic else 2)


def hamiltonian(config: ReservoirConfig, beta: float) -> np.ndarray:
    """Rotating-frame Hamiltonian on the joint space for input amplitude beta.

    Hermitian by construction; affine in beta (the drive enters linearly).
    """
    if not np.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    return _static_part(config) + beta * drive_operator(config)


def drive_operator(config: ReservoirConfig) -> np.ndarray:
    """Input coupling operator: hamiltonian(config, b) = hamiltonian(config, 0) + b * drive."""
    q = qubit_ops()
    if config.is_bosonic:
        b = boson_ops(config.n_levels)
        # i(c - c+) is Hermitian: the entries are +/- i sqrt(n) off the diagonal
        return np.kron(np.eye(2), 1j * (b.c - b.c_dag))
    return np.kron(np.eye(2), q.sx)


def _static_part(config: ReservoirConfig) -> np.ndarray:
    q = qubit_ops()
    i2 = np.eye(2)
    if config.is_bosonic:
        b = boson_ops(config.n_levels)
        ib = np.eye(config.n_levels)
        if config.model == "jc":
            h = (config.delta_b + config.delta) * np.kron(q.sz, ib)
            h = h + config.delta_b * np.kron(i2, b.number)
            h = h + config.chi * (np.kron(q.sp, b.c) + np.kron(q.sm, b.c_dag))
        else:  # djc at resonance: only the dispersive shift survives
            h = config.chi * np.kron(q.sz, b.number)
        return h + config.alpha * np.kron(q.sx, ib)
    if config.model == "qq_jc":
        h = (config.delta + config.delta_b) * np.kron(q.sz, i2)
        h = h + 0.5 * config.delta_b * np.kron(i2, q.sz)
        h = h + config.chi * (np.kron(q.sp, q.sm) + np.kron(q.sm, q.sp))
    else:  # qq_djc
        h = config.chi * np.kron(q.sz, (q.sz + i2) / 2)
    return h + config.alpha * np.kron(q.sx, i2)


def lindblad_jump(config: ReservoirConfig) -> np.ndarray:
    """Loss channel jump operator on the joint space (unscaled; rate is kappa).

    Photon loss ``c`` for the bosonic models, decay ``s-`` of the driven
    qubit for the two-qubit models.
    """
    if config.is_bosonic:
        return np.kron(np.eye(2), boson_ops(config.n_levels).c)
    return np.kron(np.eye(2), qubit_ops().sm)
