"""Benchmark input/target generators: delayed recall, parity, Mackey-Glass.

All generators are deterministic functions of their arguments (seed or
segment offset included), so identical calls reproduce identical datasets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

DEFAULT_SPLIT = (1000, 1500, 1000)  # washout / train / test for stm and pc
MG_SPLIT = (1000, 1000, 150)


@dataclass(frozen=True)
class TaskDataset:
    """Input sequence, target sequence, and the washout/train/test split."""

    inputs: np.ndarray
    targets: np.ndarray
    n_washout: int
    n_train: int
    n_test: int
    kind: str = ""
    tau: int = 0

    def __post_init__(self) -> None:
        total = self.n_washout + self.n_train + self.n_test
        if len(self.inputs) != len(self.targets):
            raise ValueError("inputs and targets must have equal length")
        if len(self.inputs) < total:
            raise ValueError(f"need >= {total} steps, got {len(self.inputs)}")
        if min(self.n_washout, self.n_train, self.n_test) < 0:
            raise ValueError("split counts must be non-negative")

    @property
    def split_slices(self) -> tuple[slice, slice, slice]:
        w, t = self.n_washout, self.n_train
        return slice(0, w), slice(w, w + t), slice(w + t, w + t + self.n_test)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "input", "target"])
            for i, (s, y) in enumerate(zip(self.inputs, self.targets)):
                writer.writerow([i, repr(float(s)), repr(float(y))])


def dataset_from_csv(
    path: str | Path, n_washout: int, n_train: int, n_test: int, kind: str = "external"
) -> TaskDataset:
    """Load an externally produced (step, input, target) series."""
    inputs, targets = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            inputs.append(float(row["input"]))
            targets.append(float(row["target"]))
    return TaskDataset(
        inputs=np.array(inputs), targets=np.array(targets),
        n_washout=n_washout, n_train=n_train, n_test=n_test, kind=kind,
    )


def delayed_targets(inputs: np.ndarray, tau: int) -> np.ndarray:
    """Inputs delayed by tau steps, zero-padded at the start."""
    if tau == 0:
        return inputs.copy()
    return np.concatenate([np.zeros(tau), inputs[:-tau]])


def gen_stm(
    length: int, tau: int, seed: int, split: tuple[int, int, int] = DEFAULT_SPLIT
) -> TaskDataset:
    """Delayed-recall task: uniform (0, 1) inputs, targets y_i = s_{i-tau}.

    The first tau targets come from zero padding; scoring windows start
    after the washout, far beyond the padding for any tau of interest.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    if length <= tau:
        raise ValueError(f"length must exceed tau, got {length} <= {tau}")
    rng = np.random.default_rng(seed)
    inputs = rng.uniform(0.0, 1.0, length)
    return TaskDataset(
        inputs=inputs, targets=delayed_targets(inputs, tau),
        n_washout=split[0], n_train=split[1], n_test=split[2], kind="stm", tau=tau,
    )


def parity_targets(inputs: np.ndarray, tau: int) -> np.ndarray:
    """Parity of the tau previous inputs (current input excluded)."""
    acc = np.zeros(len(inputs))
    for j in range(1, tau + 1):
        acc[j:] += inputs[:-j]
    return np.mod(acc, 2.0)


def gen_pc(
    length: int, tau: int, seed: int, split: tuple[int, int, int] = DEFAULT_SPLIT
) -> TaskDataset:
    """Parity-check task: binary inputs, y_i = sum_{j=1..tau} s_{i-j} mod 2."""
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    rng = np.random.default_rng(seed)
    inputs = rng.integers(0, 2, length).astype(float)
    return TaskDataset(
        inputs=inputs, targets=parity_targets(inputs, tau),
        n_washout=split[0], n_train=split[1], n_test=split[2], kind="pc", tau=tau,
    )


@dataclass(frozen=True)
class MgSeries:
    """Sampled Mackey-Glass trajectory and the parameters that produced it."""

    values: np.ndarray
    tau_delay: float
    h: float
    sampling: float
    discard: float
    offset: float


@lru_cache(maxsize=8)
def _integrate_mg(n_grid_steps: int, h: float, tau_delay: float, history: float) -> np.ndarray:
    """Fixed-step RK4 for ds/dt = -0.1 s(t) + 0.2 s(t - tau) / (1 + s(t - tau)^10).

    The delayed value is read from the dense solution buffer; stage times
    falling between grid nodes use linear interpolation.  Constant history
    s(t <= 0) = ``history``.
    """
    lag = int(round(tau_delay / h))
    if abs(lag * h - tau_delay) > 1e-9:
        raise ValueError(f"delay {tau_delay} must be a multiple of the step {h}")
    buf = np.empty(n_grid_steps + 1)
    buf[0] = history

    def f(s: float, s_del: float) -> float:
        return -0.1 * s + 0.2 * s_del / (1.0 + s_del**10)

    for i in range(n_grid_steps):
        j = i - lag
        d0 = buf[j] if j >= 0 else history
        d1 = buf[j + 1] if j + 1 >= 0 else history
        dh = 0.5 * (d0 + d1)
        s = buf[i]
        k1 = f(s, d0)
        k2 = f(s + 0.5 * h * k1, dh)
        k3 = f(s + 0.5 * h * k2, dh)
        k4 = f(s + h * k3, d1)
        buf[i + 1] = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(buf[i + 1]):
            raise RuntimeError(f"Mackey-Glass integration diverged at t = {(i + 1) * h}")
    return buf


def gen_mackey_glass(
    n_samples: int,
    h: float = 0.05,
    sampling: float = 3.0,
    discard: float = 10_000.0,
    offset: float = 0.0,
    tau_delay: float = 17.0,
    history: float = 1.2,
) -> MgSeries:
    """Sampled Mackey-Glass series after an initial transient.

    One trajectory is integrated from the constant history; ``discard`` time
    units are dropped, then the series is sampled every ``sampling`` units
    starting ``offset`` units later.  Distinct segments of the same
    trajectory are selected through ``offset``.
    """
    if h > 0.1:
        raise ValueError(f"integration step must be <= 0.1, got {h}")
    stride = int(round(sampling / h))
    if stride < 1 or abs(stride * h - sampling) > 1e-9:
        raise ValueError(f"sampling {sampling} must be a positive multiple of h = {h}")
    start = int(round((discard + offset) / h))
    if abs(start * h - (discard + offset)) > 1e-6:
        raise ValueError("discard + offset must align with the integration grid")
    n_grid = start + stride * (n_samples - 1) + 1
    # round the integration length up so nearby segment offsets share one
    # cached trajectory (the solution is prefix-deterministic)
    chunk = 200_000
    n_grid = ((n_grid + chunk - 1) // chunk) * chunk
    buf = _integrate_mg(n_grid, h, tau_delay, history)
    values = buf[start : start + stride * n_samples : stride].copy()
    return MgSeries(
        values=values, tau_delay=tau_delay, h=h, sampling=sampling,
        discard=discard, offset=offset,
    )


def mg_targets(
    series: MgSeries,
    mode: str = "forecast",
    k: int = 1,
    split: tuple[int, int, int] = MG_SPLIT,
) -> TaskDataset:
    """Forecasting dataset from a sampled series.

    ``forecast``: input s_i, target s_{i+k}.  ``autonomous``: trained
    exactly like forecast with k = 1; the closed evaluation loop lives in
    the pipeline.  The series must be k samples longer than the split total.
    """
    if mode not in ("forecast", "autonomous"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "autonomous":
        k = 1
    elif k < 1:
        raise ValueError(f"forecast horizon k must be >= 1, got {k}")
    total = sum(split)
    if len(series.values) < total + k:
        raise ValueError(f"series too short: need {total + k} samples, got {len(series.values)}")
    inputs = series.values[:total]
    targets = series.values[k : total + k]
    return TaskDataset(
        inputs=inputs, targets=targets,
        n_washout=split[0], n_train=split[1], n_test=split[2],
        kind=f"mg_{mode}", tau=k,
    )
