"""Experiment orchestration: washout/train/test runs, closed-loop generation,
parameter sweeps, truncation studies, and the input-flip memory probe.

Protocol shared by all benchmarks: the input sequence drives the reservoir
without interruption from its fixed start state; feature rows are recorded
for every step, the washout rows are then discarded, the linear readout is
fit on the training rows, and the metric is computed on the test rows.
The state (not the features) carries memory across steps.

Time-multiplexed feature rows are ordered (virtual node k = 1..V) x
(feature index): row = [node-1 features | node-2 features | ...].

Determinism: every run is a pure function of its spec (seeds included);
sweep points are merged by grid index, and point evaluation always pins the
BLAS thread pool to one thread so the emitted tables are byte-identical for
any worker count.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .dynamics import IntervalPropagator, PropagationError, PropagationMethod, initial_state
from .learning import RidgeModel, capacity, ridge_fit, ridge_predict, scaled_rmse
from .models import ReservoirConfig
from .readout import FeatureExtractor, compatible_sets, default_observables
from .tasks import (
    TaskDataset,
    delayed_targets,
    gen_mackey_glass,
    gen_pc,
    gen_stm,
    mg_targets,
    parity_targets,
)

TASK_KINDS = ("stm", "pc", "mg_forecast", "mg_autonomous")

# Closed-loop predictions are clipped to this range before re-injection so a
# runaway feedback cannot push the drive outside the validated truncation
# regime; clip events are recorded as warnings.
AUTONOMOUS_CLIP = (0.0, 2.0)


@dataclass(frozen=True)
class TaskSpec:
    """Declarative description of a benchmark task."""

    kind: str
    tau: int = 1
    forecast_k: int = 1
    washout: int = 1000
    train: int = 1500
    test: int = 1000
    mg_offset: float = 0.0
    mg_h: float = 0.05
    mg_sampling: float = 3.0
    mg_discard: float = 10_000.0

    def __post_init__(self) -> None:
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}; expected one of {TASK_KINDS}")
        if self.washout < 0 or self.train < 1 or self.test < 0:
            raise ValueError("split counts must be positive (washout/test may be 0)")

    @property
    def total_steps(self) -> int:
        return self.washout + self.train + self.test


def stm_task(tau: int = 1, washout: int = 1000, train: int = 1500, test: int = 1000) -> TaskSpec:
    return TaskSpec(kind="stm", tau=tau, washout=washout, train=train, test=test)


def pc_task(tau: int = 1, washout: int = 1000, train: int = 1500, test: int = 1000) -> TaskSpec:
    return TaskSpec(kind="pc", tau=tau, washout=washout, train=train, test=test)


def mg_forecast_task(
    k: int = 1, washout: int = 1000, train: int = 1000, test: int = 150, offset: float = 0.0
) -> TaskSpec:
    return TaskSpec(kind="mg_forecast", forecast_k=k, washout=washout, train=train,
                    test=test, mg_offset=offset)


def mg_autonomous_task(
    horizon: int = 150, washout: int = 1000, train: int = 1000, offset: float = 0.0
) -> TaskSpec:
    """Closed-loop generation; ``horizon`` plays the role of the test split."""
    return TaskSpec(kind="mg_autonomous", forecast_k=1, washout=washout, train=train,
                    test=horizon, mg_offset=offset)


def build_dataset(task: TaskSpec, seed: int) -> TaskDataset:
    split = (task.washout, task.train, task.test)
    length = task.total_steps
    if task.kind == "stm":
        return gen_stm(length, task.tau, seed, split)
    if task.kind == "pc":
        return gen_pc(length, task.tau, seed, split)
    k = task.forecast_k if task.kind == "mg_forecast" else 1
    series = gen_mackey_glass(
        length + k, h=task.mg_h, sampling=task.mg_sampling,
        discard=task.mg_discard, offset=task.mg_offset,
    )
    mode = "forecast" if task.kind == "mg_forecast" else "autonomous"
    return mg_targets(series, mode=mode, k=k, split=split)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment bit-exactly."""

    reservoir: ReservoirConfig
    task: TaskSpec
    observables: str = ""          # empty -> model default
    method: PropagationMethod = field(default_factory=PropagationMethod)
    truncation_guard: float = 1e-4

    def __post_init__(self) -> None:
        kind = self.observables or default_observables(self.reservoir.model)
        allowed = compatible_sets(self.reservoir.model)
        if kind not in allowed:
            raise ValueError(
                f"observable set {kind!r} is incompatible with model "
                f"{self.reservoir.model!r}; expected one of {allowed}"
            )

    @property
    def observable_kind(self) -> str:
        return self.observables or default_observables(self.reservoir.model)

    def provenance(self) -> dict:
        return {"spec": asdict(self), "package_version": __version__}


@dataclass
class RunDiagnostics:
    """Per-run physics health: conservation, positivity, truncation load."""

    max_trace_dev: float = 0.0
    max_herm_dev: float = 0.0
    min_eigenvalue: float = 1.0
    max_top2_population: float = 0.0
    warnings: tuple[str, ...] = ()


@dataclass
class ExperimentResult:
    metric_name: str
    test_metric: float
    train_metric: float
    model: RidgeModel | None
    predictions: np.ndarray
    targets: np.ndarray
    diagnostics: RunDiagnostics
    warnings: tuple[str, ...]
    elapsed_seconds: float
    provenance: dict


def run_reservoir(
    config: ReservoirConfig,
    inputs: np.ndarray,
    observables: str = "",
    method: PropagationMethod | None = None,
    truncation_guard: float = 1e-4,
    check_positivity: bool = True,
) -> tuple[np.ndarray, RunDiagnostics]:
    """Drive the reservoir through ``inputs`` and collect the feature matrix.

    Returns (X, diagnostics) where X has shape (len(inputs), n_features * V).
    The end-of-interval state of step i seeds step i + 1.  Conservation and
    positivity are checked on every end-of-interval state; violations beyond
    the documented thresholds are recorded as warnings, never masked.
    """
    x, diag, _ = _run_features(config, inputs, observables, method,
                               truncation_guard, check_positivity)
    return x, diag


def _run_features(
    config: ReservoirConfig,
    inputs: np.ndarray,
    observables: str = "",
    method: PropagationMethod | None = None,
    truncation_guard: float = 1e-4,
    check_positivity: bool = True,
) -> tuple[np.ndarray, RunDiagnostics, np.ndarray]:
    """run_reservoir plus the end-of-sequence state (for closed-loop use)."""
    inputs = np.asarray(inputs, dtype=float)
    layout = config.layout()
    kind = observables or default_observables(config.model)
    extractor = FeatureExtractor(kind, layout)
    prop = IntervalPropagator(config, method)
    prop.prime(inputs)
    v = config.virtual_nodes
    x = np.empty((len(inputs), extractor.n_features * v))
    diag = RunDiagnostics()
    warn: list[str] = []
    rho = initial_state(config)
    nb = layout.boson_dim
    top_idx = np.array([nb - 2, nb - 1, 2 * nb - 2, 2 * nb - 1])
    for i, beta in enumerate(inputs):
        try:
            states = prop.propagate(rho, float(beta))
        except PropagationError as exc:
            raise PropagationError(f"step {i}: {exc}") from exc
        for k in range(v):
            x[i, k * extractor.n_features : (k + 1) * extractor.n_features] = extractor(states[k])
        rho = states[-1]
        diag.max_trace_dev = max(diag.max_trace_dev, float(abs(np.trace(rho) - 1.0)))
        diag.max_herm_dev = max(diag.max_herm_dev, float(np.abs(rho - rho.conj().T).max()))
        if check_positivity:
            diag.min_eigenvalue = min(diag.min_eigenvalue, float(np.linalg.eigvalsh(rho)[0]))
        if config.is_bosonic:
            pops = np.real(np.diagonal(rho))
            diag.max_top2_population = max(diag.max_top2_population, float(pops[top_idx].sum()))
    if check_positivity and diag.min_eigenvalue < -1e-6:
        warn.append(f"positivity violated: min eigenvalue {diag.min_eigenvalue:.3e}")
    if config.is_bosonic and diag.max_top2_population > truncation_guard:
        warn.append(
            f"truncation guard exceeded: top-two-level population "
            f"{diag.max_top2_population:.3e} > {truncation_guard:.1e}"
        )
    diag.warnings = tuple(warn)
    return x, diag, rho


def _targets_for_tau(dataset: TaskDataset, kind: str, tau: int) -> np.ndarray:
    if kind == "stm":
        return delayed_targets(dataset.inputs, tau)
    if kind == "pc":
        return parity_targets(dataset.inputs, tau)
    raise ValueError(f"per-tau targets only exist for stm/pc, not {kind!r}")


def _fit_and_score(
    x: np.ndarray, targets: np.ndarray, dataset: TaskDataset, spec: ExperimentSpec
) -> tuple[str, float, float, RidgeModel | None, np.ndarray, np.ndarray, list[str]]:
    metric = "capacity" if spec.task.kind in ("stm", "pc") else "scaled_rmse"
    _, train_sl, test_sl = dataset.split_slices
    warn: list[str] = []
    model = ridge_fit(
        x[train_sl], targets[train_sl], spec.reservoir.ridge_lambda,
        feature_names=_multiplexed_names(spec),
    )
    pred_train = ridge_predict(model, x[train_sl])
    pred_test = ridge_predict(model, x[test_sl])
    y_train, y_test = targets[train_sl], targets[test_sl]

    def score(y: np.ndarray, y_hat: np.ndarray) -> float:
        if np.ptp(y) == 0:
            warn.append("degenerate targets (zero variance); metric scored 0")
            return 0.0
        if metric == "capacity" and np.ptp(y_hat) == 0:
            warn.append("constant prediction; capacity scored 0")
            return 0.0
        return capacity(y, y_hat) if metric == "capacity" else scaled_rmse(y, y_hat)

    return metric, score(y_test, pred_test), score(y_train, pred_train), model, \
        pred_test, y_test, warn


def _multiplexed_names(spec: ExperimentSpec) -> tuple[str, ...]:
    base = FeatureExtractor(spec.observable_kind, spec.reservoir.layout()).names
    v = spec.reservoir.virtual_nodes
    return tuple(f"node{k + 1}:{name}" for k in range(v) for name in base)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Full washout/train/test evaluation of one task at one operating point."""
    if spec.task.kind == "mg_autonomous":
        return run_autonomous(spec)
    t0 = time.perf_counter()
    dataset = build_dataset(spec.task, spec.reservoir.seed)
    x, diag = run_reservoir(
        spec.reservoir, dataset.inputs[: spec.task.total_steps], spec.observable_kind,
        spec.method, spec.truncation_guard,
    )
    metric, test_m, train_m, model, preds, targets, warn = _fit_and_score(
        x, dataset.targets, dataset, spec
    )
    return ExperimentResult(
        metric_name=metric, test_metric=test_m, train_metric=train_m, model=model,
        predictions=preds, targets=targets, diagnostics=diag,
        warnings=tuple(warn) + diag.warnings,
        elapsed_seconds=time.perf_counter() - t0, provenance=spec.provenance(),
    )


def run_delay_scan(spec: ExperimentSpec, taus: tuple[int, ...]) -> dict[int, ExperimentResult]:
    """Evaluate an stm/pc spec at several delays from a single reservoir pass.

    The features depend only on the inputs, so one propagation serves every
    tau; only the readout is refit.
    """
    if spec.task.kind not in ("stm", "pc"):
        raise ValueError("delay scans apply to stm/pc tasks only")
    t0 = time.perf_counter()
    dataset = build_dataset(spec.task, spec.reservoir.seed)
    x, diag = run_reservoir(
        spec.reservoir, dataset.inputs[: spec.task.total_steps], spec.observable_kind,
        spec.method, spec.truncation_guard,
    )
    out: dict[int, ExperimentResult] = {}
    for tau in taus:
        tau_spec = replace(spec, task=replace(spec.task, tau=tau))
        targets = _targets_for_tau(dataset, spec.task.kind, tau)
        metric, test_m, train_m, model, preds, tgt, warn = _fit_and_score(
            x, targets, dataset, tau_spec
        )
        out[tau] = ExperimentResult(
            metric_name=metric, test_metric=test_m, train_metric=train_m, model=model,
            predictions=preds, targets=tgt, diagnostics=diag,
            warnings=tuple(warn) + diag.warnings,
            elapsed_seconds=time.perf_counter() - t0, provenance=tau_spec.provenance(),
        )
    return out


def run_autonomous(
    spec: ExperimentSpec,
    horizon: int | None = None,
    clip_range: tuple[float, float] = AUTONOMOUS_CLIP,
    oracle_predictions: np.ndarray | None = None,
) -> ExperimentResult:
    """Train a one-step forecaster, then free-run it with output feedback.

    After the training window the loop closes: each prediction (clipped to
    ``clip_range``) becomes the next drive amplitude.  The scaled RMSE is
    computed against the true series over the horizon.  ``oracle_predictions``
    replaces the model's feedback values (diagnostic hook used by the tests).
    """
    if spec.task.kind != "mg_autonomous":
        raise ValueError("run_autonomous needs an mg_autonomous task")
    t0 = time.perf_counter()
    horizon = spec.task.test if horizon is None else horizon
    task = replace(spec.task, test=horizon)
    warn: list[str] = []
    if horizon == 0:
        warn.append("horizon 0: no closed-loop steps, metric undefined")
        return ExperimentResult(
            metric_name="scaled_rmse", test_metric=float("nan"), train_metric=float("nan"),
            model=None, predictions=np.empty(0), targets=np.empty(0),
            diagnostics=RunDiagnostics(), warnings=tuple(warn),
            elapsed_seconds=time.perf_counter() - t0, provenance=spec.provenance(),
        )
    dataset = build_dataset(task, spec.reservoir.seed)
    n_open = task.washout + task.train
    x, diag, rho = _run_features(
        spec.reservoir, dataset.inputs[:n_open], spec.observable_kind,
        spec.method, spec.truncation_guard,
    )
    _, train_sl, _ = dataset.split_slices
    model = ridge_fit(
        x[train_sl], dataset.targets[train_sl], spec.reservoir.ridge_lambda,
        feature_names=_multiplexed_names(spec),
    )
    train_metric = scaled_rmse(dataset.targets[train_sl], ridge_predict(model, x[train_sl]))

    # closed loop continues from the end-of-training state
    prop = IntervalPropagator(spec.reservoir, spec.method)
    extractor = FeatureExtractor(spec.observable_kind, spec.reservoir.layout())
    next_pred = float(ridge_predict(model, x[n_open - 1 : n_open])[0])
    preds = np.empty(horizon)
    n_clipped = 0
    v = spec.reservoir.virtual_nodes
    row = np.empty(extractor.n_features * v)
    for j in range(horizon):
        if oracle_predictions is not None:
            next_pred = float(oracle_predictions[j])
        preds[j] = next_pred
        if not np.isfinite(next_pred):
            raise PropagationError(f"non-finite closed-loop prediction at step {j}")
        beta = min(max(next_pred, clip_range[0]), clip_range[1])
        if beta != next_pred:
            n_clipped += 1
        states = prop.propagate(rho, beta)
        for k in range(v):
            row[k * extractor.n_features : (k + 1) * extractor.n_features] = extractor(states[k])
        rho = states[-1]
        next_pred = float(ridge_predict(model, row[None, :])[0])
    if n_clipped:
        warn.append(f"{n_clipped} closed-loop predictions clipped to {clip_range}")
    truth = dataset.inputs[n_open : n_open + horizon]
    return ExperimentResult(
        metric_name="scaled_rmse", test_metric=scaled_rmse(truth, preds),
        train_metric=train_metric, model=model, predictions=preds, targets=truth,
        diagnostics=diag, warnings=tuple(warn) + diag.warnings,
        elapsed_seconds=time.perf_counter() - t0, provenance=spec.provenance(),
    )


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian parameter grid around a base experiment.

    Axis names address ReservoirConfig fields (delta_b, delta, chi, alpha,
    kappa, dt, virtual_nodes, n_levels) or the task delay (tau).  ``segments``
    averages each point over several task realizations: distinct
    Mackey-Glass windows (``segment_stride`` time units apart) for MG tasks,
    distinct input seeds otherwise.
    """

    base: ExperimentSpec
    axes: tuple[tuple[str, tuple[float, ...]], ...]
    segments: int = 1
    segment_stride: float = 600.0

    def __post_init__(self) -> None:
        if self.segments < 1:
            raise ValueError("segments must be >= 1")
        for name, values in self.axes:
            if len(values) < 1:
                raise ValueError(f"axis {name!r} is empty")
            _check_axis_name(name)

    def grid(self) -> list[dict[str, float]]:
        names = [name for name, _ in self.axes]
        combos = itertools.product(*[values for _, values in self.axes])
        return [dict(zip(names, combo)) for combo in combos]


_RESERVOIR_AXES = ("delta_b", "delta", "chi", "alpha", "kappa", "dt",
                   "virtual_nodes", "n_levels")


def _check_axis_name(name: str) -> None:
    if name not in _RESERVOIR_AXES and name != "tau":
        raise ValueError(f"unknown sweep axis {name!r}")


def apply_point(spec: ExperimentSpec, point: dict[str, float]) -> ExperimentSpec:
    res_kw = {}
    task_kw = {}
    for name, value in point.items():
        _check_axis_name(name)
        if name == "tau":
            task_kw["tau"] = int(value)
        elif name in ("virtual_nodes", "n_levels"):
            res_kw[name] = int(value)
        else:
            res_kw[name] = float(value)
    out = spec
    if res_kw:
        out = replace(out, reservoir=replace(out.reservoir, **res_kw))
    if task_kw:
        out = replace(out, task=replace(out.task, **task_kw))
    return out


def _segment_spec(spec: ExperimentSpec, segment: int, stride: float) -> ExperimentSpec:
    if spec.task.kind.startswith("mg"):
        return replace(spec, task=replace(spec.task, mg_offset=segment * stride))
    return replace(spec, reservoir=replace(spec.reservoir, seed=spec.reservoir.seed + segment))


def _sweep_job(spec: ExperimentSpec) -> dict:
    """Evaluate one (point, segment) job; BLAS pinned for reproducibility."""
    try:
        with threadpool_limits(limits=1):
            result = run_experiment(spec)
        return {
            "metric": result.metric_name,
            "test_metric": result.test_metric,
            "train_metric": result.train_metric,
            "n_warnings": len(result.warnings),
            "max_top2_population": result.diagnostics.max_top2_population,
            "error": "",
        }
    except Exception as exc:  # per-point failures recorded, sweep continues
        return {"metric": "", "test_metric": float("nan"), "train_metric": float("nan"),
                "n_warnings": 0, "max_top2_population": float("nan"), "error": str(exc)}


def _run_jobs(specs: list[ExperimentSpec], workers: int) -> list[dict]:
    if workers <= 1:
        return [_sweep_job(s) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_job, specs, chunksize=1))


def run_sweep(sweep: SweepSpec, workers: int = 1) -> list[dict]:
    """Evaluate every grid point; one tidy row per point, ordered by grid index.

    Rows carry the axis values, segment mean and standard deviation of the
    test metric, training mean, warning counts, and any per-point error
    message (failed points do not abort the sweep).
    """
    points = sweep.grid()
    jobs: list[ExperimentSpec] = []
    for point in points:
        point_spec = apply_point(sweep.base, point)
        for seg in range(sweep.segments):
            jobs.append(_segment_spec(point_spec, seg, sweep.segment_stride))
    payloads = _run_jobs(jobs, workers)
    rows: list[dict] = []
    for idx, point in enumerate(points):
        chunk = payloads[idx * sweep.segments : (idx + 1) * sweep.segments]
        errors = [p["error"] for p in chunk if p["error"]]
        ok = [p for p in chunk if not p["error"]]
        test_vals = np.array([p["test_metric"] for p in ok])
        train_vals = np.array([p["train_metric"] for p in ok])
        row = dict(point)
        row.update({
            "metric": ok[0]["metric"] if ok else "",
            "test_metric_mean": float(test_vals.mean()) if ok else float("nan"),
            "test_metric_std": float(test_vals.std()) if ok else float("nan"),
            "train_metric_mean": float(train_vals.mean()) if ok else float("nan"),
            "segments": len(ok),
            "n_warnings": int(sum(p["n_warnings"] for p in ok)),
            "max_top2_population": float(max((p["max_top2_population"] for p in ok),
                                             default=float("nan"))),
            "error": "; ".join(errors),
            "segment_values": tuple(float(v) for v in test_vals),
        })
        rows.append(row)
    return rows


def convergence_study(
    base: ExperimentSpec,
    levels: tuple[int, ...],
    kappas: tuple[float, ...],
    workers: int = 1,
) -> list[dict]:
    """Benchmark metric and truncation load over (n_levels, kappa) pairs."""
    if min(levels) < 2:
        raise ValueError("levels must be >= 2")
    specs = []
    pairs = [(n, k) for n in levels for k in kappas]
    for n, k in pairs:
        specs.append(replace(base, reservoir=replace(base.reservoir, n_levels=n, kappa=k)))
    payloads = _run_jobs(specs, workers)
    rows = []
    for (n, k), payload in zip(pairs, payloads):
        rows.append({"n_levels": n, "kappa": k, **payload})
    return rows


def fading_memory_probe(
    spec: ExperimentSpec,
    flip_step: int,
    altered_value: float,
    horizon: int = 12,
) -> np.ndarray:
    """Distance between feature rows of two runs differing at one input.

    The two trajectories share every input except ``flip_step`` (which must
    come after the washout); the trace holds the per-step Euclidean feature
    distance for steps flip_step .. flip_step + horizon.  A fading-memory
    reservoir drives it to zero within a few steps.
    """
    if flip_step < spec.task.washout:
        raise ValueError(f"flip_step {flip_step} must come after the washout "
                         f"({spec.task.washout})")
    task = replace(spec.task, test=max(spec.task.test, flip_step + horizon + 1
                                       - spec.task.washout - spec.task.train))
    dataset = build_dataset(task, spec.reservoir.seed)
    n_steps = flip_step + horizon + 1
    inputs = dataset.inputs[:n_steps].copy()
    altered = inputs.copy()
    altered[flip_step] = altered_value

    config = spec.reservoir
    extractor = FeatureExtractor(spec.observable_kind, config.layout())
    prop = IntervalPropagator(config, spec.method)
    prop.prime(np.concatenate([inputs, [altered_value]]))
    v = config.virtual_nodes
    nf = extractor.n_features

    # shared prefix: both trajectories are identical before the flip
    rho = initial_state(config)
    for i in range(flip_step):
        rho = prop.propagate(rho, float(inputs[i]))[-1]

    def feature_row(states: np.ndarray) -> np.ndarray:
        return np.concatenate([extractor(states[k]) for k in range(v)])

    dist = np.empty(horizon + 1)
    rho_a, rho_b = rho, rho.copy()
    for i in range(flip_step, n_steps):
        st_a = prop.propagate(rho_a, float(inputs[i]))
        st_b = prop.propagate(rho_b, float(altered[i]))
        dist[i - flip_step] = float(np.linalg.norm(feature_row(st_a) - feature_row(st_b)))
        rho_a, rho_b = st_a[-1], st_b[-1]
    return dist
