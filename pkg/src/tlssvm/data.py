"""Multitask dataset container, CSV (de)serialization, synthetic data, CV splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .taskgrid import ModeFactors, TaskGrid, task_vector_table

__all__ = [
    "MtlDataset",
    "SyntheticSpec",
    "SyntheticTruth",
    "generate_synthetic",
    "save_csv",
    "load_csv",
    "kfold_split",
]


@dataclass(frozen=True)
class MtlDataset:
    """Per-task sample blocks (X^t, y^t) over a task grid.

    Blocks are ordered by linear task id; the global sample order is tasks
    ascending, samples in file/generation order within a task.
    """

    grid: TaskGrid
    inputs: tuple[np.ndarray, ...]
    targets: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.inputs) != self.grid.n_tasks or len(self.targets) != self.grid.n_tasks:
            raise ValueError(
                f"expected {self.grid.n_tasks} task blocks, got "
                f"{len(self.inputs)} input and {len(self.targets)} target blocks"
            )
        dims = set()
        inputs, targets = [], []
        for t, (X, y) in enumerate(zip(self.inputs, self.targets), start=1):
            # copied so freezing never flips a caller array's writeable flag
            X = np.array(X, dtype=float)
            y = np.array(y, dtype=float)
            if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
                raise ValueError(f"task {t}: inputs must be m_t x d with matching targets")
            if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
                raise ValueError(f"task {t}: non-finite sample values")
            X.flags.writeable = False
            y.flags.writeable = False
            dims.add(X.shape[1])
            inputs.append(X)
            targets.append(y)
        if len(dims) != 1:
            raise ValueError(f"tasks disagree on feature dimension: {sorted(dims)}")
        object.__setattr__(self, "inputs", tuple(inputs))
        object.__setattr__(self, "targets", tuple(targets))

    @property
    def n_features(self) -> int:
        return self.inputs[0].shape[1]

    @property
    def task_sizes(self) -> tuple[int, ...]:
        return tuple(X.shape[0] for X in self.inputs)

    @property
    def n_samples(self) -> int:
        return sum(self.task_sizes)

    def stacked_inputs(self) -> np.ndarray:
        return np.concatenate(self.inputs, axis=0)

    def stacked_targets(self) -> np.ndarray:
        return np.concatenate(self.targets, axis=0)

    def sample_task_ids(self) -> np.ndarray:
        """0-based task index of every sample in global order."""
        return np.repeat(np.arange(self.grid.n_tasks), self.task_sizes)

    def task_offsets(self) -> np.ndarray:
        """Start of each task's block in the global sample order."""
        return np.concatenate([[0], np.cumsum(self.task_sizes)[:-1]])

    def require_nonempty_tasks(self) -> None:
        empty = [t + 1 for t, m in enumerate(self.task_sizes) if m == 0]
        if empty:
            raise DataError(f"tasks without samples: {empty}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Protocol for CP-structured synthetic regression data.

    Responses are X^t w_t + b^t plus white noise scaled, per task, so that
    ||clean||^2 / ||noise||^2 equals `snr` exactly. `snr=inf` disables noise.
    """

    d: int
    mode_sizes: tuple[int, ...]
    k_true: int
    train_per_task: int
    test_per_task: int
    snr: float
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode_sizes", tuple(int(s) for s in self.mode_sizes))
        for name in ("d", "k_true", "train_per_task", "test_per_task"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not float(self.snr) > 0:
            raise ConfigError(f"snr must be positive, got {self.snr}")
        object.__setattr__(self, "snr", float(self.snr))

    @property
    def grid(self) -> TaskGrid:
        return TaskGrid(self.mode_sizes)

    def to_config(self) -> dict:
        return {
            "d": self.d,
            "mode_sizes": list(self.mode_sizes),
            "k_true": self.k_true,
            "train_per_task": self.train_per_task,
            "test_per_task": self.test_per_task,
            "snr": self.snr,
            "seed": self.seed,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "SyntheticSpec":
        required = {"d", "mode_sizes", "k_true", "train_per_task", "test_per_task", "snr", "seed"}
        if not isinstance(cfg, dict):
            raise ConfigError("synthetic spec must be a JSON object")
        missing = required - set(cfg)
        if missing:
            raise ConfigError(f"synthetic spec missing keys: {sorted(missing)}")
        extra = set(cfg) - required
        if extra:
            raise ConfigError(f"unknown synthetic spec keys: {sorted(extra)}")
        return cls(
            d=int(cfg["d"]),
            mode_sizes=tuple(cfg["mode_sizes"]),
            k_true=int(cfg["k_true"]),
            train_per_task=int(cfg["train_per_task"]),
            test_per_task=int(cfg["test_per_task"]),
            snr=float(cfg["snr"]),
            seed=int(cfg["seed"]),
        )


@dataclass(frozen=True)
class SyntheticTruth:
    """Ground-truth generative parameters of a synthetic dataset."""

    shared: np.ndarray
    factors: ModeFactors
    biases: np.ndarray


def _add_scaled_noise(clean: np.ndarray, raw_noise: np.ndarray, snr: float) -> np.ndarray:
    if math.isinf(snr):
        return clean.copy()
    noise_norm = float(np.linalg.norm(raw_noise))
    scale = float(np.linalg.norm(clean)) / (math.sqrt(snr) * noise_norm)
    return clean + scale * raw_noise


def generate_synthetic(spec: SyntheticSpec) -> tuple[MtlDataset, MtlDataset, SyntheticTruth]:
    """Draw a (train, test, truth) triple from the seeded generator.

    Draw order is fixed for reproducibility: shared factor, mode factors,
    inputs (per task: train then test), biases, raw noise.
    """
    rng = np.random.default_rng(spec.seed)
    grid = spec.grid
    T = grid.n_tasks

    shared = rng.standard_normal((spec.d, spec.k_true))
    factors = ModeFactors(tuple(rng.standard_normal((s, spec.k_true)) for s in spec.mode_sizes))
    xs_train = []
    xs_test = []
    for _ in range(T):
        xs_train.append(rng.standard_normal((spec.train_per_task, spec.d)))
        xs_test.append(rng.standard_normal((spec.test_per_task, spec.d)))
    biases = rng.standard_normal(T)

    weights = shared @ task_vector_table(factors).T  # d x T
    ys_train = []
    ys_test = []
    for t in range(T):
        clean_train = xs_train[t] @ weights[:, t] + biases[t]
        clean_test = xs_test[t] @ weights[:, t] + biases[t]
        noise_train = rng.standard_normal(spec.train_per_task)
        noise_test = rng.standard_normal(spec.test_per_task)
        ys_train.append(_add_scaled_noise(clean_train, noise_train, spec.snr))
        ys_test.append(_add_scaled_noise(clean_test, noise_test, spec.snr))

    train = MtlDataset(grid, tuple(xs_train), tuple(ys_train))
    test = MtlDataset(grid, tuple(xs_test), tuple(ys_test))
    return train, test, SyntheticTruth(shared, factors, biases)


def _header(grid: TaskGrid, n_features: int) -> list[str]:
    return (
        [f"t_{n}" for n in range(1, grid.n_modes + 1)]
        + [f"x_{j}" for j in range(1, n_features + 1)]
        + ["y"]
    )


def save_csv(data: MtlDataset, path) -> None:
    """Write the dataset in the t_1..t_N, x_1..x_d, y column layout.

    Floats are written with shortest round-trip repr, so load(save(data))
    reproduces the values exactly.
    """
    from .taskgrid import delinearize

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_header(data.grid, data.n_features))
        for t in range(data.grid.n_tasks):
            idx = delinearize(data.grid, t + 1)
            for row_x, row_y in zip(data.inputs[t], data.targets[t]):
                writer.writerow(
                    list(idx) + [repr(float(v)) for v in row_x] + [repr(float(row_y))]
                )


def load_csv(path, grid: TaskGrid, allow_empty_tasks: bool = False) -> MtlDataset:
    """Read a dataset back; samples keep file order within each task."""
    from .taskgrid import linearize

    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        n_modes = grid.n_modes
        if len(header) < n_modes + 2:
            raise DataError(f"{path}: header has {len(header)} columns, need at least {n_modes + 2}")
        d = len(header) - n_modes - 1
        expected = _header(grid, d)
        if header != expected:
            raise DataError(f"{path}: bad header {header[:6]}..., expected t_1..t_{n_modes},x_1..x_{d},y")

        xs = [[] for _ in range(grid.n_tasks)]
        ys = [[] for _ in range(grid.n_tasks)]
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise DataError(f"{path}:{lineno}: expected {len(expected)} columns, got {len(row)}")
            try:
                idx = [int(v) for v in row[:n_modes]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer task index {row[:n_modes]}") from None
            try:
                t = linearize(grid, idx)
            except IndexError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            try:
                values = [float(v) for v in row[n_modes:]]
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric cell") from None
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"{path}:{lineno}: non-finite value")
            xs[t - 1].append(values[:-1])
            ys[t - 1].append(values[-1])

    inputs = tuple(
        np.asarray(block, dtype=float).reshape(len(block), d) for block in xs
    )
    targets = tuple(np.asarray(block, dtype=float) for block in ys)
    data = MtlDataset(grid, inputs, targets)
    if not allow_empty_tasks:
        data.require_nonempty_tasks()
    return data


def kfold_split(data: MtlDataset, folds: int, seed: int) -> list[tuple[MtlDataset, MtlDataset]]:
    """Per-task stratified k-fold split, deterministic for a fixed seed.

    Every task's samples are partitioned into `folds` near-equal parts
    (sizes differ by at most one); fold j's validation set is the union of
    part j over tasks. Samples keep their original relative order inside
    each resulting block.
    """
    folds = int(folds)
    if folds < 2:
        raise ConfigError(f"need at least 2 folds, got {folds}")
    for t, m in enumerate(data.task_sizes, start=1):
        if m < folds:
            raise DataError(f"task {t} has {m} samples, fewer than {folds} folds")

    rng = np.random.default_rng(seed)
    assignments = []  # per task: list of folds-many sorted index arrays
    for m in data.task_sizes:
        perm = rng.permutation(m)
        assignments.append([np.sort(part) for part in np.array_split(perm, folds)])

    out = []
    for j in range(folds):
        train_x, train_y, val_x, val_y = [], [], [], []
        for t in range(data.grid.n_tasks):
            val_idx = assignments[t][j]
            mask = np.ones(data.task_sizes[t], dtype=bool)
            mask[val_idx] = False
            train_x.append(data.inputs[t][mask])
            train_y.append(data.targets[t][mask])
            val_x.append(data.inputs[t][val_idx])
            val_y.append(data.targets[t][val_idx])
        out.append(
            (
                MtlDataset(data.grid, tuple(train_x), tuple(train_y)),
                MtlDataset(data.grid, tuple(val_x), tuple(val_y)),
            )
        )
    return out
