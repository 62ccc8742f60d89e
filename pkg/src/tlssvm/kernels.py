"""Kernel functions, explicit feature maps, and Gram assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UnsupportedOperation

__all__ = ["KernelSpec", "kernel_eval", "gram", "feature_map"]

_FAMILIES = ("linear", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters.

    linear: k(x, x') = <x, x'>, with the identity as explicit feature map.
    rbf:    k(x, x') = exp(-gamma * ||x - x'||^2), gamma > 0; no finite
            feature map exists, so callers must stay on dual paths.
    """

    family: str
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}, expected one of {_FAMILIES}")
        if self.family == "rbf":
            if self.gamma is None or not float(self.gamma) > 0:
                raise ConfigError(f"rbf kernel needs gamma > 0, got {self.gamma!r}")
            object.__setattr__(self, "gamma", float(self.gamma))
        elif self.gamma is not None:
            raise ConfigError("gamma is only meaningful for the rbf kernel")

    @property
    def has_feature_map(self) -> bool:
        return self.family == "linear"

    def feature_dim(self, n_features: int) -> int:
        if not self.has_feature_map:
            raise UnsupportedOperation(f"{self.family} kernel has no finite feature map")
        return n_features

    def to_config(self) -> dict:
        out = {"family": self.family}
        if self.gamma is not None:
            out["gamma"] = self.gamma
        return out

    @classmethod
    def from_config(cls, cfg: dict) -> "KernelSpec":
        if not isinstance(cfg, dict) or "family" not in cfg:
            raise ConfigError(f"kernel config must be a dict with a 'family' key, got {cfg!r}")
        extra = set(cfg) - {"family", "gamma"}
        if extra:
            raise ConfigError(f"unknown kernel config keys: {sorted(extra)}")
        return cls(cfg["family"], cfg.get("gamma"))


def _as_vector(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {x.shape}")
    return x


def kernel_eval(spec: KernelSpec, x, x_other) -> float:
    """Evaluate k(x, x') for a single pair of points."""
    x = _as_vector(x, "x")
    x_other = _as_vector(x_other, "x_other")
    if x.shape != x_other.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {x_other.shape[0]}")
    if spec.family == "linear":
        return float(x @ x_other)
    diff = x - x_other
    return float(np.exp(-spec.gamma * (diff @ diff)))


def gram(spec: KernelSpec, X, X_other=None) -> np.ndarray:
    """Kernel matrix between the rows of X and X_other.

    With X_other omitted the result is the (exactly symmetrized) square
    Gram matrix of X.
    """
    X = np.asarray(X, dtype=float)
    symmetric = X_other is None
    Xo = X if symmetric else np.asarray(X_other, dtype=float)
    if X.ndim != 2 or Xo.ndim != 2:
        raise ValueError("sample matrices must be 2-D")
    if X.shape[1] != Xo.shape[1]:
        raise ValueError(f"feature dimensions differ: {X.shape[1]} vs {Xo.shape[1]}")
    if spec.family == "linear":
        G = X @ Xo.T
    else:
        sq = (X * X).sum(axis=1)[:, None] + (Xo * Xo).sum(axis=1)[None, :] - 2.0 * (X @ Xo.T)
        np.maximum(sq, 0.0, out=sq)
        G = np.exp(-spec.gamma * sq)
    if symmetric:
        G = 0.5 * (G + G.T)
    return G


def feature_map(spec: KernelSpec, x) -> np.ndarray:
    """Explicit feature map phi(x); only kernels with a finite map support this."""
    if not spec.has_feature_map:
        raise UnsupportedOperation(
            f"{spec.family} kernel has no explicit feature map; use the dual path"
        )
    return _as_vector(x, "x").copy()
