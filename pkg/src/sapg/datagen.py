"""Seeded synthetic instances for sparse l1 and censored regression.

Recipe (one numpy ``PCG64`` stream per instance, draws in this order):

1. ``B`` standard normal ``m x n``; ``A`` is ``B`` with orthonormalized rows
   (``m <= n``) or columns (``m > n``).
2. ``x_true`` uniform on ``[0, 1)``, first ``n - s`` entries zeroed, then
   shuffled, with ``s = round(spar * n)`` (ties up).
3. ``noise = noise_scale * uniform[0, 1)`` of length ``m``;
   ``b = A x_true + noise`` (``linear_l1``) or ``max(A x_true + noise, 0)``
   (``censored``).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .linalg import orthonormalize_columns, orthonormalize_rows
from .model import CompositeProblem
from .prox import Box, ProximablePart
from .smoothing import censored_affine_loss, l1_affine_loss

KINDS = ("linear_l1", "censored")
L1_WEIGHT = 0.01


@dataclass(frozen=True)
class InstanceSpec:
    m: int
    n: int
    spar: float
    seed: int = 0
    noise_scale: float = 0.01
    kind: str = "linear_l1"

    @property
    def s(self) -> int:
        return int(math.floor(self.spar * self.n + 0.5))

    def check(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if not 0 < self.spar <= 1:
            raise ValueError("spar must lie in (0, 1]")
        if self.s < 1:
            raise ValueError(f"spar*n rounds to {self.s}; need at least one nonzero")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.kind == "linear_l1" and self.m > self.n:
            raise ValueError("linear_l1 instances need m <= n")


@dataclass(frozen=True, eq=False)
class Instance:
    spec: InstanceSpec
    A: np.ndarray
    b: np.ndarray
    x_true: np.ndarray
    noise: np.ndarray


def gen_instance(spec: InstanceSpec) -> Instance:
    spec.check()
    m, n = spec.m, spec.n
    rng = np.random.default_rng(spec.seed)
    B = rng.standard_normal((m, n))
    A = orthonormalize_rows(B) if m <= n else orthonormalize_columns(B)
    x_true = rng.uniform(0.0, 1.0, n)
    x_true[: n - spec.s] = 0.0
    rng.shuffle(x_true)
    noise = spec.noise_scale * rng.random(m)
    b = A @ x_true + noise
    if spec.kind == "censored":
        b = np.maximum(b, 0.0)
    return Instance(spec=spec, A=A, b=b, x_true=x_true, noise=noise)


def objective_for(instance: Instance, kind: str | None = None) -> CompositeProblem:
    """``min_{0 <= x <= 1} loss(x) + 0.01 ||x||_1`` for the instance's loss kind."""
    kind = kind or instance.spec.kind
    if kind == "linear_l1":
        loss = l1_affine_loss(instance.A, instance.b)
    elif kind == "censored":
        loss = censored_affine_loss(instance.A, instance.b)
    else:
        raise ValueError(f"kind must be one of {KINDS}")
    n = instance.A.shape[1]
    return CompositeProblem(loss, ProximablePart.scaled_l1(L1_WEIGHT, Box.uniform(n, 0.0, 1.0)))


def _write_csv(path: Path, arr: np.ndarray):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.atleast_2d(arr):
            w.writerow([repr(float(v)) for v in row])


def _read_csv(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh) if row])


def save_instance(instance: Instance, out_dir) -> Path:
    """Write ``A.csv`` (row-major), ``b.csv``, ``x_true.csv`` (one row each) and ``spec.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "A.csv", instance.A)
    _write_csv(out / "b.csv", instance.b[None, :])
    _write_csv(out / "x_true.csv", instance.x_true[None, :])
    _write_csv(out / "noise.csv", instance.noise[None, :])
    (out / "spec.json").write_text(json.dumps(asdict(instance.spec), indent=2) + "\n")
    return out


def load_instance(in_dir) -> Instance:
    src = Path(in_dir)
    spec = InstanceSpec(**json.loads((src / "spec.json").read_text()))
    noise_path = src / "noise.csv"
    return Instance(
        spec=spec,
        A=_read_csv(src / "A.csv"),
        b=_read_csv(src / "b.csv")[0],
        x_true=_read_csv(src / "x_true.csv")[0],
        noise=_read_csv(noise_path)[0] if noise_path.exists() else np.zeros(spec.m),
    )
