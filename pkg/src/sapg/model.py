"""Problem assembly, solver configuration, and solve records."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .prox import ProximablePart
from .smoothing import SmoothableLoss

RESIDUAL_MODES = ("prox", "smoothed")


class ConfigError(ValueError):
    """Invalid solver configuration; ``errors`` holds one message per violated field."""

    def __init__(self, errors: List[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class CompositeProblem:
    """``min_{x in box} loss(x) + reg(x)``."""

    loss: SmoothableLoss
    reg: ProximablePart

    def __post_init__(self):
        if self.loss.n != self.reg.n:
            raise ValueError(
                f"dimension mismatch: loss has n={self.loss.n}, regularizer has n={self.reg.n}"
            )

    @property
    def n(self) -> int:
        return self.loss.n

    def objective(self, x: np.ndarray) -> float:
        return self.loss.exact_value(x) + self.reg.value(x)

    def smoothed_objective(self, x: np.ndarray, mu: float) -> float:
        return self.loss.smooth_value(x, mu) + self.reg.value(x)


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """Scalars of the smoothing proximal gradient loop.

    ``extrapolate=False`` turns SAPG into plain SPG. ``backtrack=False``
    keeps the step scale fixed at ``gamma0``. ``residual_mode`` selects the
    stopping residual: ``"prox"`` uses the prox-gradient map of the smooth
    loss, ``"smoothed"`` also smooths the l1 term and projects onto the box.
    """

    x0: np.ndarray
    mu0: float = 0.8
    gamma0: float = 1.0
    eta: float = 0.5
    alpha: float = 4.0
    sigma: float = 0.75
    maxiter: int = 15000
    eps: float = 1e-3
    zeta: float = 3e-3
    extrapolate: bool = True
    backtrack: bool = True
    max_backtracks: int = 100
    residual_mode: str = "prox"

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=np.float64).reshape(-1))

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["x0"] = self.x0.tolist()
        return d


CONFIG_FIELDS = tuple(f.name for f in dataclasses.fields(SolverConfig))


def default_config(n: int) -> SolverConfig:
    """Parameters used for the regression benchmarks, ``x0 = 0.1 * ones(n)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return SolverConfig(x0=np.full(n, 0.1))


def _coerce(name: str, value, current):
    if name == "x0":
        return np.asarray(value, dtype=np.float64).reshape(-1)
    if isinstance(current, bool):
        if isinstance(value, str):
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"{name}: expected a boolean, got {value!r}")
        return bool(value)
    if isinstance(current, int):
        f = float(value)
        if f != int(f):
            raise ValueError(f"{name}: expected an integer, got {value!r}")
        return int(f)
    if isinstance(current, float):
        return float(value)
    return str(value)


def config_from_dict(data: Dict[str, Any], n: int, base: Optional[SolverConfig] = None) -> SolverConfig:
    """Build a config from a JSON-style mapping on top of ``base`` (defaults if omitted).

    Unknown keys raise :class:`ConfigError`.
    """
    base = base if base is not None else default_config(n)
    errors = []
    changes = {}
    for key, value in data.items():
        if key not in CONFIG_FIELDS:
            errors.append(f"{key}: unknown config key")
            continue
        try:
            changes[key] = _coerce(key, value, getattr(base, key))
        except (TypeError, ValueError) as exc:
            errors.append(str(exc) if str(exc).startswith(key) else f"{key}: {exc}")
    if errors:
        raise ConfigError(errors)
    return base.replace(**changes)


def validate(cfg: SolverConfig, prob: Optional[CompositeProblem] = None) -> List[str]:
    """Return a list of violated-invariant messages, empty when ``cfg`` is usable.

    An infeasible ``x0`` is not an error: the solvers project it onto the
    box with a warning.
    """
    errs = []

    def pos(name):
        v = getattr(cfg, name)
        if not (math.isfinite(v) and v > 0):
            errs.append(f"{name} must be positive, got {v}")

    pos("mu0")
    pos("gamma0")
    pos("zeta")
    if not 0 < cfg.eta < 1:
        errs.append(f"eta must lie in (0, 1), got {cfg.eta}")
    if not cfg.alpha > 3:
        errs.append(f"alpha must exceed 3, got {cfg.alpha}")
    if not 0.5 < cfg.sigma <= 1:
        errs.append(f"sigma must lie in (1/2, 1], got {cfg.sigma}")
    if cfg.maxiter < 1:
        errs.append(f"maxiter must be a positive integer, got {cfg.maxiter}")
    if not cfg.eps >= 0:
        errs.append(f"eps must be nonnegative, got {cfg.eps}")
    if cfg.max_backtracks < 1:
        errs.append(f"max_backtracks must be a positive integer, got {cfg.max_backtracks}")
    if cfg.residual_mode not in RESIDUAL_MODES:
        errs.append(f"residual_mode must be one of {RESIDUAL_MODES}, got {cfg.residual_mode!r}")
    if not np.all(np.isfinite(cfg.x0)):
        errs.append("x0 contains non-finite entries")
    if prob is not None and cfg.x0.shape[0] != prob.n:
        errs.append(f"x0 has length {cfg.x0.shape[0]}, problem has n={prob.n}")
    return errs


TRACE_COLUMNS = (
    "k", "mu", "gamma", "f", "f_smooth", "residual", "step_norm", "backtracks", "time_s",
)


@dataclass
class SolveTrace:
    """Per-iteration records, one row per loop counter ``k``.

    Row ``k`` describes the iterate produced by that iteration, i.e.
    ``x^{k+1}`` together with ``mu_{k+1}`` and ``gamma_{k+1}``. ``iterates``
    is filled only when the solver is asked to keep them; its entry ``j`` is
    ``x^j`` starting from ``x^0``.
    """

    k: List[int] = field(default_factory=list)
    mu: List[float] = field(default_factory=list)
    gamma: List[float] = field(default_factory=list)
    f: List[float] = field(default_factory=list)
    f_smooth: List[float] = field(default_factory=list)
    residual: List[float] = field(default_factory=list)
    step_norm: List[float] = field(default_factory=list)
    backtracks: List[int] = field(default_factory=list)
    time_s: List[float] = field(default_factory=list)
    iterates: Optional[List[np.ndarray]] = None

    def append(self, **row):
        for name in TRACE_COLUMNS:
            getattr(self, name).append(row[name])

    def __len__(self):
        return len(self.k)

    def rows(self):
        for i in range(len(self)):
            yield tuple(getattr(self, name)[i] for name in TRACE_COLUMNS)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))


@dataclass
class SolveResult:
    x_final: np.ndarray
    iterations: int
    stop_reason: str
    trace: SolveTrace
