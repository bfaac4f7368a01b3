"""Benchmark runner: iteration/time tables and convergence curves.

Every trial draws its instance from a seed derived from
``(base_seed, cell_index, trial)`` through :class:`numpy.random.SeedSequence`,
so results do not depend on execution order or worker count. All
algorithms of a trial see the same instance and start point.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .datagen import InstanceSpec, gen_instance, objective_for
from .model import config_from_dict, validate, ConfigError
from .solver import SOLVERS, zero_errors

log = logging.getLogger(__name__)

ALGORITHMS = ("sapg", "spg", "isapg")
RAW_COLUMNS = ("m", "n", "spar", "algorithm", "trial", "iter", "time_s", "f_final")
SUMMARY_COLUMNS = ("m", "n", "spar", "algorithm", "trials_ok", "mean_iter", "mean_time_s", "partial")
CURVE_FLOOR = 1e-16


@dataclass
class ExperimentSpec:
    cells: List[Tuple[int, int]]
    spars: List[float]
    trials: int = 50
    kind: str = "linear_l1"
    algorithms: List[str] = field(default_factory=lambda: ["sapg", "spg"])
    base_seed: int = 0
    config: Dict = field(default_factory=dict)
    curves: List[Tuple[int, int, float]] = field(default_factory=list)

    def __post_init__(self):
        self.cells = [tuple(int(v) for v in c) for c in self.cells]
        self.spars = [float(s) for s in self.spars]
        self.curves = [(int(c[0]), int(c[1]), float(c[2])) for c in self.curves]
        self.algorithms = list(self.algorithms)

    def check(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.cells or not self.spars:
            raise ValueError("experiment needs at least one (m, n) cell and one spar level")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}, got {self.algorithms}")
        if self.curves and len(self.algorithms) != 2:
            raise ValueError("curves compare exactly two algorithms")
        for m, n in self.cells:
            cfg = config_from_dict(self.config, n)
            errs = validate(cfg)
            if errs:
                raise ConfigError(errs)

    def grid(self) -> List[Tuple[int, int, float]]:
        """Table cells in emission order: spar levels outer, ``(m, n)`` inner."""
        return [(m, n, s) for s in self.spars for (m, n) in self.cells]

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> Dict:
        d = asdict(self)
        d["cells"] = [list(c) for c in self.cells]
        d["curves"] = [list(c) for c in self.curves]
        return d


@dataclass
class TrialRecord:
    m: int
    n: int
    spar: float
    algorithm: str
    trial: int
    iter: Optional[int]
    time_s: Optional[float]
    f_final: Optional[float]
    error: str = ""


@dataclass
class TableRow:
    m: int
    n: int
    spar: float
    algorithm: str
    mean_iter: float
    mean_time_s: float
    trials_ok: int
    partial: bool


def trial_seed(base_seed: int, cell_index: int, trial: int) -> int:
    return int(np.random.SeedSequence([base_seed, cell_index, trial]).generate_state(1, np.uint64)[0] >> 1)


def _solve(name, prob, cfg, keep_iterates=False):
    if name == "isapg":
        return SOLVERS[name](prob, cfg, errs=zero_errors(prob.n), keep_iterates=keep_iterates)
    return SOLVERS[name](prob, cfg, keep_iterates=keep_iterates)


def _run_trial(args) -> List[TrialRecord]:
    spec_dict, cell_index, (m, n, spar), trial = args
    spec = ExperimentSpec.from_dict(spec_dict)
    inst = gen_instance(InstanceSpec(m, n, spar, trial_seed(spec.base_seed, cell_index, trial), kind=spec.kind))
    prob = objective_for(inst)
    cfg = config_from_dict(spec.config, n)
    out = []
    for name in spec.algorithms:
        try:
            t0 = time.perf_counter()
            res = _solve(name, prob, cfg)
            elapsed = time.perf_counter() - t0
            out.append(TrialRecord(m, n, spar, name, trial, res.iterations, elapsed, prob.objective(res.x_final)))
        except Exception as exc:  # recorded per trial; the cell is marked partial
            log.warning("trial %d of (%d,%d,%g) failed for %s: %s", trial, m, n, spar, name, exc)
            out.append(TrialRecord(m, n, spar, name, trial, None, None, None, error=str(exc)))
    return out


def run_trials(spec: ExperimentSpec, workers: int = 1) -> List[TrialRecord]:
    """Solve every trial of every cell; records come back in deterministic order."""
    spec.check()
    sd = spec.to_dict()
    tasks = [(sd, ci, cell, t) for ci, cell in enumerate(spec.grid()) for t in range(spec.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_trial, tasks))
    else:
        chunks = [_run_trial(t) for t in tasks]
    return [r for chunk in chunks for r in chunk]


def aggregate(spec: ExperimentSpec, records: Sequence[TrialRecord]) -> List[TableRow]:
    rows = []
    for m, n, spar in spec.grid():
        for name in spec.algorithms:
            recs = [r for r in records if (r.m, r.n, r.spar, r.algorithm) == (m, n, spar, name)]
            ok = [r for r in recs if not r.error]
            rows.append(TableRow(
                m, n, spar, name,
                mean_iter=float(np.mean([r.iter for r in ok])) if ok else float("nan"),
                mean_time_s=float(np.mean([r.time_s for r in ok])) if ok else float("nan"),
                trials_ok=len(ok),
                partial=len(ok) < len(recs),
            ))
    return rows


def run_table(spec: ExperimentSpec, workers: int = 1) -> List[TableRow]:
    """Mean iterations and solve time per ``(m, n, spar, algorithm)``."""
    return aggregate(spec, run_trials(spec, workers))


def run_curves(spec: ExperimentSpec, cell: Tuple[int, int, float], trial: int = 0) -> Dict[str, np.ndarray]:
    """Series ``f(x) - f_min`` per loop counter for a pair of algorithms.

    ``f_min`` is the smaller of the two final objectives; values are clipped
    below at ``1e-16`` for log plots. Each series has ``iterations + 1``
    entries.
    """
    if len(spec.algorithms) != 2:
        raise ValueError("curves compare exactly two algorithms")
    m, n, spar = cell
    grid = spec.grid()
    cell_index = grid.index((m, n, float(spar))) if (m, n, float(spar)) in grid else len(grid)
    inst = gen_instance(InstanceSpec(m, n, spar, trial_seed(spec.base_seed, cell_index, trial), kind=spec.kind))
    prob = objective_for(inst)
    cfg = config_from_dict(spec.config, n)
    f = {name: _solve(name, prob, cfg).trace.column("f") for name in spec.algorithms}
    f_min = min(series[-1] for series in f.values())
    return {name: np.maximum(series - f_min, CURVE_FLOOR) for name, series in f.items()}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def cell_name(m: int, n: int, spar: float) -> str:
    return f"m{m}_n{n}_spar{spar:g}"


def write_outputs(
    out_dir,
    spec: ExperimentSpec,
    records: Sequence[TrialRecord],
    rows: Sequence[TableRow],
    curves: Optional[Dict[Tuple[int, int, float], Dict[str, np.ndarray]]] = None,
) -> Path:
    """Write ``tables/raw.csv``, ``tables/summary.csv``, ``curves/<cell>/<algo>.csv`` and ``manifest.json``."""
    out = Path(out_dir)
    _write_rows(out / "tables" / "raw.csv", RAW_COLUMNS,
                [(r.m, r.n, r.spar, r.algorithm, r.trial, r.iter, r.time_s, r.f_final) for r in records])
    _write_rows(out / "tables" / "summary.csv", SUMMARY_COLUMNS,
                [(r.m, r.n, r.spar, r.algorithm, r.trials_ok, r.mean_iter, r.mean_time_s, r.partial) for r in rows])
    curve_files = {}
    for (m, n, spar), series in (curves or {}).items():
        name = cell_name(m, n, spar)
        for algo, values in series.items():
            path = out / "curves" / name / f"{algo}.csv"
            _write_rows(path, ("k", "f_gap"), [(k, float(v)) for k, v in enumerate(values)])
            curve_files.setdefault(name, []).append(f"curves/{name}/{algo}.csv")
    failures = [asdict(r) for r in records if r.error]
    manifest = {
        "library": "sapg",
        "version": __version__,
        "seed": spec.base_seed,
        "spec": spec.to_dict(),
        "tables": ["tables/raw.csv", "tables/summary.csv"],
        "curves": curve_files,
        "failures": failures,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return out


def run_experiment(spec: ExperimentSpec, out_dir, workers: int = 1):
    """Tables plus any requested curves, written under ``out_dir``."""
    records = run_trials(spec, workers)
    rows = aggregate(spec, records)
    curves = {cell: run_curves(spec, cell) for cell in spec.curves}
    write_outputs(out_dir, spec, records, rows, curves)
    return records, rows, curves
