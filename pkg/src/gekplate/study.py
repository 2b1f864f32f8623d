"""Convergence-study driver: sweep (iota, eta, n) grids, solve, measure
errors, and emit CSV/JSON plus printed rate tables.

Per mesh size the stiffness pieces are assembled once into core/penalty
blocks; every (iota, eta) combination reuses them through a sparse linear
combination, which is what keeps full sweeps inside a small time budget.
"""

import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import error_norms, rate
from .assembly import DofMap, assemble_forms, assemble_load, build_system, dump_system
from .mesh import build_structured_mesh, read_mesh
from .problems import example1, example2
from .solver import SolverError, solve

CSV_COLUMNS = (
    "example",
    "n",
    "h",
    "iota",
    "eta",
    "dofs",
    "l2",
    "h1",
    "h2_broken",
    "h3_broken",
    "jump_n_1",
    "jump_n_3",
    "jump_nn_1",
    "triple2",
    "triple3",
    "norm_iota_h",
    "osc",
    "rate_norm_iota_h",
    "solve_seconds",
    "solver",
    "residual",
)

_ERROR_FIELDS = (
    "l2",
    "h1",
    "h2_broken",
    "h3_broken",
    "jump_n_1",
    "jump_n_3",
    "jump_nn_1",
    "triple2",
    "triple3",
    "norm_iota_h",
    "osc",
)

DEFAULT_NS = (4, 8, 16, 32, 64)
DEFAULT_IOTAS = {"1": (1.0, 1e-2, 1e-4, 1e-6, 0.0), "2": (1e-6, 1e-8)}


@dataclass
class StudyConfig:
    example: str = "1"
    ns: tuple = DEFAULT_NS
    iotas: tuple | None = None
    etas: tuple = (10.0,)
    quad_volume: int = 8
    quad_error: int = 12
    quad_edge: int = 4
    solver: str = "direct"
    mesh_file: str | None = None
    out: str | None = None
    format: str = "csv"
    threads: int = 1
    problem_factory: object = None  # iota -> ManufacturedProblem, for "custom"
    dump: str | None = None

    def __post_init__(self):
        if self.example not in ("1", "2", "custom"):
            raise ValueError(f"unknown example {self.example!r}")
        if self.iotas is None:
            self.iotas = DEFAULT_IOTAS.get(self.example, (1e-6,))
        self.ns = tuple(int(n) for n in self.ns)
        self.iotas = tuple(float(i) for i in self.iotas)
        self.etas = tuple(float(e) for e in self.etas)
        if self.mesh_file is not None:
            self.ns = (0,)  # single level read from file; rates stay undefined
        elif any(n < 1 for n in self.ns):
            raise ValueError("mesh sizes must satisfy n >= 1")
        if any(e <= 0 for e in self.etas):
            raise ValueError("penalty parameters must be positive")
        if any(i < 0 for i in self.iotas):
            raise ValueError("size parameters must be nonnegative")
        if self.example == "custom" and self.problem_factory is None:
            raise ValueError("example 'custom' needs a problem factory")

    def make_problem(self, iota: float):
        if self.example == "1":
            return example1(iota)
        if self.example == "2":
            return example2(iota)
        return self.problem_factory(iota)


@dataclass
class StudyResult:
    config: StudyConfig
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _nan_row(config, n, h, iota, eta, dofs):
    row = {
        "example": config.example,
        "n": n,
        "h": h,
        "iota": iota,
        "eta": eta,
        "dofs": dofs,
        "rate_norm_iota_h": math.nan,
        "solve_seconds": math.nan,
        "solver": config.solver,
        "residual": math.nan,
    }
    for name in _ERROR_FIELDS:
        row[name] = math.nan
    return row


class _LevelCache:
    """Mesh, DoF map, form blocks per level and load vectors per (level, iota)."""

    def __init__(self, config: StudyConfig):
        self.config = config
        self.lock = threading.Lock()
        self.levels: dict = {}
        self.loads: dict = {}
        self.problems: dict = {}

    def level(self, n: int):
        with self.lock:
            if n not in self.levels:
                if self.config.mesh_file is not None:
                    mesh = read_mesh(self.config.mesh_file)
                else:
                    mesh = build_structured_mesh(n)
                dofmap = DofMap(mesh)
                parts = assemble_forms(
                    mesh,
                    dofmap,
                    stiffness_degree=self.config.quad_volume,
                    edge_points=self.config.quad_edge,
                )
                self.levels[n] = (mesh, dofmap, parts)
            return self.levels[n]

    def problem(self, iota: float):
        with self.lock:
            if iota not in self.problems:
                self.problems[iota] = self.config.make_problem(iota)
            return self.problems[iota]

    def load(self, n: int, iota: float):
        mesh, dofmap, _ = self.level(n)
        problem = self.problem(iota)
        with self.lock:
            if (n, iota) not in self.loads:
                self.loads[n, iota] = assemble_load(
                    mesh, dofmap, problem.load, degree=self.config.quad_volume
                )
            return self.loads[n, iota]


def _run_point(cache: _LevelCache, n: int, iota: float, eta: float) -> dict:
    config = cache.config
    mesh, dofmap, parts = cache.level(n)
    h = mesh.h_report
    try:
        problem = cache.problem(iota)
        load_full = cache.load(n, iota)
        system = build_system(parts, load_full, iota, eta, dofmap)
        if config.dump:
            dump_system(system, f"{config.dump}_n{n}_iota{iota:g}_eta{eta:g}")
        w_h, report = solve(system, method=config.solver)
        err = error_norms(
            w_h,
            problem.compare_field,
            iota,
            eta,
            volume_degree=config.quad_error,
            load=problem.load,
            osc_degree=config.quad_volume,
        )
        row = {
            "example": config.example,
            "n": n,
            "h": h,
            "iota": iota,
            "eta": eta,
            "dofs": dofmap.n_free,
            "rate_norm_iota_h": math.nan,
            "solve_seconds": report.seconds,
            "solver": report.method,
            "residual": report.residual,
        }
        for name in _ERROR_FIELDS:
            row[name] = getattr(err, name)
        return row
    except (SolverError, np.linalg.LinAlgError) as exc:
        row = _nan_row(config, n, h, iota, eta, dofmap.n_free)
        row["_failure"] = (
            f"example {config.example} n={n} iota={iota:g} eta={eta:g}: {exc}"
        )
        return row


def run_study(config: StudyConfig) -> StudyResult:
    """Execute the full (iota, eta, n) grid; failures become NaN rows."""
    cache = _LevelCache(config)
    grid = [
        (iota, eta, n)
        for iota in config.iotas
        for eta in config.etas
        for n in config.ns
    ]
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rows = list(
                pool.map(lambda p: _run_point(cache, p[2], p[0], p[1]), grid)
            )
    else:
        rows = [_run_point(cache, n, iota, eta) for iota, eta, n in grid]

    result = StudyResult(config=config)
    prev = None
    for (iota, eta, n), row in zip(grid, rows):
        failure = row.pop("_failure", None)
        if failure is not None:
            result.failures.append(failure)
        if prev is not None and prev[0] == (iota, eta):
            row["rate_norm_iota_h"] = rate(prev[1], row["norm_iota_h"])
        prev = ((iota, eta), row["norm_iota_h"])
        result.rows.append(row)
    return result


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    return "nan" if math.isnan(v) else f"{v:.12e}"


def write_csv(result: StudyResult) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(_fmt(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_json(result: StudyResult) -> str:
    def clean(v):
        if isinstance(v, (float, np.floating)):
            return None if math.isnan(float(v)) else float(v)
        if isinstance(v, (int, np.integer)):
            return int(v)
        return v

    payload = {
        "config": {
            "example": result.config.example,
            "ns": list(result.config.ns),
            "iotas": list(result.config.iotas),
            "etas": list(result.config.etas),
            "solver": result.config.solver,
        },
        "rows": [{k: clean(v) for k, v in row.items()} for row in result.rows],
        "failures": list(result.failures),
    }
    return json.dumps(payload, indent=2) + "\n"


def _series(result: StudyResult, iota: float, eta: float) -> list:
    return [
        r for r in result.rows if r["iota"] == iota and r["eta"] == eta
    ]


def _rate_str(prev, cur) -> str:
    r = rate(prev, cur)
    return "  -  " if math.isnan(r) else f"{r:5.2f}"


def format_tables(result: StudyResult) -> str:
    """Blocks of error/rate columns shaped like the published tables."""
    config = result.config
    out = []
    if config.example == "2":
        names = ("norm_iota_h", "h1", "h2_broken", "h3_broken", "l2")
        labels = ("norm_iota_h", "h1_semi", "h2_broken", "h3_broken", "l2")
        for iota in config.iotas:
            for eta in config.etas:
                rows = _series(result, iota, eta)
                if not rows:
                    continue
                out.append(f"example {config.example}  iota={iota:g}  eta={eta:g}")
                head = "   n"
                for lab in labels:
                    head += f"  {lab:>12s}  rate "
                out.append(head)
                for i, r in enumerate(rows):
                    line = f"{r['n']:4d}"
                    for name in names:
                        prev = rows[i - 1][name] if i > 0 else math.nan
                        line += f"  {r[name]:12.3e}  {_rate_str(prev, r[name])}"
                    out.append(line)
                out.append("")
        return "\n".join(out)

    sweeps = (
        [("eta", eta, config.iotas, "iota") for eta in config.etas]
        if len(config.etas) == 1
        else [("iota", iota, config.etas, "eta") for iota in config.iotas]
    )
    for fixed_name, fixed, columns, col_name in sweeps:
        out.append(
            f"example {config.example}  {fixed_name}={fixed:g}  "
            f"norm_iota_h by {col_name}"
        )
        head = "   n"
        for c in columns:
            head += f"  {col_name + '=' + format(c, 'g'):>12s}  rate "
        out.append(head)
        series = [
            _series(result, c, fixed) if fixed_name == "eta" else _series(result, fixed, c)
            for c in columns
        ]
        for i, n in enumerate(config.ns):
            line = f"{n:4d}"
            for rows in series:
                if i < len(rows):
                    cur = rows[i]["norm_iota_h"]
                    prev = rows[i - 1]["norm_iota_h"] if i > 0 else math.nan
                    line += f"  {cur:12.3e}  {_rate_str(prev, cur)}"
                else:
                    line += f"  {'-':>12s}  {'-':>5s}"
            out.append(line)
        out.append("")
    return "\n".join(out)
