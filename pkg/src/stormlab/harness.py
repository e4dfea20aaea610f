"""Experiment harness: JSON configs in, deterministic CSV/JSON artifacts out.

A config names one problem, a list of algorithms, and a grid of horizons
and seeds. Every (algorithm, T, seed) cell is an independent pure function
of the config, so cells may run in parallel and reruns are byte-identical.
Floats in the CSV outputs are written with 17 significant digits, which
round-trips float64 losslessly.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import problems
from .analysis import fit_loglog_slope, prefix_power_sum_bounds, summarize
from .numerics import RngStream
from .optimizers import ALGORITHMS, RunRecord, run_algorithm

TRACE_HEADER = "t,f,grad_norm,v_norm_sq,eta,beta,est_error"

# Per-algorithm tunables accepted in configs, with the defaults filled in
# at parse time so the echoed config is canonical.
ALGORITHM_FIELDS = {
    "ada_storm": {"alpha"},
    "ada_storm_doubling": {"alpha"},
    "comp_storm": {"alpha"},
    "fs_storm": {"alpha"},
    "fs_storm_svrg": {"alpha", "period", "eta_const"},
    "sgd": {"eta0", "decay"},
    "storm_original": {"k", "w", "c"},
}

_PARAM_DEFAULTS = {
    "alpha": 0.3,
    "eta0": 0.1,
    "decay": 0.0,
    "k": 0.1,
    "w": 1.0,
    "c": 10.0,
}


def _fmt(x) -> str:
    """17-significant-digit float formatting for CSV cells."""
    return f"{float(x):.17g}"


@dataclass
class ExperimentConfig:
    problem: dict
    algorithms: list
    T_grid: list
    seeds: list
    out_dir: str | None = None
    thin: int = 1

    def to_json(self) -> str:
        doc = {
            "problem": self.problem,
            "algorithms": self.algorithms,
            "grid": {"T": self.T_grid, "seeds": self.seeds},
            "output": {"thin": self.thin},
        }
        if self.out_dir is not None:
            doc["output"]["directory"] = self.out_dir
        return json.dumps(doc, indent=2, sort_keys=True)


def _require_keys(mapping, allowed, where):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ValueError(f"unknown keys in {where}: {sorted(unknown)}")


def _parse_algorithm(entry: dict, problem_name: str) -> dict:
    if "name" not in entry:
        raise ValueError("algorithm entry needs a 'name' field")
    name = entry["name"]
    if name not in ALGORITHM_FIELDS:
        raise ValueError(
            f"unknown algorithm '{name}', expected one of {sorted(ALGORITHM_FIELDS)}"
        )
    allowed = ALGORITHM_FIELDS[name] | {"name", "label"}
    _require_keys(entry, allowed, f"algorithm '{name}'")
    out = {"name": name, "label": str(entry.get("label", name))}
    for key in sorted(ALGORITHM_FIELDS[name]):
        if key in entry:
            out[key] = entry[key]
        elif key in _PARAM_DEFAULTS:
            out[key] = _PARAM_DEFAULTS[key]
        # keys without defaults (period, eta_const) stay absent
    if "alpha" in out and not 0.0 < float(out["alpha"]) < 1.0 / 3.0:
        raise ValueError(
            f"alpha must lie in (0, 1/3), got {out['alpha']} for '{name}'"
        )
    if name == "sgd":
        if float(out["eta0"]) <= 0:
            raise ValueError(f"eta0 must be positive, got {out['eta0']}")
        if float(out["decay"]) < 0:
            raise ValueError(f"decay must be nonnegative, got {out['decay']}")
    if name == "storm_original" and (
        float(out["k"]) <= 0 or float(out["w"]) <= 0 or float(out["c"]) <= 0
    ):
        # c = 0 would yield beta = 0, which the estimator recursion rejects
        raise ValueError("storm_original needs k > 0, w > 0, c > 0")
    if name == "fs_storm_svrg":
        if "period" in out and int(out["period"]) < 1:
            raise ValueError(f"period must be >= 1, got {out['period']}")
        if "eta_const" in out and float(out["eta_const"]) <= 0:
            raise ValueError(f"eta_const must be positive, got {out['eta_const']}")
    _, families = ALGORITHMS[name]
    if problem_name not in families:
        raise ValueError(
            f"algorithm '{name}' does not accept problem family '{problem_name}'"
        )
    return out


def parse_config(doc) -> ExperimentConfig:
    """Validate a config given as JSON text or an already-parsed mapping.

    Unknown keys anywhere are rejected, exactly one of 'algorithm' or
    'algorithms' must be present, seeds must be distinct integers, and all
    algorithm/problem parameters are range-checked here rather than deep in
    a grid cell.
    """
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if not isinstance(doc, dict):
        raise ValueError("config must be a JSON object")
    _require_keys(doc, {"problem", "algorithm", "algorithms", "grid", "output"}, "config")
    for key in ("problem", "grid"):
        if key not in doc:
            raise ValueError(f"config is missing '{key}'")

    problem_spec = dict(doc["problem"])
    problems.from_spec(problem_spec)  # full validation, instance discarded
    problem_name = problem_spec["name"]

    if ("algorithm" in doc) == ("algorithms" in doc):
        raise ValueError("config needs exactly one of 'algorithm' or 'algorithms'")
    raw_algos = doc.get("algorithms", None)
    if raw_algos is None:
        raw_algos = [doc["algorithm"]]
    if not isinstance(raw_algos, list) or not raw_algos:
        raise ValueError("'algorithms' must be a nonempty list")
    algos = [_parse_algorithm(dict(a), problem_name) for a in raw_algos]
    labels = [a["label"] for a in algos]
    if len(set(labels)) != len(labels):
        raise ValueError(f"algorithm labels must be unique, got {labels}")

    grid = dict(doc["grid"])
    _require_keys(grid, {"T", "seeds"}, "grid")
    if "T" not in grid or "seeds" not in grid:
        raise ValueError("grid needs both 'T' and 'seeds'")
    T_grid = grid["T"] if isinstance(grid["T"], list) else [grid["T"]]
    T_grid = [int(t) for t in T_grid]
    if not T_grid or any(t < 1 for t in T_grid):
        raise ValueError(f"grid T values must be integers >= 1, got {T_grid}")
    if len(set(T_grid)) != len(T_grid):
        raise ValueError(f"grid T values must be distinct, got {T_grid}")
    seeds = grid["seeds"] if isinstance(grid["seeds"], list) else [grid["seeds"]]
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("grid needs at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ValueError(f"duplicate seeds are not allowed, got {seeds}")

    out_dir = None
    thin = 1
    if "output" in doc:
        output = dict(doc["output"])
        _require_keys(output, {"directory", "thin"}, "output")
        out_dir = output.get("directory")
        if out_dir is not None:
            out_dir = str(out_dir)
        thin = int(output.get("thin", 1))
        if thin < 1:
            raise ValueError(f"thin must be >= 1, got {thin}")

    return ExperimentConfig(
        problem=problem_spec,
        algorithms=algos,
        T_grid=T_grid,
        seeds=seeds,
        out_dir=out_dir,
        thin=thin,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


@dataclass(frozen=True)
class SummaryRow:
    """Cross-seed statistics for one (algorithm, problem, T) grid cell group."""

    algorithm: str
    problem: str
    T: int
    n_seeds: int
    avg_grad_norm: float
    avg_grad_norm_stderr: float
    tau_grad_norm: float
    tau_grad_norm_stderr: float
    final_quarter_grad_norm: float
    final_quarter_grad_norm_stderr: float


@dataclass
class GridResult:
    cells: list  # [(label, T, seed), ...] in config order
    records: list  # RunRecord or None per cell
    rows: list = field(default_factory=list)  # SummaryRow
    slopes: list = field(default_factory=list)  # dicts
    failures: list = field(default_factory=list)  # {"cell": ..., "error": ...}

    @property
    def ok(self) -> bool:
        return not self.failures


def _run_cell(payload):
    problem_spec, algo, T, seed = payload
    problem = problems.from_spec(problem_spec)
    params = {
        k: v for k, v in algo.items() if k not in ("name", "label")
    }
    return run_algorithm(algo["name"], problem, T, seed, **params)


def _run_cell_safe(payload):
    try:
        return True, _run_cell(payload)
    except Exception as exc:  # grid keeps going; the failure is reported
        return False, f"{type(exc).__name__}: {exc}"


def run_grid(config: ExperimentConfig, jobs: int = 1) -> GridResult:
    """Run every (algorithm, T, seed) cell and aggregate summaries.

    Cells are independent; jobs > 1 fans them out to worker processes and
    the merged result is identical to a serial run. A failing cell is
    reported in `failures` without stopping the rest of the grid.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    cells = [
        (algo["label"], T, seed)
        for algo in config.algorithms
        for T in config.T_grid
        for seed in config.seeds
    ]
    payloads = [
        (config.problem, algo, T, seed)
        for algo in config.algorithms
        for T in config.T_grid
        for seed in config.seeds
    ]
    if jobs == 1:
        outcomes = [_run_cell_safe(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell_safe, payloads))

    result = GridResult(cells=cells, records=[])
    by_group = {}
    for cell, (ok, value) in zip(cells, outcomes):
        if ok:
            result.records.append(value)
            by_group.setdefault((cell[0], cell[1]), []).append(value)
        else:
            result.records.append(None)
            result.failures.append({"cell": _cell_name(cell, config), "error": value})

    problem_name = config.problem["name"]
    for algo in config.algorithms:
        label = algo["label"]
        for T in config.T_grid:
            group = by_group.get((label, T))
            if not group:
                continue
            stats = summarize(group)
            result.rows.append(
                SummaryRow(algorithm=label, problem=problem_name, T=T, **stats)
            )
        points = [
            (row.T, row.avg_grad_norm)
            for row in result.rows
            if row.algorithm == label
        ]
        points.sort()
        if len(points) >= 3 and all(y > 0 for _, y in points):
            fit = fit_loglog_slope(points)
            result.slopes.append(
                {
                    "algorithm": label,
                    "problem": problem_name,
                    "metric": "avg_grad_norm",
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "r_squared": fit.r_squared,
                    "points": [list(p) for p in fit.points],
                }
            )
    return result


def _cell_name(cell, config) -> str:
    label, T, seed = cell
    return f"{label}__{config.problem['name']}__T{T}__seed{seed}"


def write_trace_csv(record: RunRecord, path, thin: int = 1):
    """One CSV per run; rows with (t - 1) % thin == 0 are retained."""
    if thin < 1:
        raise ValueError(f"thin must be >= 1, got {thin}")
    cols = record.columns()
    lines = [TRACE_HEADER]
    t_arr = cols["t"]
    for i in range(0, t_arr.shape[0], thin):
        lines.append(
            f"{int(t_arr[i])},{_fmt(cols['f'][i])},{_fmt(cols['grad_norm'][i])},"
            f"{_fmt(cols['v_norm_sq'][i])},{_fmt(cols['eta'][i])},"
            f"{_fmt(cols['beta'][i])},{_fmt(cols['est_error'][i])}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_outputs(result: GridResult, config: ExperimentConfig, out_dir, thin=None):
    """Write per-run traces, summary.csv, summary.json, and plot CSVs.

    Returns the list of written paths. Summary statistics always come from
    the full in-memory traces; thinning only affects the trace files.
    """
    thin = config.thin if thin is None else int(thin)
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    for cell, record in zip(result.cells, result.records):
        if record is None:
            continue
        path = os.path.join(out_dir, f"trace__{_cell_name(cell, config)}.csv")
        write_trace_csv(record, path, thin=thin)
        paths.append(path)

    fields = [f for f in SummaryRow.__dataclass_fields__]
    lines = [",".join(fields)]
    for row in result.rows:
        d = asdict(row)
        cells = []
        for f in fields:
            value = d[f]
            if isinstance(value, float):
                cells.append(_fmt(value))
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    summary_csv = os.path.join(out_dir, "summary.csv")
    with open(summary_csv, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    paths.append(summary_csv)

    doc = {
        "config": json.loads(config.to_json()),
        "rows": [asdict(r) for r in result.rows],
        "slopes": result.slopes,
        "failures": result.failures,
    }
    summary_json = os.path.join(out_dir, "summary.json")
    with open(summary_json, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(summary_json)

    plot_header = (
        "T,avg_grad_norm,avg_grad_norm_stderr,tau_grad_norm,tau_grad_norm_stderr,"
        "final_quarter_grad_norm,final_quarter_grad_norm_stderr"
    )
    for algo in config.algorithms:
        label = algo["label"]
        rows = sorted(
            (r for r in result.rows if r.algorithm == label), key=lambda r: r.T
        )
        if not rows:
            continue
        lines = [plot_header]
        for r in rows:
            lines.append(
                f"{r.T},{_fmt(r.avg_grad_norm)},{_fmt(r.avg_grad_norm_stderr)},"
                f"{_fmt(r.tau_grad_norm)},{_fmt(r.tau_grad_norm_stderr)},"
                f"{_fmt(r.final_quarter_grad_norm)},{_fmt(r.final_quarter_grad_norm_stderr)}"
            )
        path = os.path.join(out_dir, f"plot__{label}__{config.problem['name']}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        paths.append(path)
    return paths


def load_summary(path):
    """Reparse summary.json into (rows, slopes, failures)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    rows = [SummaryRow(**r) for r in doc.get("rows", [])]
    return rows, doc.get("slopes", []), doc.get("failures", [])


# ---------------------------------------------------------------------------
# Built-in property checks (the `check` CLI verb).

CHECK_PROBLEMS = (
    {"name": "noisy_quadratic", "dim": 20, "L": 10.0, "mu": 1.0, "sigma": 1.0, "seed": 11},
    {"name": "nonconvex_smooth", "dim": 20, "sigma": 1.0, "seed": 12},
    {"name": "finite_sum", "n": 100, "dim": 20, "seed": 13},
    {"name": "compositional", "dim": 10, "inner_dim": 10, "sigma": 1.0, "seed": 14},
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_sandwich() -> CheckResult:
    lower, middle, upper = prefix_power_sum_bounds([1.0, 1.0, 1.0, 1.0], 0.5)
    hand = 1.0 + 2.0**-0.5 + 3.0**-0.5 + 0.5
    if abs(middle - hand) > 1e-12 or abs(lower - 2.0) > 1e-12 or abs(upper - 4.0) > 1e-12:
        return CheckResult("sandwich-bounds", False, "hand-computed case mismatch")
    gen = RngStream(2024).child("sandwich-sweep").generator
    worst = 0.0
    for _ in range(1000):
        length = int(gen.integers(1, 101))
        c = gen.uniform(1e-6, 10.0, length)
        alpha = float(gen.uniform(0.01, 0.99))
        lower, middle, upper = prefix_power_sum_bounds(c, alpha)
        scale = max(abs(lower), abs(middle), abs(upper))
        worst = max(worst, (lower - middle) / scale, (middle - upper) / scale)
    passed = worst <= 1e-9
    return CheckResult(
        "sandwich-bounds", passed, f"worst relative violation {worst:.3g}"
    )


def _check_gradients() -> CheckResult:
    worst_overall = 0.0
    for spec in CHECK_PROBLEMS:
        problem = problems.from_spec(spec)
        gen = RngStream(spec["seed"]).child("grad-check-points").generator
        for _ in range(100):
            x = gen.standard_normal(problem.dim)
            worst_overall = max(worst_overall, problems.grad_check(problem, x))
    passed = worst_overall < 1e-6
    return CheckResult(
        "gradient-oracles", passed, f"worst finite-difference error {worst_overall:.3g}"
    )


def _check_fixed_points() -> CheckResult:
    quad = problems.make_noisy_quadratic(dim=10, L=10.0, mu=1.0, sigma=0.0, seed=5)
    rec = run_algorithm("ada_storm", quad, 1000, seed=0, alpha=0.3)
    worst = float(rec.est_error.max())
    comp = problems.make_compositional(dim=8, inner_dim=6, sigma=0.0, seed=6)
    rec = run_algorithm("comp_storm", comp, 1000, seed=0, alpha=0.3)
    worst = max(worst, float(rec.est_error.max()))
    passed = worst <= 1e-12
    return CheckResult(
        "noiseless-fixed-points", passed, f"max estimator error {worst:.3g}"
    )


def run_property_checks() -> list:
    """The quick invariant suite behind the `check` CLI verb."""
    return [_check_sandwich(), _check_gradients(), _check_fixed_points()]
