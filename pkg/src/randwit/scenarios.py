"""Scenario runner: reproduces every headline curve and number as CSV tables
from strict JSON configs with deterministic seeding."""

from __future__ import annotations

import datetime
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from . import __version__
from .bounds import (
    LAB_BOUND_KNEE,
    bound_lab,
    bound_tuned,
    pq_feasible,
    pq_measurements,
    visibility_threshold,
    worst_lab_measurements,
    worst_tuned_measurements,
)
from .measurements import Povm, computational_target, misalignment_gap
from .noise import calibrate_dephasing, noisy_tuned_observable
from .optimizer import SearchConfig, worst_case_bound
from .sampling import ShotPlan, estimate_witness
from .witnesses import (
    assemble_observable,
    certification_capability,
    expectation,
    mub_witness,
    two_qubit_xz_witness,
    witness_ideal_minimum,
    xz_assignment,
)


class ConfigError(Exception):
    """Configuration violates the published schema."""


class NumericalError(Exception):
    """A scenario failed numerically in a way that invalidates the table."""


SCENARIO_IDS = (
    "bounds-curve",
    "capability-fig1",
    "sampling-fig2",
    "mub-sweep",
    "dephasing-sweep",
    "pq-grid",
    "visibility",
    "misalignment-audit",
)

_DEFAULT_EPS_GRID = [float(x) for x in np.logspace(np.log10(1e-3), np.log10(0.2), 25)]
_FIVE_POINT_EPS = [0.001, 0.005, 0.01, 0.05, 0.1]
# mub-sweep default search knobs: the capability comparison needs ~1e-5
# accuracy, so the sweep trades convergence depth for runtime
_DEFAULT_SEARCH = {
    "restarts": 6,
    "max_outer_iters": 300,
    "convergence_tol": 1e-7,
    "inner_step_tol": 1e-7,
}

_DEFAULTS: dict[str, dict] = {
    "bounds-curve": {"eps_grid": _DEFAULT_EPS_GRID},
    "capability-fig1": {"eps_grid": _DEFAULT_EPS_GRID},
    "sampling-fig2": {"eps_grid": _FIVE_POINT_EPS, "shots": 5000},
    "mub-sweep": {
        "dims": [2, 3, 4, 5, 6],
        "eps_grid": [0.005, 0.01, 0.05, 0.10],
        "modes": ["lab", "tuned"],
        "search": dict(_DEFAULT_SEARCH),
    },
    "dephasing-sweep": {"eps_grid": _FIVE_POINT_EPS},
    "pq-grid": {"eps": 0.05, "grid_points": 21, "noise": "calibrated"},
    "visibility": {"eps_grid": [float(x) for x in np.linspace(0.0, 0.1, 10)]},
    "misalignment-audit": {"trials": 1000, "dim": 3},
}


def _is_float_list(value, lo=0.0, hi=1.0):
    return (
        isinstance(value, list)
        and len(value) > 0
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
        and all(lo <= float(x) <= hi for x in value)
    )


def _is_pos_int(value):
    return isinstance(value, int) and not isinstance(value, bool) and value > 0


def _validate_params(scenario: str, params: dict) -> None:
    problems = []
    allowed = set(_DEFAULTS[scenario])
    unknown = set(params) - allowed
    if unknown:
        problems.append(f"unknown keys for {scenario}: {sorted(unknown)}")

    def check(key, ok, expect):
        if key in params and not ok(params[key]):
            problems.append(f"{key}: expected {expect}, got {params[key]!r}")

    if scenario in ("bounds-curve", "capability-fig1", "mub-sweep"):
        check("eps_grid", lambda v: _is_float_list(v, 0.0, 1.0),
              "nonempty list of reals in [0, 1]")
    if scenario in ("sampling-fig2", "dephasing-sweep", "visibility"):
        check("eps_grid", lambda v: _is_float_list(v, 0.0, LAB_BOUND_KNEE),
              f"nonempty list of reals in [0, {LAB_BOUND_KNEE:.6f}]")
    if scenario == "sampling-fig2":
        check("shots", _is_pos_int, "positive integer")
    if scenario == "mub-sweep":
        check("dims", lambda v: isinstance(v, list) and len(v) > 0
              and all(_is_pos_int(d) and d >= 2 for d in v), "list of integers >= 2")
        check("modes", lambda v: isinstance(v, list) and len(v) > 0
              and all(m in ("lab", "tuned") for m in v), "subset of ['lab', 'tuned']")
        if "search" in params:
            search = params["search"]
            if not isinstance(search, dict):
                problems.append("search: expected an object")
            else:
                bad = set(search) - set(_DEFAULT_SEARCH)
                if bad:
                    problems.append(f"search: unknown keys {sorted(bad)}")
                for key in ("restarts", "max_outer_iters"):
                    if key in search and not _is_pos_int(search[key]):
                        problems.append(f"search.{key}: expected positive integer")
                for key in ("convergence_tol", "inner_step_tol"):
                    if key in search and not (
                        isinstance(search[key], (int, float)) and search[key] > 0
                    ):
                        problems.append(f"search.{key}: expected positive real")
    if scenario == "pq-grid":
        check("eps", lambda v: isinstance(v, (int, float)) and 0.0 <= v < 0.5,
              "real in [0, 0.5)")
        check("grid_points", lambda v: _is_pos_int(v) and v >= 2, "integer >= 2")
        check("noise", lambda v: v in ("calibrated", "none"),
              "'calibrated' or 'none'")
    if scenario == "misalignment-audit":
        check("trials", _is_pos_int, "positive integer")
        check("dim", lambda v: _is_pos_int(v) and v >= 2, "integer >= 2")
    if problems:
        raise ConfigError("; ".join(problems))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    params: dict
    seed: int = 0
    out: str | None = None
    reproducible: bool = False
    jobs: int = 1

    @classmethod
    def build(cls, scenario: str, raw: dict | None = None, seed: int | None = None,
              out: str | None = None, reproducible: bool = False, jobs: int = 1):
        if scenario not in SCENARIO_IDS:
            raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIO_IDS}")
        raw = dict(raw or {})
        cfg_seed = raw.pop("seed", None)
        cfg_out = raw.pop("out", None)
        if cfg_seed is not None and not isinstance(cfg_seed, int):
            raise ConfigError("seed: expected an integer")
        if cfg_out is not None and not isinstance(cfg_out, str):
            raise ConfigError("out: expected a string")
        _validate_params(scenario, raw)
        params = dict(_DEFAULTS[scenario])
        if scenario == "mub-sweep" and "search" in raw:
            params["search"] = {**_DEFAULT_SEARCH, **raw.pop("search")}
        params.update(raw)
        final_seed = seed if seed is not None else (cfg_seed if cfg_seed is not None else 0)
        final_out = out if out is not None else cfg_out
        if jobs < 1:
            raise ConfigError("jobs must be at least 1")
        return cls(scenario=scenario, params=params, seed=final_seed,
                   out=final_out, reproducible=reproducible, jobs=jobs)

    def hash(self) -> str:
        payload = json.dumps(
            {"scenario": self.scenario, "seed": self.seed, "params": self.params},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def output_path(self) -> str:
        path = self.out if self.out else f"{self.scenario}.csv"
        base = os.environ.get("RANDWIT_OUT_DIR")
        if base and not os.path.isabs(path):
            path = os.path.join(base, path)
        return path


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple]
    provenance: dict = field(default_factory=dict)

    def format_rows(self) -> list[str]:
        lines = []
        for row in self.rows:
            if len(row) != len(self.columns):
                raise NumericalError("row width does not match the column set")
            cells = []
            for value in row:
                if isinstance(value, bool):
                    cells.append(str(int(value)))
                elif isinstance(value, (int, np.integer)):
                    cells.append(str(int(value)))
                elif isinstance(value, (float, np.floating)):
                    cells.append(f"{float(value):.10g}")
                else:
                    cells.append(str(value))
            lines.append(",".join(cells))
        return lines


def emit_csv(table: ResultTable, path: str) -> str:
    """Write the table as UTF-8 CSV with '#' provenance comment lines."""
    if not table.rows:
        raise ConfigError("refusing to emit an empty table")
    lines = [f"# {key}: {value}" for key, value in table.provenance.items()]
    lines.append(",".join(table.columns))
    lines.extend(table.format_rows())
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def parse_csv(path: str) -> tuple[list[str], list[list[str]], dict]:
    """Read back an emitted CSV: (columns, string rows, provenance)."""
    provenance = {}
    columns: list[str] = []
    rows: list[list[str]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                provenance[key] = value
            elif not columns:
                columns = line.split(",")
            elif line:
                rows.append(line.split(","))
    return columns, rows, provenance


def _row_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence((master, index)).generate_state(1)[0])


def _appendix_state() -> np.ndarray:
    # product state with Bloch components r_x = r_z = sqrt(2)/2 on each qubit
    single = np.array([np.cos(np.pi / 8), np.sin(np.pi / 8)], dtype=complex)
    vec = np.kron(single, single)
    return np.outer(vec, vec.conj())


def _run_bounds_curve(cfg: ScenarioConfig) -> tuple[list[str], list[tuple], list[str]]:
    rows = [(float(e), bound_lab(e), bound_tuned(e)) for e in cfg.params["eps_grid"]]
    return ["eps", "bound_lab", "bound_tuned"], rows, []


def _run_capability(cfg: ScenarioConfig) -> tuple[list[str], list[tuple], list[str]]:
    rows = []
    for e in cfg.params["eps_grid"]:
        rows.append((
            float(e),
            certification_capability(bound_lab(e), -1.0),
            certification_capability(bound_tuned(e), -1.0),
        ))
    return ["eps", "capability_lab", "capability_tuned"], rows, []


_FIG2_MODES = ("ideal", "lab", "tuned", "tuned-worst", "tuned-noisy")


def _run_sampling_fig2(cfg: ScenarioConfig) -> tuple[list[str], list[tuple], list[str]]:
    w = two_qubit_xz_witness()
    state = _appendix_state()
    shots = cfg.params["shots"]
    rows = []
    index = 0
    for e in cfg.params["eps_grid"]:
        e = float(e)
        lab = xz_assignment(w, *_lab_pair(e))
        tuned_family = xz_assignment(w, *_tuned_pair(e))
        noise = calibrate_dephasing(e) if e > 0 else None
        for mode in _FIG2_MODES:
            if mode == "ideal":
                assignment, rand, gate_noise = _ideal_assignment(w), "none", None
            elif mode == "lab":
                assignment, rand, gate_noise = lab, "none", None
            elif mode == "tuned":
                assignment, rand, gate_noise = lab, "continuous-phase", None
            elif mode == "tuned-worst":
                assignment, rand, gate_noise = tuned_family, "continuous-phase", None
            else:
                if noise is None:
                    continue
                assignment, rand, gate_noise = lab, "continuous-phase", noise
            plan = ShotPlan(shots=shots, seed=_row_seed(cfg.seed, index),
                            randomization=rand)
            est = estimate_witness(w, assignment, state, plan, noise=gate_noise)
            rows.append((e, mode, est.mean, est.std_estimate))
            index += 1
    notes = [
        "state: product state with Bloch r_x = r_z = sqrt(2)/2 per qubit",
        "lab family: rotated saturating measurements; tuned-worst family: "
        "diagonal saturating measurements",
        "gate noise applied to the randomization gates of both parties",
    ]
    return ["eps", "mode", "mean", "std"], rows, notes


def _ideal_assignment(w):
    targets = {t.label: Povm.ideal(t) for t in w.party_measurements(0)}
    return xz_assignment(w, targets["x"], targets["z"])


def _lab_pair(eps):
    mx, mz, _, _ = worst_lab_measurements(eps)
    return mx, mz


def _tuned_pair(eps):
    mx, mz, _, _ = worst_tuned_measurements(eps)
    return mx, mz


def _mub_row(args) -> tuple:
    d, eps, mode, search, row_seed = args
    w = mub_witness(d)
    cfg = SearchConfig(seed=row_seed, **search)
    est = worst_case_bound(w, eps, mode, cfg)
    capability = certification_capability(min(est.value, 0.0), witness_ideal_minimum(d))
    return (d, float(eps), mode, est.value, capability, est.restart_spread,
            int(est.converged))


def _run_mub_sweep(cfg: ScenarioConfig) -> tuple[list[str], list[tuple], list[str]]:
    tasks = []
    index = 0
    for d in cfg.params["dims"]:
        for eps in cfg.params["eps_grid"]:
            for mode in cfg.params["modes"]:
                tasks.append((d, float(eps), mode, cfg.params["search"],
                              _row_seed(cfg.seed, index)))
                index += 1
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_mub_row, tasks))
    else:
        rows = [_mub_row(t) for t in tasks]
    notes = ["non-converged rows keep their best value and set converged=0"]
    return (["d", "eps", "mode", "bound", "capability", "restart_spread", "converged"],
            rows, notes)


def _run_dephasing_sweep(cfg: ScenarioConfig) -> tuple[list[str], list[tuple], list[str]]:
    w = two_qubit_xz_witness()
    state = _appendix_state()
    targets = {t.label: t for t in w.party_measurements(0)}
    rows = []
    for e in cfg.params["eps_grid"]:
        e = float(e)
        mx, mz = _lab_pair(e)
        lab = xz_assignment(w, mx, mz)
        lab_value = _assigned_expectation(w, lab, state)
        model = calibrate_dephasing(e) if e > 0 else None
        if model is None:
            noisy = lab.tuned()
        else:
            noisy = xz_assignment(
                w,
                noisy_tuned_observable(targets["x"], mx, model),
                noisy_tuned_observable(targets["z"], mz, model),
            )
        rows.append((e, lab_value, _assigned_expectation(w, noisy, state)))
    notes = [
        "state: product state with Bloch r_x = r_z = sqrt(2)/2 per qubit",
        "gate noise calibrated to mean average gate fidelity 1 - eps/10, "
        "applied to both parties' randomization gates",
    ]
    return ["eps", "lab_value", "tuned_noisy_value"], rows, notes


def _assigned_expectation(w, assignment, state) -> float:
    return expectation(assemble_observable(w, assignment), state)


def _run_pq_grid(cfg: ScenarioConfig) -> tuple[list[str], list[tuple], list[str]]:
    w = two_qubit_xz_witness()
    state = _appendix_state()
    targets = {t.label: t for t in w.party_measurements(0)}
    eps = float(cfg.params["eps"])
    n = cfg.params["grid_points"]
    p_max = 2.0 * eps
    q_max = 2.0 * np.sqrt(eps * (1.0 - eps))
    model = None
    if cfg.params["noise"] == "calibrated" and eps > 0:
        model = calibrate_dephasing(eps)
    rows = []
    for p in np.linspace(-p_max, p_max, n):
        for q in np.linspace(-q_max, q_max, n):
            if not pq_feasible(eps, p, q):
                continue
            mx, mz = pq_measurements(eps, float(p), float(q))
            lab = xz_assignment(w, mx, mz)
            lab_value = _assigned_expectation(w, lab, state)
            if model is None:
                tuned = lab.tuned()
            else:
                tuned = xz_assignment(
                    w,
                    noisy_tuned_observable(targets["x"], mx, model),
                    noisy_tuned_observable(targets["z"], mz, model),
                )
            rows.append((float(p), float(q), lab_value,
                         _assigned_expectation(w, tuned, state)))
    notes = [f"eps: {eps:.10g}", "grid covers the feasible (p, q) box; "
             "infeasible corners are skipped"]
    return ["p", "q", "lab_value", "tuned_value"], rows, notes


_VISIBILITY_FAMILIES = ("misaligned", "diagonal")


def _run_visibility(cfg: ScenarioConfig) -> tuple[list[str], list[tuple], list[str]]:
    w = two_qubit_xz_witness()
    rows = []
    for e in cfg.params["eps_grid"]:
        e = float(e)
        for family in _VISIBILITY_FAMILIES:
            mx, mz = (_lab_pair(e) if family == "misaligned" else _tuned_pair(e))
            lab = xz_assignment(w, mx, mz)
            for variant, assignment, bound in (
                ("lab", lab, bound_lab(e)),
                ("tuned", lab.tuned(), bound_tuned(e)),
            ):
                v_star = visibility_threshold(w, assignment, bound)
                rows.append((e, f"{family}_{variant}",
                             float("nan") if v_star is None else v_star))
    notes = ["v_threshold: smallest certifying visibility; nan marks "
             "uncertifiable points"]
    return ["eps", "family", "v_threshold"], rows, notes


def _run_misalignment_audit(cfg: ScenarioConfig) -> tuple[list[str], list[tuple], list[str]]:
    d = cfg.params["dim"]
    target = computational_target(d)
    rows = []
    for trial in range(cfg.params["trials"]):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, trial)))
        basis = unitary_group.rvs(d, random_state=rng) @ target.basis
        lhs, rhs, eps = misalignment_gap(target, basis)
        rows.append((trial, lhs, rhs, eps))
    notes = [f"dim: {d}", "misaligned bases drawn Haar-uniformly"]
    return ["trial", "lhs", "rhs", "eps"], rows, notes


_RUNNERS = {
    "bounds-curve": _run_bounds_curve,
    "capability-fig1": _run_capability,
    "sampling-fig2": _run_sampling_fig2,
    "mub-sweep": _run_mub_sweep,
    "dephasing-sweep": _run_dephasing_sweep,
    "pq-grid": _run_pq_grid,
    "visibility": _run_visibility,
    "misalignment-audit": _run_misalignment_audit,
}


def run_scenario(cfg: ScenarioConfig) -> ResultTable:
    """Execute one scenario and return its deterministic result table."""
    try:
        columns, rows, notes = _RUNNERS[cfg.scenario](cfg)
    except (ConfigError, NumericalError):
        raise
    except (ValueError, RuntimeError) as exc:
        raise NumericalError(str(exc)) from exc
    if not rows:
        raise ConfigError("scenario produced an empty table; check the grids")
    provenance = {
        "scenario": cfg.scenario,
        "version": __version__,
        "seed": cfg.seed,
        "config_hash": cfg.hash(),
    }
    if not cfg.reproducible:
        provenance["generated"] = (
            datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0).isoformat()
        )
    for i, note in enumerate(notes):
        provenance[f"note{i}"] = note
    bad = sum(
        1 for row in rows for v in row
        if isinstance(v, float) and not np.isfinite(v)
    )
    if cfg.scenario != "visibility" and bad:
        raise NumericalError(f"{bad} non-finite cells in the result table")
    return ResultTable(columns=columns, rows=rows, provenance=provenance)
