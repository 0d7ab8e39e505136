"""Optimization runs, ensembles, and the paper-protocol statistics.

A run is a fixed number of outer iterations. Each iteration recomputes the
energies and multipliers at the current angles, records the functional
value, and then moves the angles by one damped Newton step on the
stationarity system grad F = 0 (Jacobian by central differences of the
gradient field, Levenberg-regularized, step norm capped by step_size).
Root-seeking is required rather than plain gradient descent: the
variational points are saddle-type for this functional (for the one-qubit
real elements the gradient-field Jacobian at the solutions is negative
definite, and the two imaginary off-diagonal elements carry opposite
signatures), so a fixed-sign gradient flow can reach at most a subset of
the elements, while a Newton step attracts every nondegenerate stationary
point.

Per-run randomness (initial angles, estimator streams, retry kicks) is
derived from (seed, run_index), so ensembles are reproducible and
order-independent. VME_THREADS > 1 runs ensemble members in a process
pool.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ansatz import HypersphericalAngles, remap_principal
from .core import ProblemInstance, evaluate_functional, stationarity_residual
from .errors import EmptyGroup, NearZeroEnergy, SingularSystem, VmeError
from .estimator import EstimatorConfig, build_cache
from .models import Model, resolve_model

KICK_MAGNITUDE = 1e-3
KICK_LIMIT = 10
CONVERGED_TOL = 1e-6
FD_STEP = 1e-6
LEVENBERG_SCALE = 1e-9


@dataclass(frozen=True)
class UniformInit:
    """Every angle component drawn uniformly from [lo, hi)."""

    lo: float = 0.0
    hi: float = 2.0 * np.pi


@dataclass(frozen=True)
class BallInit:
    """Angles within +-radius of a center pair.

    centers="optimal" cycles round-robin through all (i, j) eigenvector
    pairs of the model; an explicit sequence of (angles_i, angles_j) tuples
    cycles through those instead.
    """

    radius: float = 0.15
    centers: object = "optimal"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class RunConfig:
    model: object = "one_qubit"
    part: str = "real"
    multiplier_method: str = "exact"
    iterations: int = 20
    n_runs: int = 1
    init: object = field(default_factory=UniformInit)
    step_size: float = 0.5
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.n_runs < 1:
            raise ValueError("iterations and n_runs must be >= 1")
        if self.part not in ("real", "imaginary"):
            raise ValueError(f"unknown part {self.part!r}")
        if self.multiplier_method not in ("exact", "iterative"):
            raise ValueError(f"unknown multiplier method {self.multiplier_method!r}")
        if self.step_size < 0:
            raise ValueError("step_size must be nonnegative")


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    f_values: tuple[float, ...]
    angles_i: tuple[tuple[float, ...], ...]
    angles_j: tuple[tuple[float, ...], ...]
    final_value: float | None
    status: str
    failure_reason: str | None = None
    assigned_target: float | None = None

    @property
    def failed(self) -> bool:
        return self.status == "failed"


def _initial_angles(cfg: RunConfig, model: Model, run_index: int, rng: np.random.Generator):
    n_angles = model.dim - 1
    if isinstance(cfg.init, UniformInit):
        draw = rng.uniform(cfg.init.lo, cfg.init.hi, 2 * n_angles)
        return (
            HypersphericalAngles(tuple(draw[:n_angles])),
            HypersphericalAngles(tuple(draw[n_angles:])),
        )
    if isinstance(cfg.init, BallInit):
        if cfg.init.centers == "optimal":
            pairs = [
                (model.optimal_angles[i].values, model.optimal_angles[j].values)
                for i in range(model.dim)
                for j in range(model.dim)
            ]
        else:
            pairs = list(cfg.init.centers)
        ci, cj = pairs[run_index % len(pairs)]
        off = rng.uniform(-cfg.init.radius, cfg.init.radius, 2 * n_angles)
        return (
            HypersphericalAngles(tuple(np.asarray(ci) + off[:n_angles])),
            HypersphericalAngles(tuple(np.asarray(cj) + off[n_angles:])),
        )
    raise ValueError(f"unknown init spec {cfg.init!r}")


def _split(vec: np.ndarray, n: int):
    return HypersphericalAngles(tuple(vec[:n])), HypersphericalAngles(tuple(vec[n:]))


def _evaluate_with_kicks(prob, ai, aj, method, kick_rng):
    """Evaluate at the current angles, kicking past guard failures."""
    for _ in range(KICK_LIMIT):
        try:
            return evaluate_functional(prob, ai, aj, method), ai, aj
        except (NearZeroEnergy, SingularSystem):
            ki = kick_rng.uniform(-KICK_MAGNITUDE, KICK_MAGNITUDE, len(ai.values))
            kj = kick_rng.uniform(-KICK_MAGNITUDE, KICK_MAGNITUDE, len(aj.values))
            ai = HypersphericalAngles(tuple(ai.as_array() + ki))
            aj = HypersphericalAngles(tuple(aj.as_array() + kj))
    raise NearZeroEnergy("guard persisted through retry kicks")


def _newton_direction(prob, ai, aj):
    """Gauss-Newton direction on the stacked stationarity residual.

    The residual stacks the frozen-multiplier gradient and the total
    self-consistent gradient; both vanish only at the variational
    solutions, so every element (minimum, maximum, or saddle of the
    functional) is locally attracting while the spurious zeros that each
    field has on its own are suppressed. The Jacobian is taken by central
    differences of the analytic residual.
    """
    n_i = len(ai.values)
    x = np.concatenate([ai.as_array(), aj.as_array()])
    n = x.size

    def residual_at(vec):
        a, b = _split(vec, n_i)
        frozen, total = stationarity_residual(prob, a, b)
        return np.concatenate([frozen, total])

    base = residual_at(x)
    jac = np.zeros((2 * n, n))
    for k in range(n):
        xp, xm = x.copy(), x.copy()
        xp[k] += FD_STEP
        xm[k] -= FD_STEP
        try:
            jac[:, k] = (residual_at(xp) - residual_at(xm)) / (2 * FD_STEP)
        except (NearZeroEnergy, SingularSystem):
            try:
                jac[:, k] = (residual_at(xp) - base) / FD_STEP
            except (NearZeroEnergy, SingularSystem):
                jac[:, k] = 0.0
    jtj = jac.T @ jac
    reg = LEVENBERG_SCALE * max(1.0, float(np.max(np.abs(jtj))))
    try:
        return np.linalg.solve(jtj + reg * np.eye(n), jac.T @ base)
    except np.linalg.LinAlgError:
        return jac.T @ base


def run_single(cfg: RunConfig, run_index: int = 0) -> RunRecord:
    """One optimization run; failures are captured, never raised."""
    model = resolve_model(cfg.model)
    init_rng = np.random.default_rng([cfg.seed & (2**63 - 1), run_index, 0])
    kick_rng = np.random.default_rng([cfg.seed & (2**63 - 1), run_index, 1])
    est_seed = int(np.random.SeedSequence([cfg.seed & (2**63 - 1), run_index, 2]).generate_state(1)[0])

    est_cfg = replace(cfg.estimator, seed=est_seed) if cfg.estimator.mode != "exact" else cfg.estimator
    cache = build_cache(model.h_dense, model.w_part(cfg.part), cfg.part, est_cfg)
    prob: ProblemInstance = model.problem(cfg.part).with_estimates(cache)

    ai, aj = _initial_angles(cfg, model, run_index, init_rng)
    remap = cfg.part == "real" and model.name == "one_qubit"
    if remap:
        ai, aj = remap_principal(ai), remap_principal(aj)

    f_trace: list[float] = []
    ai_trace: list[tuple[float, ...]] = []
    aj_trace: list[tuple[float, ...]] = []
    status, reason = "max_iterations", None
    try:
        for it in range(cfg.iterations + 1):
            ev, ai, aj = _evaluate_with_kicks(prob, ai, aj, cfg.multiplier_method, kick_rng)
            f_trace.append(ev.f_value)
            ai_trace.append(ai.values)
            aj_trace.append(aj.values)
            if it == cfg.iterations:
                break
            step = _newton_direction(prob, ai, aj)
            norm = float(np.linalg.norm(step))
            if norm > cfg.step_size:
                step = step * (cfg.step_size / norm) if norm > 0 else step
            x = np.concatenate([ai.as_array(), aj.as_array()]) - step
            ai, aj = _split(x, len(ai.values))
            if remap:
                ai, aj = remap_principal(ai), remap_principal(aj)
        if len(f_trace) >= 2 and abs(f_trace[-1] - f_trace[-2]) < CONVERGED_TOL:
            status = "converged"
    except VmeError as exc:
        status, reason = "failed", f"{type(exc).__name__}: {exc}"
    except np.linalg.LinAlgError as exc:
        status, reason = "failed", f"LinAlgError: {exc}"

    final = f_trace[-1] if status != "failed" and f_trace else None
    return RunRecord(
        run_index=run_index,
        f_values=tuple(f_trace),
        angles_i=tuple(ai_trace),
        angles_j=tuple(aj_trace),
        final_value=final,
        status=status,
        failure_reason=reason,
    )


def _worker(args):
    cfg, k = args
    return run_single(cfg, k)


def run_ensemble(cfg: RunConfig) -> list[RunRecord]:
    """n_runs independent records; run k is seeded from (seed, k)."""
    threads = int(os.environ.get("VME_THREADS", "1"))
    indices = range(cfg.n_runs)
    if threads > 1 and cfg.n_runs > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_worker, [(cfg, k) for k in indices]))
    return [run_single(cfg, k) for k in indices]


def classify_run(final_value, targets, tolerance: float):
    """Nearest target within tolerance, else None."""
    if not targets:
        raise ValueError("targets must be non-empty")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if final_value is None:
        return None
    best = min(targets, key=lambda t: abs(final_value - t))
    return best if abs(final_value - best) <= tolerance else None


def classify_records(records, targets, tolerance: float):
    """Copies of the records with assigned_target filled in."""
    return [
        replace(r, assigned_target=classify_run(r.final_value, targets, tolerance))
        for r in records
    ]


def default_targets(model, part: str) -> list[float]:
    """Unique real (or imaginary) coefficients of the eigenbasis target matrix."""
    return resolve_model(model).targets(part)


@dataclass(frozen=True)
class GroupBand:
    count: int
    f_median: np.ndarray
    f_low: np.ndarray
    f_high: np.ndarray
    angles_median: np.ndarray
    angles_low: np.ndarray
    angles_high: np.ndarray


@dataclass(frozen=True)
class EnsembleSummary:
    groups: dict
    unassigned_count: int
    n_runs: int
    percentiles: tuple[float, float]


def _full_traces(records):
    lengths = {len(r.f_values) for r in records}
    if len(lengths) != 1:
        raise EmptyGroup("group mixes trace lengths")
    return lengths.pop()


def median_band(records, percentiles: tuple[float, float] = (4.0, 96.0)) -> EnsembleSummary:
    """Per-iteration median and percentile bands, grouped by assigned target.

    Linear-interpolation percentiles (default 4th/96th, the 92% band) of
    the functional value and of every angle. Failed or unassigned runs
    count into unassigned_count, so group counts + unassigned = n_runs.
    """
    lo, hi = percentiles
    groups: dict[float, list[RunRecord]] = {}
    unassigned = 0
    for r in records:
        if r.assigned_target is None or r.failed:
            unassigned += 1
        else:
            groups.setdefault(float(r.assigned_target), []).append(r)
    out = {}
    for target, members in sorted(groups.items()):
        if not members:
            raise EmptyGroup(f"group {target} is empty")
        _full_traces(members)
        f = np.array([m.f_values for m in members])
        ang = np.array(
            [np.hstack([np.array(m.angles_i), np.array(m.angles_j)]) for m in members]
        )
        out[target] = GroupBand(
            count=len(members),
            f_median=np.median(f, axis=0),
            f_low=np.percentile(f, lo, axis=0),
            f_high=np.percentile(f, hi, axis=0),
            angles_median=np.median(ang, axis=0),
            angles_low=np.percentile(ang, lo, axis=0),
            angles_high=np.percentile(ang, hi, axis=0),
        )
    return EnsembleSummary(
        groups=out, unassigned_count=unassigned, n_runs=len(records), percentiles=(lo, hi)
    )


@dataclass(frozen=True)
class ErrorBand:
    count: int
    median: np.ndarray
    p25: np.ndarray
    p75: np.ndarray


def error_traces(records, targets, strict: bool = False) -> dict:
    """Per-target |f - target| median with [25th, 75th] percentile bands.

    Exact zeros are clamped to 1e-16 so the traces are ready for a log
    axis. Targets with no classified runs are skipped unless strict, in
    which case EmptyGroup is raised.
    """
    out = {}
    for target in targets:
        members = [
            r for r in records if r.assigned_target == target and not r.failed
        ]
        if not members:
            if strict:
                raise EmptyGroup(f"no runs classified to {target}")
            continue
        _full_traces(members)
        err = np.maximum(np.abs(np.array([m.f_values for m in members]) - target), 1e-16)
        out[float(target)] = ErrorBand(
            count=len(members),
            median=np.median(err, axis=0),
            p25=np.percentile(err, 25.0, axis=0),
            p75=np.percentile(err, 75.0, axis=0),
        )
    return out


@dataclass(frozen=True)
class HeatmapGrid:
    edges: np.ndarray
    counts: np.ndarray
    dropped: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2


def default_value_range(targets, bin_width: float = 0.2, pad: float = 5.0):
    """Range with edges offset so integer elements sit at bin centers."""
    lo = float(np.floor(min(targets)) - pad - bin_width / 2)
    hi = float(np.ceil(max(targets)) + pad + bin_width / 2)
    return lo, hi


def heatmap(records, bin_width: float, value_range) -> HeatmapGrid:
    """Counts of run values per (iteration, bin).

    Values outside the range, and iterations a failed run never reached,
    are tallied as dropped, so counts[t].sum() + dropped[t] equals the
    number of records for every t.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    lo, hi = value_range
    n_bins = max(1, int(np.ceil((hi - lo) / bin_width)))
    edges = lo + bin_width * np.arange(n_bins + 1)
    n_iters = max((len(r.f_values) for r in records), default=1)
    counts = np.zeros((n_iters, n_bins), dtype=int)
    dropped = np.zeros(n_iters, dtype=int)
    for r in records:
        for t in range(n_iters):
            if t >= len(r.f_values) or not np.isfinite(r.f_values[t]):
                dropped[t] += 1
                continue
            b = int(np.floor((r.f_values[t] - lo) / bin_width))
            if 0 <= b < n_bins:
                counts[t, b] += 1
            else:
                dropped[t] += 1
    return HeatmapGrid(edges=edges, counts=counts, dropped=dropped)
