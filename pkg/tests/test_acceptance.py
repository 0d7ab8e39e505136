"""Acceptance suite: one test per criterion, each printing a PASS line.

The ensemble criteria are stochastic; they run at the shipped default seed
(the same constant the CLI uses), with runtime budgets asserted where
stated. Run with -s to see the PASS lines as they complete.
"""

import time

import numpy as np
import pytest

from vme.ansatz import HypersphericalAngles, amplitudes
from vme.core import (
    evaluate_functional,
    exact_multiplier,
    functional_gradient,
    functional_value,
    functional_value_unnormalized,
    iterative_multiplier,
    lambda_ij,
    multiplier_set,
)
from vme.errors import NearZeroEnergy, SingularSystem
from vme.estimator import DEFAULT_SEED, EstimatorConfig, element_rng, estimate_scalar
from vme.experiments import (
    BallInit,
    RunConfig,
    UniformInit,
    classify_records,
    default_targets,
    default_value_range,
    error_traces,
    heatmap,
    median_band,
    run_ensemble,
)
from vme.models import one_qubit_model, two_qubit_model

SEED = DEFAULT_SEED
SHOT = dict(shots=1000, repeats=50)

MODELS = {"one_qubit": one_qubit_model, "two_qubit": two_qubit_model}


def eigenbasis_part(model, part):
    return model.w_eigenbasis.real if part == "real" else model.w_eigenbasis.imag


def test_c1_exact_evaluation_oracle():
    """F_v at exact eigenstates equals every eigenbasis entry to 1e-9, < 1 s."""
    t0 = time.perf_counter()
    checked = 0
    for model in (one_qubit_model(), two_qubit_model()):
        for part in ("real", "imaginary"):
            p = model.problem(part)
            comp = eigenbasis_part(model, part)
            for a in range(model.dim):
                for b in range(model.dim):
                    pi = amplitudes(model.optimal_angles[a])
                    pj = amplitudes(model.optimal_angles[b])
                    ls = multiplier_set(p, pi, pj)
                    e_i = float(pi @ p.h_eff @ pi)
                    e_j = float(pj @ p.h_eff @ pj)
                    f = functional_value(p, pi, pj, ls, e_i, e_j)
                    assert abs(f - comp[a, b]) < 1e-9, (model.name, part, a, b)
                    checked += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    print(f"PASS C1 exact oracle: {checked} entries to 1e-9 in {elapsed:.2f}s")


def _one_qubit_ensembles(est, method="exact"):
    out = {}
    for part in ("real", "imaginary"):
        cfg = RunConfig(
            model="one_qubit",
            part=part,
            multiplier_method=method,
            n_runs=150,
            init=UniformInit(0.0, 2 * np.pi),
            estimator=est,
            seed=SEED,
        )
        out[part] = classify_records(
            run_ensemble(cfg), default_targets("one_qubit", part), 0.5
        )
    return out


def _convergence_stats(records_by_part):
    classified = nonfailed = 0
    for recs in records_by_part.values():
        nf = [r for r in recs if not r.failed]
        nonfailed += len(nf)
        classified += sum(1 for r in nf if r.assigned_target is not None)
    real_counts = {
        t: sum(1 for r in records_by_part["real"] if r.assigned_target == t)
        for t in (5.0, 3.0, 2.0)
    }
    return classified, nonfailed, real_counts


def test_c2_one_qubit_convergence():
    """150 runs per part, mitigated shot estimator: >=90% classify, real targets covered.

    The figure this mirrors shows both the real and imaginary panels from
    150 runs each, so the classification rate pools both parts; the per-
    target floor is stated for the three real elements.
    """
    t0 = time.perf_counter()
    est = EstimatorConfig(mode="shot_readout", readout_flip_prob=0.02, mitigation=True, **SHOT)
    recs = _one_qubit_ensembles(est)
    classified, nonfailed, real_counts = _convergence_stats(recs)
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    assert classified / nonfailed >= 0.90
    assert all(c >= 10 for c in real_counts.values())
    print(
        f"PASS C2 convergence: {classified}/{nonfailed} classified "
        f"({classified / nonfailed:.1%}), real target counts {real_counts}, {elapsed:.0f}s"
    )


def test_c3_iterative_vs_exact_multipliers():
    """stationary_solve multipliers match exact; iterative ensembles still converge."""
    m = one_qubit_model()
    pi, pj = amplitudes(m.optimal_angles[0]), amplitudes(m.optimal_angles[1])
    worst = 0.0
    for part in ("real", "imaginary"):
        p = m.problem(part)
        for which in ("i_side", "j_side"):
            for nu in ("a", "b"):
                ex = exact_multiplier(p, pi, pj, which, nu).as_array()
                it = iterative_multiplier(p, pi, pj, which, nu, method="stationary_solve").as_array()
                worst = max(worst, float(np.max(np.abs(ex - it))))
    assert worst < 1e-10

    est = EstimatorConfig(mode="shot_readout", readout_flip_prob=0.02, mitigation=True, **SHOT)
    exact_recs = _one_qubit_ensembles(est, method="exact")
    iter_recs = _one_qubit_ensembles(est, method="iterative")
    classified, nonfailed, real_counts = _convergence_stats(iter_recs)
    assert classified / nonfailed >= 0.90
    assert all(c >= 10 for c in real_counts.values())

    widths = []
    for part in ("real", "imaginary"):
        s_exact = median_band(exact_recs[part])
        s_iter = median_band(iter_recs[part])
        assert set(s_iter.groups) == set(s_exact.groups)
        for target, band in s_iter.groups.items():
            w_iter = float(band.f_high[-1] - band.f_low[-1])
            w_exact = float(
                s_exact.groups[target].f_high[-1] - s_exact.groups[target].f_low[-1]
            )
            assert w_iter >= w_exact - 1e-12
            widths.append((target, w_iter, w_exact))
    print(
        f"PASS C3 iterative multipliers: coefficient gap {worst:.1e}, "
        f"{classified}/{nonfailed} classified, band widths >= exact for {len(widths)} groups"
    )


def test_c4_error_decay_phenomenology():
    """Classical errors < 1e-4 by iteration 20; shot noise plateaus; mitigation helps."""
    def traces_for(est):
        out = {}
        for part in ("real", "imaginary"):
            cfg = RunConfig(
                model="one_qubit", part=part, n_runs=150,
                init=UniformInit(0.0, 2 * np.pi), estimator=est, seed=SEED,
            )
            recs = classify_records(run_ensemble(cfg), default_targets("one_qubit", part), 0.5)
            out[part] = error_traces(recs, default_targets("one_qubit", part))
        return out

    classical = traces_for(EstimatorConfig(mode="exact"))
    for part, traces in classical.items():
        for target, band in traces.items():
            assert band.median[-1] < 1e-4, (part, target, band.median[-1])

    shot = traces_for(EstimatorConfig(mode="shot", **SHOT))
    for part, traces in shot.items():
        for target, band in traces.items():
            assert band.median[-1] <= 2.0 * band.median[10], (part, target)

    mitigated = traces_for(
        EstimatorConfig(mode="shot_readout", readout_flip_prob=0.05, mitigation=True, **SHOT)
    )
    unmitigated = traces_for(
        EstimatorConfig(mode="shot_readout", readout_flip_prob=0.05, mitigation=False, **SHOT)
    )
    wins = 0
    for part in ("real", "imaginary"):
        for target in default_targets("one_qubit", part):
            m = mitigated[part].get(target)
            u = unmitigated[part].get(target)
            if m is not None and u is None:
                wins += 1  # element absent without mitigation
            elif m is not None and u is not None and m.median[-1] < u.median[-1]:
                wins += 1
    assert wins >= 5
    print(f"PASS C4 error decay: classical < 1e-4, plateau within 2x, mitigation lower for {wins}/6")


# Fixed generic perturbation directions away from the symmetry axes along
# which the quadratic error term vanishes.
DIRECTIONS = {
    ("one_qubit", "real"): np.array([0.9442, 1.0]),
    ("one_qubit", "imaginary"): np.array([0.7887, -1.0]),
    ("two_qubit", "real"): np.array([-1.0, 0.5716, 0.8781, -0.8164, -0.4018, 0.3393]),
    ("two_qubit", "imaginary"): np.array([0.9292, 1.0, 0.4573, -0.9478, 0.698, 0.896]),
}


def test_c5_second_order_stationarity():
    """Perturbation error ratio in [3.5, 4.5] for delta in {0.02, 0.01}."""
    ratios = {}
    for name, builder in MODELS.items():
        model = builder()
        n = model.dim - 1
        for part in ("real", "imaginary"):
            p = model.problem(part)
            exact = eigenbasis_part(model, part)[0, 1]
            base = np.concatenate(
                [model.optimal_angles[0].as_array(), model.optimal_angles[1].as_array()]
            )
            u = DIRECTIONS[(name, part)]

            def value(delta):
                x = base + delta * u
                ai = HypersphericalAngles(tuple(x[:n]))
                aj = HypersphericalAngles(tuple(x[n:]))
                return evaluate_functional(p, ai, aj).f_value

            for delta in (0.02, 0.01):
                ratio = abs(value(delta) - exact) / abs(value(delta / 2) - exact)
                assert 3.5 <= ratio <= 4.5, (name, part, delta, ratio)
                ratios[(name, part, delta)] = ratio
    print(f"PASS C5 second-order stationarity: ratios {[round(r, 2) for r in ratios.values()]}")


def test_c6_gradient_check():
    """functional_gradient vs central finite differences, 100 points per case."""
    rng = np.random.default_rng(SEED)
    h = 1e-6
    worst = 0.0
    for name, builder in MODELS.items():
        model = builder()
        n = model.dim - 1
        for part in ("real", "imaginary"):
            p = model.problem(part)
            done = 0
            while done < 100:
                x = rng.uniform(-np.pi, np.pi, 2 * n)
                ai = HypersphericalAngles(tuple(x[:n]))
                aj = HypersphericalAngles(tuple(x[n:]))
                pi, pj = amplitudes(ai), amplitudes(aj)
                try:
                    ls = multiplier_set(p, pi, pj)
                except (NearZeroEnergy, SingularSystem):
                    continue
                e_i = float(pi @ p.h_eff @ pi)
                e_j = float(pj @ p.h_eff @ pj)
                got = functional_gradient(p, ai, aj, ls)
                fd = np.zeros(2 * n)
                for k in range(2 * n):
                    for sign in (1, -1):
                        y = x.copy()
                        y[k] += sign * h
                        fd[k] += sign * functional_value(
                            p,
                            amplitudes(HypersphericalAngles(tuple(y[:n]))),
                            amplitudes(HypersphericalAngles(tuple(y[n:]))),
                            ls,
                            e_i,
                            e_j,
                        )
                fd /= 2 * h
                rel = float(np.max(np.abs(got - fd))) / max(1.0, float(np.max(np.abs(fd))))
                assert rel < 1e-6, (name, part, rel)
                worst = max(worst, rel)
                done += 1
    print(f"PASS C6 gradient check: 400 points, worst relative deviation {worst:.1e}")


def test_c7_two_qubit_heatmap():
    """300 ball-initialized runs with shot noise: 20, 25, 6 land in top-5 bins."""
    t0 = time.perf_counter()
    cfg = RunConfig(
        model="two_qubit",
        part="real",
        n_runs=300,
        init=BallInit(radius=0.15),
        estimator=EstimatorConfig(mode="shot", **SHOT),
        seed=SEED,
    )
    records = run_ensemble(cfg)
    elapsed = time.perf_counter() - t0
    assert elapsed < 600.0
    targets = default_targets("two_qubit", "real")
    grid = heatmap(records, 0.2, default_value_range(targets, 0.2))
    final = grid.counts[-1]
    ranks = {}
    for element in (20.0, 25.0, 6.0):
        b = int(np.floor((element - grid.edges[0]) / 0.2))
        ranks[element] = int(np.sum(final > final[b]))
        assert ranks[element] < 5, (element, ranks[element])
    # report (not assert) converged mass away from every element of the target
    spurious = [
        (float(grid.centers[b]), int(final[b]))
        for b in np.flatnonzero(final > 2)
        if min(abs(grid.centers[b] - t) for t in targets) > 0.5
    ]
    print(
        f"PASS C7 heatmap: ranks {ranks}, {sum(r.failed for r in records)} failed, "
        f"off-element mass {spurious if spurious else 'none'}, {elapsed:.0f}s"
    )


def test_c8_estimator_statistics():
    """Unbiasedness and 1/sqrt(shots*repeats) scaling over 1e4 trials."""
    cfg = EstimatorConfig(mode="shot", **SHOT)
    est = np.array(
        [estimate_scalar(0.0, 1.0, cfg, element_rng(s, 8, 0, 0)) for s in range(10_000)]
    )
    expected_sd = 1.0 / np.sqrt(1000 * 50)
    sd_err = abs(est.std() - expected_sd) / expected_sd
    assert sd_err < 0.20
    mean_err = abs(est.mean()) / (est.std() / np.sqrt(est.size))
    assert mean_err < 3.0

    base = EstimatorConfig(mode="shot", shots=500, repeats=10)
    quad = EstimatorConfig(mode="shot", shots=2000, repeats=10)
    sd_base = np.array(
        [estimate_scalar(0.2, 1.0, base, element_rng(s, 8, 1, 0)) for s in range(10_000)]
    ).std()
    sd_quad = np.array(
        [estimate_scalar(0.2, 1.0, quad, element_rng(s, 8, 2, 0)) for s in range(10_000)]
    ).std()
    scaling_err = abs(sd_base / sd_quad - 2.0)
    assert scaling_err < 0.30  # sd halves within 15%
    print(
        f"PASS C8 estimator stats: sd within {sd_err:.1%}, mean within {mean_err:.1f} SE, "
        f"4x-shots sd ratio {sd_base / sd_quad:.3f}"
    )


def test_c9_non_normalized_extension():
    """Unnormalized functional reproduces targets and is coefficient-stationary."""
    m = one_qubit_model()
    h = 1e-6
    worst_grad = 0.0
    for part in ("real", "imaginary"):
        p = m.problem(part)
        comp = eigenbasis_part(m, part)
        for a in range(2):
            for b in range(2):
                pi = amplitudes(m.optimal_angles[a])
                pj = amplitudes(m.optimal_angles[b])
                lam = lambda_ij(pi, pj, m.w_part(part))
                ls = multiplier_set(p, pi, pj, lam_i=lam, lam_j=lam)
                f0 = functional_value_unnormalized(p, pi, pj, ls, lam, lam)
                assert abs(f0 - comp[a, b]) < 1e-9
                for side in range(2):
                    for k in range(2):
                        diff = 0.0
                        for sign in (1, -1):
                            qi, qj = pi.copy(), pj.copy()
                            (qi if side == 0 else qj)[k] += sign * h
                            diff += sign * functional_value_unnormalized(p, qi, qj, ls, lam, lam)
                        worst_grad = max(worst_grad, abs(diff) / (2 * h))
    assert worst_grad < 1e-8
    print(f"PASS C9 non-normalized extension: targets to 1e-9, max coefficient gradient {worst_grad:.1e}")
