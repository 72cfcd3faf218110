"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The desk-profile experiment runs are shared across criteria through
module-scoped fixtures, so the expensive pieces (the direct-circuit baseline
and the RL runs) execute once.
"""

import inspect
import time
import warnings
from math import pi

import numpy as np
import pytest

from softu.alignment import (
    COMPILER_AXES,
    AlignmentProblem,
    align,
    transfer_model,
)
from softu.circuits import (
    Circuit,
    circuit_unitary,
    cnot,
    entangling_stack,
    expectation_z,
    h,
    parameter_shift_gradient,
    run_circuit,
    zero_state,
)
from softu.cli import PROFILES
from softu.dqn import (
    DqnConfig,
    align_rl_blocks,
    build_phn,
    copy_network,
    dqn_train,
    get_params,
    q_backward,
    q_forward,
    set_params,
)
from softu.encoding import EncodingSpec
from softu.softmodel import (
    SoftUnitaryModel,
    build_soft_model,
    loss_gradients,
    pack_blocks,
    total_loss,
    unpack_blocks,
)
from softu.tophat import build_vqc_baseline, make_tophat_dataset, train_vqc_direct
from softu.training import TrainConfig, train_soft
from helpers import central_difference, random_circuit

SEEDS = (1, 2, 3)


def report(capsys, criterion: str, ok: bool, detail: str):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


def desk_train_config(seed: int) -> TrainConfig:
    p = PROFILES["desk"]
    return TrainConfig(
        epochs=p["epochs"],
        learning_rate=p["learning_rate"],
        lam=p["lam"],
        batch_size=p["batch_size"],
        seed=seed,
        lr_decay=p["lr_decay"],
        squared_penalty=p["squared_penalty"],
    )


@pytest.fixture(scope="module")
def desk_soft_runs():
    runs = {}
    p = PROFILES["desk"]
    for seed in SEEDS:
        data = make_tophat_dataset(p["points"], seed=seed)
        model = build_soft_model(p["n_qubits"], p["blocks"], seed=seed)
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            trained, hist = train_soft(model, data, desk_train_config(seed))
        runs[seed] = (trained, hist, time.perf_counter() - t0)
    return runs


@pytest.fixture(scope="module")
def desk_vqc_runs():
    runs = {}
    p = PROFILES["desk"]
    for seed in SEEDS:
        data = make_tophat_dataset(p["points"], seed=seed)
        baseline = build_vqc_baseline(p["n_qubits"], p["blocks"], p["vqc_layers_per_block"], seed=seed)
        cfg = TrainConfig(
            epochs=p["vqc_epochs"],
            learning_rate=p["learning_rate"],
            lam=0.0,
            batch_size=p["vqc_batch_size"],
            seed=seed,
        )
        runs[seed] = train_vqc_direct(baseline, data, cfg)
    return runs


@pytest.fixture(scope="module")
def rl_results():
    out = {}
    for kind in ("classical", "hybrid"):
        for seed in SEEDS:
            t0 = time.perf_counter()
            records, agent = dqn_train(kind, DqnConfig(episodes=340, seed=seed))
            out[(kind, seed)] = (records, agent, time.perf_counter() - t0)
    return out


def test_criterion_1_unitarity_regularizer_fidelity(desk_soft_runs, capsys):
    trained, _, wall = desk_soft_runs[SEEDS[0]]
    desk_udev = trained.max_unitarity_deviation()
    ok_desk = desk_udev <= 1e-2 and wall <= 300.0

    p = PROFILES["paper"]
    data = make_tophat_dataset(p["points"], seed=1)
    model = build_soft_model(p["n_qubits"], p["blocks"], seed=1)
    cfg = TrainConfig(
        epochs=p["epochs"],
        learning_rate=p["learning_rate"],
        lam=p["lam"],
        batch_size=p["batch_size"],
        seed=1,
        lr_decay=p["lr_decay"],
        squared_penalty=p["squared_penalty"],
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        paper_model, _ = train_soft(model, data, cfg)
    paper_udev = paper_model.max_unitarity_deviation()
    ok = ok_desk and paper_udev <= 5e-3
    report(
        capsys,
        "criterion 1 (unitarity fidelity)",
        ok,
        f"desk udev {desk_udev:.2e} <= 1e-2 in {wall:.0f}s; paper udev {paper_udev:.2e} <= 5e-3",
    )


def test_criterion_2_soft_vs_aligned_mse(desk_soft_runs, capsys):
    p = PROFILES["desk"]
    trained, _, train_wall = desk_soft_runs[SEEDS[0]]
    t0 = time.perf_counter()
    problem = AlignmentProblem(
        [b.copy() for b in trained.blocks],
        p["n_qubits"],
        layers_per_target=p["align_layers"],
        epochs=p["align_epochs"],
        learning_rate=p["align_lr"],
        seed=SEEDS[0],
    )
    aligned = align(problem)
    grid = np.linspace(0.0, 2.0 * pi, p["grid_points"], endpoint=False)
    compiled = transfer_model(trained, aligned, grid)
    wall = train_wall + time.perf_counter() - t0
    ok = compiled.output_mse <= 1e-3 and wall <= 600.0
    report(
        capsys,
        "criterion 2 (soft-vs-aligned output MSE)",
        ok,
        f"grid MSE {compiled.output_mse:.2e} <= 1e-3 (pipeline {wall:.0f}s)",
    )


def test_criterion_3_loss_ordering(desk_soft_runs, desk_vqc_runs, capsys):
    soft_finals = [desk_soft_runs[s][1].task_loss[-1] for s in SEEDS]
    vqc_finals = [desk_vqc_runs[s][1].task_loss[-1] for s in SEEDS]
    soft_med = float(np.median(soft_finals))
    vqc_med = float(np.median(vqc_finals))
    ok = soft_med < vqc_med
    report(
        capsys,
        "criterion 3 (loss ordering)",
        ok,
        f"median soft BCE {soft_med:.4f} < median direct-VQC BCE {vqc_med:.4f} "
        f"(soft {['%.3f' % v for v in soft_finals]}, vqc {['%.3f' % v for v in vqc_finals]})",
    )


def test_criterion_4_scaling_shapes(capsys):
    # (a) soft training takes no gate count: interface-level fact
    train_params = set(inspect.signature(train_soft).parameters)
    config_fields = set(TrainConfig.__dataclass_fields__)
    ok_a = train_params == {"model", "dataset", "config"} and not any(
        "gate" in f or "layer" in f for f in train_params | config_fields
    )

    # (b) direct-circuit per-epoch time is monotone in the layer count
    data_small = make_tophat_dataset(48, seed=0)
    vqc_times = []
    for layers in (2, 4, 8):
        baseline = build_vqc_baseline(3, 4, layers, seed=0)
        _, hist = train_vqc_direct(baseline, data_small, TrainConfig(epochs=3, seed=0))
        vqc_times.append(float(np.median(hist.wall_s)))
    ok_b = vqc_times[0] < vqc_times[1] < vqc_times[2]

    # (c) alignment never sees a dataset; wall time is invariant across
    # nominal dataset sizes because the inputs are identical
    ok_c_iface = "dataset" not in inspect.signature(align).parameters and not any(
        "data" in f for f in AlignmentProblem.__dataclass_fields__
    )
    model = build_soft_model(3, 2, seed=0)
    align_times = []
    for _nominal_datapoints in (250, 1000):
        t0 = time.perf_counter()
        align(AlignmentProblem([b.copy() for b in model.blocks], 3, layers_per_target=8, epochs=40, seed=0))
        align_times.append(time.perf_counter() - t0)
    ratio = align_times[1] / align_times[0]
    ok_c = ok_c_iface and 0.5 <= ratio <= 2.0

    # (d) soft per-epoch time fits proportional growth in d within +/-30%
    sizes = (250, 500, 1000)
    soft_times = []
    for d in sizes:
        data = make_tophat_dataset(d, seed=0)
        model = build_soft_model(3, 4, seed=0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, hist = train_soft(model, data, TrainConfig(epochs=6, lam=1000.0, seed=0))
        soft_times.append(float(np.median(hist.wall_s[1:])))
    sizes_arr = np.asarray(sizes, dtype=float)
    times_arr = np.asarray(soft_times)
    slope = float(np.sum(times_arr * sizes_arr) / np.sum(sizes_arr**2))
    residuals = np.abs(times_arr - slope * sizes_arr) / (slope * sizes_arr)
    ok_d = bool(np.max(residuals) <= 0.30)

    ok = ok_a and ok_b and ok_c and ok_d
    report(
        capsys,
        "criterion 4 (scaling shapes)",
        ok,
        f"(a) no gate input {ok_a}; (b) vqc s/epoch {['%.3f' % t for t in vqc_times]} monotone {ok_b}; "
        f"(c) align wall ratio {ratio:.2f} {ok_c}; (d) soft s/epoch {['%.4f' % t for t in soft_times]} "
        f"linear within {np.max(residuals) * 100:.0f}% {ok_d}",
    )


def test_criterion_5_gradient_suites(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(100)
    tol = lambda g: max(1e-6, 1e-4 * abs(g))

    # soft-unitary entry gradients vs central finite differences
    soft_cases = 0
    for trial in range(25):
        n = int(rng.integers(1, 4))
        m_blocks = int(rng.integers(1, 4))
        model = build_soft_model(n, m_blocks, seed=trial)
        model.blocks = [
            b + 0.02 * (rng.standard_normal(b.shape) + 1j * rng.standard_normal(b.shape))
            for b in model.blocks
        ]
        for _ in range(4):  # 4 datapoint cases per model
            batch = [(float(rng.uniform(0, 2 * pi)), int(rng.integers(2)))]
            lam = float(rng.choice([0.0, 1.0, 100.0]))
            grad = loss_gradients(model, batch, lam)
            p0 = pack_blocks(model.blocks)
            dim = 2**n

            def f(p):
                mm = SoftUnitaryModel(n, unpack_blocks(p, dim, m_blocks), model.encoder)
                return total_loss(mm, batch, lam)

            for j in rng.choice(p0.size, 3, replace=False):
                fd = central_difference(f, p0, int(j), 1e-6)
                assert abs(grad[j] - fd) <= tol(grad[j]), f"soft grad case {soft_cases}"
            soft_cases += 1

    # PHN parameter gradients (classical, readout and quantum entries)
    phn_cases = 0
    phn = build_phn(seed=0)
    probe = copy_network(phn)
    for _ in range(100):
        feats = rng.uniform(-1, 1, 4)
        up = rng.standard_normal(2)
        grad = q_backward(phn, feats, up)
        p0 = get_params(phn)

        def g(p):
            set_params(probe, p)
            return float(up @ q_forward(probe, feats))

        for j in rng.choice(p0.size, 2, replace=False):
            fd = central_difference(g, p0, int(j), 1e-6)
            assert abs(grad[j] - fd) <= tol(grad[j]), f"phn grad case {phn_cases}"
        phn_cases += 1

    # parameter-shift gradients vs finite differences
    shift_cases = 0
    for trial in range(100):
        n = int(rng.integers(1, 5))
        c = entangling_stack(n, int(rng.integers(1, 3)))
        params = rng.uniform(0, 2 * pi, c.n_params)
        qubit = int(rng.integers(n))
        grad = parameter_shift_gradient(c, params, qubit)
        j = int(rng.integers(c.n_params))
        e = np.zeros_like(params)
        e[j] = 1e-5
        fd = (
            expectation_z(run_circuit(c, params + e), qubit)
            - expectation_z(run_circuit(c, params - e), qubit)
        ) / 2e-5
        assert abs(grad[j] - fd) <= 1e-5, f"shift grad case {shift_cases}"
        shift_cases += 1

    wall = time.perf_counter() - t0
    ok = soft_cases >= 100 and phn_cases >= 100 and shift_cases >= 100 and wall <= 120.0
    report(
        capsys,
        "criterion 5 (gradient suites)",
        ok,
        f"{soft_cases} soft + {phn_cases} PHN + {shift_cases} shift cases in {wall:.0f}s",
    )


def test_criterion_6_simulator_oracle_equivalence(capsys):
    rng = np.random.default_rng(200)
    checked = 0
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        c = random_circuit(n, int(rng.integers(5, 30)), rng)
        params = rng.uniform(0, 2 * pi, c.n_params)
        state = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
        state /= np.linalg.norm(state)
        direct = run_circuit(c, params, state)
        dense = circuit_unitary(c, params) @ state
        worst = max(worst, float(np.max(np.abs(direct - dense))))
        checked += 1
    bell = run_circuit(Circuit(2, (h(0), cnot(0, 1)), 0))
    bell_expect = np.zeros(4, dtype=complex)
    bell_expect[0] = bell_expect[3] = 1.0 / np.sqrt(2.0)
    bell_ok = bool(np.max(np.abs(bell - bell_expect)) < 1e-15)
    truth_ok = True
    for k in range(4):
        basis = np.zeros(4, dtype=complex)
        basis[k] = 1.0
        out = run_circuit(Circuit(2, (cnot(0, 1),), 0), [], basis)
        expect_idx = k ^ 1 if k >= 2 else k  # flip target bit when control set
        truth_ok = truth_ok and out[expect_idx] == 1.0
    ok = checked == 200 and worst <= 1e-10 and bell_ok and truth_ok
    report(
        capsys,
        "criterion 6 (simulator oracle equivalence)",
        ok,
        f"200 random circuits max |diff| {worst:.2e} <= 1e-10; Bell and CNOT truth table exact",
    )


def test_criterion_7_rl_qualitative_reproduction(rl_results, capsys):
    final50 = {
        kind: [float(np.mean([r.duration for r in rl_results[(kind, s)][0][-50:]])) for s in SEEDS]
        for kind in ("classical", "hybrid")
    }
    hybrid_med = float(np.median(final50["hybrid"]))
    classical_med = float(np.median(final50["classical"]))
    walls = [rl_results[k][2] for k in rl_results]
    ok_order = hybrid_med >= classical_med
    ok_wall = max(walls) <= 1800.0

    hybrid_udevs = [rl_results[("hybrid", s)][0][-1].unitary_dev for s in SEEDS]
    ok_udev = max(hybrid_udevs) <= 1e-2

    _, agent, _ = rl_results[("hybrid", SEEDS[0])]
    aligned = align_rl_blocks(agent, layers_per_target=24, epochs=400, seed=SEEDS[0])
    align_loss = aligned.final_loss(agent.quantum.n_qubits)
    ok_align = align_loss <= 0.2

    ok = ok_order and ok_wall and ok_udev and ok_align
    report(
        capsys,
        "criterion 7 (RL qualitative reproduction)",
        ok,
        f"hybrid median final-50 {hybrid_med:.1f} >= classical {classical_med:.1f} "
        f"(hybrid {['%.0f' % v for v in final50['hybrid']]}, classical {['%.0f' % v for v in final50['classical']]}); "
        f"max run {max(walls):.0f}s <= 1800s; hybrid udev max {max(hybrid_udevs):.2e} <= 1e-2; "
        f"alignment loss {align_loss:.3f} <= 0.2",
    )


def test_rl_full_run_invariants(rl_results):
    # classical agent with the tuned defaults: running average exceeds 100
    # by episode 340 on the fixed reference seed
    records, _, _ = rl_results[("classical", SEEDS[0])]
    assert records[-1].running_mean > 100.0
    # hybrid quantum blocks stay near-unitary throughout training
    for seed in SEEDS:
        records, _, _ = rl_results[("hybrid", seed)]
        assert max(r.unitary_dev for r in records) <= 0.05


def test_criterion_8_plant_and_recover(capsys):
    planted = entangling_stack(2, 3, COMPILER_AXES)
    angles = np.random.default_rng(42).uniform(0, 2 * pi, planted.n_params)
    target = circuit_unitary(planted, angles)
    finals = []
    for seed in (0, 1, 2):
        out = align(
            AlignmentProblem([target], 2, layers_per_target=3, epochs=500, learning_rate=0.05, seed=seed)
        )
        finals.append(out.final_distances[0])
    hits = sum(1 for d in finals if d <= 1e-2)
    ok = hits >= 2
    report(
        capsys,
        "criterion 8 (plant-and-recover compilation)",
        ok,
        f"recovered {hits}/3 seeds to distance <= 1e-2 (distances {['%.1e' % d for d in finals]})",
    )
