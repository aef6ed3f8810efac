"""Solver pipeline tests: assembly, readout modes, run contracts."""
import math

import numpy as np
import pytest

from qlslab.errors import CapacityError, DegenerateRunError, InsufficientShotsError
from qlslab.inversion import InversionPlan, plan_canonical
from qlslab.pipeline import (
    RunConfig,
    assemble_hhl,
    direct_distribution_error,
    error_from_fidelity,
    projection_fidelity,
    run,
    swap_test_fidelity,
)
from qlslab.preprocess import qpe_gates
from qlslab.qlsp import QLSP, generate_n2
from qlslab.sim import (
    Circuit,
    NoiseSpec,
    StateVector,
    apply_circuit,
    circuit_matrix,
    inverted_gates,
    marginal_probabilities,
    state_preparation_matrix,
)

TWO_PI = 2.0 * math.pi
ON_GRID_T0 = 18 * math.pi  # puts the lambda = 1/3 family exactly on the 3-bit grid


def test_error_from_fidelity_values():
    assert error_from_fidelity(1.0) == 0.0
    assert error_from_fidelity(0.5) == pytest.approx(1.0)
    assert error_from_fidelity(0.51) == pytest.approx(0.98995, abs=1e-5)
    assert error_from_fidelity(1.0 + 1e-12) == 0.0
    with pytest.raises(ValueError):
        error_from_fidelity(1.1)


def test_assemble_register_arithmetic():
    qlsp = generate_n2(0.3)
    plan = plan_canonical(3, ON_GRID_T0)
    circuit = assemble_hhl(qlsp, 3, ON_GRID_T0, plan)
    assert circuit.num_qubits == 5  # 1 solution + 3 clock + 1 ancilla
    assert circuit.register_map["b"] == (0,)
    assert circuit.register_map["c"] == (1, 2, 3)
    assert circuit.register_map["a"] == (4,)


def test_capacity_error():
    qlsp = generate_n2(0.3)
    plan = InversionPlan(19, ((1, math.pi),), 0.1)
    with pytest.raises(CapacityError):
        assemble_hhl(qlsp, 19, 10.0, plan)


def test_iqpe_is_exact_inverse_of_qpe():
    qlsp = generate_n2(0.27)
    circuit = Circuit(4)
    block = qpe_gates(qlsp, clock=(1, 2, 3), breg=(0,), t0=11.0)
    circuit.extend(block)
    circuit.extend(inverted_gates(block))
    assert np.max(np.abs(circuit_matrix(circuit) - np.eye(16))) < 1e-10


def test_grid_aligned_canonical_run_is_exact():
    qlsp = generate_n2(1 / 3)
    config = RunConfig(variant="canonical", t0_mode="explicit", t0_value=ON_GRID_T0)
    result = run(qlsp, config)
    assert result.error < 1e-6
    # analytic success probability: sum |beta_j C / lambda_j|^2
    c = TWO_PI / ON_GRID_T0
    expected = 0.5 * (c / (1 / 3)) ** 2 + 0.5 * (c / (2 / 3)) ** 2
    assert result.success_probability == pytest.approx(expected, abs=1e-9)


def test_run_result_error_fidelity_relation():
    for readout in ("exact", "swap", "direct"):
        result = run(
            generate_n2(0.29),
            RunConfig(
                variant="canonical",
                t0_mode="explicit",
                t0_value=ON_GRID_T0,
                readout=readout,
                shots=2048,
                seed=5,
            ),
        )
        assert result.error == pytest.approx(
            math.sqrt(max(0.0, 2 * (1 - result.fidelity))), abs=1e-12
        )


def test_swap_test_identical_states():
    state = StateVector(2, np.array([0.5, 0.5, 0.5, 0.5]))
    estimate = swap_test_fidelity(state, state.amplitudes, shots=4096, seed=1)
    assert estimate == pytest.approx(1.0, abs=1e-12)


def test_swap_test_orthogonal_states():
    state = StateVector(1, [1.0, 0.0])
    estimate = swap_test_fidelity(state, np.array([0.0, 1.0]), shots=8192, seed=2)
    assert estimate == pytest.approx(0.0, abs=0.08)


def test_swap_test_known_overlap():
    """Overlap 0.8 gives P(ancilla = 1) = 0.18 exactly."""
    a = np.array([1.0, 0.0])
    b = np.array([0.8, 0.6])
    state = StateVector(1, a)
    circuit = Circuit(1, registers={"b": (0,)})
    circuit.unitary(state_preparation_matrix(a), (0,))
    from qlslab.pipeline import _swap_test_circuit

    swap_circuit = _swap_test_circuit(circuit, b)
    out = apply_circuit(StateVector.zero(swap_circuit.num_qubits), swap_circuit)
    p_one = marginal_probabilities(out, swap_circuit.register_map["st_a"])[1]
    assert p_one == pytest.approx((1 - 0.8**2) / 2, abs=1e-12)
    estimate = swap_test_fidelity(state, b, shots=4096, seed=3)
    sigma = math.sqrt(0.18 * 0.82 / 4096)
    assert abs(estimate**2 - 0.64) <= 2 * 4 * sigma


def test_swap_and_exact_readouts_agree():
    """The swap estimator tracks the exact projector expectation (4 sigma)."""
    shots = 8192
    for lam, seed in ((0.22, 11), (0.31, 12), (0.44, 13)):
        qlsp = generate_n2(lam)
        base = RunConfig(variant="canonical", t0_mode="explicit", t0_value=ON_GRID_T0)
        exact = run(qlsp, base)
        sampled = run(
            qlsp,
            RunConfig(
                variant="canonical",
                t0_mode="explicit",
                t0_value=ON_GRID_T0,
                readout="swap",
                shots=shots,
                seed=seed,
            ),
        )
        p = (1 - exact.fidelity) / 2
        conditioned = shots * exact.success_probability
        sigma = math.sqrt(max(p * (1 - p), 1.0 / conditioned) / conditioned)
        assert abs(sampled.fidelity - exact.fidelity) <= 4 * (2 * sigma)


def test_swap_test_insufficient_shots():
    circuit = Circuit(2, registers={"b": (0,), "a": (1,)})
    circuit.h(0)  # ancilla stays |0>, so conditioning discards everything
    with pytest.raises(InsufficientShotsError):
        swap_test_fidelity(circuit, np.array([1.0, 0.0]), shots=64, seed=0)


def test_direct_distribution_error_exact_distribution():
    # sqrt(2 (1 - f)) amplifies float roundoff in f to ~1e-8; that is zero here
    x = np.array([3.0, 1.0]) / math.sqrt(10.0)
    histogram = {"0": 9000, "1": 1000}
    assert direct_distribution_error(histogram, x) == pytest.approx(0.0, abs=1e-6)


def test_direct_distribution_error_uniform_closed_form():
    x = np.array([1.0, 0.0])
    histogram = {"0": 500, "1": 500}
    expected = math.sqrt(2 * (1 - 1 / math.sqrt(2)))
    assert direct_distribution_error(histogram, x) == pytest.approx(expected, abs=1e-12)


def test_direct_distribution_error_validation():
    with pytest.raises(ValueError):
        direct_distribution_error({}, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        direct_distribution_error({"10": 4}, np.array([1.0, 0.0]))


def test_direct_mode_ranks_variants_like_exact_mode():
    """Cross-mode comparison: mean errors over a set rank variants alike."""
    lams = [n / 24 for n in range(3, 12)]
    exact_errors = {v: [] for v in ("canonical", "hybrid", "enhanced")}
    direct_errors = {v: [] for v in ("canonical", "hybrid", "enhanced")}
    for lam in lams:
        qlsp = generate_n2(lam)
        for variant in exact_errors:
            bits = 5 if variant == "enhanced" else 3
            base = dict(
                variant=variant,
                preprocess_bits=bits,
                t0_mode="explicit",
                t0_value=ON_GRID_T0,
            )
            exact_errors[variant].append(run(qlsp, RunConfig(**base)).error)
            direct_errors[variant].append(
                run(
                    qlsp,
                    RunConfig(**base, readout="direct", shots=200_000, seed=31),
                ).error
            )
    exact_means = {v: np.mean(errs) for v, errs in exact_errors.items()}
    direct_means = {v: np.mean(errs) for v, errs in direct_errors.items()}
    assert sorted(exact_means, key=exact_means.get) == sorted(
        direct_means, key=direct_means.get
    )


def test_degenerate_run_error():
    """A time scale that rounds every eigenvalue to zero leaves no amplitude
    on the ancilla's |1> branch."""
    qlsp = generate_n2(0.25)
    config = RunConfig(variant="canonical", t0_mode="explicit", t0_value=1e-7)
    with pytest.raises(DegenerateRunError):
        run(qlsp, config)


def test_projection_fidelity_pure_state():
    state = StateVector(2, np.array([0.6, 0.8, 0.0, 0.0]))
    target = np.array([0.6, 0.8])
    assert projection_fidelity(state, (0,), target) == pytest.approx(
        abs(0.6 * 0.6 + 0.8 * 0.8), abs=1e-12
    )


def test_signed_grid_aligned_run_is_exact():
    """A signed spectrum sitting exactly on the two's-complement grid."""
    rng = np.random.default_rng(3)
    q, r = np.linalg.qr(rng.standard_normal((2, 2)))
    q = q * np.sign(np.diag(r))
    t0 = 6 * math.pi
    eigs = np.array([-1.0, 2 / 3])  # grid values -3 and 2 at t0 = 6 pi
    matrix = q @ np.diag(eigs) @ q.T
    b = (q[:, 0] * 0.8 + q[:, 1] * 0.6)
    qlsp = QLSP(matrix, b)
    result = run(qlsp, RunConfig(variant="canonical", t0_mode="explicit", t0_value=t0))
    assert result.error < 1e-6


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(variant="mystery")
    with pytest.raises(ValueError):
        RunConfig(variant="hybrid", clock_bits=3, preprocess_bits=5)
    with pytest.raises(ValueError):
        RunConfig(variant="enhanced", clock_bits=3, preprocess_bits=3)
    with pytest.raises(ValueError):
        RunConfig(t0_mode="explicit")
    with pytest.raises(ValueError):
        RunConfig(readout="telepathy")


def test_enhanced_defaults_resolve_bits():
    config = RunConfig(variant="enhanced")
    assert config.preprocess_bits == 5
    config = RunConfig(variant="hybrid")
    assert config.preprocess_bits == config.clock_bits


def test_nested_preprocess_config():
    from qlslab.preprocess import PreprocessConfig

    nested = PreprocessConfig(
        bit_width=5, shots=2048, seed=9, t0_mode="explicit", t0_value=ON_GRID_T0
    )
    config = RunConfig(variant="enhanced", preprocess=nested)
    assert config.preprocess_bits == 5
    assert config.preprocess_shots == 2048
    assert config.preprocess_seed == 9
    assert config.t0_value == pytest.approx(ON_GRID_T0)
    result = run(generate_n2(1 / 3), config)
    assert result.error < 0.05  # sampled preprocessing on an on-grid instance


def test_noise_monotone_degradation_small():
    """Mean error over seeds does not drop when noise is injected."""
    lams = [n / 24 for n in (5, 8, 11)]
    clean = []
    noisy = []
    for lam in lams:
        qlsp = generate_n2(lam)
        clean.append(
            run(qlsp, RunConfig(variant="canonical", t0_mode="explicit", t0_value=ON_GRID_T0)).error
        )
        for seed in range(8):
            noisy.append(
                run(
                    qlsp,
                    RunConfig(
                        variant="canonical",
                        t0_mode="explicit",
                        t0_value=ON_GRID_T0,
                        noise=NoiseSpec(0.05, rng_seed=seed),
                    ),
                ).error
            )
    spread = np.std(noisy) / math.sqrt(len(noisy))
    assert np.mean(noisy) >= np.mean(clean) - 1.96 * spread


def test_gate_counts_reported_pre_noise():
    qlsp = generate_n2(0.3)
    base = run(qlsp, RunConfig(variant="canonical", t0_mode="explicit", t0_value=ON_GRID_T0))
    noisy = run(
        qlsp,
        RunConfig(
            variant="canonical",
            t0_mode="explicit",
            t0_value=ON_GRID_T0,
            noise=NoiseSpec(1.0, rng_seed=1),
        ),
    )
    assert noisy.gate_count == base.gate_count
