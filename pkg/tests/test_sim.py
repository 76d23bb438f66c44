"""Statevector execution and end-to-end pipeline verification."""

import numpy as np
import pytest

from ttnprep import (CapacityError, CircuitValidityError, CovarianceMatrix,
                     ParameterError, Placement, QuantumCircuit, ShapeError,
                     baseline_comparison, compile_circuit, fidelity,
                     make_covariance, simulate, synthesize, verify_pipeline)
from ttnprep.fourier import GridSpec, exact_target
from ttnprep.sim import STRUCTURE_POLICIES, StateVector
from ttnprep.topology import TreeTopology, caterpillar_leaf_tree
from ttnprep.ttn import random_mps


def _empty_circuit(qubits):
    from ttnprep.circuit import CostReport
    return QuantumCircuit(qubits, [], tuple(range(qubits)),
                          CostReport(0, 0, 0, []))


def test_empty_circuit_gives_all_zeros():
    psi = simulate(_empty_circuit(2))
    want = np.zeros(4)
    want[0] = 1.0
    np.testing.assert_allclose(psi.amplitudes, want, atol=1e-15)


def test_single_qubit_prep():
    h = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
    from ttnprep.circuit import CostReport
    circ = QuantumCircuit(1, [Placement((0,), 0, h, "prep")], (0,),
                          CostReport(2, 2, 0, []))
    psi = simulate(circ)
    np.testing.assert_allclose(psi.amplitudes,
                               np.array([1.0, 1.0]) / np.sqrt(2.0), atol=1e-14)
    assert abs(psi.norm - 1.0) < 1e-12


def test_simulate_matches_contraction():
    # synthesized circuits and direct contraction agree on random nets
    for seed in range(4):
        net = random_mps(5, 2, 4, np.random.default_rng(seed))
        vec = net.contract_to_vector()
        circ, _ = synthesize(net)
        psi = simulate(circ)
        assert fidelity(psi.amplitudes, vec) >= 1 - 1e-8


def test_simulate_respects_qubit_cap():
    with pytest.raises(CapacityError):
        simulate(_empty_circuit(25))


def test_simulate_rejects_dirty_fresh_wire():
    # second placement claims wire 0 as fresh output while it holds amplitude
    h = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
    from ttnprep.circuit import CostReport
    circ = QuantumCircuit(
        2, [Placement((0,), 0, h, "prep"), Placement((1, 0), 0,
            np.array([[1.0], [0.0], [0.0], [0.0]]), "prep")],
        (0, 1), CostReport(6, 6, 0, []))
    with pytest.raises(CircuitValidityError):
        simulate(circ)


def test_fidelity_basics():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-12)
    e0 = np.zeros(8)
    e0[0] = 1.0
    e1 = np.zeros(8)
    e1[1] = 1.0
    assert fidelity(e0, e1) == 0.0
    assert fidelity(e0, (e0 + e1) / np.sqrt(2)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ShapeError):
        fidelity(e0, np.zeros(4))
    sv = StateVector(3, e0)
    assert fidelity(sv, e0) == 1.0


# -- pipeline ---------------------------------------------------------------------


def test_pipeline_diagonal_product_state():
    cov = make_covariance("uniform", 2, rho=0.0)
    rec = verify_pipeline(cov, GridSpec(2, 6, 20.0, 4), chi=1)
    assert rec["simulated_fidelity"] >= 1 - 1e-4
    assert rec["ok"]


def test_pipeline_pair_truncation_dominates():
    cov = make_covariance("uniform", 2, rho=0.6)
    rec = verify_pipeline(cov, GridSpec(2, 6, 20.0, 4), chi=2)
    np.testing.assert_allclose(rec["simulated_fidelity"],
                               8.0 / 9.0 + 8.0 / 81.0, atol=2e-2)
    assert rec["ok"]


def test_pipeline_three_dim_chain_regression():
    cov = make_covariance("chain", 3, rho=0.5)
    rec = verify_pipeline(cov, GridSpec(3, 6, 20.0, 4), chi=8)
    assert 1.0 - rec["simulated_fidelity"] <= 1e-3
    assert rec["ok"]


def test_pipeline_fidelity_ceiling():
    for chi in (1, 2, 4):
        cov = make_covariance("uniform", 2, rho=0.4)
        rec = verify_pipeline(cov, GridSpec(2, 5, 20.0, 4), chi=chi)
        assert rec["simulated_fidelity"] <= rec["fourier_fidelity"] + 1e-10
        assert rec["simulated_fidelity"] <= 1 + 1e-10
        assert rec["ceiling_ok"]


def test_pipeline_capacity_guard():
    cov = make_covariance("uniform", 4, rho=0.1)
    with pytest.raises(CapacityError):
        verify_pipeline(cov, GridSpec(4, 7, 20.0, 4), chi=2)


def test_pipeline_qft_gates_mode():
    cov = make_covariance("uniform", 2, rho=0.5)
    rec = verify_pipeline(cov, GridSpec(2, 6, 20.0, 4), chi=4,
                          mode="qft-gates")
    assert rec["simulated_fidelity"] >= 0.99
    assert rec["qft_cnots"] > 0
    assert rec["ok"]


def test_compile_record_fields():
    cov = make_covariance("random", 3, sigma_max=0.2, seed=5)
    circ, rec = compile_circuit(cov, GridSpec(3, 5, 16.0, 3), chi=4)
    for key in ("dim", "n", "m", "chi", "chi_prime", "mode", "structure",
                "seed", "tci_evals", "tci_residual", "tci_converged", "tree",
                "ledger_fidelity", "cnot_count", "qft_cnots", "depth",
                "qubits"):
        assert key in rec, key
    assert rec["qubits"] == circ.qubits == 15
    assert 0 < rec["ledger_fidelity"] <= 1
    assert rec["cnot_count"] == circ.cost.cnot_count


def test_compile_structure_policies_guarded():
    cov = make_covariance("random", 3, sigma_max=0.2, seed=1)
    grid = GridSpec(3, 5, 16.0, 3)
    with pytest.raises(ParameterError):
        compile_circuit(cov, grid, 4, structure="nonsense")
    topo = TreeTopology.from_leaf_tree(caterpillar_leaf_tree(3), 3, 8)
    with pytest.raises(ParameterError):
        compile_circuit(cov, grid, 4, structure="exhaustive-optimal",
                        topology=topo)
    big = make_covariance("random", 7, sigma_max=0.2, seed=1)
    with pytest.raises(CapacityError):
        compile_circuit(big, GridSpec(7, 5, 16.0, 3), 4,
                        structure="exhaustive-optimal")


def test_compile_policies_report_search_metadata():
    cov = make_covariance("random", 4, sigma_max=0.2, seed=3)
    grid = GridSpec(4, 5, 16.0, 3)
    _, fixed = compile_circuit(cov, grid, 3, structure="fixed")
    assert "reconnections" not in fixed
    _, auto = compile_circuit(cov, grid, 3, structure="auto-optimize")
    assert "reconnections" in auto
    _, exh = compile_circuit(cov, grid, 3, structure="exhaustive-optimal")
    assert exh["trees_scanned"] == 3  # distinct 4-leaf shapes
    assert exh["ledger_fidelity"] >= fixed["ledger_fidelity"] - 1e-12
    _, worst = compile_circuit(cov, grid, 3, structure="fixed-worst")
    assert worst["ledger_fidelity"] <= exh["ledger_fidelity"] + 1e-12


def test_structure_policy_names_stable():
    assert STRUCTURE_POLICIES == ("fixed", "auto-optimize",
                                  "exhaustive-optimal", "fixed-worst")


def test_baseline_comparison_ratios():
    cov = make_covariance("random", 3, sigma_max=0.2, seed=7)
    _, rec = compile_circuit(cov, GridSpec(3, 6, 16.0, 4), chi=4,
                             mode="qft-gates")
    cmp = baseline_comparison(rec)
    assert cmp["baseline_cnots"] == 2 ** 12
    assert cmp["cnot_ratio"] == rec["cnot_count"] / 2 ** 12
    assert cmp["baseline_qft_cnots"] == 12 * 11 // 2
    assert 0 < cmp["cnot_ratio"] < 1
    assert cmp["depth_ratio"] < 1
