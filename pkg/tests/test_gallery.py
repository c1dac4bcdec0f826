"""Worked examples: Pauli strings, ring graph states, benchmark instances."""
import os
from itertools import combinations

import numpy as np
import pytest

from qmarginal.documents import dump_document, instance_to_doc
from qmarginal.gallery import (maximally_mixed_klocal_instance,
                               pauli_string_matrix, random_feasible_instance,
                               ring_graph_state, ring_stabilizers)
from qmarginal.hilbert import partial_trace
from qmarginal.marginal import check_consistency, theorem1_bound
from qmarginal.numerics import numerical_rank

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def test_pauli_string_matrices():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1, -1]).astype(complex)
    assert np.array_equal(pauli_string_matrix("X"), x)
    assert np.array_equal(pauli_string_matrix("ZX"), np.kron(z, x))
    assert np.array_equal(pauli_string_matrix("IZ"), np.kron(np.eye(2), z))
    y = pauli_string_matrix("Y")
    assert np.array_equal(y, np.array([[0, -1j], [1j, 0]]))
    with pytest.raises(ValueError):
        pauli_string_matrix("XQ")


def test_ring_stabilizers_layout():
    assert ring_stabilizers(4) == ["XZIZ", "ZXZI", "IZXZ", "ZIZX"]
    gens = ring_stabilizers(6)
    assert len(gens) == 6
    assert gens[0] == "XZIIIZ"


def test_ring_stabilizers_commute():
    for n in range(3, 8):
        mats = [pauli_string_matrix(s) for s in ring_stabilizers(n)]
        for a in mats:
            for b in mats:
                assert np.linalg.norm(a @ b - b @ a) <= 1e-12


def test_ring_graph_state_is_pure_projector():
    for n in range(3, 9):
        rho = ring_graph_state(n)
        assert abs(np.trace(rho) - 1.0) <= 1e-12
        assert np.linalg.norm(rho @ rho - rho) <= 1e-12
        assert numerical_rank(rho) == 1


def test_ring_graph_state_stabilized():
    for n in range(3, 8):
        rho = ring_graph_state(n)
        for s in ring_stabilizers(n):
            g = pauli_string_matrix(s)
            assert np.linalg.norm(g @ rho @ g - rho) <= 1e-12
            assert np.linalg.norm(g @ rho - rho) <= 1e-12


def test_ring_graph_state_marginals_above_four():
    """From five qubits up, every pair marginal is exactly maximally mixed."""
    for n in (5, 6):
        rho = ring_graph_state(n)
        for pair in combinations(range(n), 2):
            m = partial_trace(rho, (2,) * n, pair)
            assert np.linalg.norm(m - np.eye(4) / 4) <= 1e-12


def test_ring_graph_state_four_qubit_defect():
    """On the ring of four the opposite-corner marginal picks up an XX term."""
    rho = ring_graph_state(4)
    m = partial_trace(rho, (2, 2, 2, 2), (1, 3))
    xx = np.kron(np.array([[0, 1], [1, 0]]), np.array([[0, 1], [1, 0]]))
    assert np.linalg.norm(m - (np.eye(4) + xx) / 4) <= 1e-12
    assert np.linalg.norm(m - np.eye(4) / 4) >= 0.2


def test_ring_graph_state_rejects_small_rings():
    with pytest.raises(ValueError):
        ring_graph_state(2)


def test_mm_klocal_instance_layout():
    inst = maximally_mixed_klocal_instance(5, 2)
    assert len(inst.constraints) == 10
    assert inst.dims == (2,) * 5
    for c in inst.constraints:
        assert np.allclose(c.target, np.eye(4) / 4)
    assert theorem1_bound(inst) == 12
    with pytest.raises(ValueError):
        maximally_mixed_klocal_instance(3, 3)
    with pytest.raises(ValueError):
        maximally_mixed_klocal_instance(3, 0)


def test_ring_state_solves_mm_instance():
    inst = maximally_mixed_klocal_instance(5, 2)
    report = check_consistency(inst, ring_graph_state(5))
    assert report.max_residual <= 1e-12
    assert report.is_consistent(1e-10)


def test_random_feasible_witness_consistency():
    for seed in range(4):
        subsets = list(combinations(range(3), 2))
        inst, witness = random_feasible_instance((2, 2, 2), subsets, 5, seed)
        report = check_consistency(inst, witness)
        assert report.max_residual <= 1e-13
        assert numerical_rank(witness) == 5


def test_random_feasible_rank_one():
    subsets = [(0,), (1,)]
    inst, witness = random_feasible_instance((2, 2), subsets, 1, seed=2)
    assert numerical_rank(witness) == 1
    assert theorem1_bound(inst) >= 1


def test_random_feasible_deterministic():
    subsets = list(combinations(range(3), 2))
    a, wa = random_feasible_instance((2, 2, 2), subsets, 4, seed=7)
    b, wb = random_feasible_instance((2, 2, 2), subsets, 4, seed=7)
    assert np.array_equal(wa, wb)
    assert dump_document(instance_to_doc(a), None) == dump_document(
        instance_to_doc(b), None)
    c, _ = random_feasible_instance((2, 2, 2), subsets, 4, seed=8)
    assert dump_document(instance_to_doc(a), None) != dump_document(
        instance_to_doc(c), None)


def test_random_feasible_matches_golden_file():
    """Seeded generation reproduces the committed document byte for byte."""
    subsets = list(combinations(range(3), 2))
    inst, _ = random_feasible_instance((2, 2, 2), subsets, 4, seed=7)
    text = dump_document(instance_to_doc(inst), None)
    with open(os.path.join(DATA_DIR, "random_feasible_n3_r4_seed7.json"),
              encoding="utf-8") as fh:
        assert fh.read() == text


def test_random_feasible_rejects_bad_rank():
    with pytest.raises(ValueError):
        random_feasible_instance((2, 2), [(0,)], 5, seed=0)
    with pytest.raises(ValueError):
        random_feasible_instance((2, 2), [(0,)], 0, seed=0)
