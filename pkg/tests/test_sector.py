"""Fermionic and bosonic sector instances, the sigma family, sector reduction."""
import math

import numpy as np
import pytest

from qmarginal.hilbert import sector_isometry, sector_partial_trace
from qmarginal.numerics import numerical_rank
from qmarginal.sector import (SectorInstance, admissible_sigma_range,
                              bosonic_maximally_mixed_2, bosonic_sigma_p,
                              engine_system, find_feasible_sector,
                              reduce_rank_sector)


def dicke_overlap(n, m, j):
    """Amplitude of the two-particle block with j excitations inside an
    n-particle two-level Dicke state carrying m excitations."""
    if not 0 <= j <= 2 or not 0 <= m - j <= n - 2:
        return 0.0
    return math.sqrt(math.comb(2, j) * math.comb(n - 2, m - j) / math.comb(n, m))


def two_particle_marginal_oracle(sigma, n):
    """Combinatorial two-boson marginal of an (n+1)-dimensional occupation
    state, bypassing the isometry machinery entirely."""
    out = np.zeros((3, 3), dtype=complex)
    for m in range(n + 1):
        for mp in range(n + 1):
            if sigma[m, mp] == 0:
                continue
            for j in range(3):
                jp = j - (m - mp)
                if not 0 <= jp <= 2:
                    continue
                out[j, jp] += (sigma[m, mp] * dicke_overlap(n, m, j)
                               * dicke_overlap(n, mp, jp))
    return out


def test_admissible_range_values():
    assert admissible_sigma_range(4) == (1, 3)
    assert admissible_sigma_range(5) == (2, 3)
    assert admissible_sigma_range(6) == (2, 4)
    assert admissible_sigma_range(7) == (2, 5)
    assert admissible_sigma_range(9) == (3, 6)


def test_sigma_p_out_of_range():
    with pytest.raises(ValueError, match="admissible range"):
        bosonic_sigma_p(6, 0)
    with pytest.raises(ValueError, match="admissible range"):
        bosonic_sigma_p(6, 5)


def test_sigma_p_is_a_state_with_fixed_marginal():
    """Every admissible member has unit trace, is PSD, has rank at most 3,
    and shares the maximally mixed two-particle marginal."""
    target = bosonic_maximally_mixed_2()
    assert np.allclose(target, np.eye(3) / 3)
    for n in range(4, 10):
        lo, hi = admissible_sigma_range(n)
        emb = sector_isometry("bosonic", n, 2)
        for p in range(lo, hi + 1):
            sigma = bosonic_sigma_p(n, p)
            assert abs(np.trace(sigma).real - 1.0) <= 1e-14
            assert np.linalg.eigvalsh(sigma).min() >= -1e-15
            assert numerical_rank(sigma) <= 3
            marg = sector_partial_trace(sigma, emb, 2)
            assert np.linalg.norm(marg - target) <= 1e-12


def test_sigma_p_rank_two_members():
    """The boundary weight vanishes when 3p+1 = n or 2n+1 = 3p."""
    assert numerical_rank(bosonic_sigma_p(4, 1)) == 2
    assert numerical_rank(bosonic_sigma_p(7, 2)) == 2
    assert numerical_rank(bosonic_sigma_p(5, 2)) == 3
    assert numerical_rank(bosonic_sigma_p(6, 3)) == 3


def test_bosonic_marginal_matches_combinatorial_oracle():
    rng = np.random.default_rng(23)
    for n in (4, 5, 6):
        emb = sector_isometry("bosonic", n, 2)
        g = (rng.standard_normal((n + 1, n + 1))
             + 1j * rng.standard_normal((n + 1, n + 1)))
        sigma = g @ g.conj().T
        sigma /= np.trace(sigma).real
        got = sector_partial_trace(sigma, emb, 2)
        want = two_particle_marginal_oracle(sigma, n)
        assert np.linalg.norm(got - want) <= 1e-12


def test_sigma_p_marginal_via_oracle():
    for n, p in ((4, 2), (7, 3), (9, 4)):
        sigma = bosonic_sigma_p(n, p)
        assert np.linalg.norm(
            two_particle_marginal_oracle(sigma, n) - np.eye(3) / 3) <= 1e-12


def test_sector_instance_validation():
    eye6 = np.eye(6, dtype=complex) / 6
    inst = SectorInstance("fermionic", 3, 4, 2, eye6)
    assert inst.sector_dim == 4
    with pytest.raises(ValueError):
        SectorInstance("fermionic", 3, 4, 2, np.eye(4) / 4)  # wrong target dim
    with pytest.raises(ValueError):
        SectorInstance("fermionic", 3, 4, 4, eye6)  # k > N
    with pytest.raises(ValueError):
        SectorInstance("spin", 3, 4, 2, eye6)
    with pytest.raises(ValueError):
        SectorInstance("fermionic", 3, 4, 2, np.eye(6))  # trace 6


def test_sector_engine_adjoint_identity():
    rng = np.random.default_rng(29)
    inst = SectorInstance("bosonic", 4, 2, 2, np.eye(3, dtype=complex) / 3)
    system = engine_system(inst)
    con = system.constraints[0]
    for _ in range(5):
        x = (rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))
        y = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        lhs = np.trace(con.apply(x) @ y)
        rhs = np.trace(x @ con.adjoint(y))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_fermionic_sector_reduction():
    """Three fermions in four levels with the maximally mixed two-particle
    target reduce to at most the target rank 6."""
    target = np.eye(6, dtype=complex) / 6
    inst = SectorInstance("fermionic", 3, 4, 2, target)
    found = find_feasible_sector(inst)
    assert found.converged
    state, trace = reduce_rank_sector(found.state, inst)
    assert trace.bound == 6
    assert numerical_rank(state) <= 6
    emb = sector_isometry("fermionic", 3, 4)
    assert np.linalg.norm(sector_partial_trace(state, emb, 2) - target) <= 1e-7
    assert np.linalg.eigvalsh(state).min() >= -1e-9


def test_bosonic_sector_reduction():
    """Four bosons in two levels against the maximally mixed pair target
    reduce to at most rank 3."""
    target = np.eye(3, dtype=complex) / 3
    inst = SectorInstance("bosonic", 4, 2, 2, target)
    found = find_feasible_sector(inst)
    assert found.converged
    state, trace = reduce_rank_sector(found.state, inst)
    assert trace.bound == 3
    assert numerical_rank(state) <= 3
    for step in trace.steps:
        assert step.rank_after < step.rank_before
    emb = sector_isometry("bosonic", 4, 2)
    assert np.linalg.norm(sector_partial_trace(state, emb, 2) - target) <= 1e-7


def test_sigma_p_solves_its_own_instance():
    """sigma_p members are feasible points of the maximally mixed pair target."""
    inst = SectorInstance("bosonic", 7, 2, 2, np.eye(3, dtype=complex) / 3)
    system = engine_system(inst)
    for p in range(2, 6):
        sigma = bosonic_sigma_p(7, p)
        res = np.linalg.norm(system.constraints[0].apply(sigma) - inst.target)
        assert res <= 1e-12
