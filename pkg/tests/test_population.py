import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attnalloc.dynamics import monte_carlo
from attnalloc.errors import EmptyHalf, InvalidSpec
from attnalloc.model import ModelParams, RegimeTag
from attnalloc.population import (evolve, init_population, polarization_metric, restrict,
                                  snapshots_to_csv, state_at)
from attnalloc.value import solve

OWN = ModelParams(1, 1, -1, -1, 1.0, 0.0, 0.3)
OPP = ModelParams(1, 1, -1, -1, 1.0, 0.0, 0.1)


def test_uniform_prior():
    m = init_population("uniform")
    assert m.total_mass == pytest.approx(1.0, abs=1e-14)
    assert len(m.atom_loc) == 0
    x, f = m.nodes()
    assert np.allclose(f, 1.0)


def test_point_mass_prior():
    m = init_population({"kind": "atoms", "locations": [0.5]})
    assert m.atoms() == [(0.5, 1.0)]


def test_symmetric_prior_cdf():
    m = init_population({"kind": "truncated_normal", "mean": 0.5, "sd": 0.2})
    for y in np.linspace(0.05, 0.45, 9):
        assert m.mass_in(0, y) == pytest.approx(m.mass_in(1 - y, 1), abs=1e-12)


def test_negative_density_rejected():
    with pytest.raises(InvalidSpec):
        init_population({"kind": "nodes", "x": [0, 0.5, 1], "f": [1, -1, 1]})


def test_polarization_examples():
    assert polarization_metric(init_population("uniform")) == pytest.approx(0.5, abs=1e-9)
    two = init_population({"kind": "atoms", "locations": [0.0, 1.0]})
    assert polarization_metric(two) == pytest.approx(1.0)
    with pytest.raises(EmptyHalf):
        polarization_metric(init_population({"kind": "atoms", "locations": [0.1]}))


@settings(max_examples=15)
@given(st.sampled_from([0.05, 0.1, 0.2, 0.3, 0.5]), st.sampled_from(["L", "R"]),
       st.floats(0.0, 20.0))
def test_mass_conserved(c, state, t):
    sol = solve(OWN.replace(c=c))
    m = state_at(sol, init_population("uniform", 801), state, t)
    assert abs(m.total_mass - 1.0) <= 1e-9
    share = m.media_share()
    assert sum(share.values()) == pytest.approx(1.0, abs=1e-12)


def test_own_subpopulation_three_atoms():
    sol = solve(OWN)
    assert sol.regime is RegimeTag.OWN_ONLY
    lo, hi = sol.experimentation_region
    sub = restrict(init_population("uniform"), lo, hi)
    m = state_at(sol, sub, "L", 50.0)
    atoms = m.merged_atoms(1e-12)
    big = sorted(k for k, v in atoms.items() if v > 1e-12)
    assert big == pytest.approx([0.0, lo, hi], abs=1e-12)
    assert m.density_mass <= 1e-6


def test_opposite_subpopulation_learns_truth():
    sol = solve(OPP)
    assert sol.regime is RegimeTag.OWN_AND_OPPOSITE
    sub = restrict(init_population("uniform"), sol.cutoffs.p_low, sol.cutoffs.p_high)
    m = state_at(sol, sub, "L", 50.0)
    assert m.mass_in(0.0, 0.0) >= 1 - 1e-6


def test_extreme_voter_never_moves():
    sol = solve(OWN)
    m = state_at(sol, init_population({"kind": "atoms", "locations": [0.95]}), "L", 10.0)
    assert m.atoms() == [(0.95, 1.0)]


def test_polarization_rises_in_own_only_regime():
    sol = solve(OWN)
    snaps = evolve(sol, init_population("uniform"), "L", times=[0, 0.2, 0.4, 0.8, 1.5, 3, 10, 50])
    pol = [s.polarization for s in snaps]
    assert all(b >= a - 1e-12 for a, b in zip(pol, pol[1:]))


def test_single_atom_absorption_matches_monte_carlo():
    sol = solve(OPP)
    p0, t = 0.6, 1.3
    m = state_at(sol, init_population({"kind": "atoms", "locations": [p0]}), "L", t)
    absorbed = m.mass_in(0.0, 0.0)
    mc = monte_carlo(OPP, sol, p0, 100_000, seed=4)
    hits = (~mc.states) & mc.breakthrough & (mc.times <= t)
    n_L = (~mc.states).sum()
    freq = hits.sum() / n_L
    se = math.sqrt(freq * (1 - freq) / n_L)
    assert abs(absorbed - freq) <= 3 * se


def test_state_R_mirrors_state_L():
    sol = solve(OPP)
    prior = init_population("uniform")
    a = state_at(sol, prior, "L", 0.7)
    b = state_at(sol, prior, "R", 0.7)
    for y in (0.1, 0.3, 0.45):
        assert a.mass_in(0, y) == pytest.approx(b.mass_in(1 - y, 1), abs=1e-9)


def test_csv_schema():
    snaps = evolve(solve(OWN), init_population("uniform", 11), "L", times=[0, 1])
    lines = snapshots_to_csv(snaps).splitlines()
    assert lines[0] == "time,kind,location,mass_or_density,media_choice"
    kinds = {ln.split(",")[1] for ln in lines[1:]}
    assert kinds <= {"atom", "node"}
