import numpy as np
import pytest

import maxmin_auction as ma
from generators import random_corner_lsa, random_instance
from maxmin_auction import nature
from maxmin_auction.errors import (BoundaryError, DomainError, InfeasibleError,
                                   SizeError)


def spa(reserves, vmax=(1.0, 1.0)):
    return ma.corner_hitting(reserves, vmax)


def example1_mechanism(r=0.2, k=0.3):
    """Bidder 1 priced out; bidder 2 faces an affine price in bidder 1's report."""
    c = np.array([0.0, 0.2, 0.5, 1.0])
    return ma.GridMechanism([c, c], [np.full(4, 1.0), r + k * c])


EX1_INSTANCE = ma.Instance(2, [0.5, 0.5], 1.0)


class TestWorstCaseLP:
    def test_spa_guarantee_is_sum_of_means_minus_one(self):
        inst = ma.Instance(2, [0.6, 0.7], 1.0)
        mech = spa([0.0, 0.0])
        value, dist, cert, _ = nature.mechanism_guarantee(mech, inst, step=0.1)
        assert value == pytest.approx(0.3, abs=1e-9)
        assert dist.mean() == pytest.approx([0.6, 0.7], abs=1e-9)

    def test_constant_revenue(self):
        inst = ma.Instance(2, [0.6, 0.7], 1.0)
        coords = [np.array([0.0, 0.5, 1.0])] * 2
        t = np.full((3, 3), 0.42)
        value, dist, cert = nature.worst_case_lp(coords, t, inst)
        assert value == pytest.approx(0.42)
        assert dist.mean() == pytest.approx([0.6, 0.7])

    def test_excluded_bidder_example(self):
        coords = [np.array([0.0, 0.2, 0.5, 1.0])] * 2
        mech = example1_mechanism()
        t = nature.lower_revenue_table(mech, coords)
        value, dist, cert = nature.worst_case_lp(coords, t, EX1_INSTANCE)
        assert value == pytest.approx(0.0375, abs=1e-9)
        assert cert.lam[0] == pytest.approx(-0.075, abs=1e-9)
        assert cert.lam[1] == pytest.approx(0.25, abs=1e-9)

    def test_infeasible_means(self):
        inst = ma.Instance(2, [0.7, 0.5], 1.0)
        coords = [np.array([0.0, 0.5]), np.array([0.0, 1.0])]
        with pytest.raises(InfeasibleError):
            nature.worst_case_lp(coords, np.zeros((2, 2)), inst)

    def test_unequal_bounds_negative_multiplier(self):
        # reserve above the small-bound rival's support: more rival mean hurts
        inst = ma.Instance(2, [1.5, 0.2], [2.0, 1.0])
        lsa = ma.corner_hitting([1.2, 0.1], inst.vmax)
        value, dist, cert, _ = nature.mechanism_guarantee(lsa, inst)
        expected = (1 - 1.2 / 1.0) * 0.2 + (1.5 - 1.2) / 0.8 * 1.2
        assert value == pytest.approx(expected, abs=1e-9)
        assert cert.lam[1] == pytest.approx(-0.2, abs=1e-9)

    def test_support_size(self, rng):
        for _ in range(20):
            inst = random_instance(rng)
            lsa = random_corner_lsa(rng, inst)
            _, dist, _, _ = nature.mechanism_guarantee(lsa, inst)
            assert len(dist.probs) <= inst.n + 1

    def test_complementary_slackness(self, rng):
        for _ in range(20):
            inst = random_instance(rng)
            lsa = random_corner_lsa(rng, inst)
            coords = nature.breakpoint_coords(lsa)
            t = nature.lower_revenue_table(lsa, coords)
            value, dist, cert = nature.worst_case_lp(coords, t, inst)
            nodes = nature.grid_nodes(coords)
            tv = t.ravel()
            for atom in dist.atoms:
                idx = int(np.argmin(np.abs(nodes - atom).sum(axis=1)))
                slack = tv[idx] - cert.lam @ atom - cert.lambda0
                assert abs(slack) <= 1e-9

    def test_strong_duality(self, rng):
        for _ in range(30):
            inst = random_instance(rng)
            lsa = random_corner_lsa(rng, inst)
            value, _, cert, _ = nature.mechanism_guarantee(lsa, inst)
            assert abs(value - cert.value) <= 1e-9

    def test_grid_refinement_never_increases(self, rng):
        inst = ma.Instance(2, [0.6, 0.7], 1.0)
        lsa = spa([0.35, 0.45])
        coarse = nature.breakpoint_coords(lsa)
        v_coarse, *_ = nature.worst_case_lp(
            coarse, nature.lower_revenue_table(lsa, coarse), inst)
        for _ in range(5):
            fine = [np.unique(np.concatenate([c, rng.uniform(0, 1, 4)]))
                    for c in coarse]
            v_fine, *_ = nature.worst_case_lp(
                fine, nature.lower_revenue_table(lsa, fine), inst)
            assert v_fine <= v_coarse + 1e-9


class TestBruteForce:
    def test_matches_lp_on_spa(self):
        inst = ma.Instance(2, [0.6, 0.7], 1.0)
        mech = spa([0.0, 0.0])
        coords = nature.breakpoint_coords(mech, step=0.25)
        t = nature.lower_revenue_table(mech, coords)
        lp, *_ = nature.worst_case_lp(coords, t, inst)
        assert nature.brute_force_min(coords, t, inst) == pytest.approx(lp, abs=1e-9)
        assert lp == pytest.approx(0.3, abs=1e-9)

    def test_point_mass_forced(self):
        # means sit exactly on a grid node with a unique support
        inst = ma.Instance(2, [0.5, 0.5], 1.0)
        coords = [np.array([0.0, 0.5, 1.0])] * 2
        t = np.arange(9.0).reshape(3, 3) + 1.0
        # force the point mass by shrinking the grid to the node and corners
        bf = nature.brute_force_min(coords, t, inst)
        lp, *_ = nature.worst_case_lp(coords, t, inst)
        assert bf == pytest.approx(lp, abs=1e-9)

    def test_example1(self):
        coords = [np.array([0.0, 0.2, 0.5, 1.0])] * 2
        t = nature.lower_revenue_table(example1_mechanism(), coords)
        assert nature.brute_force_min(coords, t, EX1_INSTANCE) == pytest.approx(
            0.0375, abs=1e-9)

    def test_guard(self):
        inst = ma.Instance(2, [0.5, 0.5], 1.0)
        coords = [np.linspace(0, 1, 40)] * 2
        with pytest.raises(SizeError):
            nature.brute_force_min(coords, np.zeros((40, 40)), inst, guard=1000)


class TestDualValue:
    def test_zero_multiplier_gives_min_revenue(self):
        inst = ma.Instance(2, [0.6, 0.7], 1.0)
        coords = [np.array([0.0, 1.0])] * 2
        t = np.array([[0.1, 0.2], [0.3, 0.4]])
        assert nature.dual_value(coords, t, inst, [0.0, 0.0]) == pytest.approx(0.1)

    def test_spa_unit_multipliers(self):
        inst = ma.Instance(2, [0.6, 0.7], 1.0)
        mech = spa([0.0, 0.0])
        coords = nature.breakpoint_coords(mech, step=0.5)
        t = nature.lower_revenue_table(mech, coords)
        assert nature.dual_value(coords, t, inst, [1.0, 1.0]) == pytest.approx(0.3)

    def test_weak_duality(self, rng):
        inst = ma.Instance(2, [0.6, 0.7], 1.0)
        mech = spa([0.3, 0.2])
        coords = nature.breakpoint_coords(mech)
        t = nature.lower_revenue_table(mech, coords)
        lp, *_ = nature.worst_case_lp(coords, t, inst)
        for _ in range(50):
            lam = rng.normal(size=2)
            assert nature.dual_value(coords, t, inst, lam) <= lp + 1e-9


class TestWorstCaseClassification:
    INST = ma.Instance(2, [0.7, 0.6], 1.0)

    def test_type_i(self):
        assert nature.wcdistr2_classify([0.2, 0.2], self.INST) is \
            nature.WorstCaseType.I
        assert nature.wc_boundary_r2(0.2, self.INST) == pytest.approx(0.36)

    def test_type_ii(self):
        assert nature.wcdistr2_classify([0.45, 0.5], self.INST) is \
            nature.WorstCaseType.II
        assert nature.wc_boundary_r2(0.45, self.INST) == pytest.approx(0.12)

    def test_boundary_curve_at_zero(self):
        assert nature.wc_boundary_r2(0.0, self.INST) == pytest.approx(3 / 7)

    def test_type_iii(self):
        assert nature.wcdistr2_classify([0.55, 0.55], self.INST) is \
            nature.WorstCaseType.III

    def test_reserve_at_mean_rejected(self):
        with pytest.raises(DomainError):
            nature.wcdistr2_classify([0.7, 0.2], self.INST)

    def test_boundary_rejected(self):
        with pytest.raises(BoundaryError):
            nature.wcdistr2_classify([0.45, 0.55], self.INST)  # r2 = 1 - r1
        rbar = nature.wc_boundary_r2(0.45, self.INST)
        with pytest.raises(BoundaryError):
            nature.wcdistr2_classify([0.45, rbar], self.INST)


class TestDualMultipliers:
    INST = ma.Instance(2, [0.7, 0.6], 1.0)

    def test_type_i(self):
        lam = nature.lsa2_dual_multipliers([0.2, 0.2], self.INST)
        assert lam == pytest.approx([1.0, 1.0])

    def test_type_ii(self):
        lam = nature.lsa2_dual_multipliers([0.45, 0.5], self.INST)
        assert lam == pytest.approx([9 / 11, 1.0])

    def test_symmetric_reserves_give_equal_multipliers(self, rng):
        # holds in the undercut and sure-sale regimes; the wall regime's
        # candidate pairs are asymmetric by construction
        inst = ma.Instance(2, [0.8, 0.8], 1.0)
        for _ in range(20):
            r = float(rng.uniform(0.05, 0.49))
            try:
                lam = nature.lsa2_dual_multipliers([r, r], inst)
            except BoundaryError:
                continue
            assert lam[0] == pytest.approx(lam[1], abs=1e-12)


class TestWorstCaseConstruction:
    INST = ma.Instance(2, [0.7, 0.6], 1.0)

    def test_type_ii_atoms_and_revenue(self):
        d = nature.wcdistr2_construct([0.45, 0.5], self.INST)
        probs = {tuple(np.round(a, 6)): p for a, p in zip(d.atoms, d.probs)}
        assert probs[(0.45, 0.5)] == pytest.approx(19 / 55)
        assert probs[(1.0, 0.5)] == pytest.approx(5 / 11)
        assert probs[(0.45, 1.0)] == pytest.approx(0.2)
        rev = sum(p * nature.revenue_unsold_at_reserves([0.45, 0.5], self.INST, a)
                  for a, p in zip(d.atoms, d.probs))
        assert rev == pytest.approx(0.3045454545454545, abs=1e-9)

    def test_type_i_revenue_matches_dual(self):
        d = nature.wcdistr2_construct([0.2, 0.2], self.INST)
        rev = sum(p * nature.revenue_unsold_at_reserves([0.2, 0.2], self.INST, a)
                  for a, p in zip(d.atoms, d.probs))
        assert rev == pytest.approx(0.3, abs=1e-9)

    def test_means_exact(self, rng):
        for _ in range(50):
            m = rng.uniform(0.35, 0.9, 2)
            inst = ma.Instance(2, m, 1.0)
            r = rng.uniform(0.02, 0.98, 2) * (m - 0.01)
            try:
                d = nature.wcdistr2_construct(r, inst)
            except BoundaryError:
                continue
            assert d.mean() == pytest.approx(m, abs=1e-12)

    def test_revenue_equals_dual_value_per_regime(self, rng):
        """Constructed distribution attains the multiplier bound, all regimes."""
        seen = {t: 0 for t in nature.WorstCaseType}
        while min(seen.values()) < 100:
            m = rng.uniform(0.3, 0.95, 2)
            inst = ma.Instance(2, m, 1.0)
            r = rng.uniform(0.05, 0.95, 2) * (m - 0.02)
            try:
                kind = nature.wcdistr2_classify(r, inst)
                d = nature.wcdistr2_construct(r, inst)
            except BoundaryError:
                continue
            seen[kind] += 1
            dual = nature.lsa2_guarantee(r, inst)
            rev = sum(p * nature.revenue_unsold_at_reserves(r, inst, a)
                      for a, p in zip(d.atoms, d.probs))
            assert rev == pytest.approx(dual, abs=1e-9), (m, r, kind)
