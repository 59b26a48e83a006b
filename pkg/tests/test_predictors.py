import numpy as np
import pytest
from scipy import ndimage

from beliefreach.errors import InfeasibleThresholdError, RejectedInputError
from beliefreach.grids import OccupancySlice
from beliefreach.humans import PolicyModel
from beliefreach.predictors import (
    epsilon_from_mass,
    export_tube,
    load_tube_sets,
    predict_ba_frs,
    predict_ba_frs_family,
    predict_bayes,
    predict_naive,
)
from beliefreach.scenario import with_overrides
from conftest import small_scenario
from oracles import epsilon_by_scan, hausdorff_cells


class TestNaive:
    def test_zero_horizon_returns_initial_ball(self, unit_scenario):
        tube = predict_naive(unit_scenario, horizon=0.0)
        assert len(tube.sets.slices) == 1
        grid = unit_scenario.human_grid
        mesh = grid.meshgrid()
        r0 = 2 * max(grid.spacing)
        truth = np.hypot(*mesh) <= r0
        assert np.array_equal(tube.sets.slices[0].inside(), truth)

    def test_disc_growth_matches_analytic(self, unit_scenario):
        tube = predict_naive(unit_scenario)
        grid = unit_scenario.human_grid
        mesh = grid.meshgrid()
        r0 = 2 * max(grid.spacing)
        v = unit_scenario.model.speed
        for s in tube.sets.slices:
            analytic = np.hypot(*mesh) <= r0 + v * s.time
            assert hausdorff_cells(grid, s.inside(), analytic) <= 2.0 + 1e-9

    def test_contains_thresholded_tubes(self, unit_scenario):
        naive = predict_naive(unit_scenario)
        for delta in (0.05, 0.15):
            ba = predict_ba_frs(unit_scenario, delta)
            for a, b in zip(ba.sets.slices, naive.sets.slices):
                assert not (a.inside() & ~b.inside()).any()


class TestBaFrs:
    def test_zero_threshold_equals_naive(self):
        # with every control admissible the joint tube projects onto the
        # worst-case disc; resolvable at a gentle observation rate
        s = small_scenario(
            gamma=0.25,
            horizon=1.0,
            human_grid=__import__("beliefreach").grids.Grid(
                (-2.0, -2.0), (2.0, 2.0), (51, 51)
            ),
            belief_axis=(0.001, 0.999, 31),
            model=PolicyModel.gaussian_goal(
                [(2.0, 2.0), (2.0, -2.0)], [np.pi / 4, np.pi / 4], 0.6
            ),
        )
        ba0 = predict_ba_frs(s, 0.0)
        naive = predict_naive(s)
        for a, b in zip(ba0.sets.slices, naive.sets.slices):
            assert hausdorff_cells(s.human_grid, a.inside(), b.inside()) <= 1.0 + 1e-9

    def test_high_threshold_biases_toward_likelier_goal(self):
        # with a confident prior, raising delta shifts the projected set
        # toward the first goal
        s = small_scenario(prior=(0.8, 0.2))
        g1 = np.array(s.model.goals[0])
        direction = g1 / np.linalg.norm(g1)
        mesh = s.human_grid.meshgrid()
        centroids = {}
        for delta in (0.1, 0.2):
            tube = predict_ba_frs(s, delta)
            inside = tube.sets.slices[-1].inside()
            centroid = np.array([mesh[0][inside].mean(), mesh[1][inside].mean()])
            centroids[delta] = float(centroid @ direction)
        assert centroids[0.2] > centroids[0.1]

    def test_infeasible_threshold_raises(self, unit_scenario):
        with pytest.raises(InfeasibleThresholdError):
            predict_ba_frs(unit_scenario, 5.0)

    def test_family_matches_deltas_and_nests(self, unit_scenario):
        fam = predict_ba_frs_family(unit_scenario, deltas=(0.0, 0.1))
        assert set(fam) == {0.0, 0.1}
        for a, b in zip(fam[0.1].sets.slices, fam[0.0].sets.slices):
            assert not (a.inside() & ~b.inside()).any()


class TestBayes:
    def test_degenerate_policy_concentrates_on_a_line(self):
        # two identical goals and a tiny spread: a near-deterministic walk
        model = PolicyModel.gaussian_goal(
            [(1.4, 0.0), (1.4, 0.0)], [1e-3, 1e-3], 0.6, control_count=36
        )
        s = small_scenario(model=model)
        tube = predict_bayes(s, n_particles=20_000)
        grid = s.human_grid
        row = grid.nearest_index((0.0, 0.0))[1]
        for occ in tube.occupancy:
            occupied = np.argwhere(occ.mass > 0)
            assert np.all(np.abs(occupied[:, 1] - row) <= 1)

    def test_mass_conserved_per_slice(self, unit_scenario):
        tube = predict_bayes(unit_scenario)
        for occ in tube.occupancy:
            assert abs(occ.mass.sum() - 1.0) <= 1e-6

    def test_bimodal_occupancy_at_horizon(self, prediction_fixture, bayes_tube):
        # prior (0.5, 0.5): mass splits toward the two goals; the
        # mass-fraction core at the horizon has two connected components
        final = bayes_tube.sets.slices[-1].inside()
        _, n_components = ndimage.label(final)
        assert n_components == 2

    def test_requires_enough_particles(self, unit_scenario):
        with pytest.raises(RejectedInputError):
            predict_bayes(unit_scenario, n_particles=100)

    def test_support_agrees_with_zero_threshold_tube(self, prediction_fixture, family_tubes):
        # two-sided agreement between the particle support and the
        # zero-threshold tube, with a one-cell discretization allowance;
        # horizon short enough that 10^6 samples can express the support
        s = with_overrides(prediction_fixture, horizon=0.4)
        r0 = 2 * max(s.human_grid.spacing)
        bayes = predict_bayes(s, n_particles=1_000_000, init_radius=r0)
        struct = ndimage.generate_binary_structure(2, 2)
        for k, occ in enumerate(bayes.occupancy):
            tube = family_tubes[0.0].sets.slices[k].inside()
            support = occ.mass > 0
            assert not (support & ~ndimage.binary_dilation(tube, struct)).any()
            eroded = ndimage.binary_erosion(tube, struct)
            covered = (support & eroded).sum() / max(eroded.sum(), 1)
            assert covered >= 0.95


class TestEpsilonFromMass:
    def occupancy(self, mass):
        from beliefreach.grids import Grid

        n = mass.shape[0]
        grid = Grid((0.0, 0.0), (1.0, 1.0), (n, n))
        return OccupancySlice(grid, mass)

    def test_single_cell(self):
        mass = np.zeros((5, 5))
        mass[2, 2] = 1.0
        eps = epsilon_from_mass(self.occupancy(mass), 0.95)
        assert eps < 1.0
        assert (mass > eps).sum() == 1

    def test_uniform_mass_keeps_every_cell(self):
        mass = np.full((10, 10), 0.01)
        eps = epsilon_from_mass(self.occupancy(mass), 0.95)
        assert eps < 0.01
        assert (mass > eps).sum() == 100

    def test_matches_sort_and_scan_oracle(self, rng):
        for _ in range(20):
            raw = rng.random((8, 8)) * (rng.random((8, 8)) > 0.3)
            if raw.sum() == 0:
                continue
            mass = raw / raw.sum()
            occ = self.occupancy(mass)
            q = rng.uniform(0.2, 0.98)
            eps = epsilon_from_mass(occ, q)
            produced = {tuple(i) for i in np.argwhere(mass > eps)}
            assert produced == epsilon_by_scan(mass, q)
            assert mass[mass > eps].sum() >= q - 1e-12

    def test_rejects_bad_fraction(self):
        mass = np.full((5, 5), 0.04)
        with pytest.raises(RejectedInputError):
            epsilon_from_mass(self.occupancy(mass), 1.5)


class TestExport:
    def test_round_trip_sets(self, unit_scenario, tmp_path):
        tube = predict_naive(unit_scenario, horizon=0.3)
        export_tube(tube, tmp_path / "naive")
        meta, back = load_tube_sets(tmp_path / "naive")
        assert meta["kind"] == "naive"
        assert len(back.slices) == len(tube.sets.slices)
        for a, b in zip(back.slices, tube.sets.slices):
            assert np.max(np.abs(a.values - b.values)) < 1e-12
