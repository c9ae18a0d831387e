"""Phase dynamics: right-hand sides, integration, coordinates, distances."""

import numpy as np
import pytest

from kurasync.dynamics import (
    OscillatorConfig,
    epsilon,
    intra_difference_series,
    kuramoto_rhs,
    kuramoto_rhs_incidence,
    manifold_distance,
    near_manifold_initial,
    perturbation_fields,
    simulate,
)
from kurasync.errors import IntraFrequencyMismatch, StepTooLarge, ZeroInterFrequencyGap
from kurasync.experiments import (
    three_cluster_frequencies,
    three_cluster_network,
    two_cluster_frequencies,
    two_cluster_network,
)
from kurasync.network import WeightedNetwork, build_incidence
from kurasync.tree import build_spanning_tree


class TestRhs:
    def test_two_node_quarter_turn(self):
        net = WeightedNetwork.from_edges(2, [(0, 1, 1.0)])
        vel = kuramoto_rhs(np.array([0.0, np.pi / 2]), np.zeros(2), net)
        np.testing.assert_allclose(vel, [1.0, -1.0], atol=1e-15)

    def test_equal_velocities_on_manifold(self):
        """With equal cluster frequencies and an equitable partition the
        velocities are constant inside each cluster on the manifold."""
        net, part = three_cluster_network()
        omega = three_cluster_frequencies()
        theta = np.repeat([0.4, 1.5, 2.9], [2, 3, 3])
        vel = kuramoto_rhs(theta, omega, net)
        for cluster in part.clusters:
            v = vel[list(cluster)]
            assert v.max() - v.min() < 1e-12

    def test_node_form_matches_incidence_form(self):
        net, part = three_cluster_network()
        inc = build_incidence(net, part)
        omega = three_cluster_frequencies()
        rng = np.random.default_rng(2)
        for _ in range(10):
            theta = rng.uniform(-np.pi, np.pi, 8)
            a = kuramoto_rhs(theta, omega, net)
            b = kuramoto_rhs_incidence(theta, omega, inc.matrix, inc.weights)
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_rotational_symmetry(self):
        net, _ = three_cluster_network()
        omega = three_cluster_frequencies()
        rng = np.random.default_rng(4)
        theta = rng.uniform(-np.pi, np.pi, 8)
        shifted = kuramoto_rhs(theta + 1.7, omega, net)
        np.testing.assert_allclose(shifted, kuramoto_rhs(theta, omega, net), atol=1e-12)


class TestEpsilon:
    def test_demo_values(self):
        net, part = three_cluster_network()
        d = build_spanning_tree(net, part)
        eps, eta = epsilon(d, three_cluster_frequencies())
        assert eps == pytest.approx(0.2)
        assert np.all(np.abs(eta) >= 1.0 - 1e-12)

    def test_two_cluster_values(self):
        net, part = two_cluster_network()
        d = build_spanning_tree(net, part)
        eps, eta = epsilon(d, two_cluster_frequencies())
        assert eps == pytest.approx(0.25)
        assert abs(eta[0]) == pytest.approx(1.0)

    def test_scaling(self):
        """omega -> c omega scales eps by 1/c and leaves eta unchanged."""
        net, part = three_cluster_network()
        d = build_spanning_tree(net, part)
        omega = three_cluster_frequencies()
        eps1, eta1 = epsilon(d, omega)
        eps2, eta2 = epsilon(d, 4.0 * omega)
        assert eps2 == pytest.approx(eps1 / 4.0)
        np.testing.assert_allclose(eta2, eta1, atol=1e-12)

    def test_zero_gap_rejected(self):
        net, part = two_cluster_network()
        d = build_spanning_tree(net, part)
        with pytest.raises(ZeroInterFrequencyGap):
            epsilon(d, np.full(6, 2.0))

    def test_intra_mismatch_rejected(self):
        net, part = two_cluster_network()
        d = build_spanning_tree(net, part)
        omega = two_cluster_frequencies()
        omega[1] += 0.5
        with pytest.raises(IntraFrequencyMismatch):
            epsilon(d, omega)


class TestSimulate:
    def test_two_node_consensus_decay(self):
        """Linearized two-node difference decays at rate about 2."""
        net = WeightedNetwork.from_edges(2, [(0, 1, 1.0)])
        cfg = OscillatorConfig(
            omega=np.zeros(2), theta0=np.array([0.0, 0.1]), dt=1e-3, t_end=2.0
        )
        rec = simulate(cfg, net)
        diff = rec.thetas[:, 1] - rec.thetas[:, 0]
        expected = 0.1 * np.exp(-2.0 * rec.times)
        np.testing.assert_allclose(diff, expected, atol=2e-4)

    def test_step_too_large_rejected(self):
        net, _ = three_cluster_network()
        with pytest.raises(StepTooLarge):
            simulate(
                OscillatorConfig(
                    omega=1e4 * three_cluster_frequencies(),
                    theta0=np.zeros(8),
                    dt=1e-3,
                    t_end=1.0,
                ),
                net,
            )

    def test_rotational_symmetry_of_trajectories(self):
        net, _ = three_cluster_network()
        omega = three_cluster_frequencies()
        rng = np.random.default_rng(8)
        theta0 = rng.uniform(-np.pi, np.pi, 8)
        base = simulate(OscillatorConfig(omega=omega, theta0=theta0, dt=1e-3, t_end=1.0), net)
        moved = simulate(
            OscillatorConfig(omega=omega, theta0=theta0 + 2.1, dt=1e-3, t_end=1.0), net
        )
        np.testing.assert_allclose(moved.thetas, base.thetas + 2.1, atol=1e-10)

    def test_rk4_fourth_order_convergence(self):
        net, part = three_cluster_network()
        omega = three_cluster_frequencies()
        theta0 = near_manifold_initial(part, 8, np.random.default_rng(1), 0.1)
        ref = simulate(
            OscillatorConfig(omega=omega, theta0=theta0, dt=2.5e-4, t_end=2.0), net
        ).thetas[-1]
        errs = []
        for dt in (8e-3, 4e-3, 2e-3):
            sol = simulate(
                OscillatorConfig(omega=omega, theta0=theta0, dt=dt, t_end=2.0), net
            ).thetas[-1]
            errs.append(np.abs(sol - ref).max())
        assert errs[0] / errs[1] > 10.0
        assert errs[1] / errs[2] > 10.0

    def test_x_trajectory_matches_map(self):
        net, part = three_cluster_network()
        d = build_spanning_tree(net, part)
        theta0 = near_manifold_initial(part, 8, np.random.default_rng(0), 0.1)
        rec = simulate(
            OscillatorConfig(omega=three_cluster_frequencies(), theta0=theta0, t_end=1.0),
            net,
            d,
        )
        np.testing.assert_allclose(rec.x_traj, rec.thetas @ d.bt_intra, atol=1e-9)

    def test_determinism(self):
        net, part = three_cluster_network()
        theta0 = near_manifold_initial(part, 8, np.random.default_rng(3), 0.1)
        cfg = OscillatorConfig(
            omega=three_cluster_frequencies(), theta0=theta0, dt=1e-3, t_end=1.0
        )
        a = simulate(cfg, net)
        b = simulate(cfg, net)
        np.testing.assert_array_equal(a.thetas, b.thetas)


class TestPerturbationFields:
    def test_mapped_flow_consistency(self):
        """Btilde.T @ thetadot equals (f, eta/eps + g) at matching coordinates."""
        net, part = three_cluster_network()
        d = build_spanning_tree(net, part)
        omega = three_cluster_frequencies()
        f, g = perturbation_fields(d)
        eps, eta = epsilon(d, omega)
        rng = np.random.default_rng(6)
        for _ in range(10):
            theta = rng.uniform(-np.pi, np.pi, 8)
            vel = kuramoto_rhs(theta, omega, net)
            x, z = d.x_of(theta), d.z_of(theta)
            np.testing.assert_allclose(d.bt_intra.T @ vel, f(x, z), atol=1e-12)
            np.testing.assert_allclose(d.bt_inter.T @ vel, eta / eps + g(x, z), atol=1e-12)

    def test_f_vanishes_on_manifold(self):
        net, part = three_cluster_network()
        d = build_spanning_tree(net, part)
        f, _ = perturbation_fields(d)
        rng = np.random.default_rng(7)
        for _ in range(10):
            z = rng.uniform(-10.0, 10.0, d.m)
            assert np.abs(f(np.zeros(d.n), z)).max() < 1e-12

    def test_two_cluster_frozen_flow_canonical_form(self):
        """eta * (frozen rhs at eta*z) equals 1 - eps * a_bar * sin(z), a_bar = 2."""
        from kurasync.certificates import coupling_sum

        net, part = two_cluster_network()
        d = build_spanning_tree(net, part)
        _, g = perturbation_fields(d)
        eps, eta = epsilon(d, two_cluster_frequencies())
        a_bar = coupling_sum(d)
        assert a_bar == pytest.approx(2.0)
        for z in np.linspace(-3.0, 3.0, 13):
            lhs = eta[0] * (eta[0] + eps * g(np.zeros(d.n), np.array([eta[0] * z]))[0])
            assert lhs == pytest.approx(1.0 - eps * a_bar * np.sin(z), abs=1e-12)

    def test_slow_coordinate_cross_integration(self):
        """x from the phase simulation matches direct integration of the
        difference-coordinate ODE to 1e-6 over 10 seconds."""
        net, part = three_cluster_network()
        d = build_spanning_tree(net, part)
        omega = three_cluster_frequencies()
        f, g = perturbation_fields(d)
        eps, eta = epsilon(d, omega)
        theta0 = near_manifold_initial(part, 8, np.random.default_rng(4), 0.1)
        rec = simulate(
            OscillatorConfig(omega=omega, theta0=theta0, dt=1e-3, t_end=10.0), net, d
        )

        def rhs(y):
            x, z = y[: d.n], y[d.n :]
            return np.concatenate([f(x, z), eta / eps + g(x, z)])

        y = np.concatenate([d.x_of(theta0), d.z_of(theta0)])
        dt = 1e-3
        worst = 0.0
        for k in range(1, len(rec.times)):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * dt * k1)
            k3 = rhs(y + 0.5 * dt * k2)
            k4 = rhs(y + dt * k3)
            y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            worst = max(worst, np.abs(y[: d.n] - rec.x_traj[k]).max())
        assert worst < 1e-6


class TestManifoldDistance:
    def test_zero_on_manifold(self):
        _, part = three_cluster_network()
        theta = np.repeat([0.3, 4.0, 2.0], [2, 3, 3])
        assert manifold_distance(theta, part) == 0.0
        assert manifold_distance(theta + 6 * np.pi, part) < 1e-7

    def test_two_node_quarter_difference(self):
        """Residuals (-pi/4, +pi/4) around the circular mean give sqrt(2)*pi/4."""
        from kurasync.network import Partition

        net = WeightedNetwork.from_edges(
            4, [(0, 1, 1.0), (2, 3, 1.0), (0, 2, 1.0), (1, 3, 1.0)]
        )
        part = Partition.from_lists([[0, 1], [2, 3]], net)
        theta = np.array([0.0, np.pi / 2, 1.0, 1.0])
        expected = np.sqrt(2.0) * np.pi / 4.0
        assert manifold_distance(theta, part) == pytest.approx(expected, abs=1e-12)

    def test_shift_invariance(self):
        _, part = three_cluster_network()
        rng = np.random.default_rng(10)
        theta = rng.uniform(-np.pi, np.pi, 8)
        d0 = manifold_distance(theta, part)
        assert manifold_distance(theta + 1.23, part) == pytest.approx(d0, abs=1e-9)

    def test_wraparound(self):
        from kurasync.network import Partition

        net = WeightedNetwork.from_edges(
            4, [(0, 1, 1.0), (2, 3, 1.0), (1, 2, 1.0)]
        )
        part = Partition.from_lists([[0, 1], [2, 3]], net)
        theta = np.array([0.0, 2.0 * np.pi, 1.0, 1.0])  # equal mod 2 pi
        assert manifold_distance(theta, part) < 1e-12


class TestManifoldInvariance:
    def test_exact_partition_stays_on_manifold(self):
        """Started on the manifold with equal cluster frequencies, intra
        differences stay at floating-point level."""
        net, part = three_cluster_network()
        cfg = OscillatorConfig(
            omega=three_cluster_frequencies(),
            theta0=np.repeat([0.1, 2.0, 4.5], [2, 3, 3]),
            dt=1e-3,
            t_end=20.0,
            record_stride=10,
        )
        rec = simulate(cfg, net)
        assert intra_difference_series(rec, part).max() < 1e-10

    def test_deviation_zero_implies_invariance(self):
        """Cross-module property: K = 0 partitions keep the manifold invariant."""
        from kurasync.network import check_partition

        from .test_network import random_eep_network

        rng = np.random.default_rng(21)
        for _ in range(3):
            net, part = random_eep_network(rng)
            assert check_partition(net, part).is_exact
            base = rng.uniform(0, 2 * np.pi, part.r)
            theta0 = np.empty(net.n_nodes)
            omega = np.empty(net.n_nodes)
            for p, c in enumerate(part.clusters):
                theta0[list(c)] = base[p]
                omega[list(c)] = 1.0 + 2.0 * p
            rec = simulate(
                OscillatorConfig(omega=omega, theta0=theta0, dt=1e-3, t_end=5.0), net
            )
            assert intra_difference_series(rec, part).max() < 1e-9


class TestNearManifoldInitial:
    def test_distance_clamp(self):
        _, part = three_cluster_network()
        rng = np.random.default_rng(0)
        for _ in range(10):
            theta = near_manifold_initial(part, 8, rng, 0.1, max_dist=0.1)
            assert manifold_distance(theta, part) <= 0.1

    def test_seeded_reproducibility(self):
        _, part = three_cluster_network()
        a = near_manifold_initial(part, 8, np.random.default_rng(5), 0.1)
        b = near_manifold_initial(part, 8, np.random.default_rng(5), 0.1)
        np.testing.assert_array_equal(a, b)
