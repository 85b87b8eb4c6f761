import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from incentive_games import (ConfigurationError, EvaluationError, Game, Incentive, IntegratorConfig, Profile,
                             builtin_game, check_invariant_region, derivative_limit_check, dynamics_rhs, integrate,
                             iterate_map, map_residual, t_map)
from incentive_games import incentives as inc
from incentive_games.dynamics import t_map_values
from oracles import bnn_rhs, random_game, random_profile, replicator_rhs

PD = builtin_game("pd")
MP = builtin_game("mp")
RPS = builtin_game("rps")


def _random(seed, max_players=3, max_strategies=4):
    r = np.random.default_rng(seed)
    n = int(r.integers(1, max_players + 1))
    counts = tuple(int(v) for v in r.integers(1, max_strategies + 1, size=n))
    return Game(random_game(r, counts)), random_profile(r, counts)


def _flat_rhs(g, phi):
    counts = g.strategy_counts
    cuts = np.cumsum(counts)[:-1]

    def f(t, y):
        return np.concatenate(dynamics_rhs(g, phi, np.split(y, cuts)))
    return f


class TestMap:
    def test_examples(self, rng):
        x = random_profile(rng, (2, 2))
        assert np.allclose(t_map(PD, inc.ZERO, x).flat, np.concatenate(x))
        dd = Profile.vertex((2, 2), (1, 1))
        assert t_map(PD, inc.NASH, dd).flat.tolist() == [0, 1, 0, 1]
        y = t_map(PD, inc.NASH, Profile.vertex((2, 2), (0, 0)))
        np.testing.assert_allclose(y[0], [1 / 3, 2 / 3])
        np.testing.assert_allclose(y[1], [1 / 3, 2 / 3])

    def test_denominator_violation(self):
        neg = Incentive("neg", lambda g, x: [np.array([-0.5, -0.5]) for _ in x])
        with pytest.raises(EvaluationError, match="strict"):
            t_map(MP, neg, Profile.barycenter((2, 2)))

    def test_image_off_simplex(self):
        neg = Incentive("neg", lambda g, x: [np.array([-0.9, 0.0]) for _ in x])
        with pytest.raises(EvaluationError, match="simplex"):
            t_map(MP, neg, Profile.barycenter((2, 2)))

    def test_relaxed_only_refused(self):
        with pytest.raises(ConfigurationError):
            t_map(PD, inc.PROJECTION, Profile.barycenter((2, 2)))
        with pytest.raises(ConfigurationError):
            t_map(PD, inc.replicator(), Profile.barycenter((2, 2)))

    @given(seed=st.integers(0, 2**32 - 1))
    def test_fixed_point_equivalence(self, seed):
        g, x = _random(seed)
        for phi in (inc.NASH, inc.SMITH, inc.logit(0.7), inc.SU):
            f = phi(g, x)
            parallel = max(np.abs(v - p * v.sum()).max() for p, v in zip(x, f))
            scale = max(1 + abs(v.sum()) for v in f)
            mres = map_residual(g, phi, x)
            # |T(x) - x| = |phi - x sum(phi)| / (1 + sum(phi)) per player
            assert mres <= parallel + 1e-12
            assert parallel <= scale * mres + 1e-12


class TestRHS:
    @given(seed=st.integers(0, 2**32 - 1))
    def test_bnn_and_replicator(self, seed):
        g, x = _random(seed)
        for a, b in zip(dynamics_rhs(g, inc.NASH, x), bnn_rhs(g.payoffs, x)):
            np.testing.assert_allclose(a, b, atol=1e-12)
        for a, b in zip(dynamics_rhs(g, inc.replicator(), x), replicator_rhs(g.payoffs, x)):
            np.testing.assert_allclose(a, b, atol=1e-12)

    @given(seed=st.integers(0, 2**32 - 1))
    def test_tangency_and_boundary(self, seed):
        g, x = _random(seed)
        r = np.random.default_rng(seed)
        i = int(r.integers(g.n_players))
        a = int(r.integers(g.strategy_counts[i]))
        if g.strategy_counts[i] > 1:
            x[i][a] = 0.0
            x[i] /= x[i].sum()
        for name, phi in inc.catalog().items():
            if g.n_players < 2 and name in ("altruism", "margin", "rival", "rival-margin"):
                continue
            rhs = dynamics_rhs(g, phi, x)
            for v in rhs:
                assert abs(v.sum()) <= 1e-12 * max(1.0, np.abs(v).max())
            if x[i][a] == 0.0:
                assert rhs[i][a] >= -1e-12, name

    def test_zero_total_rhs_is_phi(self, rng):
        x = random_profile(rng, (3, 3))
        for phi in (inc.replicator(), inc.PROJECTION, inc.dyn_equivalent(inc.SMITH)):
            for a, b in zip(dynamics_rhs(RPS, phi, x), phi(RPS, x)):
                np.testing.assert_allclose(a, b, atol=1e-15)


class TestDerivativeLimit:
    def test_examples(self, rng):
        for _ in range(10):
            g = Game(random_game(rng, (2, 3)))
            x = random_profile(rng, (2, 3))
            assert derivative_limit_check(g, inc.NASH, x, 1e-6) <= 1e-4
            assert derivative_limit_check(g, inc.ZERO, x, 0.3) == 0.0
            assert derivative_limit_check(g, inc.replicator(), x, 0.3) <= 1e-12

    def test_first_order(self, rng):
        g = Game(random_game(rng, (3, 3)))
        x = random_profile(rng, (3, 3))
        d = [derivative_limit_check(g, inc.NASH, x, t) for t in (1e-2, 5e-3, 2.5e-3)]
        assert d[0] > d[1] > d[2]
        assert d[0] / d[1] == pytest.approx(2.0, rel=0.1)

    def test_bad_step(self):
        with pytest.raises(ConfigurationError):
            derivative_limit_check(PD, inc.NASH, Profile.barycenter((2, 2)), 0.0)


class TestIterateMap:
    def test_zero_is_constant(self):
        tr = iterate_map(PD, inc.ZERO, Profile.barycenter((2, 2)))
        assert tr.status == "converged" and tr.steps == 0 and len(tr) == 1

    def test_pd_converges_to_defection(self):
        cfg = IntegratorConfig(method="discrete-map", max_steps=10_000, tol=1e-8)
        tr = iterate_map(PD, inc.NASH, Profile.vertex((2, 2), (0, 0)), cfg)
        assert tr.status == "converged" and tr.residual <= 1e-8 and tr.steps <= 10_000
        assert tr.final[0][1] > 0.99 and tr.final[1][1] > 0.99

    def test_mp_uniform_fixed(self):
        tr = iterate_map(MP, inc.NASH, Profile.barycenter((2, 2)))
        assert tr.status == "converged" and tr.final.flat.tolist() == [0.5] * 4

    def test_denominator_status(self):
        calls = []

        def rule(g, x):
            calls.append(1)
            return [np.array([0.1, 0.0]) if len(calls) < 3 else np.array([-0.5, -0.5]) for _ in x]

        tr = iterate_map(MP, Incentive("late-neg", rule), Profile.barycenter((2, 2)))
        assert tr.status == "denominator-violation" and "strict" in tr.message

    def test_record_every(self):
        cfg = IntegratorConfig(method="discrete-map", max_steps=50, record_every=10, tol=1e-30)
        tr = iterate_map(MP, inc.logit(1.0), [[0.9, 0.1], [0.2, 0.8]], cfg)
        assert tr.times == [0.0, 10.0, 20.0, 30.0, 40.0, 50.0]
        assert tr.status == "max-steps"


class TestIntegrate:
    def test_rps_uniform_constant(self):
        tr = integrate(RPS, inc.replicator(), Profile.barycenter((3, 3)))
        assert tr.status == "converged" and tr.steps == 0

    def test_pd_replicator_reference(self):
        x0 = [[0.9, 0.1], [0.9, 0.1]]
        cfg = IntegratorConfig(dt=0.01, t_max=50, tol=1e-14)
        tr = integrate(PD, inc.replicator(), x0, cfg)
        fine = integrate(PD, inc.replicator(), x0, IntegratorConfig(dt=0.001, t_max=50, tol=1e-14))
        d = [s[0][1] for s in tr.states]
        assert np.all(np.diff(d) >= -1e-15)
        assert 1 - tr.final[0][1] <= 1e-3
        assert np.abs(tr.final.flat - fine.final.flat).max() <= 1e-8

    def test_pd_nash_matches_independent_solver(self):
        cfg = IntegratorConfig(dt=0.01, t_max=50)
        tr = integrate(PD, inc.NASH, Profile.barycenter((2, 2)), cfg)
        ref = solve_ivp(_flat_rhs(PD, inc.NASH), (0, 50), np.full(4, 0.5), method="DOP853",
                        rtol=1e-12, atol=1e-14).y[:, -1]
        assert np.abs(tr.final.flat - ref).max() <= 1e-8
        # defection is approached, but only at rate 1/t near the pure equilibrium
        assert 0.01 < tr.final[0][0] < 0.03

    def test_logit_mp_converges_to_uniform(self):
        cfg = IntegratorConfig(tol=1e-8)
        tr = integrate(MP, inc.logit(1.0), [[0.9, 0.1], [0.2, 0.8]], cfg)
        assert tr.status == "converged" and tr.residual <= 1e-8
        np.testing.assert_allclose(tr.final.flat, 0.5, atol=1e-7)

    def test_euler_and_times(self):
        cfg = IntegratorConfig(method="euler", dt=0.05, max_steps=40, record_every=4, tol=1e-30)
        tr = integrate(MP, inc.SMITH, [[0.9, 0.1], [0.2, 0.8]], cfg)
        assert np.all(np.diff(tr.times) > 0) and tr.times[-1] == pytest.approx(2.0)
        for s in tr.states:
            Profile(s)

    def test_reject_policy(self):
        g = Game(100.0 * random_game(np.random.default_rng(3), (3, 3)))
        cfg = IntegratorConfig(method="euler", dt=0.5, drift_policy="reject", max_steps=100)
        tr = integrate(g, inc.NASH, [[0.98, 0.01, 0.01], [0.01, 0.01, 0.98]], cfg)
        assert tr.status == "simplex-violation"
        lenient = integrate(g, inc.NASH, [[0.98, 0.01, 0.01], [0.01, 0.01, 0.98]],
                            IntegratorConfig(method="euler", dt=0.5, max_steps=100))
        assert lenient.status != "simplex-violation"

    def test_discrete_method_dispatch(self):
        tr = integrate(PD, inc.NASH, Profile.vertex((2, 2), (0, 0)), IntegratorConfig(method="discrete-map"))
        assert tr.method == "discrete-map" and tr.status == "converged"

    @pytest.mark.parametrize("kw", [dict(method="heun"), dict(dt=0.0), dict(tol=0.0), dict(drift_policy="x"),
                                    dict(record_every=0)])
    def test_config_validation(self, kw):
        with pytest.raises(ConfigurationError):
            IntegratorConfig(**kw)

    def test_trajectory_rows_and_dict(self):
        tr = integrate(MP, inc.ZERO, Profile.barycenter((2, 2)))
        assert list(tr.rows()) == [(0.0, 0, 0, 0.5), (0.0, 0, 1, 0.5), (0.0, 1, 0, 0.5), (0.0, 1, 1, 0.5)]
        d = tr.to_dict()
        assert d["profiles"] == [[[0.5, 0.5], [0.5, 0.5]]] and d["incentive"] == "zero"


class TestInvariantRegion:
    def test_symmetric_game(self, rng):
        a = rng.normal(size=(3, 3))
        g = Game([a, a.T])
        assert check_invariant_region(g, inc.NASH, samples=64).max_defect <= 1e-10

    def test_zero_any_permutation(self):
        rep = check_invariant_region(RPS, inc.ZERO, perms=[(0, 1, 2), (2, 0, 1)], samples=32)
        assert rep.max_defect == 0.0

    def test_asymmetric_negative_control(self, rng):
        a = rng.normal(size=(3, 3))
        b = a.T.copy()
        b[0, 1] += 1.0
        rep = check_invariant_region(Game([a, b]), inc.NASH, samples=64)
        assert rep.max_defect > 1e-3 and rep.worst_profile

    def test_mismatched_counts(self):
        with pytest.raises(ConfigurationError):
            check_invariant_region(Game(np.zeros((2, 2, 3))), inc.NASH)
        with pytest.raises(ConfigurationError):
            check_invariant_region(PD, inc.NASH, perms=[(0, 0), (0, 1)])

    def test_map_values_unchecked(self):
        # the raw map does not validate the image
        neg = Incentive("neg", lambda g, x: [np.array([-0.9, 0.0]) for _ in x])
        assert min(v.min() for v in t_map_values(MP, neg, Profile.barycenter((2, 2)))) < 0
