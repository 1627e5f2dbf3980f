import threading

import numpy as np
import pytest
from scipy import stats

from insertrl.agent import (
    AgentConfig,
    Batch,
    DdpgfdAgent,
    ReplayBuffer,
    Transition,
    actor_update,
    apply_override,
    bellman_targets,
    critic_update,
    forward_actor,
    forward_critic,
)
from insertrl.nets import AdamState, Mlp, init_mlp, mlp_forward

from test_nets import finite_difference_grad, flatten_params, max_rel_error, set_params

BOUNDS = np.array([0.05, 0.05, 0.3])


def random_batch(rng, n=16, obs_dim=5, act_dim=3):
    return Batch(
        obs=rng.standard_normal((n, obs_dim)),
        action=rng.uniform(-0.05, 0.05, (n, act_dim)),
        reward=rng.integers(0, 2, n).astype(float),
        next_obs=rng.standard_normal((n, obs_dim)),
        done=rng.integers(0, 2, n).astype(bool),
    )


class TestForwardActor:
    def test_zero_net_zero_action(self):
        actor = Mlp([np.zeros((4, 8)), np.zeros((8, 3))], [np.zeros(8), np.zeros(3)], ["relu", "tanh"])
        a = forward_actor(actor, np.ones(4), BOUNDS)
        assert np.all(a == 0.0)

    def test_deterministic_no_noise(self):
        rng = np.random.default_rng(0)
        actor = init_mlp([4, 16, 3], ["relu", "tanh"], rng)
        obs = rng.standard_normal(4)
        a1 = forward_actor(actor, obs, BOUNDS)
        a2 = forward_actor(actor, obs, BOUNDS)
        np.testing.assert_array_equal(a1, a2)

    def test_actions_within_bounds_sweep(self):
        rng = np.random.default_rng(1)
        actor = init_mlp([4, 16, 3], ["relu", "tanh"], rng)
        # scale weights up so tanh saturates for many inputs
        for w in actor.weights:
            w *= 10
        obs = rng.standard_normal((10_000, 4))
        a = forward_actor(actor, obs, BOUNDS)
        assert np.all(np.abs(a) <= BOUNDS + 1e-15)

    def test_dimension_mismatch_raises(self):
        rng = np.random.default_rng(0)
        actor = init_mlp([4, 8, 3], ["relu", "tanh"], rng)
        with pytest.raises(ValueError):
            forward_actor(actor, np.zeros(5), BOUNDS)


class TestBellmanTargets:
    def test_terminal_is_reward(self):
        rng = np.random.default_rng(2)
        actor_t = init_mlp([5, 8, 3], ["relu", "tanh"], rng)
        critic_t = init_mlp([8, 8, 1], ["relu", "linear"], rng)
        b = random_batch(rng)
        b.done[:] = True
        b.reward[:] = 1.0
        y = bellman_targets(b, actor_t, critic_t, 0.99, BOUNDS)
        np.testing.assert_array_equal(y, np.ones(len(y)))

    def test_direct_arithmetic(self):
        # r=0, not done, gamma=0.99, Q'=0.5 -> 0.495
        actor_t = Mlp([np.zeros((5, 3))], [np.zeros(3)], ["tanh"])
        critic_t = Mlp([np.zeros((8, 1))], [np.array([0.5])], ["linear"])
        b = Batch(
            obs=np.zeros((1, 5)),
            action=np.zeros((1, 3)),
            reward=np.zeros(1),
            next_obs=np.zeros((1, 5)),
            done=np.zeros(1, dtype=bool),
        )
        y = bellman_targets(b, actor_t, critic_t, 0.99, BOUNDS)
        assert y[0] == pytest.approx(0.495, abs=1e-15)

    def test_matches_per_sample_oracle(self):
        rng = np.random.default_rng(3)
        actor_t = init_mlp([5, 8, 3], ["relu", "tanh"], rng)
        critic_t = init_mlp([8, 8, 1], ["relu", "linear"], rng)
        b = random_batch(rng, n=64)
        got = bellman_targets(b, actor_t, critic_t, 0.99, BOUNDS)
        for i in range(len(got)):
            a_i = forward_actor(actor_t, b.next_obs[i], BOUNDS)
            q_i = forward_critic(critic_t, b.next_obs[i : i + 1], a_i[None, :])[0]
            want = b.reward[i] + 0.99 * (0.0 if b.done[i] else 1.0) * q_i
            assert abs(got[i] - want) < 1e-12


class TestCriticUpdate:
    def test_zero_loss_zero_gradient(self):
        rng = np.random.default_rng(4)
        critic = init_mlp([8, 8, 1], ["relu", "linear"], rng)
        b = random_batch(rng, n=8)
        x = np.concatenate([b.obs, b.action], axis=1)
        targets, _ = mlp_forward(critic, x)
        before = flatten_params(critic).copy()
        opt = AdamState.for_net(critic)
        loss = critic_update(critic, opt, b, targets[:, 0], lr=1e-3)
        assert loss == 0.0
        # Adam with exactly zero gradient leaves parameters untouched
        np.testing.assert_array_equal(flatten_params(critic), before)

    def test_linear_regression_closed_form_gradient(self):
        # single sample, linear critic q = w.x + b: dL/dw = 2(q - y)x, dL/db = 2(q - y)
        w0 = np.array([[0.3], [-0.2]])
        critic = Mlp([w0.copy()], [np.array([0.1])], ["linear"])
        b = Batch(
            obs=np.array([[1.5]]),
            action=np.array([[-0.5]]),
            reward=np.zeros(1),
            next_obs=np.zeros((1, 1)),
            done=np.zeros(1, dtype=bool),
        )
        target = np.array([2.0])
        x = np.array([1.5, -0.5])
        q = float(x @ w0[:, 0] + 0.1)
        want_dw = 2 * (q - target[0]) * x
        want_db = 2 * (q - target[0])

        # recompute through the library path with SGD-free introspection:
        from insertrl.nets import mlp_backward

        qv, cache = mlp_forward(critic, x[None, :])
        grads, _ = mlp_backward(critic, cache, 2 * (qv[:, 0] - target)[:, None] / 1)
        np.testing.assert_allclose(grads.d_weights[0][:, 0], want_dw, rtol=1e-12)
        np.testing.assert_allclose(grads.d_biases[0][0], want_db, rtol=1e-12)

    def test_gradcheck_vs_finite_differences(self):
        rng = np.random.default_rng(5)
        critic = init_mlp([8, 12, 1], ["tanh", "linear"], rng)
        b = random_batch(rng, n=8)
        targets = rng.standard_normal(8)
        x = np.concatenate([b.obs, b.action], axis=1)

        def loss_at(flat):
            set_params(critic, flat)
            q, _ = mlp_forward(critic, x)
            return float(np.mean((q[:, 0] - targets) ** 2))

        from insertrl.nets import mlp_backward

        flat0 = flatten_params(critic).copy()
        q, cache = mlp_forward(critic, x)
        err = q[:, 0] - targets
        grads, _ = mlp_backward(critic, cache, (2 * err / len(err))[:, None])
        analytic = np.concatenate([g.ravel() for g in grads.d_weights + grads.d_biases])
        fd = finite_difference_grad(loss_at, flat0)
        set_params(critic, flat0)
        assert max_rel_error(analytic, fd) < 1e-4

    def test_non_finite_loss_raises(self):
        rng = np.random.default_rng(6)
        critic = init_mlp([8, 8, 1], ["relu", "linear"], rng)
        b = random_batch(rng, n=4)
        opt = AdamState.for_net(critic)
        with pytest.raises(FloatingPointError):
            critic_update(critic, opt, b, np.full(4, np.inf), lr=1e-3)


class TestActorUpdate:
    def test_constant_critic_zero_gradient(self):
        rng = np.random.default_rng(7)
        actor = init_mlp([5, 8, 3], ["relu", "tanh"], rng)
        critic = Mlp([np.zeros((8, 1))], [np.array([3.0])], ["linear"])
        before = flatten_params(actor).copy()
        opt = AdamState.for_net(actor)
        obj = actor_update(actor, opt, critic, rng.standard_normal((8, 5)), BOUNDS, lr=1e-3)
        assert obj == pytest.approx(3.0)
        np.testing.assert_array_equal(flatten_params(actor), before)

    def test_linear_chain_rule_exact(self):
        # critic Q = w_a * a (1-dim action, ignore obs); actor a = bound*tanh(theta*s)
        # dJ/dtheta = w_a * bound * (1 - tanh^2(theta*s)) * s
        theta = 0.7
        w_a = 1.3
        s = np.array([[0.4]])
        bound = np.array([2.0])
        actor = Mlp([np.array([[theta]])], [np.zeros(1)], ["tanh"])
        critic = Mlp([np.array([[0.0], [w_a]])], [np.zeros(1)], ["linear"])

        from insertrl.nets import mlp_backward

        raw, a_cache = mlp_forward(actor, s)
        x = np.concatenate([s, raw * bound], axis=1)
        q, c_cache = mlp_forward(critic, x)
        _, dx = mlp_backward(critic, c_cache, np.full_like(q, -1.0))
        d_raw = dx[:, 1:] * bound
        grads, _ = mlp_backward(actor, a_cache, d_raw)
        got = -grads.d_weights[0][0, 0]  # we minimized -Q
        t = np.tanh(theta * s[0, 0])
        want = w_a * bound[0] * (1 - t**2) * s[0, 0]
        assert got == pytest.approx(want, rel=1e-12)

    def test_gradcheck_vs_finite_differences(self):
        rng = np.random.default_rng(8)
        actor = init_mlp([5, 10, 3], ["tanh", "tanh"], rng)
        critic = init_mlp([8, 10, 1], ["tanh", "linear"], rng)
        obs = rng.standard_normal((6, 5))

        def objective_at(flat):
            set_params(actor, flat)
            raw, _ = mlp_forward(actor, obs)
            a = raw * BOUNDS
            q, _ = mlp_forward(critic, np.concatenate([obs, a], axis=1))
            return float(np.mean(q))

        from insertrl.nets import mlp_backward

        flat0 = flatten_params(actor).copy()
        raw, a_cache = mlp_forward(actor, obs)
        x = np.concatenate([obs, raw * BOUNDS], axis=1)
        q, c_cache = mlp_forward(critic, x)
        _, dx = mlp_backward(critic, c_cache, np.full_like(q, 1.0 / len(q)))
        grads, _ = mlp_backward(actor, a_cache, dx[:, 5:] * BOUNDS)
        analytic = np.concatenate([g.ravel() for g in grads.d_weights + grads.d_biases])
        fd = finite_difference_grad(objective_at, flat0)
        set_params(actor, flat0)
        assert max_rel_error(analytic, fd) < 1e-4


class TestReplay:
    def make_t(self, i=0, source="agent", obs_dim=4):
        return Transition(
            obs=np.full(obs_dim, float(i)),
            action=np.zeros(3),
            reward=0.0,
            next_obs=np.full(obs_dim, float(i) + 0.5),
            done=False,
            source=source,
        )

    def test_append_counts(self):
        buf = ReplayBuffer(4, initial_capacity=2)
        for i in range(100):
            buf.append(self.make_t(i))
        assert len(buf) == 100

    def test_retain_all_demo_survives(self):
        buf = ReplayBuffer(4, initial_capacity=2)
        buf.append(self.make_t(0, source="demo"))
        for i in range(10_000):
            buf.append(self.make_t(i + 1))
        assert buf.demo_count == 1
        assert len(buf) == 10_001
        # the demo row is still physically present at index 0
        assert buf._obs[0, 0] == 0.0

    def test_empty_sample_raises(self):
        buf = ReplayBuffer(4)
        with pytest.raises(ValueError):
            buf.sample(8, np.random.default_rng(0))

    def test_size_one_buffer_sampling(self):
        buf = ReplayBuffer(4)
        buf.append(self.make_t(7))
        batch = buf.sample(16, np.random.default_rng(0))
        assert np.all(batch.obs[:, 0] == 7.0)

    def test_uniform_sampling_chi_square(self):
        buf = ReplayBuffer(1)
        n = 100
        for i in range(n):
            buf.append(Transition(np.array([float(i)]), np.zeros(3), 0.0, np.array([0.0]), False))
        rng = np.random.default_rng(42)
        draws = 1_000_000
        counts = np.zeros(n)
        for _ in range(10):
            batch = buf.sample(draws // 10, rng)
            idx = batch.obs[:, 0].astype(int)
            counts += np.bincount(idx, minlength=n)
        p = stats.chisquare(counts).pvalue
        assert p > 0.01, f"chi-square uniformity p={p}"

    def test_seeded_sampling_reproducible(self):
        buf = ReplayBuffer(2)
        for i in range(50):
            buf.append(Transition(np.array([i, 0.0]), np.zeros(3), 0.0, np.zeros(2), False))
        b1 = buf.sample(32, np.random.default_rng(9))
        b2 = buf.sample(32, np.random.default_rng(9))
        np.testing.assert_array_equal(b1.obs, b2.obs)

    def test_concurrent_append_sample_count_conservation(self):
        buf = ReplayBuffer(2, initial_capacity=4)
        n_threads, per_thread = 4, 2500
        errors = []

        def writer(tid):
            try:
                for i in range(per_thread):
                    buf.append(Transition(np.array([tid, i]), np.zeros(3), 0.0, np.zeros(2), False))
            except Exception as e:  # pragma: no cover
                errors.append(e)

        stop = threading.Event()

        def reader():
            rng = np.random.default_rng(0)
            while not stop.is_set():
                if len(buf) > 0:
                    buf.sample(64, rng)

        threads = [threading.Thread(target=writer, args=(t,)) for t in range(n_threads)]
        rt = threading.Thread(target=reader)
        rt.start()
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        stop.set()
        rt.join()
        assert not errors
        assert len(buf) == n_threads * per_thread
        # every (tid, i) pair arrived exactly once
        rows = buf._obs[: len(buf)]
        seen = set(map(tuple, rows.tolist()))
        assert len(seen) == n_threads * per_thread


class TestApplyOverride:
    def test_no_override(self):
        a = np.array([0.01, 0.0, 0.0])
        executed, source, clipped = apply_override(a, None, BOUNDS)
        assert executed is a and source == "agent" and not clipped

    def test_override_becomes_correction(self):
        ov = np.array([0.02, -0.01, 0.1])
        executed, source, clipped = apply_override(np.zeros(3), ov, BOUNDS)
        np.testing.assert_array_equal(executed, ov)
        assert source == "correction" and not clipped

    def test_out_of_bounds_clipped_and_flagged(self):
        ov = np.array([1.0, 0.0, 0.0])
        executed, source, clipped = apply_override(np.zeros(3), ov, BOUNDS)
        assert executed[0] == BOUNDS[0]
        assert source == "correction" and clipped


class TestAgentEndToEnd:
    def test_learn_step_runs_and_checkpoint_roundtrips(self, tmp_path):
        agent = DdpgfdAgent(5, 3, AgentConfig(batch_size=16, hidden_sizes=(16, 16)), seed=0)
        rng = np.random.default_rng(0)
        for i in range(64):
            agent.replay.append(
                Transition(
                    rng.standard_normal(5), rng.uniform(-0.05, 0.05, 3), float(i % 7 == 0), rng.standard_normal(5), i % 11 == 0
                )
            )
        for _ in range(5):
            loss, obj = agent.learn_step(rng, BOUNDS)
            assert np.isfinite(loss) and np.isfinite(obj)
        path = tmp_path / "ckpt.json"
        agent.save(path)
        loaded = DdpgfdAgent.load(path)
        assert loaded.train_steps == agent.train_steps
        for a, b in zip(agent.actor.weights, loaded.actor.weights):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(agent.critic_opt.m_w, loaded.critic_opt.m_w):
            np.testing.assert_array_equal(a, b)

    def test_training_determinism_bitwise(self):
        def run():
            agent = DdpgfdAgent(4, 3, AgentConfig(batch_size=8, hidden_sizes=(12,)), seed=3)
            rng = np.random.default_rng(1)
            data_rng = np.random.default_rng(2)
            for i in range(32):
                agent.replay.append(
                    Transition(
                        data_rng.standard_normal(4),
                        data_rng.uniform(-0.05, 0.05, 3),
                        float(i % 5 == 0),
                        data_rng.standard_normal(4),
                        i % 9 == 0,
                    )
                )
            for _ in range(20):
                agent.learn_step(rng, BOUNDS)
            return flatten_params(agent.actor).tobytes() + flatten_params(agent.critic).tobytes()

        assert run() == run()

    def test_target_lag_geometric(self):
        agent = DdpgfdAgent(3, 3, AgentConfig(batch_size=4, hidden_sizes=(8,), tau=0.1), seed=1)
        for t in agent.actor_target.weights:
            t += 1.0  # separate the target so the lag is visible
        diff0 = [t - w for t, w in zip(agent.actor_target.weights, agent.actor.weights)]
        # frozen net: targets decay geometrically toward it
        from insertrl.nets import polyak_update

        for k in range(1, 5):
            polyak_update(agent.actor, agent.actor_target, 0.1)
            for d0, t, w in zip(diff0, agent.actor_target.weights, agent.actor.weights):
                np.testing.assert_allclose(t - w, 0.9**k * d0, rtol=1e-12)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AgentConfig(gamma=1.0)
        with pytest.raises(ValueError):
            AgentConfig(tau=0.0)
        with pytest.raises(ValueError):
            AgentConfig(batch_size=0)
