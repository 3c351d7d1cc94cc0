import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imagine.train import (
    DivergenceError, GroupSample, GrpoConfig, ToyPlanEnv, ToyPolicy, UnknownTokenError, compute_advantages,
    grpo_objective, grpo_train_demo, sample_group, sft_loss, write_training_log,
)

C, L, V = 3, 4, 5


def central_diff(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f(x)
        x[idx] = old - h
        down = f(x)
        x[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def sft_batch(rng):
    return [(int(rng.integers(C)), rng.integers(V, size=int(rng.integers(1, L + 1))).tolist()) for _ in range(6)]


def random_groups(rng, old: ToyPolicy, n_groups=2, g=4):
    table = old.log_probs()
    groups = []
    for _ in range(n_groups):
        c = int(rng.integers(C))
        ys = [tuple(rng.integers(V, size=int(rng.integers(1, L + 1))).tolist()) for _ in range(g)]
        rewards = rng.normal(size=g)
        groups.append(GroupSample(c, ys, rewards, [old.token_logprobs(c, y, table) for y in ys],
                                  compute_advantages(rewards)))
    return groups


@pytest.mark.parametrize("seed", range(5))
def test_sft_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    policy = ToyPolicy(C, L, V, rng.normal(size=(C, L, V)))
    batch = sft_batch(rng)
    _, grad = sft_loss(policy, batch)
    fd = central_diff(lambda x: sft_loss(ToyPolicy(C, L, V, x), batch)[0], policy.logits.copy())
    np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-8)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("pooled", [False, True])
def test_grpo_gradient_matches_finite_differences(seed, pooled):
    rng = np.random.default_rng(100 + seed)
    old = ToyPolicy(C, L, V, rng.normal(size=(C, L, V)))
    policy = ToyPolicy(C, L, V, old.logits + 0.3 * rng.normal(size=(C, L, V)))
    groups = random_groups(rng, old)
    cfg = GrpoConfig(group_size=4, pooled_tokens=pooled)
    _, grad = grpo_objective(policy, groups, cfg)
    fd = central_diff(lambda x: grpo_objective(ToyPolicy(C, L, V, x), groups, cfg)[0], policy.logits.copy())
    np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-8)


def test_sft_loss_zero_on_deterministic_policy():
    batch = [(0, [1, 2, 3]), (2, [4, 0])]
    logits = np.zeros((C, L, V))
    for c, ys in batch:
        for t, y in enumerate(ys):
            logits[c, t, y] = 60.0
    loss, _ = sft_loss(ToyPolicy(C, L, V, logits), batch)
    assert 0.0 <= loss <= 1e-9


def test_sft_loss_uniform_policy():
    loss, _ = sft_loss(ToyPolicy(C, L, V), [(1, [0, 1, 2, 3])])
    assert loss == pytest.approx(4 * math.log(V), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sft_loss_non_negative(seed):
    rng = np.random.default_rng(seed)
    loss, _ = sft_loss(ToyPolicy(C, L, V, 5 * rng.normal(size=(C, L, V))), sft_batch(rng))
    assert loss >= 0.0


def test_unknown_token():
    p = ToyPolicy(C, L, V)
    with pytest.raises(UnknownTokenError):
        sft_loss(p, [(0, [V])])
    with pytest.raises(UnknownTokenError):
        sft_loss(p, [(C, [0])])
    with pytest.raises(UnknownTokenError):
        sft_loss(p, [(0, [0] * (L + 1))])


def test_advantages_two_point():
    np.testing.assert_array_equal(compute_advantages([0.0, 2.0]), [-1.0, 1.0])


def test_advantages_degenerate_group():
    np.testing.assert_array_equal(compute_advantages([1.0, 1.0, 1.0]), [0.0, 0.0, 0.0])


def test_advantages_hand_computed():
    # mean 0.75, deviations -1.75 / 0 / 1.75, population std 7 / sqrt(24)
    np.testing.assert_allclose(compute_advantages([-1.0, 0.75, 2.5]), [-math.sqrt(1.5), 0.0, math.sqrt(1.5)],
                               rtol=0, atol=1e-12)


def test_advantages_need_a_group():
    with pytest.raises(ValueError):
        compute_advantages([1.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=16))
def test_advantage_standardization(rewards):
    a = compute_advantages(rewards)
    if np.std(rewards) > 1e-6:
        assert abs(a.mean()) < 1e-9
        assert abs(a.std() - 1.0) < 1e-9
    else:
        assert not a.any()


def test_tokens_share_their_response_advantage():
    rng = np.random.default_rng(0)
    g = sample_group(ToyPolicy(C, L, V), 1, lambda c, y: float(sum(y)), GrpoConfig(group_size=6), rng)
    for i in range(6):
        assert set(g.token_advantages(i).tolist()) == {g.advantages[i]}


def test_ratio_one_identity():
    rng = np.random.default_rng(3)
    policy = ToyPolicy(C, L, V, rng.normal(size=(C, L, V)))
    table = policy.log_probs()
    ys = [tuple(rng.integers(V, size=L).tolist()) for _ in range(5)]
    rewards = rng.normal(size=5)
    g = GroupSample(0, ys, rewards, [policy.token_logprobs(0, y, table) for y in ys], compute_advantages(rewards))
    for eps in (0.1, 0.2, 0.5):
        j, _ = grpo_objective(policy, [g], GrpoConfig(group_size=5, clip_eps=eps))
        assert j == pytest.approx(float(np.mean(g.advantages)), abs=1e-12)
        assert abs(j) < 1e-12
    j_old, _ = grpo_objective(policy, [g], GrpoConfig(group_size=5), old_policy=policy.copy())
    assert j_old == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("ratio,adv", [(2.0, 1.0), (0.5, -1.0)])
def test_clip_saturation(ratio, adv):
    cfg = GrpoConfig(group_size=2, clip_eps=0.2)
    policy = ToyPolicy(C, L, V)
    cur = policy.token_logprobs(0, (2,))
    g = GroupSample(0, [(2,), (1,)], np.array([0.0, 0.0]), [cur - math.log(ratio), cur], np.array([adv, 0.0]))
    j, grad = grpo_objective(policy, [g], cfg)
    bound = 1.2 if adv > 0 else 0.8
    assert j == pytest.approx(bound * adv / 2, abs=1e-12)
    assert not grad.any()


def test_unclipped_region_has_gradient():
    cfg = GrpoConfig(group_size=2, clip_eps=0.2)
    policy = ToyPolicy(C, L, V)
    cur = policy.token_logprobs(0, (2,))
    g = GroupSample(0, [(2,), (1,)], np.array([0.0, 0.0]), [cur - math.log(1.1), cur], np.array([1.0, 0.0]))
    j, grad = grpo_objective(policy, [g], cfg)
    assert j == pytest.approx(1.1 / 2, abs=1e-12)
    assert grad[0, 0, 2] > 0 and grad[0, 0, 1] < 0


def test_config_validation():
    with pytest.raises(ValueError):
        GrpoConfig(group_size=1)
    with pytest.raises(ValueError):
        GrpoConfig(clip_eps=1.0)


def test_toy_env_rewards():
    env = ToyPlanEnv(seed=0)
    for c in range(env.n_contexts):
        assert env.reward(c, (0, 1, 3)) == -1.0
        best = max(env.reward(c, (a, b, d)) for a in range(3) for b in range(3) for d in range(3))
        assert best == 2.0


def test_demo_improves_over_the_control():
    env = ToyPlanEnv(n_contexts=4, seed=0)
    trained = [r["mean_reward"] for r in grpo_train_demo(env, GrpoConfig(seed=0), 200)]
    frozen = [r["mean_reward"] for r in grpo_train_demo(env, GrpoConfig(seed=0, learning_rate=0.0), 200)]
    gain = np.mean(trained[-20:]) - np.mean(trained[:20])
    flat = np.mean(frozen[-20:]) - np.mean(frozen[:20])
    assert gain >= 0.3
    assert abs(flat) < 0.2


def test_demo_is_deterministic():
    env = ToyPlanEnv(seed=0)
    assert grpo_train_demo(env, GrpoConfig(seed=5), 15) == grpo_train_demo(env, GrpoConfig(seed=5), 15)
    assert grpo_train_demo(env, GrpoConfig(seed=5), 15) != grpo_train_demo(env, GrpoConfig(seed=6), 15)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_guard():
    with pytest.raises(DivergenceError):
        grpo_train_demo(ToyPlanEnv(seed=0), GrpoConfig(learning_rate=float("inf")), 5)


def test_training_log_csv(tmp_path):
    log = grpo_train_demo(ToyPlanEnv(seed=0), GrpoConfig(), 3)
    path = tmp_path / "log.csv"
    write_training_log(log, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,mean_reward,objective,grad_norm"
    assert len(lines) == 4 and lines[1].startswith("0,")
