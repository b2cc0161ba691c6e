"""PPO with a diagonal-Gaussian MLP policy, written against numpy only.

Networks are two-hidden-layer (64, 64) tanh MLPs with manual backprop; the
action distribution keeps a state-independent log standard deviation per
dimension.  Advantages come from generalized advantage estimation and are
normalized per update batch; the update is the clipped surrogate objective
with a value-function term, an optional entropy bonus, and global-norm
gradient clipping.

Optimizer (adaptive moments, bias-corrected)::

    m <- beta1 m + (1 - beta1) g        v <- beta2 v + (1 - beta2) g^2
    mh = m / (1 - beta1^t)              vh = v / (1 - beta2^t)
    theta <- theta - lr * mh / (sqrt(vh) + 1e-8)

with beta1 = 0.9, beta2 = 0.999.  All randomness flows from a single seed
through spawned generator streams, so single-worker training is exactly
reproducible.
"""

import base64
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["PpoConfig", "Mlp", "GaussianPolicy", "Adam", "RolloutBuffer",
           "compute_gae", "collect_rollout", "ppo_loss_and_grads",
           "ppo_update", "train", "save_policy", "load_policy",
           "TrainLogRow", "TRAIN_LOG_COLUMNS"]

TRAIN_LOG_COLUMNS = ["iteration", "env_steps", "mean_ep_reward",
                     "policy_loss", "value_loss", "entropy", "kl",
                     "clip_fraction"]


@dataclass(frozen=True)
class PpoConfig:
    total_steps: int = 200_000
    horizon: int = 2048
    epochs: int = 10
    minibatch: int = 64
    clip_eps: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    learning_rate: float = 3e-4
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    seed: int = 0
    obs_scale: float = 0.1
    init_action_std: float = 0.0  # 0 = quarter of the action range
    hidden: tuple = (64, 64)
    checkpoint_every: int = 0  # iterations; 0 = final only

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0 and 0.0 < self.lam <= 1.0):
            raise ValueError("gamma and lambda must lie in (0, 1]")
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip epsilon must lie in (0, 1)")
        if self.horizon < 1 or self.minibatch < 1 or self.epochs < 1:
            raise ValueError("horizon, minibatch and epochs must be >= 1")


class Mlp:
    """Tanh MLP with cached forward and manual backward."""

    def __init__(self, sizes, rng, out_scale: float = 1.0):
        self.weights = []
        self.biases = []
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            scale = math.sqrt(2.0 / (a + b))
            if i == len(sizes) - 2:
                scale *= out_scale
            self.weights.append(rng.normal(0.0, scale, size=(a, b)))
            self.biases.append(np.zeros(b))

    def forward(self, x):
        """Returns (output, cache) for a (B, in) batch."""
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.tanh(z)
            acts.append(h)
        return h, acts

    def backward(self, dout, cache):
        """Gradients for a cached forward pass.

        Returns (weight grads, bias grads, input grad).
        """
        dw = [None] * len(self.weights)
        db = [None] * len(self.biases)
        grad = dout
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            h_out = cache[i + 1]
            if i != last:
                grad = grad * (1.0 - h_out * h_out)
            h_in = cache[i]
            dw[i] = h_in.T @ grad
            db[i] = grad.sum(axis=0)
            grad = grad @ self.weights[i].T
        return dw, db, grad

    def params(self):
        return self.weights + self.biases

    def set_params(self, arrays):
        k = len(self.weights)
        self.weights = [np.asarray(a, float) for a in arrays[:k]]
        self.biases = [np.asarray(a, float) for a in arrays[k:]]


class GaussianPolicy:
    """Policy mean MLP + state-independent log-std, plus a value MLP."""

    def __init__(self, obs_size: int, act_size: int, cfg: PpoConfig,
                 action_low=None, action_high=None):
        self.obs_size = obs_size
        self.act_size = act_size
        self.obs_scale = cfg.obs_scale
        ss = np.random.SeedSequence(cfg.seed)
        pi_seed, v_seed = ss.spawn(2)
        self.pi = Mlp((obs_size, *cfg.hidden, act_size),
                      np.random.Generator(np.random.PCG64(pi_seed)),
                      out_scale=0.01)
        self.vf = Mlp((obs_size, *cfg.hidden, 1),
                      np.random.Generator(np.random.PCG64(v_seed)))
        if cfg.init_action_std > 0.0:
            init_std = np.full(act_size, cfg.init_action_std)
        elif action_low is not None and action_high is not None:
            init_std = (np.asarray(action_high) - np.asarray(action_low)) / 4.0
        else:
            init_std = np.ones(act_size)
        self.log_std = np.log(init_std).astype(float)
        self.action_low = None if action_low is None \
            else np.asarray(action_low, float)
        self.action_high = None if action_high is None \
            else np.asarray(action_high, float)
        # critic regresses returns / value_scale; keeps the value-loss
        # gradients commensurate with the policy gradient under the shared
        # global-norm clip even when raw returns are in the thousands
        self.value_scale = 1.0
        self._value_scale_set = False

    # -- inference -------------------------------------------------------
    def mean_value(self, obs):
        x = np.atleast_2d(obs) * self.obs_scale
        mean, _ = self.pi.forward(x)
        val, _ = self.vf.forward(x)
        return mean, val[:, 0] * self.value_scale

    def act(self, obs, rng):
        """Sample an action; returns (action, logp, value)."""
        mean, val = self.mean_value(obs)
        std = np.exp(self.log_std)
        noise = rng.standard_normal(self.act_size)
        action = mean[0] + std * noise
        logp = self.log_prob(mean, action[None, :])[0]
        return action, float(logp), float(val[0])

    def act_deterministic(self, obs):
        mean, _ = self.mean_value(obs)
        a = mean[0]
        if self.action_low is not None:
            a = np.clip(a, self.action_low, self.action_high)
        return a

    def value(self, obs) -> float:
        _, val = self.mean_value(obs)
        return float(val[0])

    def log_prob(self, mean, actions):
        std = np.exp(self.log_std)
        z = (actions - mean) / std
        return (-0.5 * (z * z).sum(axis=1) - self.log_std.sum()
                - 0.5 * self.act_size * math.log(2.0 * math.pi))

    def entropy(self) -> float:
        return float(self.log_std.sum()
                     + 0.5 * self.act_size * math.log(2.0 * math.pi * math.e))

    # -- parameter plumbing ------------------------------------------------
    def params(self):
        return self.pi.params() + [self.log_std] + self.vf.params()

    def set_params(self, arrays):
        n_pi = len(self.pi.params())
        self.pi.set_params(arrays[:n_pi])
        self.log_std = np.asarray(arrays[n_pi], float)
        self.vf.set_params(arrays[n_pi + 1:])

    def flat_params(self):
        return np.concatenate([p.ravel() for p in self.params()])

    def set_flat_params(self, flat):
        arrays = []
        k = 0
        for p in self.params():
            arrays.append(np.asarray(flat[k:k + p.size],
                                     float).reshape(p.shape))
            k += p.size
        self.set_params(arrays)


class Adam:
    def __init__(self, shapes, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params, grads):
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        out = []
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            out.append(p - self.lr * (m / b1c) / (np.sqrt(v / b2c)
                                                  + self.eps))
        return out


@dataclass
class RolloutBuffer:
    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray        # length T + 1 (bootstrap appended)
    terminals: np.ndarray
    advantages: np.ndarray = field(default=None)
    returns: np.ndarray = field(default=None)

    def __len__(self):
        return self.rewards.shape[0]


def compute_gae(rewards, values, terminals, gamma: float, lam: float):
    """Reverse-recursion advantage estimates.

    ``values`` must carry one bootstrap entry beyond the rewards.  A terminal
    flag cuts both the bootstrap and the recursion tail.
    Returns (advantages, returns).
    """
    rewards = np.asarray(rewards, float)
    values = np.asarray(values, float)
    terminals = np.asarray(terminals, float)
    t_len = rewards.shape[0]
    if values.shape[0] != t_len + 1 or terminals.shape[0] != t_len:
        raise ValueError("misaligned rollout arrays")
    adv = np.zeros(t_len)
    acc = 0.0
    for t in range(t_len - 1, -1, -1):
        nonterm = 1.0 - terminals[t]
        delta = rewards[t] + gamma * nonterm * values[t + 1] - values[t]
        acc = delta + gamma * lam * nonterm * acc
        adv[t] = acc
    return adv, adv + values[:-1]


def collect_rollout(env, policy: GaussianPolicy, horizon: int, rng,
                    obs0=None):
    """Gather a fixed-horizon on-policy batch.

    Episodes are stitched; terminals are flagged so GAE never leaks value
    across boundaries.  Returns (buffer, final obs, completed episode
    returns, completed episode infos).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    obs_size = env.observation_size
    act_size = env.action_size
    obs_b = np.zeros((horizon, obs_size))
    act_b = np.zeros((horizon, act_size))
    logp_b = np.zeros(horizon)
    rew_b = np.zeros(horizon)
    val_b = np.zeros(horizon + 1)
    term_b = np.zeros(horizon)
    episode_returns = []
    episode_infos = []

    if obs0 is None:
        obs, _ = env.reset()
        ep_ret = 0.0
    else:
        obs, ep_ret = obs0
    for t in range(horizon):
        action, logp, value = policy.act(obs, rng)
        next_obs, reward, done, info = env.step(action)
        obs_b[t] = obs
        act_b[t] = action
        logp_b[t] = logp
        rew_b[t] = reward
        val_b[t] = value
        term_b[t] = 1.0 if done else 0.0
        ep_ret += reward
        if done:
            episode_returns.append(ep_ret)
            episode_infos.append(info)
            next_obs, _ = env.reset()
            ep_ret = 0.0
        obs = next_obs
    val_b[horizon] = policy.value(obs)
    buf = RolloutBuffer(obs_b, act_b, logp_b, rew_b, val_b, term_b)
    return buf, (obs, ep_ret), episode_returns, episode_infos


def ppo_loss_and_grads(policy: GaussianPolicy, obs, actions, logp_old,
                       advantages, returns, cfg: PpoConfig):
    """Clipped-surrogate loss with value and entropy terms, plus gradients.

    Returns (stats dict, grads aligned with policy.params()).
    """
    batch = obs.shape[0]
    x = obs * policy.obs_scale
    mean, pi_cache = policy.pi.forward(x)
    vpred_2d, v_cache = policy.vf.forward(x)
    vpred = vpred_2d[:, 0]

    std = np.exp(policy.log_std)
    z = (actions - mean) / std
    logp = (-0.5 * (z * z).sum(axis=1) - policy.log_std.sum()
            - 0.5 * policy.act_size * math.log(2.0 * math.pi))
    ratio = np.exp(logp - logp_old)
    lo = 1.0 - cfg.clip_eps
    hi = 1.0 + cfg.clip_eps
    s1 = ratio * advantages
    s2 = np.clip(ratio, lo, hi) * advantages
    pg_loss = -np.minimum(s1, s2).mean()
    v_err = vpred - returns / policy.value_scale
    v_loss = 0.5 * (v_err * v_err).mean()
    ent = policy.entropy()
    loss = pg_loss + cfg.value_coef * v_loss - cfg.entropy_coef * ent

    if not math.isfinite(loss):
        raise FloatingPointError(
            f"non-finite PPO loss (pg={pg_loss!r}, v={v_loss!r}); "
            "advantages or network outputs diverged")

    # d loss / d logp: gradient flows only where the unclipped branch is
    # the active minimum
    active = (s1 <= s2).astype(float)
    dlogp = -(active * ratio * advantages) / batch
    # mean-head and log-std chain
    dmean = dlogp[:, None] * (z / std)
    dlog_std = (dlogp[:, None] * (z * z - 1.0)).sum(axis=0)
    dlog_std -= cfg.entropy_coef * np.ones(policy.act_size)
    dvpred = cfg.value_coef * (v_err / batch)

    pi_dw, pi_db, _ = policy.pi.backward(dmean, pi_cache)
    v_dw, v_db, _ = policy.vf.backward(dvpred[:, None], v_cache)
    grads = pi_dw + pi_db + [dlog_std] + v_dw + v_db

    stats = {
        "loss": float(loss),
        "policy_loss": float(pg_loss),
        "value_loss": float(v_loss),
        "entropy": float(ent),
        "kl": float(np.mean(logp_old - logp)),
        "clip_fraction": float(np.mean((np.abs(ratio - 1.0)
                                        > cfg.clip_eps).astype(float))),
    }
    return stats, grads


def _clip_global_norm(grads, max_norm: float):
    total = 0.0
    for g in grads:
        total += float((g * g).sum())
    norm = math.sqrt(total)
    if max_norm > 0.0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        grads = [g * scale for g in grads]
    return grads, norm


def normalize_advantages(adv):
    mean = adv.mean()
    std = adv.std()
    return (adv - mean) / max(std, 1e-8)


def ppo_update(policy: GaussianPolicy, buf: RolloutBuffer, cfg: PpoConfig,
               adam: Adam, rng):
    """Epochs of shuffled minibatch updates over one rollout."""
    t_len = len(buf)
    adv, ret = compute_gae(buf.rewards, buf.values, buf.terminals,
                           cfg.gamma, cfg.lam)
    buf.advantages = normalize_advantages(adv) if t_len > 1 else adv
    buf.returns = ret
    scale = max(float(ret.std()), 1e-2)
    if not policy._value_scale_set:
        policy.value_scale = scale
        policy._value_scale_set = True
    else:
        policy.value_scale = 0.9 * policy.value_scale + 0.1 * scale
    last_stats = None
    for _ in range(cfg.epochs):
        order = rng.permutation(t_len)
        for lo in range(0, t_len, cfg.minibatch):
            idx = order[lo:lo + cfg.minibatch]
            stats, grads = ppo_loss_and_grads(
                policy, buf.obs[idx], buf.actions[idx], buf.log_probs[idx],
                buf.advantages[idx], buf.returns[idx], cfg)
            grads, _ = _clip_global_norm(grads, cfg.max_grad_norm)
            new_params = adam.step(policy.params(), grads)
            policy.set_params(new_params)
            # keep exploration finite
            np.clip(policy.log_std, -6.0, 4.0, out=policy.log_std)
            last_stats = stats
    return last_stats


@dataclass(frozen=True)
class TrainLogRow:
    iteration: int
    env_steps: int
    mean_ep_reward: float
    policy_loss: float
    value_loss: float
    entropy: float
    kl: float
    clip_fraction: float

    def astuple(self):
        return (self.iteration, self.env_steps, self.mean_ep_reward,
                self.policy_loss, self.value_loss, self.entropy, self.kl,
                self.clip_fraction)


def train(env_factory, cfg: PpoConfig, on_iteration=None):
    """Full training loop: collect, estimate advantages, update, log.

    ``env_factory(seed)`` builds a fresh environment.  Returns (policy,
    learning-curve rows, list of all completed episode returns).
    """
    ss = np.random.SeedSequence(cfg.seed)
    env_seed_ss, act_ss, shuffle_ss = ss.spawn(3)
    env = env_factory(int(env_seed_ss.generate_state(1)[0] % (2 ** 31)))
    act_rng = np.random.Generator(np.random.PCG64(act_ss))
    shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_ss))

    policy = GaussianPolicy(env.observation_size, env.action_size, cfg,
                            env.action_low, env.action_high)
    adam = Adam([p.shape for p in policy.params()], cfg.learning_rate)

    iterations = max(1, -(-cfg.total_steps // cfg.horizon))
    curve = []
    all_episode_returns = []
    carry = None
    env_steps = 0
    last_mean = math.nan
    for it in range(1, iterations + 1):
        buf, carry, ep_returns, _ = collect_rollout(env, policy, cfg.horizon,
                                                    act_rng, obs0=carry)
        env_steps += len(buf)
        stats = ppo_update(policy, buf, cfg, adam, shuffle_rng)
        all_episode_returns.extend(ep_returns)
        if ep_returns:
            last_mean = float(np.mean(ep_returns))
        row = TrainLogRow(it, env_steps, last_mean, stats["policy_loss"],
                          stats["value_loss"], stats["entropy"], stats["kl"],
                          stats["clip_fraction"])
        curve.append(row)
        if on_iteration is not None:
            on_iteration(it, iterations, policy, row)
    return policy, curve, all_episode_returns


# ---------------------------------------------------------------------------
# checkpoints: versioned JSON tensor dumps with shape metadata
# ---------------------------------------------------------------------------

_PARAM_NAMES = None  # parameters are positional; names are generated


def _encode_array(a):
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape),
            "dtype": "float64",
            "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode_array(d):
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(d["shape"]).copy()


def save_policy(path, policy: GaussianPolicy, meta: dict):
    doc = {
        "format_version": 1,
        "meta": dict(meta),
        "obs_size": policy.obs_size,
        "act_size": policy.act_size,
        "obs_scale": policy.obs_scale,
        "value_scale": policy.value_scale,
        "action_low": None if policy.action_low is None
        else policy.action_low.tolist(),
        "action_high": None if policy.action_high is None
        else policy.action_high.tolist(),
        "params": [_encode_array(p) for p in policy.params()],
    }
    from softsnake.outputs import atomic_write_text
    atomic_write_text(path, json.dumps(doc, sort_keys=True))


def load_policy(path):
    """Returns (policy, meta)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != 1:
        raise ValueError(f"unsupported checkpoint format in {path}")
    meta = doc["meta"]
    cfg = PpoConfig(seed=int(meta.get("seed", 0)),
                    obs_scale=float(doc["obs_scale"]),
                    hidden=tuple(meta.get("hidden", (64, 64))))
    low = doc["action_low"]
    high = doc["action_high"]
    policy = GaussianPolicy(int(doc["obs_size"]), int(doc["act_size"]), cfg,
                            None if low is None else np.array(low),
                            None if high is None else np.array(high))
    policy.set_params([_decode_array(d) for d in doc["params"]])
    policy.value_scale = float(doc.get("value_scale", 1.0))
    policy._value_scale_set = True
    return policy, meta
