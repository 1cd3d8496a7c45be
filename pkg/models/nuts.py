"""
No-U-Turn sampler with multinomial trajectory sampling, dual-averaging step size and diagonal mass adaptation
"""
import logging
from dataclasses import dataclass

import numpy as np

from utils.utils import SamplerError

logger = logging.getLogger(__name__)

# energy error above which a trajectory is marked divergent
MAX_DELTA_ENERGY = 1000.
MIN_WINDOW = 10


class DualAveraging:
    """
    step size adaptation towards a target mean acceptance statistic
    """

    def __init__(self, step_size, target_accept, gamma=0.05, t0=10., kappa=0.75):
        self.mu = np.log(10. * step_size)
        self.target_accept = target_accept
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.t = 0
        self.h_bar = 0.
        self.log_step_bar = 0.

    def update(self, accept_stat):
        self.t += 1
        eta = 1. / (self.t + self.t0)
        self.h_bar = (1. - eta) * self.h_bar + eta * (self.target_accept - accept_stat)
        log_step = self.mu - np.sqrt(self.t) / self.gamma * self.h_bar
        weight = self.t ** (-self.kappa)
        self.log_step_bar = weight * log_step + (1. - weight) * self.log_step_bar
        return float(np.exp(log_step))

    def final_step_size(self, fallback):
        if self.t == 0:
            return fallback
        return float(np.exp(self.log_step_bar))


def _kinetic(r, inv_mass):
    return 0.5 * np.dot(r, inv_mass * r)


def _leapfrog(theta, r, grad, step, inv_mass, log_prob_fn):
    r = r + 0.5 * step * grad
    theta = theta + step * inv_mass * r
    logp, grad = log_prob_fn(theta)
    r = r + 0.5 * step * grad
    return theta, r, logp, grad


def _joint(logp, r, inv_mass):
    h = logp - _kinetic(r, inv_mass)
    return h if np.isfinite(h) else -np.inf


def _is_turning(r_minus, r_plus, r_sum, inv_mass):
    return np.dot(inv_mass * r_plus, r_sum) <= 0 or np.dot(inv_mass * r_minus, r_sum) <= 0


def find_reasonable_step_size(theta, logp, grad, inv_mass, log_prob_fn, rng, max_iter=100):
    """
    double or halve a unit step until one leapfrog move crosses an acceptance probability of 1/2
    """
    step = 1.
    r = rng.standard_normal(len(theta)) / np.sqrt(inv_mass)
    h0 = logp - _kinetic(r, inv_mass)
    _, r1, logp1, _ = _leapfrog(theta, r, grad, step, inv_mass, log_prob_fn)
    delta = _joint(logp1, r1, inv_mass) - h0
    direction = 1 if delta > np.log(0.5) else -1
    for _ in range(max_iter):
        if not direction * delta > -direction * np.log(2.):
            break
        step = step * 2. ** direction
        if step < 1e-10 or step > 1e7:
            break
        _, r1, logp1, _ = _leapfrog(theta, r, grad, step, inv_mass, log_prob_fn)
        delta = _joint(logp1, r1, inv_mass) - h0
    return float(step)


class _Tree:
    """
    a built subtrajectory: its two edges, the multinomial proposal drawn from it and running statistics
    """
    __slots__ = ('theta_minus', 'r_minus', 'grad_minus', 'theta_plus', 'r_plus', 'grad_plus',
                 'theta_prop', 'logp_prop', 'grad_prop', 'log_weight', 'r_sum',
                 'turning', 'diverging', 'sum_accept', 'n_leapfrog')

    @classmethod
    def leaf(cls, theta, r, grad, logp, log_weight, accept, diverging):
        tree = cls()
        tree.theta_minus = tree.theta_plus = tree.theta_prop = theta
        tree.r_minus = tree.r_plus = tree.r_sum = r
        tree.grad_minus = tree.grad_plus = tree.grad_prop = grad
        tree.logp_prop = logp
        tree.log_weight = log_weight
        tree.turning = False
        tree.diverging = diverging
        tree.sum_accept = accept
        tree.n_leapfrog = 1
        return tree

    def edge(self, direction):
        if direction > 0:
            return self.theta_plus, self.r_plus, self.grad_plus
        return self.theta_minus, self.r_minus, self.grad_minus

    def extend(self, other, direction, inv_mass):
        # other was built on the `direction` side of self
        if direction > 0:
            self.theta_plus, self.r_plus, self.grad_plus = other.theta_plus, other.r_plus, other.grad_plus
        else:
            self.theta_minus, self.r_minus, self.grad_minus = other.theta_minus, other.r_minus, other.grad_minus
        self.r_sum = self.r_sum + other.r_sum
        self.sum_accept += other.sum_accept
        self.n_leapfrog += other.n_leapfrog
        self.diverging = self.diverging or other.diverging
        self.turning = other.turning or _is_turning(self.r_minus, self.r_plus, self.r_sum, inv_mass)

    def take_proposal(self, other):
        self.theta_prop, self.logp_prop, self.grad_prop = other.theta_prop, other.logp_prop, other.grad_prop


def _build_tree(theta, r, grad, direction, depth, step, h0, inv_mass, log_prob_fn, rng):
    if depth == 0:
        theta1, r1, logp1, grad1 = _leapfrog(theta, r, grad, direction * step, inv_mass, log_prob_fn)
        h1 = _joint(logp1, r1, inv_mass)
        log_weight = h1 - h0
        diverging = bool(-log_weight > MAX_DELTA_ENERGY)
        accept = float(np.exp(min(0., log_weight))) if np.isfinite(log_weight) else 0.
        return _Tree.leaf(theta1, r1, grad1, logp1, log_weight, accept, diverging)

    tree = _build_tree(theta, r, grad, direction, depth - 1, step, h0, inv_mass, log_prob_fn, rng)
    if tree.turning or tree.diverging:
        return tree
    theta_e, r_e, grad_e = tree.edge(direction)
    other = _build_tree(theta_e, r_e, grad_e, direction, depth - 1, step, h0, inv_mass, log_prob_fn, rng)
    log_weight = np.logaddexp(tree.log_weight, other.log_weight)
    if not (other.turning or other.diverging):
        # multinomial sampling within a subtree
        if np.isfinite(log_weight) and rng.uniform() < np.exp(other.log_weight - log_weight):
            tree.take_proposal(other)
    tree.log_weight = log_weight
    tree.extend(other, direction, inv_mass)
    return tree


def nuts_transition(theta, logp, grad, step, inv_mass, log_prob_fn, rng, max_tree_depth):
    """
    one NUTS iteration from theta
    :return: new (theta, logp, grad) and a dict of transition statistics
    """
    r0 = rng.standard_normal(len(theta)) / np.sqrt(inv_mass)
    h0 = logp - _kinetic(r0, inv_mass)
    if not np.isfinite(h0):
        raise SamplerError('non-finite energy at the start of a transition',
                           diagnostic={'logp': float(logp), 'step_size': float(step)})

    tree = _Tree.leaf(theta, r0, grad, logp, 0., 0., False)
    tree.n_leapfrog = 0
    depth = 0
    diverging = False
    while depth < max_tree_depth:
        direction = 1 if rng.uniform() < 0.5 else -1
        theta_e, r_e, grad_e = tree.edge(direction)
        other = _build_tree(theta_e, r_e, grad_e, direction, depth, step, h0, inv_mass, log_prob_fn, rng)
        depth += 1
        tree.sum_accept += other.sum_accept
        tree.n_leapfrog += other.n_leapfrog
        if other.diverging:
            diverging = True
            break
        if other.turning:
            break
        # biased progressive sampling favours the new subtree
        if rng.uniform() < np.exp(min(0., other.log_weight - tree.log_weight)):
            tree.take_proposal(other)
        tree.log_weight = np.logaddexp(tree.log_weight, other.log_weight)
        sum_accept, n_leapfrog = tree.sum_accept, tree.n_leapfrog
        tree.extend(other, direction, inv_mass)
        tree.sum_accept, tree.n_leapfrog = sum_accept, n_leapfrog
        if tree.turning:
            break

    info = dict(accept_stat=tree.sum_accept / max(tree.n_leapfrog, 1), diverging=diverging,
                tree_depth=depth, n_leapfrog=tree.n_leapfrog)
    return tree.theta_prop, tree.logp_prop, tree.grad_prop, info


def _regularized_variance(window):
    window = np.asarray(window)
    n = len(window)
    var = np.var(window, axis=0, ddof=1)
    return (n / (n + 5.)) * var + 1e-3 * (5. / (n + 5.))


@dataclass
class ChainResult:
    draws: np.ndarray
    accept_rate: float
    divergences: int
    warmup_divergences: int
    step_size: float
    mean_tree_depth: float
    max_depth_hits: int
    inv_mass: np.ndarray

    def stats(self):
        return dict(accept_rate=self.accept_rate, divergences=self.divergences,
                    warmup_divergences=self.warmup_divergences, step_size=self.step_size,
                    mean_tree_depth=self.mean_tree_depth, max_depth_hits=self.max_depth_hits)


def run_chain(log_prob_fn, init, warmup, n_samples, rng, target_accept=0.8, max_tree_depth=10):
    """
    :param log_prob_fn: theta -> (log density, gradient)
    :param init: starting point
    :param warmup: adaptation iterations, discarded
    :param n_samples: kept draws
    :param rng: numpy Generator owned by this chain
    :return: ChainResult
    """
    theta = np.array(init, dtype=np.float64)
    dim = len(theta)
    logp, grad = log_prob_fn(theta)
    if not np.isfinite(logp) or not np.all(np.isfinite(grad)):
        raise SamplerError('non-finite log density at the chain start', diagnostic={'logp': float(logp)})

    inv_mass = np.ones(dim)
    step = find_reasonable_step_size(theta, logp, grad, inv_mass, log_prob_fn, rng)
    adapt = DualAveraging(step, target_accept)
    window_start = warmup // 2
    window_end = warmup - min(50, warmup // 10)
    window = []

    draws = np.empty((n_samples, dim))
    accept = np.empty(n_samples)
    depths = np.empty(n_samples, dtype=np.int64)
    divergences = warmup_divergences = 0

    for it in range(warmup + n_samples):
        theta, logp, grad, info = nuts_transition(theta, logp, grad, step, inv_mass, log_prob_fn, rng,
                                                  max_tree_depth)
        if it < warmup:
            warmup_divergences += info['diverging']
            step = adapt.update(info['accept_stat'])
            if window_start <= it < window_end:
                window.append(theta)
            if it == window_end - 1 and len(window) >= MIN_WINDOW:
                inv_mass = _regularized_variance(window)
                step = find_reasonable_step_size(theta, logp, grad, inv_mass, log_prob_fn, rng)
                adapt = DualAveraging(step, target_accept)
                window = []
            if it == warmup - 1:
                step = adapt.final_step_size(step)
        else:
            k = it - warmup
            draws[k] = theta
            accept[k] = info['accept_stat']
            depths[k] = info['tree_depth']
            divergences += info['diverging']

    if divergences:
        logger.warning('%d divergent transitions after warmup', divergences)
    return ChainResult(draws=draws,
                       accept_rate=float(accept.mean()) if n_samples else float('nan'),
                       divergences=int(divergences),
                       warmup_divergences=int(warmup_divergences),
                       step_size=float(step),
                       mean_tree_depth=float(depths.mean()) if n_samples else 0.,
                       max_depth_hits=int(np.sum(depths >= max_tree_depth)),
                       inv_mass=inv_mass)
