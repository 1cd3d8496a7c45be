"""
convergence diagnostics over draws shaped (chains, draws, dim)
"""
import logging

import numpy as np
from scipy import fft

logger = logging.getLogger(__name__)


def _split_chains(ary):
    # (chains, n) -> (2 * chains, n // 2), dropping the middle draw when n is odd
    half = ary.shape[1] // 2
    return np.vstack((ary[:, :half], ary[:, ary.shape[1] - half:]))


def _rhat(ary):
    m, n = ary.shape
    chain_mean = ary.mean(axis=1)
    within = np.mean(np.var(ary, axis=1, ddof=1))
    between = n * np.var(chain_mean, ddof=1)
    if within == 0:
        return np.nan
    return float(np.sqrt((between / within + n - 1) / n))


def _autocov(x):
    n = len(x)
    size = fft.next_fast_len(2 * n)
    centered = x - x.mean()
    freq = fft.rfft(centered, n=size)
    return fft.irfft(freq * np.conjugate(freq), n=size)[:n] / n


def _ess(ary):
    n_chain, n_draw = ary.shape
    if n_draw < 4:
        return np.nan
    acov = np.asarray([_autocov(ary[c]) for c in range(n_chain)])
    chain_mean = ary.mean(axis=1)
    mean_var = np.mean(acov[:, 0]) * n_draw / (n_draw - 1.)
    var_plus = mean_var * (n_draw - 1.) / n_draw
    if n_chain > 1:
        var_plus += np.var(chain_mean, ddof=1)
    if var_plus == 0:
        return np.nan

    rho = np.zeros(n_draw)
    rho_even = 1.
    rho[0] = rho_even
    rho_odd = 1. - (mean_var - np.mean(acov[:, 1])) / var_plus
    rho[1] = rho_odd

    # initial positive sequence
    t = 1
    while t < n_draw - 2 and rho_even + rho_odd >= 0.:
        rho_even = 1. - (mean_var - np.mean(acov[:, t + 1])) / var_plus
        rho_odd = 1. - (mean_var - np.mean(acov[:, t + 2])) / var_plus
        rho[t + 1] = rho_even
        if rho_even + rho_odd >= 0:
            rho[t + 2] = rho_odd
        t += 2
    max_t = t

    # initial monotone sequence
    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.
            rho[t + 2] = rho[t + 1]
        t += 2

    tau = -1. + 2. * np.sum(rho[:max_t]) + np.sum(rho[max_t + 1:max_t + 2])
    tau = max(tau, 1. / np.log10(n_chain * n_draw))
    return float(n_chain * n_draw / tau)


def _per_coordinate(draws, fn):
    draws = np.asarray(draws, dtype=np.float64)
    if draws.ndim == 2:
        draws = draws[:, :, None]
    return np.array([fn(_split_chains(draws[:, :, i])) for i in range(draws.shape[2])])


def split_rhat(draws):
    """
    :param draws: array (chains, draws) or (chains, draws, dim)
    :return: split R-hat per coordinate
    """
    return _per_coordinate(draws, _rhat)


def ess(draws):
    """
    effective sample size per coordinate, split chains, Geyer's initial monotone sequence estimator
    """
    return _per_coordinate(draws, _ess)


def _finite_or_none(values):
    return [float(v) if np.isfinite(v) else None for v in values]


def summarize(draws, chain_stats, rhat_threshold=1.1):
    """
    :param draws: array (chains, draws, dim)
    :param chain_stats: list of per-chain statistic dicts from the sampler
    :param rhat_threshold: coordinates above it produce a warning
    :return: JSON-ready diagnostic dict
    """
    rhat = split_rhat(draws) if draws.shape[0] * draws.shape[1] >= 4 else np.full(draws.shape[2], np.nan)
    eff = ess(draws)
    warnings = []
    high = [i for i, v in enumerate(rhat) if np.isfinite(v) and v > rhat_threshold]
    if high:
        message = 'split R-hat above %.2f for coordinates %s' % (rhat_threshold, high)
        logger.warning(message)
        warnings.append(message)
    divergences = sum(s['divergences'] for s in chain_stats)
    if divergences:
        warnings.append('%d divergent transitions after warmup' % divergences)
    finite_rhat = rhat[np.isfinite(rhat)]
    return dict(
        rhat=_finite_or_none(rhat),
        ess=_finite_or_none(eff),
        max_rhat=float(finite_rhat.max()) if len(finite_rhat) else None,
        accept_rate=[s['accept_rate'] for s in chain_stats],
        divergences=[s['divergences'] for s in chain_stats],
        step_size=[s['step_size'] for s in chain_stats],
        mean_tree_depth=[s['mean_tree_depth'] for s in chain_stats],
        warnings=warnings,
    )
