"""User pairing: how much sum rate NOMA gains over TDMA for a chosen pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SystemConfig, sample_block
from .parallel import map_blocks
from .protocol import pair_rates_noma, pair_rates_tdma


def sum_rate_gap_exact(gain_m, gain_n, rho, p_m_sq, p_n_sq):
    """NOMA sum rate minus TDMA sum rate, in bits per channel use."""
    rate_m, rate_n = pair_rates_noma(gain_m, gain_n, rho, p_m_sq, p_n_sq)
    tdma_m, tdma_n = pair_rates_tdma(gain_m, gain_n, rho)
    return rate_m + rate_n - tdma_m - tdma_n


def gap_high_snr(gain_m, gain_n):
    """High-SNR limit of the gap; it does not depend on the power split."""
    gain_m = np.asarray(gain_m, dtype=float)
    gain_n = np.asarray(gain_n, dtype=float)
    if np.any(gain_m <= 0) or np.any(gain_n <= 0):
        raise ValueError("gap diverges for a zero channel gain")
    gap = 0.5 * (np.log2(gain_n) - np.log2(gain_m))
    return float(gap) if gap.ndim == 0 else gap


@dataclass(frozen=True)
class PairingReport:
    num_users: int
    partner: int  # the scheduled best user, always num_users
    candidates: np.ndarray  # 1-based partner indices m
    mean_tdma: np.ndarray
    mean_noma: np.ndarray
    mean_gap: np.ndarray
    gap_stderr: np.ndarray
    mean_gap_predicted: np.ndarray
    trials: int
    rho: float
    p_m_sq: float

    @property
    def rho_db(self) -> float:
        return float(10.0 * np.log10(self.rho))


def pairing_study(num_users: int, rho: float, p_m_sq: float = 0.8, trials: int = 100_000,
                  seed: int = 0, threads: int | None = 1) -> PairingReport:
    """Pair the best of ``num_users`` ordered users with each weaker user.

    Gaps are taken per trial and then averaged. The TDMA and NOMA columns are
    sums over the pair.
    """
    if num_users < 2:
        raise ValueError("pairing needs at least two users")
    p_n_sq = 1.0 - p_m_sq
    cfg = SystemConfig(num_users=num_users)
    cands = np.arange(1, num_users)

    def block_sums(block, size):
        h, _ = sample_block(cfg, seed, block, size, inter=False)
        gm, gn = h[:, :-1], h[:, -1:]
        tdma = np.add(*pair_rates_tdma(gm, gn, rho))
        noma = np.add(*pair_rates_noma(gm, gn, rho, p_m_sq, p_n_sq))
        gap = noma - tdma
        predicted = gap_high_snr(gm, gn)
        return np.stack([tdma.sum(0), noma.sum(0), gap.sum(0), predicted.sum(0), (gap**2).sum(0)])

    totals = np.zeros((5, num_users - 1))
    for part in map_blocks(block_sums, trials, threads):
        totals += part
    sums, sq = totals[:4], totals[4]
    means = sums / trials
    var = np.maximum(sq / trials - means[2] ** 2, 0.0)
    return PairingReport(
        num_users=num_users,
        partner=num_users,
        candidates=cands,
        mean_tdma=means[0],
        mean_noma=means[1],
        mean_gap=means[2],
        gap_stderr=np.sqrt(var / trials),
        mean_gap_predicted=means[3],
        trials=trials,
        rho=float(rho),
        p_m_sq=p_m_sq,
    )

