"""SNR bookkeeping and decode chains for the two-phase cooperative NOMA protocol.

Observers decode messages in SIC order ``1..j``. After the direct broadcast,
relays transmit in descending rank; an observer combines (MRC) every relay
copy of a message with its direct-phase copy and compares the sum against the
message's SNR threshold.

Everything here stays at SNR level: the superposed symbols and noise are
folded into ``rho`` and the channel gains.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, CooperationMode, RelayBehavior, SystemConfig


class Scheme(str, enum.Enum):
    ORTHOGONAL_MA = "orthogonal_ma"
    NON_COOPERATIVE_NOMA = "noncooperative_noma"
    COOPERATIVE_NOMA = "cooperative_noma"


ALL_SCHEMES = (Scheme.ORTHOGONAL_MA, Scheme.NON_COOPERATIVE_NOMA, Scheme.COOPERATIVE_NOMA)


def rate_thresholds(rates, mode: CooperationMode = CooperationMode.SHORT_RANGE,
                    num_users: int | None = None) -> np.ndarray:
    """Required SNR per message: ``2^R - 1``, or ``2^(R/K) - 1`` in-band."""
    rates = np.asarray(rates, dtype=float)
    if CooperationMode(mode) is CooperationMode.IN_BAND:
        return np.exp2(rates / (num_users or len(rates))) - 1.0
    return np.exp2(rates) - 1.0


def scheme_thresholds(config: SystemConfig, scheme: Scheme) -> np.ndarray:
    if scheme is Scheme.COOPERATIVE_NOMA:
        return rate_thresholds(config.target_rates, config.cooperation_mode, config.num_users)
    if scheme is Scheme.ORTHOGONAL_MA:
        # 1/K time share at full power: (1/K) log2(1 + rho h) > R
        return np.exp2(np.asarray(config.target_rates) * config.num_users) - 1.0
    return rate_thresholds(config.target_rates)


@dataclass(frozen=True)
class DecodeOutcome:
    """Decode result of one realization.

    ``success[j, k]`` (0-based, ``k <= j``) says whether user j+1 decoded
    message k+1. Entries above the diagonal are True. The orthogonal scheme
    decodes only its own slot; that result is copied along the row, so
    ``user_ok`` is always the conjunction of a row.
    """

    success: np.ndarray
    user_ok: np.ndarray
    snr_table: np.ndarray


def _check_pair(config: SystemConfig, observer: int, message: int):
    if not 1 <= message <= observer <= config.num_users:
        raise ValueError(f"need 1 <= message <= observer <= K, got ({observer}, {message})")


def snr_direct(real: ChannelRealization, config: SystemConfig, observer: int, message: int,
               rho: float | None = None) -> float:
    """Direct-phase SINR at ``observer`` for ``message`` after SIC of 1..message-1."""
    _check_pair(config, observer, message)
    rho = config.transmit_snr if rho is None else rho
    h = float(real.direct_gains[observer - 1])
    p = config.power_alloc
    interference = sum(p[message:])
    if interference == 0.0:
        return rho * h * p[message - 1]
    return h * p[message - 1] / (h * interference + 1.0 / rho)


def snr_cooperative(real: ChannelRealization, config: SystemConfig, observer: int, message: int,
                    active_relays=(), rho: float | None = None) -> float:
    """MRC-combined SINR over the direct phase and every active relay slot."""
    _check_pair(config, observer, message)
    rho = config.transmit_snr if rho is None else rho
    relays = set(active_relays)
    if any(not observer < r <= config.num_users for r in relays):
        raise ValueError(f"relays must be better-ranked than user {observer}, got {sorted(relays)}")
    total = snr_direct(real, config, observer, message, rho)
    for r in sorted(relays):
        g = float(real.inter_user_gains[r - 1, observer - 1])
        q = config.relay_alloc[r]
        interference = sum(q[message:r - 1])
        if interference == 0.0:
            total += rho * g * q[message - 1]
        else:
            total += g * q[message - 1] / (g * interference + 1.0 / rho)
    return total


def _inverse(rho, gains):
    with np.errstate(divide="ignore"):
        return 1.0 / (rho * gains)


def direct_snr_batch(h: np.ndarray, config: SystemConfig, rho: float) -> np.ndarray:
    """Direct-phase SINR for every (observer, message) pair: shape (N, K, K).

    Written as ``p_k^2 / (tail_k + 1/(rho h))`` so zero and infinite gains
    give 0 and the interference ceiling without NaNs.
    """
    inv = _inverse(rho, h)
    with np.errstate(divide="ignore"):
        snr = config.p_sq / (config.p_tail + inv[:, :, None])
    return np.tril(snr)


def decode_batch(h: np.ndarray, g: np.ndarray | None, config: SystemConfig, scheme: Scheme,
                 rho: float | None = None):
    """Vectorized decode over N realizations.

    Returns ``(success, user_ok, snr)`` with shapes (N, K, K), (N, K), (N, K, K).
    """
    scheme = Scheme(scheme)
    rho = config.transmit_snr if rho is None else rho
    n, K = h.shape
    eps = scheme_thresholds(config, scheme)

    if scheme is Scheme.ORTHOGONAL_MA:
        snr = np.zeros((n, K, K))
        idx = np.arange(K)
        snr[:, idx, idx] = rho * h
        own = rho * h > eps
        success = np.broadcast_to(own[:, :, None], (n, K, K)) | np.triu(np.ones((K, K), bool), 1)
        return success, own, snr

    snr = direct_snr_batch(h, config, rho)
    upper = np.triu(np.ones((K, K), dtype=bool), 1)
    if scheme is Scheme.NON_COOPERATIVE_NOMA:
        success = (snr > eps) | upper
        return success, success.all(axis=2), snr

    q_sq, q_tail = config.relay_tables()
    genie = config.relay_behavior is RelayBehavior.GENIE_AIDED
    success = np.ones((n, K, K), dtype=bool)
    ok = np.ones((n, K), dtype=bool)
    for j in range(K - 1, -1, -1):
        row = snr[:, j, : j + 1]
        for r in range(j + 1, K):
            inv = _inverse(rho, g[:, r, j])
            with np.errstate(divide="ignore"):
                term = q_sq[r, : j + 1] / (q_tail[r, : j + 1] + inv[:, None])
            if not genie:
                term = np.where(ok[:, r, None], term, 0.0)
            row += term
        success[:, j, : j + 1] = row > eps[: j + 1]
        ok[:, j] = success[:, j].all(axis=1)
    return success, ok, snr


def evaluate_decode(real: ChannelRealization, config: SystemConfig, scheme: Scheme,
                    rho: float | None = None) -> DecodeOutcome:
    h = np.asarray(real.direct_gains, dtype=float)[None, :]
    g = np.asarray(real.inter_user_gains, dtype=float)[None, :, :]
    success, ok, snr = decode_batch(h, g, config, scheme, rho)
    return DecodeOutcome(success=success[0], user_ok=ok[0], snr_table=snr[0])


def pair_rates_tdma(gain_m, gain_n, rho):
    """Half-slot TDMA rates (bits per channel use) for a user pair."""
    if np.any(np.asarray(gain_m) < 0) or np.any(np.asarray(gain_n) < 0) or not rho > 0:
        raise ValueError("gains must be >= 0 and rho > 0")
    return 0.5 * np.log2(1.0 + rho * gain_m), 0.5 * np.log2(1.0 + rho * gain_n)


def pair_rates_noma(gain_m, gain_n, rho, p_m_sq, p_n_sq):
    """Two-user NOMA rates; user m is the weaker one and gets more power."""
    if np.any(np.asarray(gain_m) > np.asarray(gain_n)):
        raise ValueError("pairing requires gain_m <= gain_n")
    if abs(p_m_sq + p_n_sq - 1.0) > 1e-9 or p_m_sq < p_n_sq or p_n_sq < 0:
        raise ValueError(f"need p_m^2 >= p_n^2 >= 0 summing to 1, got ({p_m_sq}, {p_n_sq})")
    x = rho * np.asarray(gain_m, dtype=float)
    rate_m = np.log2(1.0 + x * p_m_sq / (x * p_n_sq + 1.0))
    rate_n = np.log2(1.0 + rho * p_n_sq * np.asarray(gain_n, dtype=float))
    return rate_m, rate_n
