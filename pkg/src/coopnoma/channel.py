"""Rayleigh-fading channel draws for a K-user downlink with ordered users.

Direct gains ``|h_k|^2`` are unit-mean exponentials sorted ascending, so user 1
is the weakest. Inter-user gains ``|g_{j,k}|^2`` exist only for ``j > k``
(better users relay to worse ones) and are stored in a ``K x K`` array whose
strictly lower triangle is meaningful; the rest is zero.

User indices in the public API are 1-based; arrays are 0-based.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

#: Trials per random block. Trial ``t`` lives in block ``t // BLOCK_SIZE``;
#: every block owns a generator spawned from the master seed, which is what
#: makes results independent of the worker count.
BLOCK_SIZE = 1 << 15

_SUM_TOL = 1e-9


class CooperationMode(str, enum.Enum):
    """How the cooperative phase is carried."""

    SHORT_RANGE = "short_range"  # out-of-band link, no rate penalty
    IN_BAND = "in_band"  # K cellular slots per frame, rates divided by K


class RelayBehavior(str, enum.Enum):
    DECODE_AND_FORWARD = "decode_and_forward"
    GENIE_AIDED = "genie_aided"


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    return 10.0 * np.log10(np.asarray(lin, dtype=float))


def geometric_split(n: int, ratio: float = 4.0) -> tuple[float, ...]:
    """Descending fractions proportional to ``ratio**(n-1), ..., ratio, 1``.

    With ``n = 2`` and the default ratio this is ``(0.8, 0.2)``.
    """
    weights = [ratio ** (n - 1 - m) for m in range(n)]
    total = sum(weights)
    return tuple(w / total for w in weights)


def default_power_alloc(num_users: int) -> tuple[float, ...]:
    return geometric_split(num_users)


def default_relay_alloc(num_users: int) -> dict[int, tuple[float, ...]]:
    return {j: geometric_split(j - 1) for j in range(2, num_users + 1)}


def default_target_rates(num_users: int) -> tuple[float, ...]:
    return tuple(0.5 * (k + 1) for k in range(num_users))


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of one cooperative NOMA cell.

    ``power_alloc`` holds the squared coefficients ``p_1^2..p_K^2`` and
    ``relay_alloc[j]`` the squared coefficients ``q_{j,1}^2..q_{j,j-1}^2`` used
    by relaying user ``j`` (1-based, ``2 <= j <= K``). Missing schedules are
    filled with a geometric 4:1 split, which gives ``p_1^2 = 4/5`` for K = 2.
    """

    num_users: int = 2
    transmit_snr: float = 100.0
    target_rates: tuple[float, ...] | None = None
    power_alloc: tuple[float, ...] | None = None
    relay_alloc: dict[int, tuple[float, ...]] | None = None
    inter_user_gain_mean: float = 1.0
    cooperation_mode: CooperationMode = CooperationMode.SHORT_RANGE
    relay_behavior: RelayBehavior = RelayBehavior.DECODE_AND_FORWARD
    _q_tables: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        K = self.num_users
        if not isinstance(K, (int, np.integer)) or K < 1:
            raise ValueError(f"num_users must be a positive integer, got {K!r}")
        if not self.transmit_snr > 0:
            raise ValueError(f"transmit_snr must be > 0, got {self.transmit_snr}")
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731

        rates = default_target_rates(K) if self.target_rates is None else self.target_rates
        rates = tuple(float(r) for r in rates)
        if len(rates) != K or any(not r > 0 for r in rates):
            raise ValueError(f"target_rates must be {K} positive values, got {rates}")
        set_("target_rates", rates)

        p = default_power_alloc(K) if self.power_alloc is None else self.power_alloc
        p = tuple(float(x) for x in p)
        if len(p) != K:
            raise ValueError(f"power_alloc needs {K} entries, got {len(p)}")
        if abs(sum(p) - 1.0) > _SUM_TOL:
            raise ValueError(f"power_alloc must sum to 1, got {sum(p)!r}")
        if p[-1] <= 0 or any(a < b for a, b in zip(p, p[1:])):
            raise ValueError(f"power_alloc must be positive and non-increasing, got {p}")
        set_("power_alloc", p)

        q = default_relay_alloc(K) if self.relay_alloc is None else dict(self.relay_alloc)
        q = {int(j): tuple(float(x) for x in v) for j, v in q.items()}
        if set(q) != set(range(2, K + 1)):
            raise ValueError(f"relay_alloc must define users 2..{K}, got {sorted(q)}")
        for j, coeffs in q.items():
            if len(coeffs) != j - 1 or any(c <= 0 for c in coeffs):
                raise ValueError(f"relay_alloc[{j}] needs {j - 1} positive entries")
            if abs(sum(coeffs) - 1.0) > _SUM_TOL:
                raise ValueError(f"relay_alloc[{j}] must sum to 1, got {sum(coeffs)!r}")
        set_("relay_alloc", q)

        if not self.inter_user_gain_mean > 0:
            raise ValueError("inter_user_gain_mean must be > 0")
        set_("cooperation_mode", CooperationMode(self.cooperation_mode))
        set_("relay_behavior", RelayBehavior(self.relay_behavior))

    @classmethod
    def from_db(cls, snr_db: float, **kwargs) -> "SystemConfig":
        return cls(transmit_snr=float(db_to_linear(snr_db)), **kwargs)

    @property
    def snr_db(self) -> float:
        return float(linear_to_db(self.transmit_snr))

    def replace(self, **changes) -> "SystemConfig":
        fields = {
            "num_users": self.num_users,
            "transmit_snr": self.transmit_snr,
            "target_rates": self.target_rates,
            "power_alloc": self.power_alloc,
            "relay_alloc": self.relay_alloc,
            "inter_user_gain_mean": self.inter_user_gain_mean,
            "cooperation_mode": self.cooperation_mode,
            "relay_behavior": self.relay_behavior,
        }
        fields.update(changes)
        return SystemConfig(**fields)

    @property
    def p_sq(self) -> np.ndarray:
        return np.asarray(self.power_alloc)

    @property
    def p_tail(self) -> np.ndarray:
        """``sum_{m>k} p_m^2`` for each message k (interference left after SIC)."""
        p = self.p_sq
        return np.concatenate([np.cumsum(p[::-1])[::-1][1:], [0.0]])

    def relay_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """``(q_sq, q_tail)`` as ``K x K`` arrays indexed ``[relay, message]``.

        ``q_tail[r, k]`` is ``sum_{k < m < r} q_{r,m}^2``; entries with
        ``k >= r`` are zero and never used.
        """
        if self._q_tables is None:
            K = self.num_users
            q_sq = np.zeros((K, K))
            q_tail = np.zeros((K, K))
            for j, coeffs in self.relay_alloc.items():
                c = np.asarray(coeffs)
                q_sq[j - 1, : j - 1] = c
                q_tail[j - 1, : j - 1] = np.concatenate([np.cumsum(c[::-1])[::-1][1:], [0.0]])
            object.__setattr__(self, "_q_tables", (q_sq, q_tail))
        return self._q_tables


@dataclass(frozen=True)
class ChannelRealization:
    direct_gains: np.ndarray  # (K,), ascending
    inter_user_gains: np.ndarray  # (K, K), entry [j, k] valid for j > k

    @property
    def num_users(self) -> int:
        return len(self.direct_gains)

    def relay_pairs(self) -> list[tuple[int, int]]:
        """All 1-based (relay, receiver) pairs carrying an inter-user gain."""
        K = self.num_users
        return [(j + 1, k + 1) for j in range(K) for k in range(j)]


def _draw(rng: np.random.Generator, n: int, num_users: int, inter_mean: float, inter: bool):
    h = np.sort(rng.standard_exponential((n, num_users)), axis=1)
    if not inter:
        return h, None
    g = rng.standard_exponential((n, num_users, num_users)) * inter_mean
    return h, np.tril(g, -1)


def sample_realization(config: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    h, g = _draw(rng, 1, config.num_users, config.inter_user_gain_mean, inter=True)
    return ChannelRealization(direct_gains=h[0], inter_user_gains=g[0])


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block,)))


def sample_block(config: SystemConfig, seed: int, block: int, size: int = BLOCK_SIZE,
                 inter: bool = True):
    """Gains for one block of trials: ``h`` of shape (size, K), ``g`` (size, K, K).

    Rows are the first ``size`` trials of ``block``; a shorter final block is a
    prefix of the full one, so truncation never changes earlier trials.
    """
    rng = block_rng(seed, block)
    h = np.sort(rng.standard_exponential((BLOCK_SIZE, config.num_users)), axis=1)[:size]
    if not inter:
        return h, None
    g = rng.standard_exponential((BLOCK_SIZE, config.num_users, config.num_users))[:size]
    return h, np.tril(g * config.inter_user_gain_mean, -1)


def block_sizes(trials: int):
    """Yield ``(block_index, size)`` covering ``trials`` trials."""
    full, rest = divmod(trials, BLOCK_SIZE)
    for b in range(full):
        yield b, BLOCK_SIZE
    if rest:
        yield full, rest


def sample_trials(config: SystemConfig, seed: int, trials: int, inter: bool = True):
    """Gains of trials ``0..trials-1`` concatenated across blocks."""
    parts = [sample_block(config, seed, b, n, inter) for b, n in block_sizes(trials)]
    h = np.concatenate([p[0] for p in parts])
    g = np.concatenate([p[1] for p in parts]) if inter else None
    return h, g


def ordered_gain_cdf_exact(k: int, num_users: int, z):
    """CDF of the k-th smallest of ``num_users`` unit-mean exponentials."""
    if not 1 <= k <= num_users:
        raise ValueError(f"rank {k} outside 1..{num_users}")
    z = np.maximum(np.asarray(z, dtype=float), 0.0)
    F = -np.expm1(-z)
    out = np.zeros_like(z)
    for i in range(k, num_users + 1):
        out = out + math.comb(num_users, i) * F**i * np.exp(-z * (num_users - i))
    return np.clip(out, 0.0, 1.0)


def gamma_order_cdf(order: int, upper):
    """Regularized lower incomplete gamma ``P(order, upper)``.

    This is the ordered-channel CDF in the Gamma(order) form; it differs from
    :func:`ordered_gain_cdf_exact` by a combinatorial factor near the origin.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    return special.gammainc(order, np.maximum(np.asarray(upper, dtype=float), 0.0))
