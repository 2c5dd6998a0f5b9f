"""Closed-form outage machinery for cooperative NOMA.

Every SNR summand has the shape ``z = a x / (b x + 1/rho)`` with ``x`` an
exponential gain (after folding the inter-user mean into ``a``, ``b``). Its
CDF caps at one for ``z >= a/b``: an interference ceiling that no SNR removes
and that kills the diversity gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import SystemConfig, gamma_order_cdf, ordered_gain_cdf_exact
from .protocol import Scheme, scheme_thresholds


class OutageFloorError(ValueError):
    """Threshold at or above the interference ceiling ``a/b``."""

    def __init__(self, message, k=None, i=None, user=None):
        super().__init__(message)
        self.k, self.i, self.user = k, i, user


class InsufficientTrialsError(ValueError):
    pass


@dataclass(frozen=True)
class ZSpec:
    """One summand ``a x / (b x + 1/rho)``.

    ``order`` is 1 for an unordered gain. For the direct-phase term of the
    user ranked ``order`` it is that rank; with ``num_users`` unset the CDF
    uses the Gamma(order) form, with ``num_users`` set it uses the exact
    order statistic of that rank among ``num_users`` gains.
    """

    a: float
    b: float
    rho: float
    order: int = 1
    num_users: int | None = None

    def __post_init__(self):
        if not self.a > 0 or self.b < 0 or not self.rho > 0 or self.order < 1:
            raise ValueError(f"invalid ZSpec {self}")
        if self.num_users is not None and not 1 <= self.order <= self.num_users:
            raise ValueError(f"rank {self.order} outside 1..{self.num_users}")

    @property
    def ceiling(self) -> float:
        return math.inf if self.b == 0 else self.a / self.b

    def scaled(self, mean: float) -> "ZSpec":
        """Same summand for a gain with mean ``mean`` instead of one."""
        return ZSpec(self.a * mean, self.b * mean, self.rho, self.order, self.num_users)


def _gain_argument(spec: ZSpec, z):
    with np.errstate(divide="ignore"):
        return z / (spec.rho * (spec.a - spec.b * z))


def z_cdf(spec: ZSpec, z):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be >= 0")
    capped = z >= spec.ceiling
    u = np.where(capped, 0.0, _gain_argument(spec, np.where(capped, 0.0, z)))
    if spec.num_users is not None:
        F = ordered_gain_cdf_exact(spec.order, spec.num_users, u)
    elif spec.order == 1:
        F = -np.expm1(-u)
    else:
        F = gamma_order_cdf(spec.order, u)
    out = np.where(capped, 1.0, F)
    return float(out) if out.ndim == 0 else out


def z_cdf_high_snr(spec: ZSpec, eps: float) -> float:
    """Leading power-series term of ``z_cdf(spec, eps)``.

    Uses ``u = eps / (rho (a - b eps))``, so the ratio to the exact CDF tends
    to one for ``b > 0`` as well; for ``b = 0`` this is ``eps / (rho a)``.
    """
    if eps >= spec.ceiling:
        raise OutageFloorError(
            f"eps={eps:g} >= a/b={spec.ceiling:g}: outage floor, no diversity"
        )
    u = float(_gain_argument(spec, eps))
    if spec.num_users is not None:
        return math.comb(spec.num_users, spec.order) * u**spec.order
    return u**spec.order / math.factorial(spec.order)


def coefficient_table(config: SystemConfig, user: int, rho: float | None = None,
                      direct_cdf: str = "order_statistic") -> dict[tuple[int, int], ZSpec]:
    """All summands seen by ``user`` (1-based) with every better user relaying.

    Keys are ``(k, i)``: message k, and i = 0 for the direct phase or i >= 1
    for the relay ranked ``K - i + 1``.
    """
    K = config.num_users
    if not 1 <= user <= K:
        raise ValueError(f"user {user} outside 1..{K}")
    if direct_cdf not in ("order_statistic", "gamma"):
        raise ValueError(f"unknown direct_cdf {direct_cdf!r}")
    rho = config.transmit_snr if rho is None else rho
    n = K - user
    p, tail = config.p_sq, config.p_tail
    q_sq, q_tail = config.relay_tables()
    population = K if direct_cdf == "order_statistic" else None
    table = {}
    for k in range(1, user + 1):
        table[k, 0] = ZSpec(p[k - 1], tail[k - 1], rho, order=user, num_users=population)
        for i in range(1, n + 1):
            r = K - i + 1
            spec = ZSpec(q_sq[r - 1, k - 1], q_tail[r - 1, k - 1], rho)
            table[k, i] = spec.scaled(config.inter_user_gain_mean)
    return table


def proposition_violations(config: SystemConfig, rho: float | None = None):
    """``(user, k, i, eps, ceiling)`` for every summand whose threshold hits the ceiling."""
    eps = scheme_thresholds(config, Scheme.COOPERATIVE_NOMA)
    bad = []
    for user in range(1, config.num_users + 1):
        for (k, i), spec in coefficient_table(config, user, rho).items():
            if eps[k - 1] >= spec.ceiling:
                bad.append((user, k, i, float(eps[k - 1]), spec.ceiling))
    return bad


def outage_union_bound(config: SystemConfig, user: int, mode: str = "exact_factors",
                       rho: float | None = None, direct_cdf: str = "order_statistic") -> float:
    """Union-of-products upper bound on the outage of ``user`` under genie relaying.

    ``sum_k prod_i P(z_{k,i} < eps_k)``, clipped to 1. ``direct_cdf="gamma"``
    swaps the exact order statistic of the direct gain for the Gamma form,
    which is smaller near zero by a combinatorial factor and can drop the
    result below the true outage.
    """
    if mode not in ("exact_factors", "high_snr"):
        raise ValueError(f"unknown mode {mode!r}")
    eps = scheme_thresholds(config, Scheme.COOPERATIVE_NOMA)
    terms: dict[int, float] = {}
    for (k, i), spec in coefficient_table(config, user, rho, direct_cdf).items():
        if mode == "high_snr":
            try:
                factor = z_cdf_high_snr(spec, eps[k - 1])
            except OutageFloorError as exc:
                raise OutageFloorError(
                    f"user {user}: condition eps_{k} < a/b fails for (k={k}, i={i}): {exc}",
                    k=k, i=i, user=user,
                ) from None
        else:
            factor = z_cdf(spec, eps[k - 1])
        terms[k] = terms.get(k, 1.0) * factor
    return min(1.0, sum(terms.values()))


def overall_outage(per_user) -> float:
    """Outage of any user, treating per-user outages as independent."""
    p = np.asarray(per_user, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError(f"probabilities must lie in [0, 1], got {per_user}")
    return float(1.0 - np.prod(1.0 - p))


def diversity_slope(snr_db, outage) -> float:
    """Negated least-squares slope of log10(outage) against log10(rho)."""
    x = np.asarray(snr_db, dtype=float) / 10.0
    y = np.asarray(outage, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise ValueError("need at least 3 matching (snr, outage) points")
    if np.any(np.diff(x) <= 0):
        raise ValueError("snr grid must be strictly ascending")
    if np.any(y <= 0):
        zeros = list(np.asarray(snr_db)[y <= 0])
        raise InsufficientTrialsError(f"zero outage at {zeros} dB; more trials needed")
    slope = np.polyfit(x, np.log10(y), 1)[0]
    return float(-slope)
