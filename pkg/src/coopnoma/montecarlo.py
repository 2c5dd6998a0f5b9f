"""Monte Carlo experiments: outage sweeps, outage-capacity search, bound checks.

Gains are drawn once per block and reused across every SNR point and scheme
of a sweep (common random numbers), so scheme comparisons are paired.
Aggregation is integer counting, hence exact for any thread count.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .channel import RelayBehavior, SystemConfig, db_to_linear, sample_block
from .outage import OutageFloorError, outage_union_bound
from .parallel import map_blocks
from .protocol import ALL_SCHEMES, Scheme, decode_batch

log = logging.getLogger(__name__)

Z95 = float(stats.norm.ppf(0.975))


def wilson_interval(failures, trials, z: float = Z95):
    """Wilson score interval ``(center, halfwidth)`` for a binomial proportion."""
    k = np.asarray(failures, dtype=float)
    n = float(trials)
    p = k / n
    denom = 1.0 + z**2 / n
    center = (p + z**2 / (2 * n)) / denom
    half = z / denom * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2))
    return center, half


def default_decoder(h, g, config, scheme, rho):
    return decode_batch(h, g, config, scheme, rho)[1]


@dataclass(frozen=True)
class SweepSpec:
    config: SystemConfig
    snr_db: tuple[float, ...]
    trials: int
    seed: int
    schemes: tuple[Scheme, ...] = ALL_SCHEMES

    def __post_init__(self):
        snr = tuple(float(x) for x in self.snr_db)
        if any(b <= a for a, b in zip(snr, snr[1:])):
            raise ValueError("SNR grid must be strictly ascending")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "snr_db", snr)
        object.__setattr__(self, "schemes", tuple(Scheme(s) for s in self.schemes))


@dataclass(frozen=True)
class OutageEstimate:
    """Failure counts per (scheme, SNR point, user) with derived estimates.

    ``overall_failures`` counts trials where at least one user failed; the
    independent-composition figure built from per-user marginals is
    :attr:`overall_product`.
    """

    schemes: tuple[Scheme, ...]
    snr_db: np.ndarray
    trials: int
    seed: int
    failures: np.ndarray  # (S, P, K) int
    overall_failures: np.ndarray  # (S, P) int

    @property
    def outage(self) -> np.ndarray:
        return self.failures / self.trials

    @property
    def halfwidth(self) -> np.ndarray:
        return wilson_interval(self.failures, self.trials)[1]

    @property
    def stderr(self) -> np.ndarray:
        p = self.outage
        return np.sqrt(p * (1 - p) / self.trials)

    @property
    def overall(self) -> np.ndarray:
        return self.overall_failures / self.trials

    @property
    def overall_stderr(self) -> np.ndarray:
        p = self.overall
        return np.sqrt(p * (1 - p) / self.trials)

    @property
    def overall_halfwidth(self) -> np.ndarray:
        return wilson_interval(self.overall_failures, self.trials)[1]

    @property
    def overall_product(self) -> np.ndarray:
        return 1.0 - np.prod(1.0 - self.outage, axis=2)

    @property
    def below_resolution(self) -> np.ndarray:
        """Cells with no failures: the outage is below ``1/trials``."""
        return self.failures == 0

    def index(self, scheme) -> int:
        return self.schemes.index(Scheme(scheme))

    def user_curve(self, scheme, user: int) -> np.ndarray:
        return self.outage[self.index(scheme), :, user - 1]


def run_outage_sweep(spec: SweepSpec, threads: int | None = 1,
                     decoder=default_decoder) -> OutageEstimate:
    cfg = spec.config
    K = cfg.num_users
    rhos = db_to_linear(spec.snr_db) if spec.snr_db else np.zeros(0)
    needs_inter = Scheme.COOPERATIVE_NOMA in spec.schemes and K > 1
    shape = (len(spec.schemes), len(rhos))

    def block_counts(block, size):
        h, g = sample_block(cfg, spec.seed, block, size, inter=needs_inter)
        fails = np.zeros(shape + (K,), dtype=np.int64)
        overall = np.zeros(shape, dtype=np.int64)
        for s, scheme in enumerate(spec.schemes):
            for p, rho in enumerate(rhos):
                ok = decoder(h, g, cfg, scheme, rho)
                fails[s, p] = (~ok).sum(axis=0)
                overall[s, p] = (~ok.all(axis=1)).sum()
        return fails, overall

    fails = np.zeros(shape + (K,), dtype=np.int64)
    overall = np.zeros(shape, dtype=np.int64)
    if rhos.size:
        for f, o in map_blocks(block_counts, spec.trials, threads):
            fails += f
            overall += o
    return OutageEstimate(spec.schemes, np.asarray(spec.snr_db), spec.trials, spec.seed,
                          fails, overall)


class BracketError(ValueError):
    def __init__(self, message, low_outage, high_outage):
        super().__init__(message)
        self.low_outage, self.high_outage = low_outage, high_outage


@dataclass(frozen=True)
class CapacityEstimate:
    scheme: Scheme
    snr_db: float
    capacity: float  # largest common rate meeting the target, BPCU
    target_outage: float
    tolerance: float
    outage_at_capacity: float
    probes: list = field(default_factory=list, compare=False)


def common_rate_outage(config: SystemConfig, scheme: Scheme, rate: float, trials: int,
                       seed: int, threads: int | None = 1) -> float:
    """Overall outage when every user targets ``rate``."""
    cfg = config.replace(target_rates=(rate,) * config.num_users)
    spec = SweepSpec(cfg, (config.snr_db,), trials, seed, (scheme,))
    return float(run_outage_sweep(spec, threads).overall[0, 0])


def run_capacity_search(config: SystemConfig, scheme: Scheme, snr_db: float,
                        target_outage: float, trials: int, seed: int,
                        rate_bracket=(1e-3, 12.0), tolerance: float = 0.01,
                        threads: int | None = 1) -> CapacityEstimate:
    """Bisection on the common rate; each probe reuses ``seed``."""
    if not 0 < target_outage <= 1:
        raise ValueError("target_outage must lie in (0, 1]")
    lo, hi = map(float, rate_bracket)
    if not 0 < lo < hi:
        raise ValueError(f"bad rate bracket {rate_bracket}")
    scheme = Scheme(scheme)
    cfg = config.replace(transmit_snr=float(db_to_linear(snr_db)))
    probes = []

    def outage(rate):
        o = common_rate_outage(cfg, scheme, rate, trials, seed, threads)
        probes.append((rate, o))
        return o

    o_hi = outage(hi)
    if o_hi <= target_outage:
        return CapacityEstimate(scheme, snr_db, hi, target_outage, tolerance, o_hi, probes)
    o_lo = outage(lo)
    if o_lo > target_outage:
        raise BracketError(
            f"outage {o_lo:.4g} at R={lo:g} and {o_hi:.4g} at R={hi:g} do not straddle "
            f"target {target_outage:g}", o_lo, o_hi)
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        o_mid = outage(mid)
        if o_mid <= target_outage:
            lo, o_lo = mid, o_mid
        else:
            hi = mid
    log.debug("%s @ %.1f dB: capacity %.4f after %d probes", scheme.value, snr_db, lo, len(probes))
    return CapacityEstimate(scheme, snr_db, lo, target_outage, tolerance, o_lo, probes)


@dataclass(frozen=True)
class BoundRow:
    snr_db: float
    user: int
    simulated: float
    stderr: float
    bound_exact: float
    bound_high_snr: float  # nan when the threshold sits on the outage floor
    floor: bool

    @property
    def violation(self) -> bool:
        return self.bound_exact < self.simulated - 3.0 * self.stderr


def run_bound_validation(spec: SweepSpec, threads: int | None = 1,
                         direct_cdf: str = "order_statistic") -> list[BoundRow]:
    """Simulated genie-aided outage next to the analytic union bounds."""
    cfg = spec.config.replace(relay_behavior=RelayBehavior.GENIE_AIDED)
    sim_spec = SweepSpec(cfg, spec.snr_db, spec.trials, spec.seed, (Scheme.COOPERATIVE_NOMA,))
    est = run_outage_sweep(sim_spec, threads)
    rows = []
    for p, db in enumerate(est.snr_db):
        rho = float(db_to_linear(db))
        for user in range(1, cfg.num_users + 1):
            exact = outage_union_bound(cfg, user, "exact_factors", rho, direct_cdf)
            try:
                approx = outage_union_bound(cfg, user, "high_snr", rho, direct_cdf)
                floor = False
            except OutageFloorError:
                approx, floor = float("nan"), True
            rows.append(BoundRow(float(db), user, float(est.outage[0, p, user - 1]),
                                 float(est.stderr[0, p, user - 1]), exact, approx, floor))
    return rows
