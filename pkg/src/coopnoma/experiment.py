"""Experiment files: flat TOML with dotted keys for per-user arrays.

Example::

    num_users = 2
    target_rates.1 = 0.5
    target_rates.2 = 1.0
    relay_alloc.2.1 = 1.0
    seed = 1
    snr_db.start = 0.0
    snr_db.stop = 40.0
    snr_db.step = 5.0

:func:`dump_experiment` writes every key explicitly and its output parses
back to an equal :class:`ExperimentFile`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import tomli

from .channel import (
    CooperationMode,
    RelayBehavior,
    SystemConfig,
    db_to_linear,
    default_power_alloc,
    default_relay_alloc,
    default_target_rates,
)
from .montecarlo import SweepSpec
from .protocol import ALL_SCHEMES, Scheme

#: Seed written by ``print-config`` when no file is given. Parsing never
#: falls back to it: a file without ``seed`` is rejected.
TEMPLATE_SEED = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentFile:
    seed: int
    num_users: int = 2
    transmit_snr_db: float = 20.0
    target_rates: tuple[float, ...] | None = None
    power_alloc: tuple[float, ...] | None = None
    relay_alloc: dict | None = None
    inter_user_gain_mean: float = 1.0
    cooperation_mode: str = CooperationMode.SHORT_RANGE.value
    relay_behavior: str = RelayBehavior.DECODE_AND_FORWARD.value
    trials: int = 100_000
    threads: int = 1
    schemes: tuple[str, ...] = tuple(s.value for s in ALL_SCHEMES)
    snr_start_db: float = 0.0
    snr_stop_db: float = 40.0
    snr_step_db: float = 5.0
    capacity_target_outage: float = 0.1
    capacity_rate_min: float = 1e-3
    capacity_rate_max: float = 12.0
    capacity_tolerance: float = 0.01
    capacity_trials: int = 200_000
    pairing_num_users: int = 10
    pairing_rho_db: float = 40.0
    pairing_p_m_sq: float = 0.8
    pairing_trials: int = 100_000
    _system: SystemConfig = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        K = self.num_users
        if self.target_rates is None:
            object.__setattr__(self, "target_rates", default_target_rates(K))
        if self.power_alloc is None:
            object.__setattr__(self, "power_alloc", default_power_alloc(K))
        if self.relay_alloc is None:
            object.__setattr__(self, "relay_alloc", default_relay_alloc(K))
        try:
            system = SystemConfig(
                num_users=K,
                transmit_snr=float(db_to_linear(self.transmit_snr_db)),
                target_rates=self.target_rates,
                power_alloc=self.power_alloc,
                relay_alloc=self.relay_alloc,
                inter_user_gain_mean=self.inter_user_gain_mean,
                cooperation_mode=self.cooperation_mode,
                relay_behavior=self.relay_behavior,
            )
            schemes = tuple(Scheme(s).value for s in self.schemes)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        # normalized copies so equality survives a dump/parse round trip
        object.__setattr__(self, "target_rates", system.target_rates)
        object.__setattr__(self, "power_alloc", system.power_alloc)
        object.__setattr__(self, "relay_alloc", system.relay_alloc)
        object.__setattr__(self, "schemes", schemes)
        object.__setattr__(self, "_system", system)
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.trials < 1 or self.capacity_trials < 1 or self.pairing_trials < 1:
            raise ConfigError("trial counts must be >= 1")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0 (0 = auto)")
        if not self.snr_step_db > 0:
            raise ConfigError("snr_db.step must be > 0")
        if not 0 < self.capacity_target_outage <= 1:
            raise ConfigError("capacity.target_outage must lie in (0, 1]")
        if self.pairing_num_users < 2:
            raise ConfigError("pairing.num_users must be >= 2")
        if not 0.5 <= self.pairing_p_m_sq <= 1:
            raise ConfigError("pairing.p_m_sq must lie in [0.5, 1]")

    @property
    def system(self) -> SystemConfig:
        return self._system

    def snr_grid(self) -> tuple[float, ...]:
        """``start, start+step, ...`` up to ``stop``; empty when stop < start."""
        if self.snr_stop_db < self.snr_start_db:
            return ()
        n = int(math.floor((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9)) + 1
        return tuple(round(self.snr_start_db + i * self.snr_step_db, 10) for i in range(n))

    def sweep_spec(self) -> SweepSpec:
        return SweepSpec(self.system, self.snr_grid(), self.trials, self.seed,
                         tuple(Scheme(s) for s in self.schemes))

    def with_overrides(self, **changes) -> "ExperimentFile":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self


# toml path -> field name, for the scalar keys
_SCALARS = {
    "seed": ("seed", int),
    "num_users": ("num_users", int),
    "transmit_snr_db": ("transmit_snr_db", float),
    "inter_user_gain_mean": ("inter_user_gain_mean", float),
    "cooperation_mode": ("cooperation_mode", str),
    "relay_behavior": ("relay_behavior", str),
    "trials": ("trials", int),
    "threads": ("threads", int),
    "snr_db.start": ("snr_start_db", float),
    "snr_db.stop": ("snr_stop_db", float),
    "snr_db.step": ("snr_step_db", float),
    "capacity.target_outage": ("capacity_target_outage", float),
    "capacity.rate_min": ("capacity_rate_min", float),
    "capacity.rate_max": ("capacity_rate_max", float),
    "capacity.tolerance": ("capacity_tolerance", float),
    "capacity.trials": ("capacity_trials", int),
    "pairing.num_users": ("pairing_num_users", int),
    "pairing.rho_db": ("pairing_rho_db", float),
    "pairing.p_m_sq": ("pairing_p_m_sq", float),
    "pairing.trials": ("pairing_trials", int),
}
_TABLES = {"snr_db", "capacity", "pairing"}


def _coerce(key, value, kind):
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    raise ConfigError(f"key '{key}': expected {kind.__name__}, got {value!r}")


def _per_user(key, value) -> tuple[float, ...]:
    """``{"1": a, "2": b}`` (dotted keys) or ``[a, b]`` -> ``(a, b)``."""
    if isinstance(value, list):
        return tuple(_coerce(f"{key}[{i}]", v, float) for i, v in enumerate(value))
    if not isinstance(value, dict):
        raise ConfigError(f"key '{key}': expected per-user entries, got {value!r}")
    try:
        idx = sorted(int(k) for k in value)
    except ValueError:
        raise ConfigError(f"key '{key}': sub-keys must be 1-based user indices") from None
    if idx != list(range(1, len(idx) + 1)):
        raise ConfigError(f"key '{key}': indices must run 1..n, got {idx}")
    return tuple(_coerce(f"{key}.{i}", value[str(i)], float) for i in idx)


def _relay_table(value):
    if not isinstance(value, dict):
        raise ConfigError(f"key 'relay_alloc': expected relay_alloc.<j>.<m> entries, got {value!r}")
    table = {}
    for j, row in value.items():
        try:
            relay = int(j)
        except ValueError:
            raise ConfigError(f"key 'relay_alloc.{j}': relay index must be an integer") from None
        table[relay] = _per_user(f"relay_alloc.{j}", row)
    return table


def parse_experiment(text: str) -> ExperimentFile:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        where = f" at line {exc.lineno}, column {exc.colno}" if hasattr(exc, "lineno") else ""
        raise ConfigError(f"parse error{where}: {getattr(exc, 'msg', exc)}") from None
    kwargs = {}
    for top, value in doc.items():
        if top == "target_rates" or top == "power_alloc":
            kwargs[top] = _per_user(top, value)
        elif top == "relay_alloc":
            kwargs[top] = _relay_table(value)
        elif top == "schemes":
            if not isinstance(value, list):
                raise ConfigError("key 'schemes': expected a list of scheme names")
            kwargs["schemes"] = tuple(_coerce("schemes", v, str) for v in value)
        elif top in _TABLES:
            if not isinstance(value, dict):
                raise ConfigError(f"key '{top}': expected {top}.<name> entries")
            for sub, v in value.items():
                path = f"{top}.{sub}"
                if path not in _SCALARS:
                    raise ConfigError(f"unknown key '{path}'")
                name, kind = _SCALARS[path]
                kwargs[name] = _coerce(path, v, kind)
        elif top in _SCALARS:
            name, kind = _SCALARS[top]
            kwargs[name] = _coerce(top, value, kind)
        else:
            raise ConfigError(f"unknown key '{top}'")
    if "seed" not in kwargs:
        raise ConfigError("missing required key 'seed'")
    return ExperimentFile(**kwargs)


def load_experiment(path) -> ExperimentFile:
    with open(path, encoding="utf-8") as fh:
        return parse_experiment(fh.read())


def _fmt(value) -> str:
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_experiment(exp: ExperimentFile) -> str:
    values = {f.name: getattr(exp, f.name) for f in fields(exp) if f.init}
    lines = []
    for path, (name, _) in _SCALARS.items():
        if path == "trials":
            lines.append("schemes = [" + ", ".join(_fmt(s) for s in exp.schemes) + "]")
        lines.append(f"{path} = {_fmt(values[name])}")
        if path == "relay_behavior":
            lines += [f"target_rates.{i} = {_fmt(v)}" for i, v in enumerate(exp.target_rates, 1)]
            lines += [f"power_alloc.{i} = {_fmt(v)}" for i, v in enumerate(exp.power_alloc, 1)]
            for j in sorted(exp.relay_alloc):
                lines += [f"relay_alloc.{j}.{m} = {_fmt(v)}"
                          for m, v in enumerate(exp.relay_alloc[j], 1)]
    return "\n".join(lines) + "\n"


def template() -> ExperimentFile:
    return ExperimentFile(seed=TEMPLATE_SEED)

