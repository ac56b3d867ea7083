"""Synthetic person-day generator.

Days are sampled from regime-switched first-order Markov chains over the
nine activity labels: weekdays, weekends, and holidays each get their own
initial distribution and transition matrix, so which activities fill a day
depends on covariates the sequence tokens alone cannot reveal. Activity
durations (in 15-minute bins) chain arrival/departure times through the
96-bin day. Every person-day draws from an independent substream of the
master seed, so generation is order-independent and reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .activities import ACTIVITY_CATEGORIES, MODE_UNKNOWN, N_ACTIVITIES, N_TIME_BINS
from .data import Activity, DaySequence, RecoverySample, mask_sequence

__all__ = [
    "ConfigError",
    "GeneratorConfig",
    "RegimeDynamics",
    "REGIMES",
    "default_config",
    "generate_population",
    "make_samples",
    "regime_of",
    "empirical_transitions",
]

REGIMES = ("weekday", "weekend", "holiday")

_SHORT = {
    "shop": "GoShopping",
    "other": "Other",
    "personal": "PersonalBusiness",
    "school": "GoToSchool",
    "health": "Healthcare",
    "rec": "Recreation",
    "eat": "EatOut",
    "home": "HomeActivity",
    "work": "WorkForPay",
}


class ConfigError(ValueError):
    """Generator configuration is inconsistent."""


def _row(**named: float) -> list[float]:
    """A 9-way distribution: named masses, remainder spread over the rest."""
    probs = np.zeros(N_ACTIVITIES)
    for key, p in named.items():
        probs[ACTIVITY_CATEGORIES.index(_SHORT[key])] = p
    rest = [i for i in range(N_ACTIVITIES) if probs[i] == 0.0]
    remainder = 1.0 - probs.sum()
    if remainder < -1e-12 or (rest and remainder < 0):
        raise ConfigError(f"named masses exceed 1: {named}")
    if rest:
        probs[rest] = remainder / len(rest)
    return probs.tolist()


@dataclass
class RegimeDynamics:
    """Initial label distribution and 9x9 transition matrix for one regime."""

    initial: list[float]
    transition: list[list[float]]

    def validate(self) -> None:
        init = np.asarray(self.initial, dtype=np.float64)
        trans = np.asarray(self.transition, dtype=np.float64)
        if init.shape != (N_ACTIVITIES,) or trans.shape != (N_ACTIVITIES, N_ACTIVITIES):
            raise ConfigError(f"dynamics shapes {init.shape}, {trans.shape} are not (9,), (9, 9)")
        if (init < 0).any() or (trans < 0).any():
            raise ConfigError("negative probabilities in dynamics")
        if abs(init.sum() - 1.0) > 1e-9:
            raise ConfigError(f"initial distribution sums to {init.sum()!r}, not 1")
        rowsums = trans.sum(axis=1)
        bad = np.where(np.abs(rowsums - 1.0) > 1e-9)[0]
        if bad.size:
            raise ConfigError(f"transition rows {bad.tolist()} do not sum to 1")


@dataclass
class GeneratorConfig:
    seed: int = 0
    n_days: int = 10_000
    p_remove: float = 0.3
    holiday_rate: float = 0.05
    gap_mean_bins: float = 1.0
    target_mean_daily: float = 4.49
    duration_mean_bins: dict[str, float] = field(default_factory=dict)
    regimes: dict[str, RegimeDynamics] = field(default_factory=dict)

    def validate(self) -> None:
        if self.seed < 0 or self.n_days < 1:
            raise ConfigError("seed must be >= 0 and n_days >= 1")
        if not 0.0 <= self.p_remove <= 1.0:
            raise ConfigError(f"p_remove out of [0, 1]: {self.p_remove}")
        if not 0.0 <= self.holiday_rate <= 1.0:
            raise ConfigError(f"holiday_rate out of [0, 1]: {self.holiday_rate}")
        if self.gap_mean_bins < 0:
            raise ConfigError("gap_mean_bins must be >= 0")
        missing = [l for l in ACTIVITY_CATEGORIES if l not in self.duration_mean_bins]
        if missing:
            raise ConfigError(f"duration_mean_bins missing labels: {missing}")
        if any(m < 1.0 for m in self.duration_mean_bins.values()):
            raise ConfigError("duration means must be >= 1 bin")
        if set(self.regimes) != set(REGIMES):
            raise ConfigError(f"regimes must be exactly {REGIMES}")
        for dyn in self.regimes.values():
            dyn.validate()

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_days": self.n_days,
            "p_remove": self.p_remove,
            "holiday_rate": self.holiday_rate,
            "gap_mean_bins": self.gap_mean_bins,
            "target_mean_daily": self.target_mean_daily,
            "duration_mean_bins": dict(self.duration_mean_bins),
            "regimes": {
                name: {"initial": dyn.initial, "transition": dyn.transition}
                for name, dyn in self.regimes.items()
            },
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "GeneratorConfig":
        base = default_config()
        cfg = cls(
            seed=int(raw.get("seed", base.seed)),
            n_days=int(raw.get("n_days", base.n_days)),
            p_remove=float(raw.get("p_remove", base.p_remove)),
            holiday_rate=float(raw.get("holiday_rate", base.holiday_rate)),
            gap_mean_bins=float(raw.get("gap_mean_bins", base.gap_mean_bins)),
            target_mean_daily=float(raw.get("target_mean_daily", base.target_mean_daily)),
            duration_mean_bins=dict(raw.get("duration_mean_bins", base.duration_mean_bins)),
            regimes={
                name: RegimeDynamics(initial=block["initial"], transition=block["transition"])
                for name, block in raw.get(
                    "regimes",
                    {n: {"initial": d.initial, "transition": d.transition} for n, d in base.regimes.items()},
                ).items()
            },
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_json_file(cls, path) -> "GeneratorConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config root must be an object")
        try:
            return cls.from_json_dict(raw)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: malformed generator config: {exc}") from exc


def default_config() -> GeneratorConfig:
    """Calibrated defaults: mean daily activity count near 4.49.

    Weekdays push HomeActivity -> WorkForPay hard; weekends push
    HomeActivity -> Recreation/GoShopping; holidays lean further into
    recreation and eating out. The contrast is the covariate-dependent
    structure a token-only model cannot pick up.
    """
    weekday = RegimeDynamics(
        initial=_row(home=0.88, work=0.04),
        transition=[
            _row(home=0.46, eat=0.14, personal=0.10, shop=0.10),  # from GoShopping
            _row(home=0.50, personal=0.10, eat=0.10),  # from Other
            _row(home=0.46, eat=0.12, shop=0.12, work=0.06),  # from PersonalBusiness
            _row(home=0.56, rec=0.10, eat=0.10, work=0.04),  # from GoToSchool
            _row(home=0.56, personal=0.12, eat=0.08),  # from Healthcare
            _row(home=0.56, eat=0.14, shop=0.06),  # from Recreation
            _row(home=0.50, work=0.16, shop=0.08, personal=0.08),  # from EatOut
            _row(work=0.58, home=0.06, school=0.08, shop=0.07, personal=0.06, eat=0.05),  # from HomeActivity
            _row(home=0.48, eat=0.18, shop=0.08, personal=0.08, work=0.06),  # from WorkForPay
        ],
    )
    weekend = RegimeDynamics(
        initial=_row(home=0.90, rec=0.02),
        transition=[
            _row(home=0.40, eat=0.18, rec=0.14, shop=0.12),  # from GoShopping
            _row(home=0.46, rec=0.12, eat=0.12),  # from Other
            _row(home=0.44, shop=0.14, eat=0.12),  # from PersonalBusiness
            _row(home=0.56, rec=0.14, eat=0.10),  # from GoToSchool
            _row(home=0.56, eat=0.10, shop=0.10),  # from Healthcare
            _row(home=0.42, eat=0.20, shop=0.12, rec=0.10),  # from Recreation
            _row(home=0.46, rec=0.16, shop=0.12),  # from EatOut
            _row(rec=0.34, shop=0.22, eat=0.12, home=0.10, work=0.03, personal=0.07),  # from HomeActivity
            _row(home=0.52, eat=0.14, rec=0.10),  # from WorkForPay
        ],
    )
    holiday = RegimeDynamics(
        initial=_row(home=0.92),
        transition=[
            _row(home=0.40, eat=0.20, rec=0.16, shop=0.08),  # from GoShopping
            _row(home=0.46, rec=0.14, eat=0.12),  # from Other
            _row(home=0.44, rec=0.14, eat=0.12),  # from PersonalBusiness
            _row(home=0.56, rec=0.16, eat=0.10),  # from GoToSchool
            _row(home=0.58, rec=0.10, eat=0.08),  # from Healthcare
            _row(home=0.40, eat=0.22, rec=0.14, shop=0.06),  # from Recreation
            _row(home=0.44, rec=0.20, shop=0.08),  # from EatOut
            _row(rec=0.40, eat=0.16, shop=0.10, home=0.12, work=0.02, personal=0.04),  # from HomeActivity
            _row(home=0.56, rec=0.12, eat=0.10),  # from WorkForPay
        ],
    )
    durations = {
        "GoShopping": 7.0,
        "Other": 8.0,
        "PersonalBusiness": 7.0,
        "GoToSchool": 30.0,
        "Healthcare": 8.0,
        "Recreation": 12.0,
        "EatOut": 6.0,
        "HomeActivity": 32.0,
        "WorkForPay": 36.0,
    }
    return GeneratorConfig(duration_mean_bins=durations, regimes={
        "weekday": weekday, "weekend": weekend, "holiday": holiday,
    })


def regime_of(weekday: int, holiday: int) -> str:
    if holiday:
        return "holiday"
    return "weekend" if weekday >= 6 else "weekday"


_MODE_PROBS = (0.52, 0.16, 0.14, 0.06, 0.12)  # codes 1..5; arrival trips only


def _sample_day(cfg: GeneratorConfig, rng: np.random.Generator, idx: int) -> DaySequence:
    weekday = int(rng.integers(1, 8))
    holiday = int(rng.random() < cfg.holiday_rate)
    dyn = cfg.regimes[regime_of(weekday, holiday)]
    initial = np.asarray(dyn.initial)
    transition = np.asarray(dyn.transition)
    static = tuple(int(c) for c in rng.integers(1, 6, size=4))

    activities: list[Activity] = []
    label_idx = int(rng.choice(N_ACTIVITIES, p=initial))
    t = 1
    while True:
        label = ACTIVITY_CATEGORIES[label_idx]
        dur = 1 + int(rng.poisson(cfg.duration_mean_bins[label] - 1.0))
        dep = min(t + dur - 1, N_TIME_BINS)
        if activities:
            mode = int(rng.choice(5, p=_MODE_PROBS)) + 1
            dist = round(float(rng.gamma(2.0, 2.0)), 2)
        else:
            mode = MODE_UNKNOWN  # the day's first activity has no arrival trip
            dist = 0.0
        activities.append(Activity(label=label, arr=t, dep=dep, mode=mode, dist=dist, observed=True))
        gap = 1 + int(rng.poisson(cfg.gap_mean_bins))
        t = dep + gap
        if dep >= N_TIME_BINS or t > N_TIME_BINS or len(activities) >= N_TIME_BINS:
            break
        label_idx = int(rng.choice(N_ACTIVITIES, p=transition[label_idx]))

    return DaySequence(
        person_id=idx,
        date=idx,
        weekday=weekday,
        holiday=holiday,
        static=static,
        activities=activities,
    )


def generate_population(cfg: GeneratorConfig, seed: int | None = None) -> list[DaySequence]:
    """Sample ``cfg.n_days`` person-days, one independent substream each."""
    cfg.validate()
    base = cfg.seed if seed is None else seed
    return [_sample_day(cfg, np.random.default_rng([base, i]), i) for i in range(cfg.n_days)]


def make_samples(
    sequences: list[DaySequence], p_remove: float, seed: int
) -> list[RecoverySample]:
    """Mask every sequence with its own substream of ``seed``."""
    return [
        mask_sequence(seq, p_remove, np.random.default_rng([seed, 1, i]))
        for i, seq in enumerate(sequences)
    ]


def empirical_transitions(sequences: list[DaySequence]) -> dict[str, np.ndarray]:
    """Row-normalized observed transition frequencies per regime."""
    counts = {r: np.zeros((N_ACTIVITIES, N_ACTIVITIES)) for r in REGIMES}
    for seq in sequences:
        table = counts[regime_of(seq.weekday, seq.holiday)]
        ids = [ACTIVITY_CATEGORIES.index(a.label) for a in seq.activities]
        for a, b in zip(ids, ids[1:]):
            table[a, b] += 1
    out = {}
    for regime, table in counts.items():
        rowsum = table.sum(axis=1, keepdims=True)
        out[regime] = np.divide(table, rowsum, out=np.zeros_like(table), where=rowsum > 0)
    return out
