"""Experiment orchestration: configuration, the end-to-end pipeline and sweeps.

Every trial draws its randomness from ``rng.stream(seed, trial, stage)``, so
results depend only on the configuration and never on worker scheduling.
Output files start with a ``#`` comment line carrying the configuration hash
and master seed (the JSON summary carries them as fields instead).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache, partial
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import rng as rngmod
from .attack_iter import Attack2Params, RoundTrace, estimate_p1, run_attack2
from .attack_noniter import DEFAULT_MAX_TRIALS, expected_wrong_selected, run_attack1
from .channel import apply_bsc, cascade, secrecy_capacity
from .errors import ConfigError, InvariantViolation, WiretapLabError
from .exitchart import ExitChart, bin_records, trace_to_records
from .gf2lfsr import (
    CheckSystem,
    ConnectionPolynomial,
    LfsrKey,
    derive_checks,
    generate_sequence,
    random_key,
    table_polynomial,
)
from .infomath import binary_entropy, closed_form_mi

log = logging.getLogger(__name__)

MODES = ("reproduce", "realistic")
DEFAULT_P_GRID = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40)
# fields that do not influence results and are left out of the hash
_UNHASHED = ("out", "workers")


@dataclass
class ExperimentConfig:
    poly: str = table_polynomial(31).hex
    k: int = 31
    n: int = 3100
    p1: float = 0.2
    p2: float = 0.0
    trials: int = 100
    d: int = 20
    alpha: int = 5
    max_rounds: int = 50
    max_trials: int = DEFAULT_MAX_TRIALS
    seed: int = 0
    mode: str = "reproduce"
    out: str = "out"
    p_grid: list[float] = field(default_factory=lambda: list(DEFAULT_P_GRID))
    max_squarings: int | None = None
    literal_reset: bool = False
    min_nonempty_bins: int = 2
    p_m: float | None = None
    p_w: float | None = None
    workers: int = 1

    def __post_init__(self):
        self.validate()

    @property
    def polynomial(self) -> ConnectionPolynomial:
        return ConnectionPolynomial.from_hex(self.poly, self.k)

    @property
    def t(self) -> int:
        return self.polynomial.t

    @property
    def p_prime(self) -> float:
        return cascade(self.p1, self.p2)

    def validate(self) -> None:
        try:
            poly = ConnectionPolynomial.from_hex(str(self.poly), int(self.k))
        except WiretapLabError as exc:
            raise ConfigError(str(exc), "poly") from None
        if poly.t < 1:
            raise ConfigError("polynomial needs at least two nonzero terms", "poly")
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not 0.0 <= v <= 0.5:
                raise ConfigError(f"must be a probability in [0, 0.5], got {v!r}", name)
        for name in ("p_m", "p_w"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 0.5:
                raise ConfigError(f"must be in [0, 0.5], got {v!r}", name)
        for p in self.p_grid:
            if not 0.0 <= p <= 0.5:
                raise ConfigError(f"grid value {p!r} outside [0, 0.5]", "p_grid")
        positive = {"trials": 1, "d": 1, "alpha": 1, "n": 1, "max_trials": 1, "workers": 1}
        for name, lo in positive.items():
            v = getattr(self, name)
            if not isinstance(v, int) or v < lo:
                raise ConfigError(f"must be an integer >= {lo}, got {v!r}", name)
        if not isinstance(self.max_rounds, int) or self.max_rounds < 0:
            raise ConfigError("must be a non-negative integer", "max_rounds")
        if self.n < self.k:
            raise ConfigError(f"sequence length must be at least k = {self.k}", "n")
        if self.mode not in MODES:
            raise ConfigError(f"expected one of {MODES}", "mode")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("must be an unsigned 64-bit integer", "seed")

    # -- serialisation --------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", sorted(unknown)[0])
        data = dict(data)
        if "p_grid" in data:
            data["p_grid"] = list(data["p_grid"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ExperimentConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError("top level must be an object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        return cls.from_json(Path(path).read_text())

    def replace(self, **changes) -> ExperimentConfig:
        data = self.to_dict()
        data.update(changes)
        return ExperimentConfig.from_dict(data)

    def config_hash(self) -> str:
        data = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        blob = json.dumps(data, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def header(self) -> str:
        return f"config_hash={self.config_hash()} seed={self.seed}"


@lru_cache(maxsize=8)
def _checks(poly_mask: int, n: int, max_squarings: int | None) -> CheckSystem:
    return derive_checks(ConnectionPolynomial(poly_mask), n, max_squarings)


def config_checks(config: ExperimentConfig) -> CheckSystem:
    return _checks(config.polynomial.mask, config.n, config.max_squarings)


# -- Pipeline --------------------------------------------------------------------


@dataclass
class PipelineSample:
    key: LfsrKey
    a: np.ndarray
    z: np.ndarray
    m: np.ndarray
    cipher: np.ndarray
    y: np.ndarray


def simulate_pipeline(
    config: ExperimentConfig, trial: int, p1: float | None = None, p2: float | None = None, stage: str = ""
) -> PipelineSample:
    """Key, LFSR output, keystream, encryption and the eavesdropper's view.

    The eavesdropper's decoder output differs from the ciphertext in a
    residual BSC(p2) pattern; stripping the known plaintext leaves ``y``.
    """
    p1 = config.p1 if p1 is None else p1
    p2 = config.p2 if p2 is None else p2
    poly = config.polynomial

    def rng(label):
        return rngmod.stream(config.seed, trial, f"{stage}{label}")

    key = random_key(poly.degree, rng("key"))
    a = generate_sequence(poly, key, config.n)
    z = apply_bsc(a, p1, rng("keystream"))
    m = rng("plaintext").integers(0, 2, config.n, dtype=np.uint8)
    cipher = m ^ z
    r_w = apply_bsc(cipher, p2, rng("residual"))
    y = r_w ^ m
    if not np.array_equal(cipher ^ m, z):
        raise InvariantViolation("decryption with the keystream must invert encryption")
    if not np.array_equal(y ^ z, r_w ^ cipher):
        raise InvariantViolation("known-plaintext view must equal keystream plus residual errors")
    return PipelineSample(key, a, z, m, cipher, y)


def _map_trials(fn: Callable[[int], Any], trials: int, workers: int) -> list[Any]:
    if workers <= 1:
        return [fn(i) for i in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(fn, range(trials)))
    return results


# -- Attack 1 sweep ----------------------------------------------------------------


@dataclass
class Attack1Point:
    p_prime: float
    mi_closed_form: float
    trials: list[int]
    successes: list[bool]
    wrong_selected: list[int]
    estimate: float
    r_bar: float

    @property
    def median_trials(self) -> float:
        return float(statistics.median(self.trials))

    @property
    def mean_trials(self) -> float:
        return float(statistics.fmean(self.trials))

    @property
    def success_rate(self) -> float:
        return sum(self.successes) / len(self.successes)


def _attack1_trial(config: ExperimentConfig, p_prime: float, trial: int) -> tuple[int, bool, int]:
    sample = simulate_pipeline(config, trial, p1=p_prime, p2=0.0, stage=f"attack1:{p_prime!r}:")
    out = run_attack1(
        sample.y,
        config_checks(config),
        p_prime,
        sample.key,
        config.polynomial,
        max_trials=config.max_trials,
        a_truth=sample.a,
    )
    return out.trials, out.success, out.wrong_selected


def run_attack1_sweep(config: ExperimentConfig, grid: Sequence[float] | None = None) -> list[Attack1Point]:
    grid = list(config.p_grid if grid is None else grid)
    checks = config_checks(config)
    points = []
    for p in grid:
        results = _map_trials(partial(_attack1_trial, config, p), config.trials, config.workers)
        est = expected_wrong_selected(checks, p)
        points.append(
            Attack1Point(
                p_prime=p,
                mi_closed_form=closed_form_mi(p, config.k),
                trials=[r[0] for r in results],
                successes=[r[1] for r in results],
                wrong_selected=[r[2] for r in results],
                estimate=est.trial_order,
                r_bar=est.r_bar,
            )
        )
        log.info("attack1 p'=%s median trials %s", p, points[-1].median_trials)
    return points


ATTACK1_COLUMNS = [
    "p_prime",
    "mi_closed_form",
    "median_trials",
    "mean_trials",
    "success_rate",
    "estimate_2^(H(rbar/k)k)",
]


def attack1_csv(config: ExperimentConfig, points: Sequence[Attack1Point]) -> str:
    buf = io.StringIO()
    buf.write(f"# {config.header()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ATTACK1_COLUMNS)
    for pt in points:
        w.writerow(
            [repr(pt.p_prime), repr(pt.mi_closed_form), repr(pt.median_trials),
             repr(pt.mean_trials), repr(pt.success_rate), repr(pt.estimate)]
        )
    return buf.getvalue()


# -- Attack 2 / EXIT ------------------------------------------------------------------


@dataclass
class Attack2Report:
    traces: list[RoundTrace]
    chart: ExitChart
    attacker_p1: list[float]

    @property
    def success_rate(self) -> float:
        return sum(t.converged for t in self.traces) / len(self.traces)

    @property
    def mean_rounds(self) -> float:
        return statistics.fmean(t.rounds for t in self.traces)

    @property
    def first_round_mean_correction(self) -> float | None:
        c = [t.first_round_correction for t in self.traces if t.rounds > 0]
        return statistics.fmean(c) if c else None

    @property
    def verdict(self) -> str:
        return self.chart.verdict


def _attack2_trial(config: ExperimentConfig, trial: int) -> tuple[RoundTrace, float]:
    sample = simulate_pipeline(config, trial)
    checks = config_checks(config)
    if config.mode == "realistic":
        p_att = estimate_p1(sample.y, checks)
    else:
        p_att = config.p_prime
    params = Attack2Params.derived(
        p_att, checks, alpha=config.alpha, max_rounds=config.max_rounds,
        literal_reset=config.literal_reset,
    )
    trace = run_attack2(sample.y, sample.a, checks, params, p_att, keep_sequences=False)
    return trace, p_att


def run_attack2_exit(config: ExperimentConfig) -> Attack2Report:
    results = _map_trials(partial(_attack2_trial, config), config.trials, config.workers)
    traces = [r[0] for r in results]
    records = []
    for i, tr in enumerate(traces):
        records.extend(trace_to_records(tr, trial=i))
    chart = bin_records(records, config.d, config.min_nonempty_bins)
    return Attack2Report(traces, chart, [r[1] for r in results])


def attack2_summary(config: ExperimentConfig, report: Attack2Report) -> dict[str, Any]:
    return {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "trials": len(report.traces),
        "p_prime": config.p_prime,
        "success_rate": report.success_rate,
        "mean_rounds": report.mean_rounds,
        "first_round_mean_correction": report.first_round_mean_correction,
        "verdict": report.verdict,
        "crossover_bin": report.chart.crossover_bin,
        "gaps": [None if np.isnan(g) else float(g) for g in report.chart.gaps],
    }


def attack2_trials_csv(config: ExperimentConfig, report: Attack2Report) -> str:
    buf = io.StringIO()
    buf.write(f"# {config.header()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "status", "rounds", "initial_errors", "final_errors",
                "first_round_correction", "attacker_p1"])
    for i, (tr, p) in enumerate(zip(report.traces, report.attacker_p1)):
        frc = tr.first_round_correction
        w.writerow([i, tr.status, tr.rounds, tr.errors[0], tr.errors[-1],
                    "" if frc is None else frc, repr(p)])
    return buf.getvalue()


# -- Info report --------------------------------------------------------------------


def info_report(config: ExperimentConfig) -> dict[str, Any]:
    p = config.p_prime
    report = {
        "p1": config.p1,
        "p2": config.p2,
        "p_prime": p,
        "k": config.k,
        "mi_closed_form": closed_form_mi(p, config.k),
        "mi_upper_bound": 1.0 - binary_entropy(p),
    }
    if config.p_m is not None and config.p_w is not None:
        report["secrecy_capacity"] = secrecy_capacity(config.p_m, config.p_w)
    return report


# -- File emission ------------------------------------------------------------------


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_attack1_outputs(config: ExperimentConfig, points: Sequence[Attack1Point]) -> list[Path]:
    out = Path(config.out)
    return [write_text(out / "attack1_sweep.csv", attack1_csv(config, points))]


def write_attack2_outputs(config: ExperimentConfig, report: Attack2Report) -> list[Path]:
    out = Path(config.out)
    summary = json.dumps(attack2_summary(config, report), indent=2, sort_keys=True) + "\n"
    return [
        write_text(out / "exit_chart.csv", report.chart.to_csv(config.header())),
        write_text(out / "attack2_summary.json", summary),
        write_text(out / "attack2_trials.csv", attack2_trials_csv(config, report)),
    ]
