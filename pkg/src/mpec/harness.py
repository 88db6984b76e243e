"""Error injection, Monte Carlo estimation and the binomial failure polynomial."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .circuit import BUILDER_VERSION, REFERENCE_LOCATION_COUNT, Circuit, build_level2_cnot_exrec
from .engine import FaultBatch, Program, compile_circuit, run_batch
from .pauli_core import pauli_from_code
from .reference import run_trial  # noqa: F401  (re-exported)

MODES = ("direct", "fixed")
DECODERS = ("standard", "mpec")
CSV_COLUMNS = ("mode", "decoder", "p_or_i", "trials", "failures", "rate", "sigma")


class ConfigError(ValueError):
    pass


class UndefinedRatioError(ValueError):
    pass


@dataclass
class SimConfig:
    mode: str = "fixed"
    decoder: str = "mpec"
    p: Optional[float] = None
    weight: Optional[int] = None
    trials: int = 100_000
    seed: int = 0
    i_range: tuple = (4, 12)
    p_values: tuple = ()
    truncation: int = 12
    batch_size: int = 65_536
    workers: int = 1
    decoders: tuple = ()

    def validate(self) -> "SimConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        for d in self.decoders or (self.decoder,):
            if d not in DECODERS:
                raise ConfigError(f"decoder must be one of {DECODERS}, got {d!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if self.p is not None and not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]")
        for p in self.p_values:
            if not 0.0 <= p <= 1.0:
                raise ConfigError("p values must lie in [0, 1]")
        lo, hi = self.i_range
        if lo < 0 or hi < lo:
            raise ConfigError("i_range must be an increasing pair of non-negative integers")
        if self.truncation < hi:
            raise ConfigError("truncation must be >= max(i_range)")
        if self.weight is not None and self.weight < 0:
            raise ConfigError("weight must be >= 0")
        if self.batch_size < 64 or self.workers < 1:
            raise ConfigError("batch_size must be >= 64 and workers >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return self

    @classmethod
    def from_dict(cls, data: Mapping) -> "SimConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        data = dict(data)
        for key in ("i_range", "p_values", "decoders"):
            if key in data:
                data[key] = tuple(data[key])
        try:
            return cls(**data).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class TallyResult:
    mode: str
    decoder: str
    value: float  # p (direct) or i (fixed)
    trials: int
    failures: int
    census: int

    @property
    def rate(self) -> float:
        return self.failures / self.trials

    @property
    def sigma(self) -> float:
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.trials)

    def interval(self, z: float = 2.0) -> tuple:
        """``rate ± z·sigma``; with no failures, the Wilson upper end ``z²/(n+z²)``."""
        if self.failures == 0:
            return 0.0, z * z / (self.trials + z * z)
        return max(0.0, self.rate - z * self.sigma), min(1.0, self.rate + z * self.sigma)

    def merge(self, other: "TallyResult") -> "TallyResult":
        assert (self.mode, self.decoder, self.value) == (other.mode, other.decoder, other.value)
        return TallyResult(self.mode, self.decoder, self.value, self.trials + other.trials,
                           self.failures + other.failures, self.census)

    def csv_row(self) -> list:
        v = int(self.value) if self.mode == "fixed" else repr(float(self.value))
        return [self.mode, self.decoder, v, self.trials, self.failures,
                f"{self.rate:.12g}", f"{self.sigma:.12g}"]


# ---------------------------------------------------------------- sampling


def _paulis(is_cnot: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    two = rng.integers(1, 16, size=is_cnot.shape)
    one = rng.integers(1, 4, size=is_cnot.shape)
    return np.where(is_cnot, two, one)


def _distinct_rows(n_loc: int, counts: np.ndarray, rng: np.random.Generator) -> list:
    """Uniform distinct location sets with the given sizes (whole-set rejection)."""
    out = [None] * len(counts)
    todo = np.flatnonzero(counts)
    for j in range(len(counts)):
        if counts[j] == 0:
            out[j] = np.empty(0, dtype=np.int64)
    big = todo[counts[todo] > 256]
    for j in big:
        out[j] = np.sort(rng.choice(n_loc, size=int(counts[j]), replace=False))
    todo = todo[counts[todo] <= 256]
    while len(todo):
        k = counts[todo]
        draws = rng.integers(0, n_loc, size=int(k.sum()))
        starts = np.concatenate([[0], np.cumsum(k)[:-1]])
        retry = []
        for idx, j in enumerate(todo):
            row = draws[starts[idx]:starts[idx] + k[idx]]
            if len(np.unique(row)) == len(row):
                out[j] = row
            else:
                retry.append(j)
        todo = np.array(retry, dtype=np.int64)
    return out


def _fixed_rows(n_loc: int, i: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``(n, i)`` array of distinct locations per row."""
    out = np.empty((n, i), dtype=np.int64)
    todo = np.arange(n)
    if i > 256:
        for j in todo:
            out[j] = rng.choice(n_loc, size=i, replace=False)
        return out
    while len(todo):
        draws = rng.integers(0, n_loc, size=(len(todo), i))
        s = np.sort(draws, axis=1)
        ok = ~(s[:, 1:] == s[:, :-1]).any(axis=1) if i > 1 else np.ones(len(todo), bool)
        out[todo[ok]] = draws[ok]
        todo = todo[~ok]
    return out


def sample_fixed_batch(is_cnot: np.ndarray, i: int, n: int, rng: np.random.Generator) -> FaultBatch:
    n_loc = len(is_cnot)
    if i > n_loc:
        raise ValueError(f"cannot place {i} errors on {n_loc} locations")
    locs = _fixed_rows(n_loc, i, n, rng)
    codes = _paulis(is_cnot[locs], rng)
    return FaultBatch(np.repeat(np.arange(n, dtype=np.int64), i), locs.ravel(), codes.ravel())


def sample_direct_batch(is_cnot: np.ndarray, p: float, n: int, rng: np.random.Generator) -> FaultBatch:
    n_loc = len(is_cnot)
    counts = rng.binomial(n_loc, p, size=n)
    rows = _distinct_rows(n_loc, counts, rng)
    locs = np.concatenate(rows) if n else np.empty(0, dtype=np.int64)
    codes = _paulis(is_cnot[locs], rng)
    return FaultBatch(np.repeat(np.arange(n, dtype=np.int64), counts), locs, codes)


def _ops(circuit: Circuit, locs, codes) -> list:
    return [
        (int(l), pauli_from_code(int(c), len(circuit.locations[l].qubits)))
        for l, c in zip(locs, codes)
    ]


def _is_cnot(circuit: Circuit) -> np.ndarray:
    return np.array([loc.kind == "CNOT" for loc in circuit.locations], dtype=bool)


def inject_errors(circuit: Circuit, p: float, rng: np.random.Generator) -> list:
    """Independent faults: each location fails with probability ``p``.

    Returns ``(location_index, pauli)`` pairs sorted by location.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    hit = np.flatnonzero(rng.random(circuit.census) < p)
    return _ops(circuit, hit, _paulis(_is_cnot(circuit)[hit], rng))


def inject_fixed_weight(circuit: Circuit, i: int, rng: np.random.Generator) -> list:
    """Exactly ``i`` faults on distinct, uniformly chosen locations."""
    if not 0 <= i <= circuit.census:
        raise ValueError(f"weight {i} outside [0, {circuit.census}]")
    hit = np.sort(rng.choice(circuit.census, size=i, replace=False))
    return _ops(circuit, hit, _paulis(_is_cnot(circuit)[hit], rng))


# -------------------------------------------------------------- estimation


def stream_id(mode: str, value) -> int:
    """Seed-stream label; the decoder is left out so both see identical samples."""
    key = f"{mode}:{int(value)}" if mode == "fixed" else f"{mode}:{float(value)!r}"
    return zlib.crc32(key.encode())


def batch_rng(seed: int, mode: str, value, batch: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream_id(mode, value), batch))
    return np.random.Generator(np.random.PCG64(ss))


@lru_cache(maxsize=2)
def _program() -> Program:
    return compile_circuit(build_level2_cnot_exrec())


def _run_one(args) -> tuple:
    mode, value, decoders, seed, batch, n, max_match = args
    prog = _program()
    rng = batch_rng(seed, mode, value, batch)
    if mode == "fixed":
        faults = sample_fixed_batch(prog.is_cnot, int(value), n, rng)
    else:
        faults = sample_direct_batch(prog.is_cnot, float(value), n, rng)
    return tuple(int(run_batch(prog, faults, n, d, max_match).failed.sum()) for d in decoders)


def _batches(trials: int, size: int) -> list:
    return [(b, min(size, trials - b * size)) for b in range((trials + size - 1) // size)]


def estimate_point(mode: str, value, decoders: Sequence[str], trials: int, seed: int,
                   batch_size: int = 65_536, workers: int = 1, max_match: int = 3,
                   executor=None) -> list:
    """Failure tallies for one ``p`` or ``i`` and each decoder on shared samples.

    The batch layout depends only on ``trials`` and ``batch_size``, so the
    result is the same for any number of workers.
    """
    jobs = [(mode, value, tuple(decoders), seed, b, n, max_match)
            for b, n in _batches(trials, batch_size)]
    if executor is not None:
        counts = list(executor.map(_run_one, jobs))
    elif workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_run_one, jobs))
    else:
        counts = [_run_one(j) for j in jobs]
    census = _program().circuit.census
    return [TallyResult(mode, d, value, trials, sum(c[k] for c in counts), census)
            for k, d in enumerate(decoders)]


def cached_estimate(cache_dir, mode: str, value, decoders: Sequence[str], trials: int,
                    seed: int, batch_size: int = 65_536, workers: int = 1) -> list:
    """:func:`estimate_point` memoised as JSON under ``cache_dir``.

    The key covers every argument that changes the counts plus the circuit
    hash, so a rebuilt circuit never reuses stale tallies.
    """
    circuit = _program().circuit
    key = dict(mode=mode, value=value, decoders=list(decoders), trials=trials, seed=seed,
               batch_size=batch_size, circuit_hash=circuit.content_hash)
    digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:20]
    path = Path(cache_dir) / f"{mode}-{value}-{digest}.json"
    if path.exists():
        rows = json.loads(path.read_text())["tallies"]
        return [TallyResult(**r) for r in rows]
    out = estimate_point(mode, value, decoders, trials, seed, batch_size, workers)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps({"key": key, "tallies": [asdict(t) for t in out]}, indent=1))
    tmp.replace(path)
    return out


def estimate_rate(config: SimConfig) -> TallyResult:
    config.validate()
    if config.mode == "fixed":
        if config.weight is None:
            raise ConfigError("fixed mode needs a weight")
        value = config.weight
    else:
        if config.p is None:
            raise ConfigError("direct mode needs p")
        value = config.p
    return estimate_point(config.mode, value, (config.decoder,), config.trials, config.seed,
                          config.batch_size, config.workers)[0]


def run_sweep(config: SimConfig) -> list:
    """Every point of a sweep (``p_values`` or ``i_range``) for every decoder."""
    config.validate()
    decoders = config.decoders or (config.decoder,)
    if config.mode == "fixed":
        values = list(range(config.i_range[0], config.i_range[1] + 1))
    else:
        values = list(config.p_values) or ([config.p] if config.p is not None else [])
        if not values:
            raise ConfigError("direct sweep needs p or p_values")
    out = []
    pool = ProcessPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for v in values:
            out += estimate_point(config.mode, v, decoders, config.trials, config.seed,
                                  config.batch_size, executor=pool)
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def tallies_to_csv(tallies: Sequence[TallyResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for t in tallies:
        w.writerow(t.csv_row())
    return buf.getvalue()


def read_rate_table(text: str) -> dict:
    """``{decoder: {i: (rate, sigma)}}`` from fixed-weight CSV rows."""
    out: dict = {}
    for row in csv.DictReader(io.StringIO(text)):
        if row["mode"] != "fixed":
            continue
        out.setdefault(row["decoder"], {})[int(row["p_or_i"])] = (
            float(row["rate"]), float(row["sigma"]))
    return out


def run_manifest(config: SimConfig, outputs: Mapping, started: datetime,
                 finished: Optional[datetime] = None) -> dict:
    circuit = _program().circuit
    from .kernels import BACKEND

    return {
        "config": asdict(config),
        "seed": config.seed,
        "census": circuit.census,
        "reference_census": REFERENCE_LOCATION_COUNT,
        "census_ratio": circuit.census / REFERENCE_LOCATION_COUNT,
        "builder_version": BUILDER_VERSION,
        "circuit_hash": circuit.content_hash,
        "kernel_backend": BACKEND,
        "started": started.isoformat(),
        "finished": (finished or datetime.now(timezone.utc)).isoformat(),
        "budgets": {"trials_per_point": config.trials, "batch_size": config.batch_size},
        "outputs": dict(outputs),
    }


# ----------------------------------------------------- binomial combination


@dataclass(frozen=True)
class CurvePoint:
    p: float
    p2: float
    lower: float
    upper: float


def binomial_weights(N: int, p: float, truncation: int) -> np.ndarray:
    """``C(N, i) p^i (1-p)^(N-i)`` for ``i = 0..truncation`` in log space."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    i = np.arange(truncation + 1, dtype=float)
    if p == 0.0:
        return (i == 0).astype(float)
    if p == 1.0:
        return (i == N).astype(float)
    logc = gammaln(N + 1) - gammaln(i + 1) - gammaln(N - i + 1)
    return np.exp(logc + i * math.log(p) + (N - i) * math.log1p(-p))


def _rate_arrays(r: Mapping, truncation: int):
    rate = np.zeros(truncation + 1)
    sig = np.zeros(truncation + 1)
    missing = []
    for i in range(truncation + 1):
        if i not in r:
            missing.append(i)
            continue
        v = r[i]
        if isinstance(v, TallyResult):
            rate[i], sig[i] = v.rate, v.sigma
        elif isinstance(v, tuple):
            rate[i], sig[i] = v
        else:
            rate[i] = v
    if missing:
        raise KeyError(f"missing r_i for i = {missing}")
    if (rate < 0).any() or (rate > 1).any():
        raise ValueError("r_i must lie in [0, 1]")
    return rate, sig


def combine_polynomial(r: Mapping, N: int, p: float, truncation: int = 12) -> CurvePoint:
    """Failure probability from conditional rates ``r_i`` (zero beyond ``truncation``).

    ``r`` maps ``i`` to a rate, a ``(rate, sigma)`` pair or a TallyResult.
    The band moves every ``r_i`` by two standard errors, clipped to [0, 1].
    """
    rate, sig = _rate_arrays(r, truncation)
    w = binomial_weights(N, p, truncation)
    return CurvePoint(
        p,
        float(w @ rate),
        float(w @ np.clip(rate - 2 * sig, 0.0, 1.0)),
        float(w @ np.clip(rate + 2 * sig, 0.0, 1.0)),
    )


def truncation_for(N: int, p: float, tail: float = 1e-9) -> int:
    """Smallest ``t`` with ``P(K > t) < tail`` for ``K ~ Binomial(N, p)``."""
    if p <= 0.0:
        return 0
    return int(binom.isf(tail, N, p)) + 1


@dataclass(frozen=True)
class RatioResult:
    formula: float
    full: float


def improvement_ratio(r_std: Mapping, r_mp: Mapping, N: int, p: float,
                      truncation: int = 12) -> RatioResult:
    """Standard over MPEC failure rate: leading-order form and full quotient."""
    if truncation < 5:
        raise ValueError("truncation must be >= 5 to include r_4 and r_5")
    rs, _ = _rate_arrays(r_std, truncation)
    rm, _ = _rate_arrays(r_mp, truncation)
    if rm[5] == 0.0:
        raise UndefinedRatioError("r_5 of the MPEC decoder is zero")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    formula = rs[4] / rm[5] * 5.0 / (N * p)
    w = binomial_weights(N, p, truncation)
    den = float(w @ rm)
    if den == 0.0:
        raise UndefinedRatioError("MPEC failure polynomial vanishes")
    return RatioResult(formula, float(w @ rs) / den)
