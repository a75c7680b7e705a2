"""Monte Carlo experiment engine.

One trial draws a pattern database, a compressor pair and a test instance
from streams keyed by (seed, purpose, trial index), runs recognition and
classifies the outcome.  Results are merged by trial index, so the output
does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import time
from collections.abc import Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bounds import ldpc_bound, syndrome_bound, truncation_bound
from .compressors import _rows_for, ldpc_pair, truncation_pair
from .decoders import BpConfig
from .environment import (
    DEFAULT_MC_CAP,
    DEFAULT_SYMBOL_BUDGET,
    Environment,
    GilbertElliottNoise,
    IidNoise,
    ResourceError,
    draw_test,
    generate_database,
)
from .gf import FieldSpec
from .info import Pmf, TypicalityParams
from .recognition import (
    ErrorEvent,
    RecognitionSystem,
    Strategy,
    build_memory,
    classify_error,
    recognize,
)
from .rng import stream

log = logging.getLogger(__name__)

DEFAULT_COST_BUDGET = 1e11


class ConfigError(ValueError):
    pass


def _field(section: str, default, help_: str = ""):
    return field(default=default, metadata={"section": section, "help": help_})


@dataclass(frozen=True)
class ExperimentConfig:
    r: int = _field("env", 2)
    n: int = _field("env", 200)
    rc: float | None = _field("env", 0.04, "pattern rate; ignored when mc is set")
    mc: int | None = _field("env", None, "explicit number of patterns")
    qx: str = _field("env", "uniform", "uniform | bernoulli:p | pmf:p0;p1;...")
    noise: str = _field("env", "bsc:0.11", "none | bsc:q | symmetric:q | iid:p0;p1;... | ge:pGB;pBG;qG;qB")
    mc_cap: int = _field("env", DEFAULT_MC_CAP)
    clamp: bool = _field("env", False, "clamp M_c to mc_cap instead of refusing")

    strategy: str = _field("sys", "truncation", "truncation | syndrome")
    rm: float = _field("sys", 0.5)
    rs: float = _field("sys", 0.5)
    dv: int = _field("sys", 3)
    dc: int = _field("sys", 6)
    decoder: str = _field("sys", "bp", "bp | oracle")
    max_iterations: int = _field("sys", 50)
    damping: float = _field("sys", 0.0)
    epsilon: float = _field("sys", 0.1)
    mode: str = _field("sys", "strict", "strict | score")

    trials: int = _field("run", 100)
    seed: int = _field("run", 0)
    threads: int = _field("run", 1)
    fixed_system: bool = _field("run", False, "reuse one database and compressor pair for every trial")
    cost_budget: float = _field("run", DEFAULT_COST_BUDGET)
    symbol_budget: int = _field("run", DEFAULT_SYMBOL_BUDGET)
    out: str | None = _field("run", None)

    def replace(self, **kw) -> ExperimentConfig:
        return dataclasses.replace(self, **kw)

    # --- derived objects ----------------------------------------------------

    @property
    def spec(self) -> FieldSpec:
        return FieldSpec(self.r)

    def pattern_pmf(self) -> Pmf:
        return parse_pmf(self.qx, self.spec, "env.qx")

    def noise_model(self):
        return parse_noise(self.noise, self.spec)

    def environment(self) -> Environment:
        return Environment(
            self.spec,
            self.n,
            self.rc if self.rc is not None else 0.0,
            self.pattern_pmf(),
            self.noise_model(),
            mc=self.mc,
            mc_cap=self.mc_cap,
            clamp=self.clamp,
            symbol_budget=self.symbol_budget,
        )

    def typicality(self) -> TypicalityParams:
        return TypicalityParams(self.epsilon, self.mode)

    def bp_config(self) -> BpConfig:
        return BpConfig(self.max_iterations, self.damping)


# --- parsing -----------------------------------------------------------------


def _floats(body: str) -> list[float]:
    return [float(t) for t in body.replace(",", ";").split(";") if t.strip()]


def parse_pmf(text: str, spec: FieldSpec, key: str) -> Pmf:
    kind, _, body = text.strip().partition(":")
    try:
        if kind == "uniform":
            return Pmf.uniform(spec)
        if kind == "bernoulli":
            if spec.order != 2:
                raise ValueError("bernoulli pmf needs r = 2")
            return Pmf.bernoulli(float(body))
        if kind == "pmf":
            return Pmf(spec, _floats(body))
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    raise ConfigError(f"{key}: unknown pmf {text!r}")


def parse_noise(text: str, spec: FieldSpec):
    kind, _, body = text.strip().partition(":")
    try:
        if kind == "none":
            return IidNoise(Pmf.point(spec, 0))
        if kind == "bsc":
            if spec.order != 2:
                raise ValueError("bsc noise needs r = 2; use symmetric:q")
            return IidNoise(Pmf.bernoulli(float(body)))
        if kind == "symmetric":
            return IidNoise(Pmf.symmetric(spec, float(body)))
        if kind == "iid":
            return IidNoise(Pmf(spec, _floats(body)))
        if kind == "ge":
            p_gb, p_bg, q_g, q_b = _floats(body)
            return GilbertElliottNoise(p_gb, p_bg, Pmf.symmetric(spec, q_g), Pmf.symmetric(spec, q_b))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"env.noise: {exc}") from None
    raise ConfigError(f"env.noise: unknown noise model {text!r}")


def _coerce(name: str, raw: str):
    f = {f.name: f for f in dataclasses.fields(ExperimentConfig)}[name]
    raw = raw.strip()
    if raw.lower() in ("none", "") and f.default is None:
        return None
    typ = str(f.type)
    try:
        if "bool" in typ:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ.startswith("int"):
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if typ.startswith("float"):
            return float(raw)
    except ValueError as exc:
        section = f.metadata["section"]
        raise ConfigError(f"{section}.{name}: {exc}") from None
    return raw


def config_keys() -> dict[str, str]:
    """Map 'section.name' -> field name."""
    return {f"{f.metadata['section']}.{f.name}": f.name for f in dataclasses.fields(ExperimentConfig)}


def parse_assignments(lines: Iterable[str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    keys = config_keys()
    short = {v: v for v in keys.values()}
    values = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        name = keys.get(key) or short.get(key)
        if name is None:
            raise ConfigError(f"unknown config key {key!r}")
        values[name] = _coerce(name, raw)
    return dataclasses.replace(base or ExperimentConfig(), **values)


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_assignments(fh, base)


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.metadata['section']}.{f.name} = {'none' if v is None else v}")
    return "\n".join(lines) + "\n"


def validate(cfg: ExperimentConfig) -> None:
    """Raise ConfigError naming the offending field, or ResourceError for budget breaches."""

    def bad(key, msg):
        raise ConfigError(f"{key}: {msg}")

    try:
        FieldSpec(cfg.r)
    except ValueError as exc:
        bad("env.r", str(exc))
    if cfg.n < 1:
        bad("env.n", "must be >= 1")
    if cfg.mc is None and (cfg.rc is None or cfg.rc <= 0):
        bad("env.rc", "must be positive (or set env.mc)")
    if cfg.trials < 1:
        bad("run.trials", "must be >= 1")
    if cfg.threads < 1:
        bad("run.threads", "must be >= 1")
    if cfg.strategy not in ("truncation", "syndrome"):
        bad("sys.strategy", f"unknown strategy {cfg.strategy!r}")
    if cfg.mode not in ("strict", "score"):
        bad("sys.mode", f"unknown mode {cfg.mode!r}")
    if cfg.decoder not in ("bp", "oracle"):
        bad("sys.decoder", f"unknown decoder {cfg.decoder!r}")
    if cfg.epsilon <= 0:
        bad("sys.epsilon", "must be positive")
    for key, rate in (("sys.rm", cfg.rm), ("sys.rs", cfg.rs)):
        try:
            _rows_for(cfg.n, rate)
        except ValueError as exc:
            bad(key, str(exc))
    try:
        cfg.bp_config()
    except ValueError as exc:
        bad("sys.max_iterations", str(exc))
    cfg.pattern_pmf()
    cfg.noise_model()
    if cfg.strategy == "syndrome":
        if cfg.dv < 1 or cfg.dc < 1 or (cfg.n * cfg.dv) % cfg.dc:
            bad("sys.dv", f"n*dv = {cfg.n * cfg.dv} must be divisible by dc = {cfg.dc}")
        if cfg.n * cfg.dv // cfg.dc != _rows_for(cfg.n, min(cfg.rm, cfg.rs)):
            bad("sys.dc", f"({cfg.dv},{cfg.dc}) ensemble rate does not match min(rm, rs) = {min(cfg.rm, cfg.rs)}")
    try:
        env = cfg.environment()
    except ResourceError:
        raise
    except ValueError as exc:
        bad("env", str(exc))
    mc = env.num_patterns
    if mc * cfg.n > cfg.symbol_budget:
        raise ResourceError(f"M_c = {mc} patterns of length {cfg.n} exceed the symbol budget {cfg.symbol_budget}")
    cost = predicted_cost(cfg, mc)
    if cost > cfg.cost_budget:
        raise ResourceError(f"predicted cost {cost:.3g} exceeds run.cost_budget = {cfg.cost_budget:.3g}")


def predicted_cost(cfg: ExperimentConfig, mc: int) -> float:
    """Rough symbol-operation count for the whole run."""
    k = min(_rows_for(cfg.n, cfg.rm), _rows_for(cfg.n, cfg.rs))
    if cfg.strategy == "truncation":
        per_index = k + cfg.n
    elif cfg.decoder == "oracle":
        per_index = float(cfg.r) ** cfg.n
    else:
        per_index = cfg.n * cfg.dv * max(cfg.max_iterations, 1) * cfg.r
    return float(cfg.trials) * mc * per_index


# --- trials --------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    index: int
    j: int
    j_hat: int | None
    event: ErrorEvent
    false_accepts: int
    evaluations: int


def _derived_seed(seed: int, tag: str, key: int) -> int:
    return int(stream(seed, tag, key).integers(2**62))


def build_system(cfg: ExperimentConfig, key: int) -> RecognitionSystem:
    spec = cfg.spec
    if cfg.strategy == "truncation":
        pair = truncation_pair(cfg.n, cfg.rm, cfg.rs, spec)
    else:
        pair = ldpc_pair(cfg.n, cfg.rm, cfg.rs, cfg.dv, cfg.dc, spec, _derived_seed(cfg.seed, "matrix", key))
    return RecognitionSystem(
        pair,
        Strategy(cfg.strategy),
        cfg.noise_model(),
        qx=cfg.pattern_pmf(),
        typicality=cfg.typicality(),
        decoder=cfg.decoder,
        bp=cfg.bp_config(),
    )


class _TrialRunner:
    """Runs trials for one config; caches the shared system in fixed-system mode."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.env = cfg.environment()
        self._fixed = None

    def _system_for(self, t: int):
        cfg = self.cfg
        if cfg.fixed_system:
            if self._fixed is None:
                db = generate_database(self.env, stream(cfg.seed, "database", 0))
                system = build_system(cfg, 0)
                self._fixed = (db, system, build_memory(system, db))
            return self._fixed
        db = generate_database(self.env, stream(cfg.seed, "database", t))
        system = build_system(cfg, t)
        return db, system, build_memory(system, db)

    def run(self, t: int) -> TrialRecord:
        db, system, memory = self._system_for(t)
        inst = draw_test(db, system.noise, stream(self.cfg.seed, "test", t))
        verdict = recognize(system, memory, system.sense(inst.y))
        event = classify_error(verdict, inst)
        accepted = np.isfinite(verdict.scores)
        false_acc = int(accepted.sum() - accepted[inst.j])
        return TrialRecord(t, inst.j, verdict.j_hat, event, false_acc, len(memory) - 1)


def _run_chunk(cfg: ExperimentConfig, indices: list[int]) -> list[TrialRecord]:
    runner = _TrialRunner(cfg)
    return [runner.run(t) for t in indices]


def run_trials(cfg: ExperimentConfig, indices: Iterable[int] | None = None) -> list[TrialRecord]:
    indices = list(range(cfg.trials)) if indices is None else list(indices)
    if cfg.threads <= 1 or len(indices) < 2:
        return _run_chunk(cfg, indices)
    chunks = [indices[k :: cfg.threads] for k in range(cfg.threads)]
    with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
        parts = list(pool.map(_run_chunk, [cfg] * len(chunks), chunks))
    records = [rec for part in parts for rec in part]
    return sorted(records, key=lambda rec: rec.index)


# --- results -----------------------------------------------------------------


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: int
    errors: int
    p_hat: float
    ci: tuple[float, float]
    events: dict[str, int]
    false_accepts: int
    evaluations: int
    rc_requested: float
    rc_realized: float
    rm: float
    rs: float
    bounds: dict[str, float | None]
    wall_seconds: float = 0.0
    records: list[TrialRecord] = field(default_factory=list, repr=False)

    @property
    def false_accept_rate(self) -> float:
        return self.false_accepts / self.evaluations if self.evaluations else 0.0


def theory_bounds(cfg: ExperimentConfig, rm: float, rs: float) -> dict[str, float | None]:
    qx = cfg.pattern_pmf()
    noise = cfg.noise_model()
    qz = noise.marginal_pmf()
    out: dict[str, float | None] = {
        "bound_thm1": float(truncation_bound(rm, rs, qx, qz)),
        "bound_ldpc": float(ldpc_bound(rm, rs, float(qz.probs[1]))) if cfg.r == 2 else None,
        "bound_thm3": float(syndrome_bound(rm, rs, noise.entropy_rate())),
    }
    return out


def realized_rates(cfg: ExperimentConfig) -> tuple[float, float]:
    return _rows_for(cfg.n, cfg.rm) / cfg.n, _rows_for(cfg.n, cfg.rs) / cfg.n


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    validate(cfg)
    start = time.perf_counter()
    records = run_trials(cfg)
    wall = time.perf_counter() - start
    env = cfg.environment()
    events = {e.value: 0 for e in ErrorEvent}
    for rec in records:
        events[rec.event.value] += 1
    errors = len(records) - events[ErrorEvent.NONE.value]
    rm, rs = realized_rates(cfg)
    rc_req = cfg.rc if cfg.mc is None else math.log2(cfg.mc) / cfg.n
    return ExperimentResult(
        config=cfg,
        trials=len(records),
        errors=errors,
        p_hat=errors / len(records),
        ci=wilson_interval(errors, len(records)),
        events=events,
        false_accepts=sum(r.false_accepts for r in records),
        evaluations=sum(r.evaluations for r in records),
        rc_requested=rc_req,
        rc_realized=env.rc_realized,
        rm=rm,
        rs=rs,
        bounds=theory_bounds(cfg, rm, rs),
        wall_seconds=wall,
        records=records,
    )


CSV_COLUMNS = [
    "r", "n", "rc_requested", "rc_realized", "rm", "rs", "strategy", "noise", "epsilon", "mode",
    "trials", "errors", "p_hat", "ci_lo", "ci_hi", "event_missed", "event_false_accept", "event_tie",
    "bound_thm1", "bound_ldpc", "bound_thm3", "seed", "status",
]  # fmt: skip


def _g(x) -> str:
    return "" if x is None else f"{x:.6g}"


def result_row(res: ExperimentResult) -> dict[str, str]:
    cfg = res.config
    return {
        "r": str(cfg.r),
        "n": str(cfg.n),
        "rc_requested": _g(res.rc_requested),
        "rc_realized": _g(res.rc_realized),
        "rm": _g(res.rm),
        "rs": _g(res.rs),
        "strategy": cfg.strategy,
        "noise": cfg.noise,
        "epsilon": _g(cfg.epsilon),
        "mode": cfg.mode,
        "trials": str(res.trials),
        "errors": str(res.errors),
        "p_hat": _g(res.p_hat),
        "ci_lo": _g(res.ci[0]),
        "ci_hi": _g(res.ci[1]),
        "event_missed": str(res.events[ErrorEvent.MISSED_TYPICALITY.value]),
        "event_false_accept": str(res.events[ErrorEvent.FALSE_ACCEPT.value]),
        "event_tie": str(res.events[ErrorEvent.TIE.value]),
        "bound_thm1": _g(res.bounds["bound_thm1"]),
        "bound_ldpc": _g(res.bounds["bound_ldpc"]),
        "bound_thm3": _g(res.bounds["bound_thm3"]),
        "seed": str(cfg.seed),
        "status": "ok",
    }


def failed_row(cfg: ExperimentConfig, exc: Exception) -> dict[str, str]:
    row = {c: "" for c in CSV_COLUMNS}
    row.update(r=str(cfg.r), n=str(cfg.n), rc_requested=_g(cfg.rc), strategy=cfg.strategy, noise=cfg.noise,
               epsilon=_g(cfg.epsilon), mode=cfg.mode, seed=str(cfg.seed))  # fmt: skip
    row["status"] = f"error: {exc}"
    return row


def write_csv(rows: Iterable[dict[str, str]], fh=None) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


SWEEP_AXES = ("rc", "n", "q", "rate")


def with_axis(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    if axis == "rc":
        return cfg.replace(rc=float(value), mc=None)
    if axis == "n":
        return cfg.replace(n=int(value))
    if axis == "rate":
        return cfg.replace(rm=float(value), rs=float(value))
    if axis == "q":
        kind = cfg.noise.partition(":")[0]
        if kind not in ("bsc", "symmetric"):
            raise ConfigError(f"q sweep needs bsc or symmetric noise, got {cfg.noise!r}")
        return cfg.replace(noise=f"{kind}:{value:g}")
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")


def sweep(cfg: ExperimentConfig, axis: str, values: Iterable[float]) -> list[dict[str, str]]:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    rows = []
    for v in values:
        point = cfg
        try:
            point = with_axis(cfg, axis, v)
            rows.append(result_row(run_experiment(point)))
        except (ConfigError, ResourceError, ValueError) as exc:
            log.warning("sweep point %s=%s failed: %s", axis, v, exc)
            rows.append(failed_row(point, exc))
    return rows
