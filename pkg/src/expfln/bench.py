"""Experiment runner: scenarios, per-block metrics, EMSE sweep and timing."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import scenarios as sc
from .adaptive_td import DivergenceError, efln_lms_run, td_init
from .analysis import InstabilityError, MomentAccumulator, theoretical_emse
from .dsp import derive_seed, fir_filter_direct, make_rng
from .expansion import ExpansionKind
from .fdefln import fdefln_block, fdefln_init
from .nanc import SecondaryPath, efslms_init, efslms_run, fdefslms_block, fdefslms_init
from .scenarios import ScenarioKind

DB_FLOOR = -400.0
DB_CEIL = 400.0

CSV_COLUMNS = ("algo", "trial", "block", "mse_db", "smoothed_mse_db", "erle_db", "q",
               "us_per_block")


@dataclass(frozen=True)
class AlgoSpec:
    frequency_domain: bool
    kind: ExpansionKind
    filtered: bool


ALGORITHMS = {
    "EFLN": AlgoSpec(False, ExpansionKind.EFLN, False),
    "TFLN": AlgoSpec(False, ExpansionKind.TFLN, False),
    "FDEFLN": AlgoSpec(True, ExpansionKind.EFLN, False),
    "FDTFLN": AlgoSpec(True, ExpansionKind.TFLN, False),
    "FDPF": AlgoSpec(True, ExpansionKind.POWER, False),
    "FDAF": AlgoSpec(True, ExpansionKind.LINEAR, False),
    "EFsLMS": AlgoSpec(False, ExpansionKind.EFLN, True),
    "FsLMS": AlgoSpec(False, ExpansionKind.TFLN, True),
    "FDEFsLMS": AlgoSpec(True, ExpansionKind.EFLN, True),
    "FDFsLMS": AlgoSpec(True, ExpansionKind.TFLN, True),
    "FDPFsLMS": AlgoSpec(True, ExpansionKind.POWER, True),
    "FDFxLMS": AlgoSpec(True, ExpansionKind.LINEAR, True),
}

_FIXTURE_STREAM = 0x5EED
_FILTERED_SCENARIOS = (ScenarioKind.NANC_POLY, ScenarioKind.NANC_CHAOTIC)


class UsageError(ValueError):
    pass


# --- configuration -------------------------------------------------------------

@dataclass
class RunConfig:
    kind: ScenarioKind = ScenarioKind.IDENT_EFLN
    M: int = 64
    P: int = 2
    N: int = 0
    mu_w: float = 1e-3
    mu_q: float = 5e-3
    q0: float = 0.0
    snr_db: float = 40.0
    trials: int = 1
    blocks: int = 1000
    seed: int = 0
    flip_block: int = -1
    algos: tuple = ("FDEFLN",)
    window: int = 1
    workers: int = 1
    input: str = "default"
    input_csv: str = ""
    input_gain: float = 1.0
    q_bar: float = sc.IDEAL_Q
    weights_norm: float = 1.0
    out: str = ""
    # per-algorithm overrides, e.g. {"FDAF": 0.09}
    mu: dict = field(default_factory=dict)
    mu_q_by_algo: dict = field(default_factory=dict)
    P_by_algo: dict = field(default_factory=dict)

    def validate(self):
        self.kind = ScenarioKind(self.kind)
        if self.M < 1 or self.P < 1 or self.trials < 1 or self.blocks < 1:
            raise UsageError("M, P, trials and blocks must be positive")
        if self.workers < 1:
            raise UsageError("workers must be at least 1")
        if self.window < 1:
            raise UsageError("window must be at least 1")
        if not self.algos:
            raise UsageError("select at least one algorithm")
        if not math.isfinite(self.snr_db) and self.kind in (ScenarioKind.IDENT_EFLN, ScenarioKind.NSI):
            raise UsageError("identification scenarios need a finite SNR")
        for a in self.algos:
            if a not in ALGORITHMS:
                raise UsageError(f"unknown algorithm {a!r}; known: {', '.join(ALGORITHMS)}")
            filtered = ALGORITHMS[a].filtered
            if filtered != (self.kind in _FILTERED_SCENARIOS):
                raise UsageError(f"algorithm {a} does not fit scenario {self.kind.value}")
        return self

    def steps(self, algo: str):
        spec = ALGORITHMS[algo]
        mu_w = self.mu.get(algo, self.mu_w)
        mu_q = self.mu_q_by_algo.get(algo, self.mu_q) if spec.kind is ExpansionKind.EFLN else 0.0
        return mu_w, mu_q

    def order(self, algo: str) -> int:
        return self.P_by_algo.get(algo, self.P)

    @property
    def flip(self):
        if self.kind is not ScenarioKind.NANC_CHAOTIC:
            return None
        return self.blocks // 2 if self.flip_block < 0 else self.flip_block


_SCALAR_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value: str):
    t = _SCALAR_TYPES[key]
    if key == "algos":
        return tuple(a.strip() for a in value.split(",") if a.strip())
    if key == "kind":
        return ScenarioKind(value.strip().upper())
    if t in ("int", int):
        return int(float(value))
    if t in ("float", float):
        return float(value)
    return value.strip()


def apply_setting(cfg: RunConfig, key: str, value: str) -> RunConfig:
    key = key.strip()
    try:
        if "." in key:
            base, algo = key.split(".", 1)
            table = {"mu": cfg.mu, "mu_w": cfg.mu, "mu_q": cfg.mu_q_by_algo,
                     "P": cfg.P_by_algo}.get(base)
            if table is None or algo not in ALGORITHMS:
                raise UsageError(f"unknown setting {key!r}")
            table[algo] = int(value) if base == "P" else float(value)
            return cfg
        if key not in _SCALAR_TYPES or key in ("mu", "mu_q_by_algo", "P_by_algo"):
            raise UsageError(f"unknown setting {key!r}")
        setattr(cfg, key, _coerce(key, value))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad value for {key}: {value!r}") from None
    return cfg


def parse_config(text: str, cfg: RunConfig | None = None) -> RunConfig:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    cfg = RunConfig() if cfg is None else cfg
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected key = value")
        k, v = line.split("=", 1)
        apply_setting(cfg, k, v)
    return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


# --- scenarios ------------------------------------------------------------------

@dataclass
class ScenarioData:
    u: np.ndarray
    d: np.ndarray
    ybar: np.ndarray | None = None
    path: SecondaryPath | None = None
    noise_var: float = 0.0
    flip_block: int | None = None


def _input_or(cfg, fallback, n):
    if cfg.input_csv:
        x = sc.load_signal_csv(cfg.input_csv)
        if x.size < n:
            raise UsageError(f"{cfg.input_csv} holds {x.size} samples, run needs {n}")
        x = x[:n]
    else:
        x = fallback()
    return x * cfg.input_gain if cfg.input_gain != 1.0 else x


def _add_noise(cfg, ybar, rng):
    if not math.isfinite(cfg.snr_db):
        return ybar.copy(), 0.0
    noise = sc.gen_awgn_for_snr(ybar, cfg.snr_db, rng)
    return ybar + noise, sc.noise_variance_for_snr(ybar, cfg.snr_db)


def build_scenario(cfg: RunConfig, trial: int) -> ScenarioData:
    """Signals for one trial. Plant fixtures depend on the seed only, not the trial."""
    n = cfg.M * cfg.blocks
    rng = make_rng(derive_seed(cfg.seed, trial))
    # fixtures (plant weights, room response) are shared by all trials
    fixed = np.random.default_rng([cfg.seed, _FIXTURE_STREAM])
    kind = cfg.kind
    if kind is ScenarioKind.IDENT_EFLN:
        w_bar = sc.ident_weights(fixed, cfg.M, cfg.P, cfg.weights_norm)
        if cfg.input == "gaussian":
            gen = lambda: rng.normal(size=n)
        else:
            gen = lambda: sc.gen_uniform(rng, -1.0, 1.0, n)
        u = _input_or(cfg, gen, n)
        ybar = sc.ident_efln_plant(u, w_bar, cfg.q_bar, cfg.P)
        d, var = _add_noise(cfg, ybar, rng)
        return ScenarioData(u, d, ybar, noise_var=var)
    if kind is ScenarioKind.NSI:
        u = _input_or(cfg, lambda: sc.gen_uniform(rng, -0.5, 0.5, n), n)
        ybar = sc.nsi_plant(u)
        d, var = _add_noise(cfg, ybar, rng)
        return ScenarioData(u, d, ybar, noise_var=var)
    if kind is ScenarioKind.NAEC_SIGMOID:
        u = _input_or(cfg, lambda: sc.speech_standin(rng, n), n)
        echo = fir_filter_direct(sc.loudspeaker(u), sc.room_response(fixed))
        d, var = _add_noise(cfg, echo, rng)
        return ScenarioData(u, d, echo, noise_var=var)
    if kind is ScenarioKind.NANC_POLY:
        fx = sc.path_fixtures("engine")
        u = _input_or(cfg, lambda: sc.engine_standin(rng, n), n)
        d = sc.nanc_poly_primary(fir_filter_direct(u, fx.primary))
        return ScenarioData(u, d, path=SecondaryPath(fx.secondary))
    if kind is ScenarioKind.NANC_CHAOTIC:
        fx = sc.path_fixtures("chaotic")
        u = _input_or(cfg, lambda: sc.gen_logistic(n), n)
        d = fir_filter_direct(u, fx.primary)
        return ScenarioData(u, d, path=SecondaryPath(fx.secondary, 3.3, 0.3),
                            flip_block=cfg.flip)
    raise UsageError(f"unsupported scenario {kind}")


# --- algorithm drivers ------------------------------------------------------------

class Runner:
    """Uniform block interface over the time- and frequency-domain filters."""

    def __init__(self, algo: str, cfg: RunConfig, path: SecondaryPath | None = None):
        spec = ALGORITHMS[algo]
        self.algo, self.spec, self.path = algo, spec, path
        M, P = cfg.M, cfg.order(algo)
        mu_w, mu_q = cfg.steps(algo)
        q0 = cfg.q0 if spec.kind is ExpansionKind.EFLN else 0.0
        if spec.filtered:
            if path is None:
                raise UsageError(f"{algo} needs a secondary path")
            if spec.frequency_domain:
                self.state = fdefslms_init(M, P, mu_w, mu_q, q0, spec.kind)
            else:
                self.state = efslms_init(M, P, path.N, mu_w, mu_q, q0, spec.kind)
        elif spec.frequency_domain:
            self.state = fdefln_init(M, P, mu_w, mu_q, q0, spec.kind)
        else:
            self.state = td_init(M, P, mu_w, mu_q, q0, spec.kind)

    @property
    def q(self) -> float:
        return self.state.q

    def flip_path(self):
        self.path = self.path.flipped()

    def process(self, u_blk, d_blk):
        """Returns ``(e, y)``; ``y`` is None for the filtered controllers."""
        st, spec = self.state, self.spec
        if spec.filtered:
            if spec.frequency_domain:
                return fdefslms_block(st, self.path, u_blk, d_blk), None
            return efslms_run(st, self.path, u_blk, d_blk), None
        if spec.frequency_domain:
            y, e = fdefln_block(st, u_blk, d_blk)
        else:
            y, e = efln_lms_run(st, u_blk, d_blk)
        return e, y


# --- metrics ----------------------------------------------------------------------

def mse_db(errors) -> float:
    x = np.asarray(errors, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty window")
    ms = float(np.mean(x ** 2))
    return DB_FLOOR if ms == 0.0 else max(DB_FLOOR, 10.0 * math.log10(ms))


def erle_db(d, e) -> float:
    pd = float(np.mean(np.asarray(d, dtype=np.float64) ** 2))
    pe = float(np.mean(np.asarray(e, dtype=np.float64) ** 2))
    if pe == 0.0:
        return DB_CEIL
    if pd == 0.0:
        return DB_FLOOR
    return float(np.clip(10.0 * math.log10(pd / pe), DB_FLOOR, DB_CEIL))


def _db(ms: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.maximum(10.0 * np.log10(ms), DB_FLOOR)


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean; the first ``window - 1`` outputs average what is available."""
    c = np.cumsum(np.concatenate([[0.0], x]))
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


@dataclass
class TrialResult:
    algo: str
    trial: int
    block_ms: np.ndarray
    block_d_power: np.ndarray
    q: np.ndarray
    us: np.ndarray
    diverged_at: int | None = None


def run_trial(algo: str, cfg: RunConfig, data: ScenarioData, trial: int) -> TrialResult:
    runner = Runner(algo, cfg, data.path)
    M, nb = cfg.M, cfg.blocks
    ms = np.zeros(nb)
    dp = np.zeros(nb)
    qs = np.zeros(nb)
    us = np.zeros(nb)
    for b in range(nb):
        if data.flip_block is not None and b == data.flip_block:
            runner.flip_path()
        sl = slice(b * M, (b + 1) * M)
        t0 = time.perf_counter_ns()
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                e, _ = runner.process(data.u[sl], data.d[sl])
        except DivergenceError:
            return TrialResult(algo, trial, ms[:b], dp[:b], qs[:b], us[:b], diverged_at=b)
        us[b] = (time.perf_counter_ns() - t0) / 1e3
        ms[b] = np.mean(e ** 2)
        dp[b] = np.mean(data.d[sl] ** 2)
        qs[b] = runner.q
    return TrialResult(algo, trial, ms, dp, qs, us)


def _trial_job(args):
    cfg, trial = args
    data = build_scenario(cfg, trial)
    return [run_trial(algo, cfg, data, trial) for algo in cfg.algos]


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def run_experiment(cfg: RunConfig, out=None, timing: bool = True):
    """Run every (algorithm, trial) pair and write the metrics CSV.

    ``out`` may be a path, a text stream or None (returns the CSV text).
    Returns ``(csv_text, diverged)`` where ``diverged`` lists
    ``(algo, trial, block)`` triples.
    """
    cfg.validate()
    erle = cfg.kind is ScenarioKind.NAEC_SIGMOID
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_trial = list(pool.map(_trial_job, [(cfg, t) for t in range(cfg.trials)]))
    else:
        per_trial = [_trial_job((cfg, t)) for t in range(cfg.trials)]
    results = {a: [] for a in cfg.algos}
    diverged = []
    for trial_runs in per_trial:   # already in trial order
        for r in trial_runs:
            results[r.algo].append(r)
            if r.diverged_at is not None:
                diverged.append((r.algo, r.trial, r.diverged_at))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for algo in cfg.algos:
        runs = results[algo]
        nb = min(r.block_ms.size for r in runs)
        ens = np.mean([r.block_ms[:nb] for r in runs], axis=0) if nb else np.zeros(0)
        smooth = _db(moving_average(ens, cfg.window)) if nb else ens
        for r in runs:
            for b in range(r.block_ms.size):
                row = [algo, r.trial, b, _fmt(_db(np.array([r.block_ms[b]]))[0]),
                       _fmt(smooth[b]) if b < nb else "",
                       _fmt(erle_db(np.sqrt(r.block_d_power[b]), np.sqrt(r.block_ms[b])))
                       if erle else "",
                       _fmt(r.q[b]) if ALGORITHMS[algo].kind is ExpansionKind.EFLN else "",
                       f"{r.us[b]:.1f}" if timing else ""]
                writer.writerow(row)
            if r.diverged_at is not None:
                writer.writerow([algo, r.trial, r.diverged_at, "diverged", "", "", "", ""])
    text = buf.getvalue()
    if isinstance(out, (str, bytes)) or hasattr(out, "__fspath__"):
        with open(out, "w", newline="") as fh:
            fh.write(text)
    elif out is not None:
        out.write(text)
    return text, diverged


def ensemble_mse(cfg: RunConfig, algo: str) -> np.ndarray:
    """Per-block ensemble mean-square error (linear scale) for one algorithm."""
    cfg = replace(cfg, algos=(algo,)).validate()
    runs = [run_trial(algo, cfg, build_scenario(cfg, t), t) for t in range(cfg.trials)]
    bad = [r for r in runs if r.diverged_at is not None]
    if bad:
        raise DivergenceError(bad[0].diverged_at)
    return np.mean([r.block_ms for r in runs], axis=0)


# --- EMSE sweep -----------------------------------------------------------------

@dataclass
class SweepRow:
    mu: float
    simulated_db: float
    theoretical_db: float
    stable: bool = True


def emse_sweep(cfg: RunConfig, mus, tail_blocks: int = 50):
    """Simulated vs theoretical steady-state EMSE of FDEFLN with ``mu_w = mu_q = mu``.

    Both sides use the last ``tail_blocks`` blocks (``50 M`` samples by
    default) of every trial: the simulated value averages the a priori error
    energy, the theoretical value plugs the averaged traces into the
    closed form.
    """
    cfg = replace(cfg, kind=ScenarioKind.IDENT_EFLN, algos=("FDEFLN",)).validate()
    if cfg.blocks < tail_blocks:
        raise UsageError(f"need at least {tail_blocks} blocks")
    M = cfg.M
    datasets = [build_scenario(cfg, t) for t in range(cfg.trials)]
    rows = []
    for mu in mus:
        acc = MomentAccumulator(M)
        sims = []
        stable = True
        for data in datasets:
            st = fdefln_init(M, cfg.P, mu, mu, cfg.q0)
            try:
                for b in range(cfg.blocks):
                    sl = slice(b * M, (b + 1) * M)
                    with np.errstate(over="ignore", invalid="ignore"):
                        y, _ = fdefln_block(st, data.u[sl], data.d[sl])
                    if b >= cfg.blocks - tail_blocks:
                        acc.add_history(st.last_g_hist, st.last_z)
                        sims.append(np.sum((data.ybar[sl] - y) ** 2) / M)
            except DivergenceError:
                stable = False
                break
        noise_var = float(np.mean([dd.noise_var for dd in datasets]))
        if not stable:
            rows.append(SweepRow(mu, math.nan, math.nan, False))
            continue
        sim_db = 10.0 * math.log10(float(np.mean(sims)))
        try:
            th = theoretical_emse(mu, mu, acc.estimates(noise_var, tail_blocks))
            th_db = 10.0 * math.log10(th)
        except InstabilityError:
            rows.append(SweepRow(mu, sim_db, math.nan, False))
            continue
        rows.append(SweepRow(mu, sim_db, th_db, True))
    return rows


def write_sweep(rows, out):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("mu", "simulated_db", "theoretical_db", "stable"))
    for r in rows:
        writer.writerow((f"{r.mu:.6g}", _fmt(r.simulated_db), _fmt(r.theoretical_db),
                         int(r.stable)))


# --- timing -----------------------------------------------------------------------

@dataclass
class TimingStats:
    algo: str
    median_us: float
    q1_us: float
    q3_us: float
    blocks: int

    @property
    def iqr_us(self) -> float:
        return self.q3_us - self.q1_us


def time_per_block(algo: str, cfg: RunConfig, blocks: int = 200, warmup: int = 20) -> TimingStats:
    """Wall-clock cost per block (median and quartiles, warmup blocks excluded)."""
    if blocks < 100:
        raise UsageError("time at least 100 blocks")
    spec = ALGORITHMS[algo]
    kind = ScenarioKind.NANC_POLY if spec.filtered else ScenarioKind.IDENT_EFLN
    # small steps keep long filters finite; only the arithmetic is being timed
    cap = 1e-3 / (cfg.M * (2 * cfg.order(algo) + 1))
    cfg = replace(cfg, kind=kind, algos=(algo,), blocks=blocks + warmup, trials=1,
                  mu_w=min(cfg.mu_w, cap), mu_q=min(cfg.mu_q, cap), mu={}, mu_q_by_algo={},
                  snr_db=40.0, input="default", input_csv="").validate()
    data = build_scenario(cfg, 0)
    r = run_trial(algo, cfg, data, 0)
    if r.diverged_at is not None:
        raise DivergenceError(r.diverged_at)
    t = r.us[warmup:]
    q1, med, q3 = np.percentile(t, [25, 50, 75])
    return TimingStats(algo, float(med), float(q1), float(q3), t.size)
