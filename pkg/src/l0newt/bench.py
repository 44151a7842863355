"""Randomized benchmark harness: instance generators for the sensing and
LCP experiment families, seeded trial sweeps, and CSV/JSON emission.

All randomness flows through the Philox counter-based bit generator with
numpy's ziggurat normal transform, so every sweep is bit-reproducible
for a fixed base seed across platforms. Per-trial streams are derived
from SeedSequence entropy (base_seed, kind_code, n, trial) and never
reused between trials.
"""

import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from .oracles import LeastSquaresOracle, NcpLcpOracle, ObjectiveOracle, estimate_lipschitz
from .solver import ConfigurationError, SolverConfig, iht_baseline, lambda_bounds, solve

__all__ = [
    "KIND_CODES",
    "DEFAULT_LAMBDA_FRAC",
    "ProblemInstance",
    "ExperimentRecord",
    "gen_gaussian",
    "gen_signal",
    "make_instance",
    "resolve_bench_config",
    "run_trials",
    "averages",
    "emit_csv",
    "emit_json",
    "trial_entropy",
]

KIND_CODES = {"e1": 1, "e2": 2, "e3": 3, "e4": 4, "e6": 6}

# Fraction of the upper penalty bound used when no penalty is supplied;
# keeps the initial working set on the strongest gradient entries.
DEFAULT_LAMBDA_FRAC = 0.01

CSV_HEADER = "algorithm,kind,n,m,s,trial,iter,time_s,res,fval,support_size,converged,seed"


@dataclass
class ProblemInstance:
    kind: str
    oracle: ObjectiveOracle
    x_star: np.ndarray
    n: int
    m: int
    s_star: int
    noise: float
    seed: int


@dataclass
class ExperimentRecord:
    algorithm: str
    kind: str
    n: int
    m: int
    s: int
    trial: int
    iter: int
    time_s: float
    res: float
    fval: float
    support_size: int
    converged: bool
    seed: int


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def trial_entropy(base_seed: int, kind: str, n: int, trial: int):
    """SeedSequence for one trial plus a scalar seed word for reporting."""
    seq = np.random.SeedSequence([int(base_seed), KIND_CODES[kind], int(n), int(trial)])
    word = int(seq.generate_state(1, np.uint64)[0])
    return seq, word


def gen_gaussian(rows: int, cols: int, seed) -> np.ndarray:
    """rows x cols matrix of i.i.d. standard normals (Philox stream,
    ziggurat transform); identical output for identical seeds."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    return _as_generator(seed).standard_normal((rows, cols))


def gen_signal(n: int, s_star: int, seed) -> np.ndarray:
    """Vector with exactly ``s_star`` nonzeros on a uniformly random
    support, values i.i.d. standard normal."""
    if not 1 <= s_star <= n:
        raise ValueError(f"s_star must lie in [1, {n}]")
    rng = _as_generator(seed)
    idx = rng.choice(n, size=s_star, replace=False)
    vals = rng.standard_normal(s_star)
    while np.any(vals == 0.0):  # keep the nonzero count exact
        zero = vals == 0.0
        vals[zero] = rng.standard_normal(int(zero.sum()))
    x = np.zeros(n)
    x[idx] = vals
    return x


def make_instance(
    kind: str,
    n: int,
    m: int | None = None,
    s_star: int | None = None,
    noise: float | None = None,
    seed=0,
    dense_cutoff: int = 2000,
) -> ProblemInstance:
    """Build one seeded benchmark problem.

    e1: dense m x n Gaussian sensing, y = A x*.
    e2: factored square operator A = B C with inner dimension m.
    e3: e2 plus white noise of level ``noise`` on y.
    e4: e1 plus white noise of level ``noise`` on y.
    e6: LCP merit objective with M = Z Z^T (Z Gaussian, unit-norm
        columns), nonnegative sparse x*, and q chosen so that x* solves
        the complementarity system exactly.

    Defaults: m = n/4 (e6: n/2), s_star = 0.01 n, noise = 0.001 for the
    noisy kinds and 0 otherwise.
    """
    if kind not in KIND_CODES:
        raise ConfigurationError(f"unknown experiment kind {kind!r}")
    if m is None:
        m = n // 2 if kind == "e6" else max(1, round(0.25 * n))
    if s_star is None:
        s_star = max(1, round(0.01 * n))
    if noise is None:
        noise = 0.001 if kind in ("e3", "e4") else 0.0
    if kind in ("e1", "e4") and not m < n:
        raise ConfigurationError("e1/e4 require m < n")
    if kind in ("e2", "e3", "e6") and not m <= n:
        raise ConfigurationError("inner dimension m must not exceed n")
    if isinstance(seed, np.random.SeedSequence):
        seq, seed_word = seed, int(seed.generate_state(1, np.uint64)[0])
    else:
        seq, seed_word = np.random.SeedSequence(int(seed)), int(seed)
    rng = _as_generator(seq)

    if kind in ("e1", "e4"):
        a = rng.standard_normal((m, n))
        x_star = gen_signal(n, s_star, rng)
        y = a @ x_star
        if kind == "e4" and noise > 0:
            y = y + noise * rng.standard_normal(m)
        oracle = LeastSquaresOracle(a, y, dense_cutoff=dense_cutoff)
    elif kind in ("e2", "e3"):
        b = rng.standard_normal((n, m))
        c = rng.standard_normal((m, n))
        x_star = gen_signal(n, s_star, rng)
        y = b @ (c @ x_star)
        if kind == "e3" and noise > 0:
            y = y + noise * rng.standard_normal(n)
        oracle = LeastSquaresOracle.from_factors(b, c, y, dense_cutoff=dense_cutoff)
    else:  # e6
        z = rng.standard_normal((n, m))
        z /= np.linalg.norm(z, axis=0)
        m_matrix = z @ z.T
        x_star = np.abs(gen_signal(n, s_star, rng))
        mx = m_matrix @ x_star
        q = np.where(x_star > 0, -mx, np.abs(mx))
        oracle = NcpLcpOracle(m_matrix, q, dense_cutoff=dense_cutoff)
    return ProblemInstance(
        kind=kind,
        oracle=oracle,
        x_star=x_star,
        n=n,
        m=m,
        s_star=s_star,
        noise=noise,
        seed=seed_word,
    )


def resolve_bench_config(instance: ProblemInstance, overrides: dict | None = None) -> SolverConfig:
    """Solver configuration for one instance.

    Unless overridden, tau = 1 / (4 L_hat) from the power-iteration
    smoothness estimate and lam = lambda_frac * lambda_upper, a fixed
    fraction of the penalty at which the origin turns stationary. The
    override dict accepts every SolverConfig field plus ``lambda_frac``.
    """
    overrides = dict(overrides or {})
    lambda_frac = overrides.pop("lambda_frac", DEFAULT_LAMBDA_FRAC)
    cfg_kwargs = {}
    for key, value in overrides.items():
        if not hasattr(SolverConfig, "__dataclass_fields__") or key not in SolverConfig.__dataclass_fields__:
            raise ConfigurationError(f"unknown solver override {key!r}")
        cfg_kwargs[key] = value
    if "tau" not in cfg_kwargs or cfg_kwargs["tau"] is None:
        lipschitz = estimate_lipschitz(instance.oracle, iters=50, seed=0)
        cfg_kwargs["tau"] = 1.0 / (4.0 * lipschitz)
    if "lam" not in cfg_kwargs or cfg_kwargs["lam"] is None:
        _, upper = lambda_bounds(instance.oracle, cfg_kwargs["tau"])
        cfg_kwargs["lam"] = lambda_frac * upper
    return SolverConfig(**cfg_kwargs)


def _run_algorithm(algorithm: str, instance: ProblemInstance, cfg: SolverConfig):
    if algorithm == "mbnl0r":
        return solve(instance.oracle, cfg)
    if algorithm == "iht":
        return iht_baseline(
            instance.oracle,
            tau=cfg.tau,
            lam=cfg.lam,
            epsilon=cfg.epsilon,
            max_iter=cfg.max_iter,
        )
    raise ConfigurationError(f"unknown algorithm {algorithm!r}")


def run_trials(
    kind: str,
    sizes,
    trials: int,
    algorithms=("mbnl0r",),
    base_seed: int = 0,
    m_ratio: float | None = None,
    sparsity_ratio: float = 0.01,
    noise: float | None = None,
    overrides: dict | None = None,
    record_time: bool = True,
    dense_cutoff: int = 2000,
) -> list[ExperimentRecord]:
    """Seeded sweep over (size, trial, algorithm).

    Every trial owns an independent Philox stream derived from
    (base_seed, kind, n, trial); the set of records is a pure function
    of the arguments (wall times excepted, and zeroed when
    ``record_time`` is false). Timing wraps the solver call only, after
    one discarded warm-up run; a failed trial is recorded as a
    non-converged row rather than aborting the sweep.
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    records: list[ExperimentRecord] = []
    warmed_up = False
    for n in sizes:
        n = int(n)
        m = None if m_ratio is None else max(1, round(m_ratio * n))
        s_star = max(1, round(sparsity_ratio * n))
        for trial in range(trials):
            seq, seed_word = trial_entropy(base_seed, kind, n, trial)
            instance = make_instance(
                kind, n, m=m, s_star=s_star, noise=noise, seed=seq,
                dense_cutoff=dense_cutoff,
            )
            instance.seed = seed_word
            cfg = resolve_bench_config(instance, overrides)
            for algorithm in algorithms:
                if not warmed_up:
                    _run_algorithm(algorithm, instance, cfg)
                    warmed_up = True
                try:
                    t0 = time.perf_counter()
                    report = _run_algorithm(algorithm, instance, cfg)
                    elapsed = time.perf_counter() - t0
                    x_final = report.x_final
                    iterations = report.iterations
                    converged = report.converged
                except Exception:
                    x_final = np.zeros(instance.n)
                    elapsed = 0.0
                    iterations = 0
                    converged = False
                records.append(
                    ExperimentRecord(
                        algorithm=algorithm,
                        kind=kind,
                        n=instance.n,
                        m=instance.m,
                        s=instance.s_star,
                        trial=trial,
                        iter=iterations,
                        time_s=elapsed if record_time else 0.0,
                        res=float(np.linalg.norm(x_final - instance.x_star)),
                        fval=float(instance.oracle.value(x_final)),
                        support_size=int(np.count_nonzero(x_final)),
                        converged=converged,
                        seed=seed_word,
                    )
                )
    return records


def averages(records) -> list[dict]:
    """Per (algorithm, kind, n) means; iteration counts rounded to the
    nearest integer."""
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for rec in records:
        groups.setdefault((rec.algorithm, rec.kind, rec.n), []).append(rec)
    out = []
    for (algorithm, kind, n), rows in groups.items():
        out.append(
            {
                "algorithm": algorithm,
                "kind": kind,
                "n": n,
                "m": rows[0].m,
                "s": rows[0].s,
                "trials": len(rows),
                "iter": int(round(float(np.mean([r.iter for r in rows])))),
                "time_s": float(np.mean([r.time_s for r in rows])),
                "res": float(np.mean([r.res for r in rows])),
                "fval": float(np.mean([r.fval for r in rows])),
                "converged_rate": float(np.mean([r.converged for r in rows])),
            }
        )
    return out


def _format_record(rec: ExperimentRecord) -> str:
    return ",".join(
        [
            rec.algorithm,
            rec.kind,
            str(rec.n),
            str(rec.m),
            str(rec.s),
            str(rec.trial),
            str(rec.iter),
            f"{rec.time_s:.4f}",
            f"{rec.res:.2e}",
            f"{rec.fval:.2e}",
            str(rec.support_size),
            "true" if rec.converged else "false",
            str(rec.seed),
        ]
    )


def emit_csv(records) -> str:
    """Render records as CSV; res and fval carry three significant
    digits in scientific notation."""
    lines = [CSV_HEADER]
    lines.extend(_format_record(rec) for rec in records)
    return "\n".join(lines) + "\n"


def emit_json(records) -> str:
    """JSON document with the raw record array plus the averages block."""
    payload = {
        "records": [asdict(rec) for rec in records],
        "averages": averages(records),
    }
    return json.dumps(payload, indent=2) + "\n"
