"""Simulation laboratory: data generators, scoring, benchmark runner.

Replications are driven by a counter-based splittable generator: each
(seed, replication, stream) triple keys its own Philox stream, so a
replication's data does not depend on execution order and benchmark runs
are reproducible under any worker count.
"""

from __future__ import annotations

import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset, ModelSubset
from .errors import InputError, MdlSelectError
from .pipeline import (
    ALL_METHODS,
    METHOD_ADDITIVE,
    METHOD_ADDITIVE_ROBUST,
    METHOD_LINEAR,
    METHOD_ROBUST,
    FitReport,
    fit_additive,
    fit_linear,
    fit_robust,
)
from .splines import SplineBasisSpec

THREADS_ENV_VAR = "MDLSELECT_THREADS"

_STREAM_COVARIATES = 0
_STREAM_ERRORS = 1

LINEAR_METHODS = (METHOD_LINEAR, METHOD_ROBUST)
ADDITIVE_METHODS = (METHOD_ADDITIVE, METHOD_ADDITIVE_ROBUST)


# ---------------------------------------------------------------------------
# Error laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorLaw:
    """A noise distribution: gaussian, laplace, student_t(df), mixture(w, sd).

    The mixture is a scale contamination: with probability ``weight`` a
    draw is N(0, sd^2) instead of N(0, 1).
    """

    name: str
    df: float | None = None
    weight: float | None = None
    sd: float | None = None

    def __post_init__(self):
        if self.name == "gaussian" or self.name == "laplace":
            pass
        elif self.name == "student_t":
            if self.df is None or self.df <= 0:
                raise InputError(f"student_t needs df > 0, got {self.df}")
        elif self.name == "mixture":
            if self.weight is None or not (0.0 <= self.weight < 1.0):
                raise InputError(
                    f"mixture weight must be in [0, 1), got {self.weight}"
                )
            if self.sd is None or self.sd <= 0:
                raise InputError(f"mixture sd must be > 0, got {self.sd}")
        else:
            raise InputError(f"unknown error law {self.name!r}")

    @classmethod
    def parse(cls, text) -> "ErrorLaw":
        if isinstance(text, ErrorLaw):
            return text
        s = str(text).strip()
        if s == "gaussian":
            return cls("gaussian")
        if s == "laplace":
            return cls("laplace")
        m = re.fullmatch(r"student_t\(\s*([^),\s]+)\s*\)", s)
        if m:
            return cls("student_t", df=float(m.group(1)))
        m = re.fullmatch(r"mixture\(\s*([^,)\s]+)\s*,\s*([^,)\s]+)\s*\)", s)
        if m:
            return cls("mixture", weight=float(m.group(1)), sd=float(m.group(2)))
        raise InputError(
            f"cannot parse error law {text!r}; expected gaussian, laplace, "
            "student_t(df), or mixture(w, sd)"
        )

    def __str__(self) -> str:
        if self.name == "student_t":
            return f"student_t({self.df:g})"
        if self.name == "mixture":
            return f"mixture({self.weight:g},{self.sd:g})"
        return self.name


def draw_errors(law, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` errors from the given law using the supplied generator."""
    law = ErrorLaw.parse(law)
    if n < 0:
        raise InputError(f"n must be >= 0, got {n}")
    if law.name == "gaussian":
        return rng.standard_normal(n)
    if law.name == "laplace":
        # Inverse CDF of Laplace(0, 1) applied to uniforms on (-1/2, 1/2).
        u = rng.random(n) - 0.5
        return -np.sign(u) * np.log1p(-2.0 * np.abs(u))
    if law.name == "student_t":
        return rng.standard_t(law.df, size=n)
    # Scale mixture: the uniform and normal streams are drawn in a fixed
    # order so that weight 0 reproduces the plain normal draws exactly.
    contaminated = rng.random(n) < law.weight
    z = rng.standard_normal(n)
    return np.where(contaminated, law.sd * z, z)


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """One benchmark scenario: a design, its shape, and what to run on it."""

    design: str
    n: int
    p: int
    d: int
    b: float = 1.0
    rho: float = 0.5
    t_corr: float = 0.0
    error_law: ErrorLaw = ErrorLaw("gaussian")
    replications: int = 1
    seed: int = 0
    methods: tuple[str, ...] = ()
    basis_dim: int = 9
    degree: int = 3

    def __post_init__(self):
        if self.design not in ("linear", "additive"):
            raise InputError(f"design must be linear or additive, got {self.design!r}")
        if self.n < 2:
            raise InputError(f"n must be >= 2, got {self.n}")
        if self.p < 1:
            raise InputError(f"p must be >= 1, got {self.p}")
        if not (0 <= self.d <= self.p):
            raise InputError(f"d must be in [0, p], got d={self.d}, p={self.p}")
        if self.design == "additive" and self.d != 4:
            raise InputError(
                "the additive design has exactly 4 signal components; set d=4"
            )
        if self.design == "additive" and self.t_corr < 0:
            raise InputError(f"t_corr must be >= 0, got {self.t_corr}")
        if not (-1.0 < self.rho < 1.0):
            raise InputError(f"rho must be in (-1, 1), got {self.rho}")
        if self.replications < 1:
            raise InputError(f"replications must be >= 1, got {self.replications}")
        law = ErrorLaw.parse(self.error_law)
        if law.name == "mixture" and not (0.0 < law.weight < 1.0):
            raise InputError(
                f"mixture weight must be in (0, 1) for a benchmark, got {law.weight}"
            )
        object.__setattr__(self, "error_law", law)

        methods = tuple(self.methods) or (
            LINEAR_METHODS if self.design == "linear" else ADDITIVE_METHODS
        )
        allowed = LINEAR_METHODS if self.design == "linear" else ADDITIVE_METHODS
        for m in methods:
            if m not in allowed:
                raise InputError(
                    f"method {m!r} does not apply to the {self.design} design "
                    f"(allowed: {allowed})"
                )
        object.__setattr__(self, "methods", methods)
        # Validate the basis shape eagerly.
        SplineBasisSpec(degree=self.degree, basis_dim=self.basis_dim)

    @classmethod
    def from_dict(cls, obj: dict) -> "SimConfig":
        if not isinstance(obj, dict):
            raise InputError("benchmark config must be a JSON object")
        known = {
            "design", "n", "p", "d", "b", "rho", "t_corr", "error_law",
            "replications", "seed", "methods", "basis_dim", "degree",
        }
        unknown = set(obj) - known
        if unknown:
            raise InputError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(obj)
        if "methods" in kwargs and kwargs["methods"] is not None:
            kwargs["methods"] = tuple(kwargs["methods"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "design": self.design,
            "n": self.n,
            "p": self.p,
            "d": self.d,
            "b": self.b,
            "rho": self.rho,
            "t_corr": self.t_corr,
            "error_law": str(self.error_law),
            "replications": self.replications,
            "seed": self.seed,
            "methods": list(self.methods),
            "basis_dim": self.basis_dim,
            "degree": self.degree,
        }


def replication_rng(seed: int, rep: int, stream: int) -> np.random.Generator:
    """Independent generator for one (seed, replication, stream) triple."""
    if rep < 0 or stream < 0:
        raise InputError("replication and stream indices must be >= 0")
    key = np.array(
        [seed & 0xFFFFFFFFFFFFFFFF, ((rep & 0xFFFFFFFFFFFF) << 16) | (stream & 0xFFFF)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def generate_linear(cfg: SimConfig, rep: int = 0):
    """One linear replication: AR(1) covariates, d leading signal columns.

    Returns ``(dataset, beta)`` where beta is the length-p coefficient
    vector (b on the first d entries). Covariates follow
    ``x_1 = z_1``, ``x_j = rho * x_{j-1} + sqrt(1 - rho^2) * z_j`` with
    standard normal innovations, so each column is marginally N(0, 1) with
    corr(x_j, x_k) = rho^|j-k|.
    """
    if cfg.design != "linear":
        raise InputError("generate_linear needs a linear-design config")
    rng_x = replication_rng(cfg.seed, rep, _STREAM_COVARIATES)
    Z = rng_x.standard_normal((cfg.n, cfg.p))
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    w = math.sqrt(1.0 - cfg.rho**2)
    for j in range(1, cfg.p):
        X[:, j] = cfg.rho * X[:, j - 1] + w * Z[:, j]
    beta = np.zeros(cfg.p)
    beta[: cfg.d] = cfg.b
    rng_e = replication_rng(cfg.seed, rep, _STREAM_ERRORS)
    eps = draw_errors(cfg.error_law, cfg.n, rng_e)
    y = X @ beta + eps
    return Dataset(y=y, X=X), beta


def f1(x):
    return 5.0 * np.asarray(x, dtype=float)


def f2(x):
    x = np.asarray(x, dtype=float)
    return 3.0 * (2.0 * x - 1.0) ** 2


def f3(x):
    x = np.asarray(x, dtype=float)
    s = np.sin(2.0 * np.pi * x)
    return 4.0 * s / (2.0 - s)


def f4(x):
    x = np.asarray(x, dtype=float)
    s = np.sin(2.0 * np.pi * x)
    c = np.cos(2.0 * np.pi * x)
    return 6.0 * (0.1 * s + 0.2 * c + 0.3 * s**2 + 0.4 * c**3 + 0.5 * s**3)


ADDITIVE_COMPONENTS = (f1, f2, f3, f4)


@dataclass(frozen=True)
class AdditiveTruth:
    """True additive signal of a replication: total and per component."""

    signal: np.ndarray
    components: tuple
    support: tuple[int, ...] = (1, 2, 3, 4)


def generate_additive(cfg: SimConfig, rep: int = 0):
    """One additive replication on the unit cube.

    The first four covariates carry the signal components f1..f4. With
    ``t = t_corr`` the signal block shares a latent uniform u and the noise
    block shares a latent uniform k: x_j = (w_j + t*u) / (1 + t) for the
    signal block and (w_j + t*k) / (1 + t) for the rest, all sources iid
    Uniform(0, 1). Returns ``(dataset, truth)``.
    """
    if cfg.design != "additive":
        raise InputError("generate_additive needs an additive-design config")
    t = cfg.t_corr
    rng_x = replication_rng(cfg.seed, rep, _STREAM_COVARIATES)
    omega = rng_x.random((cfg.n, cfg.p))
    u = rng_x.random(cfg.n)
    k = rng_x.random(cfg.n)
    X = np.empty_like(omega)
    denom = 1.0 + t
    for j in range(cfg.p):
        latent = u if j < 4 else k
        X[:, j] = (omega[:, j] + t * latent) / denom
    signal = f1(X[:, 0]) + f2(X[:, 1]) + f3(X[:, 2]) + f4(X[:, 3])
    rng_e = replication_rng(cfg.seed, rep, _STREAM_ERRORS)
    eps = draw_errors(cfg.error_law, cfg.n, rng_e)
    y = signal + eps
    return Dataset(y=y, X=X), AdditiveTruth(signal=signal, components=ADDITIVE_COMPONENTS)


def save_csv(d: Dataset, path) -> None:
    """Write a dataset as a headered CSV that round-trips bit for bit."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["y", *d.names]) + "\n")
        for i in range(d.n):
            row = [repr(float(d.y[i]))] + [repr(float(v)) for v in d.X[i]]
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


def score_selection(true_support, selected, p=None) -> tuple[int, int, float]:
    """(false negatives, false positives, F1) of a selected subset.

    F1 = 2*TP / (2*TP + FP + FN); two empty sets agree perfectly (F1 = 1),
    and a selection with no true positive scores 0 unless both are empty.
    When ``p`` is given, indices outside 1..p are rejected.
    """
    truth = set(int(j) for j in true_support)
    if isinstance(selected, ModelSubset):
        chosen = set(selected.indices)
    else:
        chosen = set(int(j) for j in selected)
    if p is not None:
        out = sorted(j for j in truth | chosen if j < 1 or j > int(p))
        if out:
            raise InputError(f"indices out of range 1..{int(p)}: {out}")
    tp = len(truth & chosen)
    fn = len(truth - chosen)
    fp = len(chosen - truth)
    if tp == 0:
        f1 = 1.0 if (fn == 0 and fp == 0) else 0.0
    else:
        f1 = 2.0 * tp / (2.0 * tp + fp + fn)
    return fn, fp, f1


def score_signal_mse(true_signal, fitted_signal) -> float:
    """Mean squared distance between true and fitted signal values."""
    t = np.asarray(true_signal, dtype=float)
    f = np.asarray(fitted_signal, dtype=float)
    if t.shape != f.shape:
        raise InputError(
            f"signal shapes differ: true {t.shape}, fitted {f.shape}"
        )
    return float(np.mean((t - f) ** 2))


# ---------------------------------------------------------------------------
# Benchmark runner
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimReport:
    """Aggregated benchmark results: per-method means over replications."""

    config: SimConfig
    metrics: dict
    replications_used: int
    failures: tuple[tuple[int, str], ...]
    rows: tuple = ()
    seconds_total: float = 0.0

    def to_dict(self) -> dict:
        # Timings live outside "metrics" so the metric fields are
        # byte-identical across reruns of the same config and seed.
        return {
            "config": self.config.to_dict(),
            "metrics": {
                method: {
                    k: float(v) for k, v in vals.items() if k != "seconds"
                }
                for method, vals in self.metrics.items()
            },
            "replications_used": int(self.replications_used),
            "failures": [[int(r), msg] for r, msg in self.failures],
            "timing": {
                "per_method_seconds": {
                    method: float(vals.get("seconds", float("nan")))
                    for method, vals in self.metrics.items()
                },
                "seconds_total": float(self.seconds_total),
            },
        }


def _fit_for_method(method: str, dataset: Dataset, cfg: SimConfig) -> FitReport:
    if method == METHOD_LINEAR:
        return fit_linear(dataset)
    if method == METHOD_ROBUST:
        return fit_robust(dataset)
    spec = SplineBasisSpec(degree=cfg.degree, basis_dim=cfg.basis_dim)
    if method == METHOD_ADDITIVE:
        return fit_additive(dataset, spec=spec, robust=False)
    if method == METHOD_ADDITIVE_ROBUST:
        return fit_additive(dataset, spec=spec, robust=True)
    raise InputError(f"unknown method {method!r}")


def _run_replication(cfg: SimConfig, rep: int):
    """All methods on one replication; returns per-method metric rows."""
    if cfg.design == "linear":
        dataset, beta = generate_linear(cfg, rep)
        true_support = tuple(range(1, cfg.d + 1))
        true_signal = dataset.X @ beta
    else:
        dataset, truth = generate_additive(cfg, rep)
        true_support = truth.support
        true_signal = truth.signal

    rows = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        report = _fit_for_method(method, dataset, cfg)
        seconds = time.perf_counter() - t0
        fn, fp, f1 = score_selection(true_support, report.selected)
        mse = score_signal_mse(true_signal, report.fitted_signal(dataset))
        rows.append(
            {
                "rep": rep,
                "method": method,
                "fn": fn,
                "fp": fp,
                "f1": f1,
                "mse": mse,
                "seconds": seconds,
            }
        )
    return rows


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else MDLSELECT_THREADS, else 1.

    A value of 0 (either way) means one worker per CPU.
    """
    if workers is None:
        raw = os.environ.get(THREADS_ENV_VAR, "1")
        try:
            workers = int(raw)
        except ValueError:
            raise InputError(
                f"{THREADS_ENV_VAR} must be an integer, got {raw!r}"
            ) from None
    if workers < 0:
        raise InputError(f"worker count must be >= 0, got {workers}")
    if workers == 0:
        workers = os.cpu_count() or 1
    return workers


def run_bench(cfg: SimConfig, workers: int | None = None) -> SimReport:
    """Run every replication of a scenario and aggregate per-method means.

    A replication that raises is recorded under ``failures`` and excluded
    from the averages; metrics are means over the surviving replications.
    Results are deterministic for a given config and seed regardless of the
    worker count, because each replication owns its keyed streams.
    """
    t_start = time.perf_counter()
    n_workers = resolve_workers(workers)
    reps = range(cfg.replications)
    results: dict[int, list] = {}
    failures: list[tuple[int, str]] = []

    if n_workers > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = {rep: pool.submit(_run_replication, cfg, rep) for rep in reps}
            for rep in reps:
                try:
                    results[rep] = futures[rep].result()
                except MdlSelectError as exc:
                    failures.append((rep, str(exc)))
    else:
        for rep in reps:
            try:
                results[rep] = _run_replication(cfg, rep)
            except MdlSelectError as exc:
                failures.append((rep, str(exc)))

    rows = [row for rep in sorted(results) for row in results[rep]]
    metrics = {}
    for method in cfg.methods:
        mrows = [r for r in rows if r["method"] == method]
        if mrows:
            metrics[method] = {
                "fn": float(np.mean([r["fn"] for r in mrows])),
                "fp": float(np.mean([r["fp"] for r in mrows])),
                "f1": float(np.mean([r["f1"] for r in mrows])),
                "mse": float(np.mean([r["mse"] for r in mrows])),
                "seconds": float(np.mean([r["seconds"] for r in mrows])),
            }
        else:
            metrics[method] = {
                "fn": float("nan"),
                "fp": float("nan"),
                "f1": float("nan"),
                "mse": float("nan"),
                "seconds": float("nan"),
            }
    return SimReport(
        config=cfg,
        metrics=metrics,
        replications_used=len(results),
        failures=tuple(failures),
        rows=tuple(rows),
        seconds_total=time.perf_counter() - t_start,
    )
