"""Seeding, parallel trial loops, Monte Carlo estimates and 1/N fits."""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_CHUNK = 50


def stream_id(name: str) -> int:
    """Stable integer id for a named random stream."""
    return zlib.crc32(name.encode())


def chunk_rng(seed: int, stream: int, N: int, chunk: int) -> np.random.Generator:
    """Independent generator for one chunk of trials.

    The key depends only on (seed, stream, N, chunk), never on the worker that
    runs the chunk, so results do not depend on the thread count.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(stream, N, chunk))
    return np.random.Generator(np.random.Philox(ss))


def run_trials(fn: Callable[[np.random.Generator, int], np.ndarray], trials: int, *, seed: int,
               stream: int, N: int, threads: int = 1, chunk_size: int = DEFAULT_CHUNK) -> np.ndarray:
    """Stack ``fn(rng, n)`` over chunks; rows come back in trial order."""
    sizes = [min(chunk_size, trials - s) for s in range(0, trials, chunk_size)]

    def job(c: int) -> np.ndarray:
        return np.asarray(fn(chunk_rng(seed, stream, N, c), sizes[c]))

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(c) for c in range(len(sizes))]
    return np.concatenate(parts, axis=0)


# --------------------------------------------------------------- estimates


@dataclass(frozen=True)
class MomentEstimate:
    """Sample mean of complex per-trial values.

    ``stderr`` is the standard error of the complex mean: the square root of
    the summed real and imaginary sample variances over ``trials``.
    """

    word: str
    dimension: int
    mode: str
    mean: complex
    stderr: float
    trials: int
    stderr_re: float = 0.0
    stderr_im: float = 0.0

    def zscore(self, prediction: complex) -> float:
        return zscore(self.mean, self.stderr, prediction)


def estimate_from_values(values: Sequence[complex], word: str = "", dimension: int = 0,
                         mode: str = "trace") -> MomentEstimate:
    x = np.asarray(values, dtype=complex).ravel()
    T = x.size
    if T < 2:
        raise ValueError("an estimate needs at least 2 trials")
    mean = complex(x.mean())
    se_re = float(np.std(x.real, ddof=1) / math.sqrt(T))
    se_im = float(np.std(x.imag, ddof=1) / math.sqrt(T))
    return MomentEstimate(word, dimension, mode, mean, math.hypot(se_re, se_im), T, se_re, se_im)


def estimate(word, mode: str, sampler, ensembles, trials: int, v=None) -> MomentEstimate:
    """Monte Carlo estimate of a word state with each ensemble conjugated by ``sampler()``.

    ``ensembles`` maps family to :class:`~vortex.matrices.MatrixEnsemble`;
    ``sampler`` returns a dict family -> unitary for the families to rotate.
    """
    from ..matrices import conjugate, evaluate_word_state

    vals = []
    for _ in range(trials):
        Us = sampler()
        rot = {f: conjugate(Us[f], e) if f in Us else e for f, e in ensembles.items()}
        vals.append(evaluate_word_state(rot, word, mode, v))
    N = next(iter(ensembles.values())).N
    return estimate_from_values(vals, str(word), N, mode)


# tolerance for z-scores of values that carry no Monte Carlo noise
EXACT_RTOL = 1e-9


def zscore(mean: complex, stderr: float, prediction: complex) -> float:
    """``|mean - prediction| / stderr``, with a floor on the stderr.

    Deterministic quantities have stderr 0 up to rounding; the floor
    ``EXACT_RTOL * (1 + |prediction|)`` keeps float noise from producing
    spurious failures while still flagging real discrepancies.
    """
    diff = abs(complex(mean) - complex(prediction))
    floor = EXACT_RTOL * (1.0 + abs(complex(prediction)))
    return diff / max(stderr, floor)


# --------------------------------------------------------------- fitting


@dataclass
class ExpansionFit:
    """Weighted fit ``mean(N) ~ c0 + c1 / N (+ c2 / N**2)``.

    With ``terms=3`` the ``c2`` coefficient absorbs the second-order
    remainder so that it does not bias ``c1``; otherwise ``c2`` is 0.
    ``cov`` is the covariance of (c0, c1) for complex coefficients (total
    variance over real and imaginary parts), inflated by the reduced
    chi-square when it exceeds 1.
    """

    word: str
    c0: complex
    c1: complex
    cov: np.ndarray
    residual_norm: float
    chi2_red: float
    dims: list[int] = field(default_factory=list)
    means: list[complex] = field(default_factory=list)
    stderrs: list[float] = field(default_factory=list)
    exact: bool = False
    c2: complex = 0j
    terms: int = 2

    @property
    def sigma_c0(self) -> float:
        return float(math.sqrt(max(self.cov[0, 0], 0.0)))

    @property
    def sigma_c1(self) -> float:
        return float(math.sqrt(max(self.cov[1, 1], 0.0)))


class FitDegeneracyError(ValueError):
    pass


def fit_expansion(word: str, dims: Sequence[int], means: Sequence[complex],
                  stderrs: Sequence[float], terms: int = 2) -> ExpansionFit:
    dims = list(dims)
    if terms not in (2, 3):
        raise ValueError("terms must be 2 or 3")
    if len(set(dims)) != len(dims) or len(dims) < terms + 1:
        raise FitDegeneracyError(f"a {terms}-term fit needs at least {terms + 1} distinct dimensions")
    x = 1.0 / np.asarray(dims, dtype=float)
    y = np.asarray(means, dtype=complex)
    se = np.asarray(stderrs, dtype=float)
    X = np.column_stack([x ** j for j in range(terms)])
    scale = 1.0 + float(np.max(np.abs(y)))
    exact = bool(np.all(se <= EXACT_RTOL * scale))
    if exact:
        w = np.ones_like(x)
    else:
        w = 1.0 / np.maximum(se, EXACT_RTOL * scale) ** 2
    XtW = X.T * w
    G = XtW @ X
    beta = np.linalg.solve(G, XtW @ y)
    r = y - X @ beta
    dof = len(dims) - terms
    if exact:
        chi2_red = 0.0
        cov = np.zeros((2, 2))
    else:
        chi2_red = float(np.sum(w * np.abs(r) ** 2) / dof)
        cov = np.linalg.inv(G)[:2, :2] * max(1.0, chi2_red)
    c2 = complex(beta[2]) if terms == 3 else 0j
    return ExpansionFit(word, complex(beta[0]), complex(beta[1]), cov, float(np.linalg.norm(r)),
                        chi2_red, dims, [complex(m) for m in y], [float(s) for s in se], exact, c2, terms)


def loglog_slope(dims: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(dims)."""
    lx = np.log(np.asarray(dims, dtype=float))
    ly = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


# ------------------------------------------------------ sample cumulants


def standardized_cumulants(x: np.ndarray) -> tuple[float, float]:
    """Sample skewness and excess kurtosis of real data."""
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    m2 = np.mean(d ** 2)
    if m2 == 0:
        return 0.0, 0.0
    return float(np.mean(d ** 3) / m2 ** 1.5), float(np.mean(d ** 4) / m2 ** 2 - 3.0)
