"""Time-series error analysis and goodness-of-fit tools.

Integrated autocorrelation time uses Wolff's automatic windowing, errors on
correlated means use binning followed by a bootstrap over bin means, and
scaling laws are fitted with a small Levenberg-Marquardt loop.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special

from .errors import (ConvergenceError, DegenerateErrorError, DegenerateSeriesError,
                     InsufficientDataError, RankError)


@dataclass
class TimeSeries:
    """Observable measurements from one chain, one value per sweep."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __len__(self):
        return self.values.shape[0]

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fp:
            for key in sorted(self.meta):
                fp.write(f"# {key}: {self.meta[key]}\n")
            fp.write("index,value\n")
            for i, v in enumerate(self.values.tolist()):
                fp.write(f"{i},{v!r}\n")

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> "TimeSeries":
        meta: dict = {}
        values = []
        with open(path) as fp:
            for line in fp:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, val = line[1:].partition(":")
                    meta[key.strip()] = _parse_meta(val.strip())
                elif line.lower().startswith("index"):
                    continue
                else:
                    _, value = line.split(",")
                    values.append(float(value))
        return cls(np.array(values), meta)


def _parse_meta(text: str):
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def _values(series) -> np.ndarray:
    x = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    return x


@dataclass(frozen=True)
class TauIntEstimate:
    tau_int: float
    error: float
    window: int
    series_length: int


def tau_int(series, window_factor: float = 1.5) -> TauIntEstimate:
    """Integrated autocorrelation time with automatic windowing.

    The window ``W`` is the first lag at which
    ``g(W) = exp(-W / tau_hat) - tau_hat / sqrt(W * N)`` turns negative, with
    ``tau_hat = S / ln((2 tau + 1) / (2 tau - 1))`` from the running
    ``tau(W) = 1/2 + sum_{t<=W} rho(t)``.  The error is the Madras-Sokal
    estimate ``tau * sqrt(2 (2W + 1) / N)``.
    """
    x = _values(series)
    n = x.shape[0]
    if n < 100:
        raise InsufficientDataError(f"tau_int needs at least 100 samples, got {n}")
    if window_factor <= 0:
        raise ValueError("window_factor must be positive")
    x = x - x.mean()
    gamma0 = float(x @ x) / n
    if gamma0 <= 1e-300 * max(1.0, float(np.abs(x).max(initial=0.0))):
        raise DegenerateSeriesError("constant series has no autocorrelation")
    tau = 0.5
    for w in range(1, n // 2):
        rho = float(x[:-w] @ x[w:]) / (n - w) / gamma0
        tau += rho
        if tau <= 0.5:
            # Sum already at or below the uncorrelated value: stop here.
            break
        tau_hat = window_factor / math.log((2 * tau + 1) / (2 * tau - 1))
        if math.exp(-w / tau_hat) - tau_hat / math.sqrt(w * n) < 0:
            break
    else:
        raise InsufficientDataError(f"no window found before lag {n // 2}; series too short")
    return TauIntEstimate(tau, tau * math.sqrt(2 * (2 * w + 1) / n), w, n)


def bin_series(series, bin_size: int) -> np.ndarray:
    """Means of consecutive disjoint blocks; a trailing partial block is dropped."""
    x = _values(series)
    if bin_size < 1:
        raise ValueError("bin_size must be at least 1")
    nbins = x.shape[0] // bin_size
    if nbins == 0:
        raise InsufficientDataError(f"{x.shape[0]} samples cannot fill a bin of {bin_size}")
    return x[: nbins * bin_size].reshape(nbins, bin_size).mean(axis=1)


def bootstrap_stderr(values: Sequence[float], resamples: int, rng=None,
                     chunk: int = 4096) -> float:
    """Standard deviation of the means of ``resamples`` with-replacement resamples.

    ``rng`` is a ``numpy.random.Generator`` or a seed.  Chunk ``k`` draws from
    its own child stream of the seed sequence, so the result does not depend
    on ``chunk`` scheduling order.  Values are sorted first, which makes the
    result exactly invariant under permutations of the input.
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    m = x.shape[0]
    if m < 2:
        raise InsufficientDataError("bootstrap needs at least two values")
    if resamples < 1:
        raise ValueError("resamples must be at least 1")
    if isinstance(rng, np.random.Generator):
        seed_seq = rng.bit_generator.seed_seq
    else:
        seed_seq = np.random.SeedSequence(rng)
    nchunks = -(-resamples // chunk)
    means = np.empty(resamples)
    for k, child in enumerate(seed_seq.spawn(nchunks)):
        lo = k * chunk
        hi = min(resamples, lo + chunk)
        idx = np.random.default_rng(child).integers(0, m, size=(hi - lo, m))
        means[lo:hi] = x[idx].mean(axis=1)
    return float(means.std())


class ChiSquare(NamedTuple):
    chi2: float
    scaled: float  # chi2 / N, the normalized convention


def chi_square(exact: Sequence[float], estimated: Sequence[float],
               errors: Sequence[float]) -> ChiSquare:
    """Sum of squared z-scores, plus the same sum divided by the number of terms."""
    p = np.asarray(exact, dtype=np.float64)
    q = np.asarray(estimated, dtype=np.float64)
    s = np.asarray(errors, dtype=np.float64)
    if not (p.shape == q.shape == s.shape) or p.size == 0:
        raise ValueError("exact, estimated and errors must be equal non-empty lengths")
    if np.any(s <= 0):
        raise DegenerateErrorError("every standard error must be positive")
    chi2 = float(np.sum(((p - q) / s) ** 2))
    return ChiSquare(chi2, chi2 / p.size)


def z_score(exact: float, estimated: float, error: float) -> float:
    if error <= 0:
        raise DegenerateErrorError(f"standard error must be positive, got {error}")
    return abs(exact - estimated) / error


def chi2_cdf(chi2: float, dof: int) -> float:
    """Lower-tail probability P(dof/2, chi2/2)."""
    if chi2 < 0:
        raise ValueError("chi2 must be non-negative")
    return float(special.gammainc(dof / 2, chi2 / 2))


def chi2_sf(chi2: float, dof: int) -> float:
    """Survival probability 1 - CDF (the usual p-value)."""
    if chi2 < 0:
        raise ValueError("chi2 must be non-negative")
    return float(special.gammaincc(dof / 2, chi2 / 2))


# --- power-law fits ----------------------------------------------------

@dataclass
class FitResult:
    params: np.ndarray
    param_errors: np.ndarray
    chi2: float
    dof: int
    reduced_chi2: float
    covariance: np.ndarray
    with_offset: bool
    iterations: int = 0

    def __call__(self, x):
        return power_law(np.asarray(x, dtype=np.float64), self.params)

    def as_dict(self) -> dict:
        names = ["a", "b", "c"][: len(self.params)]
        return {"model": "a*x^b + c" if self.with_offset else "a*x^b",
                "params": dict(zip(names, self.params.tolist())),
                "errors": dict(zip(names, self.param_errors.tolist())),
                "chi2": self.chi2, "dof": self.dof, "reduced_chi2": self.reduced_chi2,
                "iterations": self.iterations}


def power_law(x: np.ndarray, params) -> np.ndarray:
    y = params[0] * x ** params[1]
    return y + params[2] if len(params) == 3 else y


def _jacobian(x, params, sigma):
    a, b = params[0], params[1]
    xb = x ** b
    cols = [xb, a * xb * np.log(x)]
    if len(params) == 3:
        cols.append(np.ones_like(x))
    return np.column_stack(cols) / sigma[:, None]


def _initial_guess(x, y, with_offset):
    ok = y > 0
    if np.unique(x[ok]).size >= 2:
        b, ln_a = np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)
        guess = [math.exp(ln_a), b]
    else:
        guess = [1.0, 1.0]
    if with_offset:
        guess.append(0.0)
    return np.array(guess, dtype=np.float64)


def fit_power_law(x, y, sigma, with_offset: bool = False, max_iter: int = 200,
                  rtol: float = 1e-10, initial=None) -> FitResult:
    """Weighted least-squares fit of ``a*x^b`` (or ``a*x^b + c``).

    Minimizes ``sum(((f(x_i) - y_i) / sigma_i)^2)`` by damped Gauss-Newton
    steps from a log-log regression guess.  Parameter errors are square roots
    of the diagonal of ``(J^T J)^-1``, i.e. ``sigma`` is taken as absolute.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    k = 3 if with_offset else 2
    if not (x.shape == y.shape == sigma.shape):
        raise ValueError("x, y and sigma must have equal lengths")
    if x.size < k + 1:
        raise InsufficientDataError(f"{k}-parameter fit needs at least {k + 1} points")
    if np.any(sigma <= 0):
        raise DegenerateErrorError("sigma must be positive")
    if np.any(x <= 0):
        raise ValueError("power-law fit needs x > 0")

    p = _initial_guess(x, y, with_offset) if initial is None else np.array(initial, float)
    r = (power_law(x, p) - y) / sigma
    chi2 = float(r @ r)
    floor = 1e-28 * float(np.sum((y / sigma) ** 2)) + 1e-300
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = _jacobian(x, p, sigma)
        if np.linalg.matrix_rank(jac) < k:
            raise RankError("normal equations are singular")
        a_mat = jac.T @ jac
        grad = jac.T @ r
        accepted = False
        while lam < 1e16:
            step = np.linalg.solve(a_mat + lam * np.diag(np.diag(a_mat)), -grad)
            p_new = p + step
            with np.errstate(all="ignore"):
                r_new = (power_law(x, p_new) - y) / sigma
            chi2_new = float(r_new @ r_new)
            if np.isfinite(chi2_new) and chi2_new <= chi2:
                accepted = True
                lam = max(lam / 10, 1e-12)
                break
            lam *= 10
        if not accepted:
            converged = True  # no downhill step left at any damping
            break
        drop = chi2 - chi2_new
        p, r, chi2 = p_new, r_new, chi2_new
        small_step = np.all(np.abs(step) <= 1e-14 * (np.abs(p) + 1e-300))
        if chi2 <= floor or drop <= rtol * chi2 or small_step:
            converged = True
            break
    jac = _jacobian(x, p, sigma)
    a_mat = jac.T @ jac
    if np.linalg.matrix_rank(jac) < k:
        raise RankError("normal equations are singular at the solution")
    cov = np.linalg.inv(a_mat)
    dof = x.size - k
    result = FitResult(p, np.sqrt(np.diag(cov)), chi2, dof, chi2 / dof, cov, with_offset, it)
    if not converged:
        raise ConvergenceError(f"fit did not converge in {max_iter} iterations", last=result)
    return result
