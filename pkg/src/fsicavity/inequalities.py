"""Numerical harness for the space-time norm inequalities.

Samples are random trigonometric polynomials in time with values in Fourier
spaces on a periodic interval, where fractional spatial norms are exact
through the symbol (1 + k^2)^(s/2). Fractional time norms on (0, T) use the
double-integral (Slobodeckij) seminorm evaluated by Gauss quadrature; integer
orders use exact analytic time derivatives. The harness measures the ratio
lhs / rhs-without-constant per sample: finiteness and stability of the max
ratio is the testable surrogate for "there exists a constant independent of T".
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

LEMMAS = ("I1", "I2", "TSIGMA", "HOLDER_ST")


@dataclass
class InequalitySample:
    lemma_id: str
    params: dict
    lhs: float
    rhs_without_constant: float

    @property
    def ratio(self):
        if self.lhs == 0.0:
            return 0.0
        return self.lhs / self.rhs_without_constant


@dataclass
class SpectralSample:
    """f(x, t) = sum_k c_k(t) e_k(x) with trig-polynomial coefficients.

    cos_coef, sin_coef: (nmodes, nfreq) arrays; c_k(t) = sum_j cos_coef[k, j]
    cos(j t) + sin_coef[k, j] sin(j t). Spatial mode k has symbol (1 + k^2).
    """

    cos_coef: np.ndarray
    sin_coef: np.ndarray

    def coefficients(self, t, deriv=0):
        """c_k(t) arrays, shape (nmodes, len(t)); exact time derivatives."""
        t = np.atleast_1d(t)
        j = np.arange(self.cos_coef.shape[1])
        jt = np.outer(j, t)  # (nfreq, nt)
        cos, sin = np.cos(jt), np.sin(jt)
        jpow = j.astype(float) ** deriv if deriv else np.ones_like(j, dtype=float)
        phase = deriv % 4
        if phase == 0:
            cb, sb = cos, sin
        elif phase == 1:
            cb, sb = -sin, cos
        elif phase == 2:
            cb, sb = -cos, -sin
        else:
            cb, sb = sin, -cos
        return (self.cos_coef * jpow) @ cb + (self.sin_coef * jpow) @ sb

    def spatial_norms_sq(self, t, m, deriv=0):
        """||d^deriv f / dt^deriv (t)||_{H^m}^2 for each t."""
        c = self.coefficients(t, deriv)
        k = np.arange(self.cos_coef.shape[0])
        sym = (1.0 + k.astype(float) ** 2) ** m
        return sym @ c**2

    def shifted_to_zero(self):
        """Sample minus its value at t = 0 (so f(., 0) = 0)."""
        cos = self.cos_coef.copy()
        sin = self.sin_coef.copy()
        # c_k(0) = sum_j cos_coef[k, j]; absorb into the j = 0 column
        cos[:, 0] -= cos.sum(axis=1)
        return SpectralSample(cos, sin)


def random_sample(rng, nmodes=4, nfreq=4, decay=1.0):
    shape = (nmodes, nfreq)
    k = np.arange(nmodes)[:, None] + 1.0
    j = np.arange(nfreq)[None, :] + 1.0
    weight = (k * j) ** (-decay)
    return SpectralSample(
        rng.normal(size=shape) * weight, rng.normal(size=shape) * weight
    )


# -- time norms on (0, T) -------------------------------------------------------


def _gauss(T, n=64):
    x, w = roots_legendre(n)
    return 0.5 * T * (x + 1.0), 0.5 * T * w


def norm_L2_time(sample, T, m, deriv=0, n=64):
    t, w = _gauss(T, n)
    return float(np.sqrt((w * sample.spatial_norms_sq(t, m, deriv)).sum()))


def norm_Lp_time(sample, T, m, p, n=64):
    """L^p(0,T; H^m) norm; p = inf means max over the quadrature grid."""
    t, w = _gauss(T, n)
    vals = np.sqrt(sample.spatial_norms_sq(t, m))
    if np.isinf(p):
        return float(vals.max())
    return float((w * vals**p).sum() ** (1.0 / p))


def seminorm_slobodeckij(sample, T, theta, m, deriv=0, n=64):
    """Double-integral fractional seminorm of order theta in (0, 1)."""
    t, w = _gauss(T, n)
    c = sample.coefficients(t, deriv)  # (nmodes, n)
    k = np.arange(c.shape[0])
    sym = (1.0 + k.astype(float) ** 2) ** m
    diff = c[:, :, None] - c[:, None, :]
    dist2 = np.einsum("k,kij->ij", sym, diff**2)  # ||f(ti) - f(tj)||_{H^m}^2
    gap = np.abs(t[:, None] - t[None, :])
    np.fill_diagonal(gap, 1.0)
    integrand = dist2 / gap ** (1.0 + 2.0 * theta)
    np.fill_diagonal(integrand, 0.0)
    return float(np.sqrt((w[:, None] * w[None, :] * integrand).sum()))


def norm_H_time(sample, T, theta, m, n=64):
    """H^theta(0, T; H^m) norm for theta in [0, 2].

    Integer orders use exact derivatives; fractional orders in (0, 1) use the
    Slobodeckij seminorm, and (1, 2) applies it to the time derivative.
    """
    L2 = norm_L2_time(sample, T, m, 0, n)
    if theta == 0.0:
        return L2
    if theta == 1.0:
        return float(np.hypot(L2, norm_L2_time(sample, T, m, 1, n)))
    if theta == 2.0:
        return float(
            np.sqrt(
                L2**2
                + norm_L2_time(sample, T, m, 1, n) ** 2
                + norm_L2_time(sample, T, m, 2, n) ** 2
            )
        )
    if 0.0 < theta < 1.0:
        return float(np.hypot(L2, seminorm_slobodeckij(sample, T, theta, m, 0, n)))
    if 1.0 < theta < 2.0:
        d1 = norm_L2_time(sample, T, m, 1, n)
        return float(
            np.sqrt(L2**2 + d1**2 + seminorm_slobodeckij(sample, T, theta - 1.0, m, 1, n) ** 2)
        )
    raise ValueError("theta must lie in [0, 2]")


# -- the lemma ratios -----------------------------------------------------------


def _ratio_I1(sample, T, theta, m1, m2, n):
    if not 0.0 <= theta <= 1.0:
        raise ValueError("I1 needs theta in [0, 1]")
    m = (1.0 - theta) * m1 + theta * m2
    lhs = norm_H_time(sample, T, theta, m, n)
    rhs = norm_L2_time(sample, T, m1, 0, n) ** (1.0 - theta) * norm_H_time(
        sample, T, 1.0, m2, n
    ) ** theta
    return lhs, rhs


def _ratio_I2(sample, T, theta, m1, m2, n):
    if not 1.0 <= theta <= 2.0:
        raise ValueError("I2 needs theta in [1, 2]")
    m = (2.0 - theta) * m1 + (theta - 1.0) * m2
    lhs = norm_H_time(sample, T, theta, m, n)
    rhs = norm_H_time(sample, T, 1.0, m1, n) ** (2.0 - theta) * norm_H_time(
        sample, T, 2.0, m2, n
    ) ** (theta - 1.0)
    return lhs, rhs


def _ratio_TSIGMA(sample, T, s, sigma, m, n):
    if not (0.5 < sigma <= 1.0 and 0.0 <= s <= sigma):
        raise ValueError("TSIGMA needs sigma in (1/2, 1] and s in [0, sigma]")
    f0 = sample.shifted_to_zero()
    lhs = norm_H_time(f0, T, s, m, n)
    rhs = T ** (sigma - s) * norm_H_time(f0, T, sigma, m, n)
    return lhs, rhs


def _ratio_HOLDER_ST(sample, T, theta, p, q, s1, s2, n):
    if not 0.0 <= theta <= 1.0:
        raise ValueError("HOLDER_ST needs theta in [0, 1]")
    if p < 1 or q < 1:
        raise ValueError("HOLDER_ST needs p, q >= 1")
    inv_r = theta / p + (1.0 - theta) / q
    r = np.inf if inv_r == 0.0 else 1.0 / inv_r
    s = theta * s1 + (1.0 - theta) * s2
    lhs = norm_Lp_time(sample, T, s, r, n)
    rhs = norm_Lp_time(sample, T, s1, p, n) ** theta * norm_Lp_time(
        sample, T, s2, q, n
    ) ** (1.0 - theta)
    return lhs, rhs


DEFAULT_PARAMS = {
    "I1": {"theta": 0.5, "m1": 2.0, "m2": 0.0},
    "I2": {"theta": 1.5, "m1": 2.0, "m2": 0.0},
    "TSIGMA": {"s": 0.5, "sigma": 1.0, "m": 0.0},
    "HOLDER_ST": {"theta": 0.5, "p": 2.0, "q": 2.0, "s1": 2.0, "s2": 0.0},
}


def evaluate_sample(lemma_id, sample, T, params, n=64):
    if lemma_id == "I1":
        lhs, rhs = _ratio_I1(sample, T, params["theta"], params["m1"], params["m2"], n)
    elif lemma_id == "I2":
        lhs, rhs = _ratio_I2(sample, T, params["theta"], params["m1"], params["m2"], n)
    elif lemma_id == "TSIGMA":
        lhs, rhs = _ratio_TSIGMA(sample, T, params["s"], params["sigma"], params["m"], n)
    elif lemma_id == "HOLDER_ST":
        lhs, rhs = _ratio_HOLDER_ST(
            sample, T, params["theta"], params["p"], params["q"], params["s1"], params["s2"], n
        )
    else:
        raise ValueError(f"unknown lemma id {lemma_id!r}")
    return InequalitySample(lemma_id, dict(params, T=T), lhs, rhs)


@dataclass
class HarnessResult:
    lemma_id: str
    params: dict
    seed: int
    per_T: list  # (T, max_ratio) pairs
    fitted_exponent: float = None  # TSIGMA only: slope of log raw-ratio vs log T
    samples: list = field(default_factory=list)

    @property
    def max_ratio(self):
        return max(r for _, r in self.per_T)


def inequality_harness(lemma_id, n_samples, T_grid, seed=0, params=None, n_quad=64):
    """Max empirical lhs/rhs ratio over random spectral samples per window.

    For TSIGMA the raw ratio ||f||_{H^s} / ||f||_{H^sigma} is additionally
    fitted against T to recover the T^(sigma - s) scaling exponent.
    """
    if lemma_id not in LEMMAS:
        raise ValueError(f"unknown lemma id {lemma_id!r}")
    params = dict(DEFAULT_PARAMS[lemma_id], **(params or {}))
    rng = np.random.default_rng(seed)
    samples = [random_sample(rng) for _ in range(n_samples)]
    per_T = []
    raw_means = []
    all_evals = []
    for T in T_grid:
        evals = [evaluate_sample(lemma_id, s, T, params, n_quad) for s in samples]
        all_evals.extend(evals)
        per_T.append((float(T), max(e.ratio for e in evals)))
        if lemma_id == "TSIGMA":
            raw = [e.lhs / (e.rhs_without_constant / T ** (params["sigma"] - params["s"]))
                   for e in evals if e.rhs_without_constant > 0]
            raw_means.append(np.exp(np.mean(np.log(raw))))
    fitted = None
    if lemma_id == "TSIGMA" and len(T_grid) >= 2:
        fitted = float(
            np.polyfit(np.log(np.asarray(T_grid, dtype=float)), np.log(raw_means), 1)[0]
        )
    return HarnessResult(lemma_id, params, seed, per_T, fitted, all_evals)
