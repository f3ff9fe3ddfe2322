"""Independent numerical checks for the moment machinery.

Everything here deliberately avoids the asymptotic expansion used by the
main code path: quadrature against the Gamma density, an alternating
binomial series in 1/eta, and plain Monte Carlo.  Test suites compare
the fast expansion against these slower references.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special, stats

from .moments import GammaInterferenceModel

__all__ = [
    "quadrature_inverse_moment",
    "eta_series_inverse_moment",
    "mc_interference_moments",
    "erlang_quantiles",
]


def quadrature_inverse_moment(
    model: GammaInterferenceModel, k: int = 1, rel_tol: float = 1e-10
) -> float:
    """E[1/(Y+eta)^k] by adaptive quadrature of the Gamma(alpha, theta) density.

    The integrand near zero behaves like y^(alpha-1) / eta^k; with eta = 0
    and alpha <= k the integral diverges, which is reported as an error
    rather than a number.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    alpha, theta, eta = model.alpha_hat, model.theta_hat, model.eta
    if eta == 0.0 and alpha <= k:
        raise ValueError(
            f"E[1/Y^{k}] diverges for alpha_hat={alpha} <= k with eta=0"
        )
    dist = stats.gamma(a=alpha, scale=theta)

    def integrand(y: float) -> float:
        return dist.pdf(y) / (y + eta) ** k

    # split at the mean: the pdf mass and the 1/(y+eta)^k weight pull in
    # opposite directions and quad does better on the two pieces
    mean = alpha * theta
    left, err_l = integrate.quad(
        integrand, 0.0, mean, epsabs=0.0, epsrel=rel_tol, limit=200
    )
    right, err_r = integrate.quad(
        integrand, mean, np.inf, epsabs=0.0, epsrel=rel_tol, limit=200
    )
    total = left + right
    if total > 0.0 and (err_l + err_r) / total > 1e-8:
        raise RuntimeError(
            f"quadrature failed to converge: value={total}, abserr={err_l + err_r}"
        )
    return total


def eta_series_inverse_moment(
    model: GammaInterferenceModel, k: int = 1, terms: int = 200
) -> float:
    """E[1/(Y+eta)^k] by the convergent expansion in E[Y^n]/eta^n.

    1/(y+eta)^k = eta^-k sum_n (-1)^n C(k+n-1, n) (y/eta)^n converges for
    y < eta, so the swap of sum and expectation is only trustworthy when
    eta dominates the interference; callers must ensure eta > a few E[Y].
    Raw Gamma moments are exact, making this a genuinely independent
    reference for the central-moment expansion on its home turf.
    """
    alpha, theta, eta = model.alpha_hat, model.theta_hat, model.eta
    if eta <= 0.0:
        raise ValueError("eta must be positive for the 1/eta expansion")
    total = 0.0
    log_raw = 0.0  # log E[Y^n]
    sign = 1.0
    last = math.inf
    for n in range(terms):
        if n > 0:
            log_raw += math.log(theta * (alpha + (n - 1)))
        log_coeff = math.lgamma(k + n) - math.lgamma(k) - math.lgamma(n + 1)
        mag = math.exp(log_coeff + log_raw - n * math.log(eta))
        if n > 4 and mag >= last:
            raise RuntimeError(
                f"1/eta expansion not converging at n={n}; eta too small"
            )
        total += sign * mag
        last = mag
        sign = -sign
        if mag < 1e-17 * abs(total):
            break
    return total / eta**k


def mc_interference_moments(
    powers, lam: float, n_draws: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo mean and variance of Y = sum_j p_j X_j, X_j ~ Exp(lam)."""
    rng = np.random.default_rng(seed)
    p = np.asarray(powers, dtype=np.float64)
    draws = rng.exponential(scale=1.0 / lam, size=(n_draws, p.size))
    y = draws @ p
    return float(y.mean()), float(y.var(ddof=1))


def erlang_quantiles(n_interferers: int, power: float, lam: float, probs) -> np.ndarray:
    """Exact quantiles of Y for equal powers: Erlang(n, power/lam)."""
    probs = np.asarray(probs, dtype=np.float64)
    scale = power / lam
    return special.gammaincinv(n_interferers, probs) * scale
