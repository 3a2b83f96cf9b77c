"""Special functions used throughout the workbench.

Complex gamma (Lanczos), sine/cosine integrals, the odd kernel zeta built
from them in closed form, the conical Legendre function evaluated by two
complementary power series, and the normalization factor m(tau) entering
the large-argument asymptotics of the Legendre function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import sici


class GammaPoleError(ValueError):
    """Requested gamma value too close to a pole (nonpositive integer)."""


class SeriesConvergenceError(RuntimeError):
    """A power series failed to reach the requested tolerance."""


# Lanczos rational approximation, g = 607/128, 15 coefficients (Godfrey set).
# Relative error of the approximation is ~1e-13 to moderate |Im z|.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEF = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)

_POLE_GUARD = 1e-12


def gamma_complex(z: complex) -> complex:
    """Gamma function for complex argument, poles excluded.

    Raises GammaPoleError when z is within 1e-12 of a nonpositive integer.
    """
    z = complex(z)
    if z.real <= 0.5 and abs(z.imag) < _POLE_GUARD:
        if abs(z.real - round(z.real)) < _POLE_GUARD and round(z.real) <= 0:
            raise GammaPoleError(f"gamma pole proximity at z={z}")
    if z.real < 0.5:
        # reflection: gamma(z) gamma(1-z) = pi / sin(pi z)
        return math.pi / (np.sin(math.pi * z) * gamma_complex(1.0 - z))
    zm = z - 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (zm + k)
    t = zm + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (zm + 0.5) * np.exp(-t) * acc


def sin_cos_integrals(x: float):
    """Return (Si(x), Ci(x)) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("sin_cos_integrals requires x > 0")
    si, ci = sici(x)
    if x.ndim == 0:
        return float(si), float(ci)
    return si, ci


def zeta_kernel(lam):
    """Odd kernel zeta(lam) = (1/pi) * integral_0^inf sin(lam t)/(2+t) dt.

    Evaluated in closed form through Si/Ci; the defining integral only
    converges conditionally.  lam = 0 is rejected: the two one-sided limits
    are +-1/2 and callers must pick a side explicitly.
    """
    arr = np.asarray(lam, dtype=float)
    if np.any(arr == 0.0):
        raise ValueError("zeta_kernel undefined at 0; take one-sided limits")
    a = np.abs(arr)
    si, ci = sici(2.0 * a)
    val = (np.sin(2.0 * a) * ci + np.cos(2.0 * a) * (0.5 * math.pi - si)) / math.pi
    out = np.sign(arr) * val
    if arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ConicalArg:
    """Argument pair (tau, x) of the conical Legendre function, x >= 1."""

    tau: float
    x: float

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError("tau must be positive")
        if not self.x >= 1.0:
            raise ValueError("x must be >= 1")


@dataclass(frozen=True)
class SeriesPolicy:
    """Switch point and truncation control for the two Legendre series."""

    crossover_x: float = 1.5
    max_terms: int = 400
    tol: float = 1e-14

    def __post_init__(self):
        if not self.crossover_x > 1.0:
            raise ValueError("crossover_x must exceed 1")
        if not 0.0 < self.tol <= 1e-6:
            raise ValueError("tol must lie in (0, 1e-6]")
        if self.max_terms < 8:
            raise ValueError("max_terms too small")


DEFAULT_POLICY = SeriesPolicy()


def m_tau(tau: float) -> complex:
    """Normalization m(tau) = Gamma(i tau) 2^{1/2+i tau} / (sqrt(pi) Gamma(1/2+i tau))."""
    it = 1j * float(tau)
    return gamma_complex(it) * 2.0 ** (0.5 + it) / (math.sqrt(math.pi) * gamma_complex(0.5 + it))


def _origin_series(tau, x, max_terms, tol):
    # hypergeometric series in (1-x)/2; real for x >= 1, converges for |1-x| < 2
    z = 0.5 * (1.0 - x)
    term = np.ones_like(x)
    total = np.ones_like(x)
    for n in range(max_terms):
        cn = ((n + 0.5) ** 2 + tau * tau) / (n + 1.0) ** 2
        term = term * cn * z
        total = total + term
        if np.max(np.abs(term)) <= tol * max(1.0, float(np.max(np.abs(total)))):
            return total
    raise SeriesConvergenceError("origin series did not converge; raise max_terms or move crossover")


def _tail_series(tau, x, max_terms, tol):
    # descending series in x^{-2} times m(tau) x^{-1/2 + i tau}, real part taken
    a = 0.25 - 0.5j * tau
    b = 0.75 - 0.5j * tau
    c = 1.0 - 1j * tau
    x2 = x ** -2.0
    term = np.ones_like(x, dtype=complex)
    total = np.ones_like(x, dtype=complex)
    for n in range(max_terms):
        term = term * ((a + n) * (b + n)) / ((c + n) * (n + 1.0)) * x2
        total = total + term
        if np.max(np.abs(term)) <= tol * max(1.0, float(np.max(np.abs(total)))):
            head = m_tau(tau) * np.exp((-0.5 + 1j * tau) * np.log(x))
            return np.real(head * total)
    raise SeriesConvergenceError("tail series did not converge; raise max_terms or move crossover")


def conical_legendre_values(tau: float, x, policy: SeriesPolicy = DEFAULT_POLICY):
    """Conical Legendre function P_{-1/2 + i tau}(x) on an array of x >= 1.

    Uses the series around x = 1 below policy.crossover_x and the descending
    series above it.  tau may be any nonzero real; the value is even in tau.
    """
    if tau == 0.0:
        raise ValueError("tau = 0 endpoint is not supported")
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    if np.any(xs < 1.0):
        raise ValueError("x must be >= 1")
    out = np.empty_like(xs)
    near = xs < policy.crossover_x
    if np.any(near):
        out[near] = _origin_series(tau, xs[near], policy.max_terms, policy.tol)
    if np.any(~near):
        out[~near] = _tail_series(tau, xs[~near], policy.max_terms, policy.tol)
    if scalar:
        return float(out[0])
    return out


def conical_legendre(arg: ConicalArg, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Conical Legendre function at a validated (tau, x) pair."""
    return conical_legendre_values(arg.tau, arg.x, policy)
