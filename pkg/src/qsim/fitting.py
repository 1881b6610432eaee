"""Weighted least-squares fits of damped Rabi oscillations.

Model: ``f(t) = C + A sin(omega t + phi) exp(-t / tau)``. Internally the decay
is parameterized by the rate ``gamma = 1 / tau >= 0`` so that undamped data
converge to the boundary instead of running ``tau`` off to infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import lombscargle

N_PARAMS = 5
PARAM_NAMES = ("C", "A", "omega", "phi", "tau")


class FitError(RuntimeError):
    pass


def binomial_errors(p, shots: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    floor = math.sqrt(0.25 / shots) / 10
    return np.maximum(np.sqrt(p * (1 - p) / shots), floor)


def damped_sinusoid(t, C: float, A: float, omega: float, phi: float, tau: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    decay = np.ones_like(t) if math.isinf(tau) else np.exp(-t / tau)
    return C + A * np.sin(omega * t + phi) * decay


def chi_squared(y, f, sigma, n_params: int = N_PARAMS) -> tuple[float, int, float]:
    y, f, sigma = (np.asarray(a, dtype=float) for a in (y, f, sigma))
    if not (y.shape == f.shape == sigma.shape):
        raise ValueError("values, model and errors must have equal lengths")
    if np.any(sigma <= 0):
        raise ValueError("error bars must be positive")
    chi2 = float(np.sum(((y - f) / sigma) ** 2))
    dof = y.size - n_params
    return chi2, dof, chi2 / dof if dof > 0 else math.nan


@dataclass
class FitResult:
    C: float
    A: float
    omega: float
    phi: float
    tau: float
    errors: dict[str, float]
    chi2: float
    dof: int
    chi2_per_dof: float
    undamped: bool = False
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    @property
    def params(self) -> tuple[float, float, float, float, float]:
        return self.C, self.A, self.omega, self.phi, self.tau

    def __call__(self, t) -> np.ndarray:
        return damped_sinusoid(t, *self.params)

    def to_json_dict(self) -> dict:
        def num(v):
            return None if not math.isfinite(v) else float(v)

        return {
            "model": "damped_sinusoid",
            "params": {k: num(v) for k, v in zip(PARAM_NAMES, self.params)},
            "errors": {k: num(v) for k, v in self.errors.items()},
            "chi2": self.chi2,
            "dof": self.dof,
            "chi2_per_dof": num(self.chi2_per_dof),
            "undamped": self.undamped,
        }


def _model(x, t):
    C, A, omega, phi, gamma = x
    return C + A * np.sin(omega * t + phi) * np.exp(-gamma * t)


def _jacobian(x, t):
    C, A, omega, phi, gamma = x
    e = np.exp(-gamma * t)
    s, c = np.sin(omega * t + phi), np.cos(omega * t + phi)
    return np.column_stack([np.ones_like(t), s * e, A * t * c * e, A * c * e, -A * t * s * e])


def dominant_frequency(t, y) -> float:
    """Angular frequency of the strongest least-squares periodogram peak.

    Works directly on unevenly spaced samples, so gaps between time windows
    need no resampling.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float) - np.mean(y)
    span = t.max() - t.min()
    dt = np.median(np.diff(np.sort(t)))
    lo, hi = math.pi / span, math.pi / dt
    grid = np.linspace(lo, hi, max(2000, int(40 * hi / lo)))
    if not np.any(y):
        return grid[0]
    power = lombscargle(t, y, grid)
    return float(grid[int(np.argmax(power))])


def _check(t, y, sigma):
    t, y, sigma = (np.asarray(a, dtype=float) for a in (t, y, sigma))
    if not (t.shape == y.shape == sigma.shape) or t.ndim != 1:
        raise ValueError("times, values and errors must be 1-d arrays of equal length")
    if t.size < 6:
        raise FitError("need at least 6 points")
    if np.unique(t).size != t.size:
        raise FitError("degenerate design: repeated times")
    if np.any(sigma <= 0) or not np.all(np.isfinite(np.concatenate([t, y, sigma]))):
        raise ValueError("need finite data and positive error bars")
    return t, y, sigma


def _solve(t, y, sigma, starts):
    def resid(x):
        return (_model(x, t) - y) / sigma

    def jac(x):
        return _jacobian(x, t) / sigma[:, None]

    lower = [-np.inf, -np.inf, 0.0, -np.inf, 0.0]
    best = None
    for x0 in starts:
        try:
            sol = least_squares(resid, x0, jac=jac, bounds=(lower, np.inf), method="trf",
                                x_scale="jac", xtol=1e-13, ftol=1e-13, gtol=1e-13, max_nfev=1000)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if sol.status > 0 and np.all(np.isfinite(sol.x)) and (best is None or sol.cost < best.cost):
            best = sol
    if best is None:
        raise FitError("no start converged")
    return best


def _result(sol, t, y, sigma) -> FitResult:
    C, A, omega, phi, gamma = sol.x
    J = sol.jac
    cov = np.linalg.pinv(J.T @ J)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    # columns that carry no information get no meaningful error bar
    dead = np.linalg.norm(J, axis=0) <= 1e-12 * max(1.0, np.linalg.norm(J))
    err[dead] = np.inf
    if A < 0:
        A, phi = -A, phi + math.pi
    phi = float(np.mod(phi, 2 * math.pi))
    undamped = gamma * (t.max() - t.min()) <= 1e-9
    tau = math.inf if undamped else 1.0 / gamma
    tau_err = math.inf if undamped else err[4] / gamma**2
    f = _model(sol.x, t)
    chi2, dof, ratio = chi_squared(y, f, sigma)
    return FitResult(
        C=float(C), A=float(A), omega=float(omega), phi=phi, tau=tau,
        errors={"C": float(err[0]), "A": float(err[1]), "omega": float(err[2]),
                "phi": float(err[3]), "tau": float(tau_err)},
        chi2=chi2, dof=dof, chi2_per_dof=ratio, undamped=bool(undamped), residuals=y - f,
    )


def fit_damped_sinusoid(t, y, sigma, omega_guess: float | None = None) -> FitResult:
    """Multistart weighted fit.

    Starts combine 0.5, 1 and 2 times the periodogram frequency with two
    quadrature phases; the sign of ``A`` covers the other two. The result is
    reported with ``A >= 0`` and ``phi`` in ``[0, 2 pi)``.
    """
    t, y, sigma = _check(t, y, sigma)
    span = t.max() - t.min()
    w0 = omega_guess if omega_guess is not None else dominant_frequency(t, y)
    amp = max(math.sqrt(2) * float(np.std(y)), 1e-12)
    starts = [[float(np.mean(y)), amp, w0 * scale, phi0, 0.5 / span]
              for scale in (0.5, 1.0, 2.0) for phi0 in (0.0, 0.5 * math.pi)]
    return _result(_solve(t, y, sigma, starts), t, y, sigma)


def fit_binomial(t, p, shots: int, reweight: int = 2) -> FitResult:
    """Fit measured probabilities with binomial error bars.

    The first pass weights each point by the error of its observed
    probability. Later passes take the error from the fitted curve instead,
    which removes the pull of points observed at exactly 0 or 1.
    """
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    res = fit_damped_sinusoid(t, p, binomial_errors(p, shots))
    for _ in range(reweight):
        sigma = binomial_errors(np.clip(res(t), 0.0, 1.0), shots)
        g = 0.0 if res.undamped else 1.0 / res.tau
        sol = _solve(t, p, sigma, [[res.C, res.A, res.omega, res.phi, g]])
        res = _result(sol, t, p, sigma)
    return res
