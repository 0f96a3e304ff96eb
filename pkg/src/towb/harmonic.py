"""Fixed points of the transfer operator and the Fourier cascade.

``solve_harmonic`` runs a power iteration for the leading eigenpair of the
positive operator ``R``; the eigenvalue estimate is the ``L^1(lam)`` growth
factor, and the returned function is scaled to integrate to one against the
base measure.  ``normalize_weight`` divides the weight by the eigenvalue so
the rescaled system has a genuine fixed point ``R h = h``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .grid import GridFunction, Measure, integrate
from .system import IfsSystem
from .transfer import TransferOperator

_NEGATIVITY_FLOOR = -1e-14


@dataclass(frozen=True)
class HarmonicSolution:
    h: GridFunction
    rho: float
    residual: float
    iterations: int
    converged: bool


def solve_harmonic(op: TransferOperator, lam: Measure, tol: float = 1e-12,
                   max_iter: int = 2000, seed: int = 0) -> HarmonicSolution:
    """Power iteration for ``R h = rho h`` from a strictly positive random
    start, normalized in ``L^1(lam)`` each step.

    Positivity of ``R`` keeps true iterates nonnegative; samples are clipped
    at ``-1e-14`` (rounding dust) and anything more negative signals an
    invalid weight.  Non-convergence returns the best iterate flagged
    ``converged=False``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    rng = np.random.default_rng(seed)
    h = GridFunction(rng.uniform(0.5, 1.5, op.n_grid))
    h = h * (1.0 / integrate(h, lam))
    rho = np.nan
    for it in range(1, max_iter + 1):
        g = op.apply(h)
        low = float(np.min(g.values))
        if low < _NEGATIVITY_FLOOR:
            raise ConvergenceError(
                f"iterate went negative ({low:.3e}); weight is not positive")
        g = GridFunction(np.maximum(g.values, 0.0))
        rho = integrate(g, lam)
        if rho <= 0:
            raise ConvergenceError("iterate collapsed to zero mass")
        h_next = g * (1.0 / rho)
        step = float(np.max(np.abs(h_next.values - h.values)))
        h = h_next
        if step < tol:
            h = h * (1.0 / integrate(h, lam))
            residual = float(np.max(np.abs(
                op.apply(h).values - rho * h.values)))
            return HarmonicSolution(h, float(rho), residual, it, True)
    h = h * (1.0 / integrate(h, lam))
    residual = float(np.max(np.abs(op.apply(h).values - rho * h.values)))
    return HarmonicSolution(h, float(rho), residual, max_iter, False)


def normalize_weight(op: TransferOperator, lam: Measure,
                     solution: HarmonicSolution | None = None,
                     tol: float = 1e-12, max_iter: int = 2000,
                     seed: int = 0) -> IfsSystem:
    """Rescale the weight by ``1/rho`` so the leading eigenvalue becomes 1."""
    sol = solution or solve_harmonic(op, lam, tol=tol, max_iter=max_iter,
                                     seed=seed)
    if not sol.converged:
        raise ConvergenceError("cannot normalize: eigensolve did not converge")
    if sol.rho <= 0:
        raise ConvergenceError("cannot normalize: nonpositive eigenvalue")
    return op.system.with_weight(op.system.weight.scaled(1.0 / sol.rho))


def fourier_cascade_check(op: TransferOperator, h: GridFunction,
                          k_max: int = 4, n_max: int = 8) -> float:
    """Cascade identity for the doubling map: with
    ``W_k(x) = W(x) W(2x) ... W(2^{k-1} x)``, a fixed point of ``R``
    satisfies ``h^(n) = (W_k h)^(2^k n)`` for every frequency ``n``.

    Fourier coefficients use the convention ``h^(n) = int e(n x) h(x) dx``
    with ``e(t) = exp(2 pi i t)``.  Returns the maximum deviation over
    ``0 <= k <= k_max`` and ``|n| <= n_max``.  Quadrature is the uniform
    midpoint rule, spectrally accurate for smooth integrands; the relevant
    frequencies must stay well below the grid size.
    """
    branches = op.system.branches
    is_doubling = (len(branches) == 2
                   and abs(branches[0].slope - 0.5) < 1e-12
                   and abs(branches[0].offset) < 1e-12
                   and abs(branches[1].slope - 0.5) < 1e-12
                   and abs(branches[1].offset - 0.5) < 1e-12)
    if not is_doubling:
        raise DomainError("cascade check applies to the doubling system only")
    if (2 ** k_max) * n_max >= op.n_grid // 4:
        raise DomainError("grid too coarse for the requested frequencies")

    n = op.n_grid
    mids = (np.arange(n) + 0.5) / n
    hv = np.asarray(h.resample(n)(mids), dtype=float)
    freqs = np.arange(-n_max, n_max + 1)

    def coeffs(values: np.ndarray, freq_scale: int) -> np.ndarray:
        phases = np.exp(2j * np.pi * freq_scale *
                        np.multiply.outer(freqs, mids))
        return phases @ values / n

    base = coeffs(hv, 1)
    deviation = 0.0
    wk = np.ones(n)
    for k in range(0, k_max + 1):
        if k > 0:
            wk = wk * np.asarray(op.system.weight((2 ** (k - 1) * mids) % 1.0),
                                 dtype=float)
        cascade = coeffs(wk * hv, 2 ** k)
        deviation = max(deviation, float(np.max(np.abs(base - cascade))))
    return deviation
