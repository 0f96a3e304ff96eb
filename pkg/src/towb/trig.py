"""Exact arithmetic for finite trigonometric sums.

A :class:`TrigPoly` is a finite combination ``sum_k c_k * exp(2*pi*i*f_k*x)``
with conjugate-symmetric coefficients, so it evaluates to a real number up to
rounding.  Frequencies may be arbitrary reals: substituting a branch map
``x -> a*x + b`` scales them by ``a``, which produces fractional frequencies
for contracting branches.

The point of carrying these objects around instead of sampled tables is that
products, affine substitution and antiderivatives are all closed-form, so
operator identities and integrals against piecewise-constant densities can be
checked to rounding accuracy instead of quadrature accuracy.

All instances are immutable and safe to share between threads.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

_TWO_PI_I = 2j * np.pi
_PRUNE = 1e-15


class TrigPoly:
    __slots__ = ("freqs", "coefs")

    def __init__(self, terms: dict[float, complex]):
        items = sorted((float(f), complex(c)) for f, c in terms.items()
                       if abs(c) > _PRUNE)
        if not items:
            items = [(0.0, 0j)]
        self.freqs = np.array([f for f, _ in items], dtype=float)
        self.coefs = np.array([c for _, c in items], dtype=complex)
        self.freqs.setflags(write=False)
        self.coefs.setflags(write=False)

    # -- constructors -------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> "TrigPoly":
        return cls({0.0: complex(value)})

    @classmethod
    def from_cos_sin(cls, const: float, cos_coefs: Iterable[float] = (),
                     sin_coefs: Iterable[float] = ()) -> "TrigPoly":
        """Build ``const + sum c_k cos(2 pi k x) + sum s_k sin(2 pi k x)``."""
        terms: dict[float, complex] = {0.0: complex(const)}
        for k, c in enumerate(cos_coefs, start=1):
            terms[float(k)] = terms.get(float(k), 0j) + c / 2
            terms[float(-k)] = terms.get(float(-k), 0j) + c / 2
        for k, s in enumerate(sin_coefs, start=1):
            terms[float(k)] = terms.get(float(k), 0j) + s / 2j
            terms[float(-k)] = terms.get(float(-k), 0j) - s / 2j
        return cls(terms)

    @classmethod
    def random(cls, rng: np.random.Generator, degree: int = 8,
               amplitude: float = 1.0) -> "TrigPoly":
        """Random real trig polynomial with integer frequencies <= degree."""
        const = rng.uniform(-amplitude, amplitude)
        cos_coefs = rng.uniform(-amplitude, amplitude, degree)
        sin_coefs = rng.uniform(-amplitude, amplitude, degree)
        return cls.from_cos_sin(const, cos_coefs, sin_coefs)

    # -- algebra ------------------------------------------------------

    def _terms(self) -> dict[float, complex]:
        return dict(zip(self.freqs.tolist(), self.coefs.tolist()))

    def __add__(self, other: "TrigPoly | float") -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(float(other))
        terms = self._terms()
        for f, c in zip(other.freqs.tolist(), other.coefs.tolist()):
            terms[f] = terms.get(f, 0j) + c
        return TrigPoly(terms)

    __radd__ = __add__

    def __neg__(self) -> "TrigPoly":
        return TrigPoly({f: -c for f, c in self._terms().items()})

    def __sub__(self, other: "TrigPoly | float") -> "TrigPoly":
        return self + (-other if isinstance(other, TrigPoly)
                       else TrigPoly.constant(-float(other)))

    def __mul__(self, other: "TrigPoly | float") -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            return TrigPoly({f: c * other for f, c in self._terms().items()})
        terms: dict[float, complex] = {}
        for f1, c1 in zip(self.freqs.tolist(), self.coefs.tolist()):
            for f2, c2 in zip(other.freqs.tolist(), other.coefs.tolist()):
                key = f1 + f2
                terms[key] = terms.get(key, 0j) + c1 * c2
        return TrigPoly(terms)

    __rmul__ = __mul__

    def compose_affine(self, slope: float, offset: float) -> "TrigPoly":
        """Substitute ``x -> slope * x + offset``.

        Exact as long as the substituted argument is not reduced mod 1,
        which holds for branch maps whose image stays inside ``[0, 1)``.
        """
        phase = np.exp(_TWO_PI_I * self.freqs * offset)
        return TrigPoly(dict(zip((self.freqs * slope).tolist(),
                                 (self.coefs * phase).tolist())))

    # -- analysis -----------------------------------------------------

    def __call__(self, x) -> np.ndarray | float:
        xs = np.asarray(x, dtype=float)
        vals = np.exp(_TWO_PI_I * np.multiply.outer(xs, self.freqs)) @ self.coefs
        out = vals.real
        return float(out) if np.isscalar(x) or out.ndim == 0 else out

    def antiderivative_values(self, x: np.ndarray) -> np.ndarray:
        """Values of an antiderivative at the points ``x`` (real part)."""
        xs = np.asarray(x, dtype=float)
        nz = self.freqs != 0.0
        acc = np.zeros(xs.shape, dtype=complex)
        if np.any(nz):
            f = self.freqs[nz]
            c = self.coefs[nz] / (_TWO_PI_I * f)
            acc = np.exp(_TWO_PI_I * np.multiply.outer(xs, f)) @ c
        if np.any(~nz):
            acc = acc + self.coefs[~nz].sum() * xs
        return acc.real

    def integral(self, lo: float, hi: float) -> float:
        """Exact integral over ``[lo, hi)``."""
        vals = self.antiderivative_values(np.array([lo, hi]))
        return float(vals[1] - vals[0])

    @property
    def max_freq(self) -> float:
        return float(np.max(np.abs(self.freqs)))

    def has_integer_freqs(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.freqs - np.round(self.freqs)) <= tol))

    def __repr__(self) -> str:
        return f"TrigPoly({len(self.freqs)} terms, max|freq|={self.max_freq:g})"


TrigLike = Callable[[np.ndarray], np.ndarray]
