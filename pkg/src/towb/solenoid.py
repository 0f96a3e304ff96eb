"""Path space over an expanding circle map and its induced measures.

A point of the path space is a base state together with a word of branch
digits: coordinates ``x_0, x_1, ..., x_m`` with ``x_j = tau_{i_j}(x_{j-1})``,
so each coordinate is a preimage of the one before it under ``sigma``.  Given
a harmonic function ``h`` (``R h = h``, ``int h dlam = 1``), the measure at
base ``x`` assigns a depth-``m`` cylinder the exact mass

    sum over branch words of  prod_j p_{i_j} W(x_j) [x_j in A_j] * h(x_m),

which is the nested operator expression ``R(chi_1 R(chi_2 ... R(chi_m h)))``
evaluated at ``x``.  Its total mass is ``h(x)``; sampling therefore draws
digits from the conditioned kernel ``p_i W(tau_i y) h(tau_i y) / h(y)``.

Exact enumeration and Monte Carlo sampling are both provided, along with the
shift automorphism, the weighted shift unitary, the multiresolution checks,
and the reconstruction of a harmonic function from total cylinder masses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .grid import GridFunction, IntervalSet, Measure, integrate, wrap_unit
from .transfer import TransferOperator
from .trig import TrigPoly

EPS_H = 1e-10
DEPTH_MAX = 16
_H_TRUST = 1e-6


@dataclass(frozen=True)
class SolPath:
    """Base point plus branch digits; digit ``i_j`` selects the branch
    mapping coordinate ``j-1`` to coordinate ``j``."""

    base: float
    digits: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.digits)


def coordinates(op: TransferOperator, path: SolPath) -> np.ndarray:
    """Coordinates ``(x_0, ..., x_m)`` by forward branch application."""
    xs = [float(wrap_unit(path.base))]
    for d in path.digits:
        if not 0 <= d < op.system.n_branches:
            raise DomainError(f"digit {d} out of range")
        xs.append(float(wrap_unit(op.system.branches[d](xs[-1]))))
    return np.array(xs)


def shift_forward(op: TransferOperator, path: SolPath) -> SolPath:
    """Prepend ``sigma(x_0)`` to the path: the backward-orbit point one step
    coarser.  The new leading digit is the branch whose image contains the
    old base; ties on branch-image boundaries resolve to the lowest index."""
    y = float(op.system.sigma(path.base))
    candidates = np.array([wrap_unit(br(y)) for br in op.system.branches])
    dist = np.abs(candidates - path.base)
    dist = np.minimum(dist, 1.0 - dist)
    best = float(np.min(dist))
    digit = int(np.flatnonzero(dist <= best + 1e-12)[0])
    return SolPath(base=y, digits=(digit,) + path.digits)


def shift_back(op: TransferOperator, path: SolPath) -> SolPath:
    """Drop the base coordinate, promoting ``x_1`` to the new base."""
    if path.depth < 1:
        raise DomainError("shift_back needs at least one digit")
    new_base = float(wrap_unit(op.system.branches[path.digits[0]](path.base)))
    return SolPath(base=new_base, digits=path.digits[1:])


class CylinderSpec:
    """Constraints ``(A_1, ..., A_m)`` on coordinates 1..m; ``None`` leaves a
    coordinate unconstrained."""

    __slots__ = ("sets",)

    def __init__(self, sets: Sequence[IntervalSet | None]):
        if len(sets) < 1:
            raise DomainError("cylinder spec needs at least one coordinate")
        self.sets = tuple(sets)

    @property
    def depth(self) -> int:
        return len(self.sets)

    def extended(self) -> "CylinderSpec":
        """Same event with one extra unconstrained coordinate appended."""
        return CylinderSpec(self.sets + (None,))

    @classmethod
    def parse(cls, text: str) -> "CylinderSpec":
        """Parse ``"[0,0.25);all;[0.5,0.75)u[0.9,1)"``-style descriptions."""
        sets: list[IntervalSet | None] = []
        for part in text.split(";"):
            part = part.strip()
            if not part:
                continue
            if part.lower() == "all":
                sets.append(None)
                continue
            pairs = []
            for piece in part.replace("u", "U").split("U"):
                piece = piece.strip()
                if not (piece.startswith("[") and piece.endswith(")")):
                    raise DomainError(f"cannot parse interval '{piece}'")
                lo_s, hi_s = piece[1:-1].split(",")
                pairs.append((float(lo_s), float(hi_s)))
            sets.append(IntervalSet(pairs))
        return cls(sets)


class CylinderFunction:
    """Product ``f_0(x_0) f_1(x_1) ... f_m(x_m)`` of per-coordinate factors;
    ``None`` stands for the constant 1."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence):
        if len(components) < 1:
            raise DomainError("cylinder function needs at least one factor")
        self.components = tuple(components)

    @classmethod
    def coerce(cls, psi) -> "CylinderFunction":
        return psi if isinstance(psi, CylinderFunction) else cls(tuple(psi))

    @property
    def depth(self) -> int:
        return len(self.components) - 1

    def eval_on_coords(self, coords: np.ndarray) -> np.ndarray:
        """Evaluate on stacked coordinates of shape ``(count, >= depth+1)``."""
        vals = np.ones(coords.shape[0])
        for j, f in enumerate(self.components):
            if f is not None:
                vals = vals * np.asarray(f(coords[:, j]), dtype=float)
        return vals

    def squared(self) -> "CylinderFunction":
        comps = []
        for f in self.components:
            if f is None:
                comps.append(None)
            else:
                comps.append(lambda x, f=f: np.asarray(f(x), dtype=float) ** 2)
        return CylinderFunction(comps)

    def sup_bound(self, points: np.ndarray) -> float:
        """Product of per-factor sups sampled over ``points``."""
        bound = 1.0
        for f in self.components:
            if f is not None:
                bound *= float(np.max(np.abs(np.asarray(f(points)))))
        return bound


@dataclass(frozen=True)
class PathMeasure:
    """The family of path-space measures determined by ``(R, h, lam)``.

    The measure at base ``x`` has total mass ``h(x)``; averaging the bases
    against ``lam`` gives a probability measure because ``int h dlam = 1``.
    """

    op: TransferOperator
    h: GridFunction
    lam: Measure
    h_residual: float

    @classmethod
    def build(cls, op: TransferOperator, h: GridFunction, lam: Measure,
              strict: bool = True) -> "PathMeasure":
        h = h.resample(op.n_grid)
        residual = float(np.max(np.abs(op.apply(h).values - h.values)))
        mass = integrate(h, lam)
        if strict:
            if abs(mass - 1.0) > 1e-6:
                raise DomainError(
                    f"harmonic function must integrate to 1 (got {mass:.6g})")
            if residual > _H_TRUST:
                raise DomainError(
                    f"h is not harmonic enough (residual {residual:.3e})")
        return cls(op=op, h=h, lam=lam, h_residual=residual)


# -- exact cylinder calculus ----------------------------------------------


def _enumerate_words(pm: PathMeasure, x: float, sets) -> tuple[np.ndarray, np.ndarray]:
    """All branch words of length ``len(sets)`` from base ``x`` with their
    accumulated kernel weights, constrained coordinates already applied."""
    if len(sets) > DEPTH_MAX:
        raise DomainError(f"cylinder depth {len(sets)} exceeds {DEPTH_MAX}")
    sys_ = pm.op.system
    ys = np.array([float(x)])
    ws = np.array([1.0])
    for a in sets:
        pts = pm.op.branch_points(ys)          # (n_branches, k)
        wv = np.asarray(sys_.weight(pts), dtype=float)
        probs = np.array(sys_.probs)[:, None]
        new_w = (ws[None, :] * probs * wv).ravel()
        new_y = pts.ravel()
        if a is not None:
            new_w = new_w * np.asarray(a.indicator(new_y), dtype=float)
        ys, ws = new_y, new_w
    return ys, ws


def cylinder_mass(pm: PathMeasure, x: float, spec: CylinderSpec) -> float:
    """Exact mass of the cylinder event at base ``x``: the sum over all
    branch words of the kernel weights times ``h`` at the final coordinate.

    Appending an unconstrained coordinate leaves the value unchanged up to
    the harmonic residual of ``h`` (measure consistency across depths).
    """
    if pm.h_residual > _H_TRUST:
        raise DomainError(
            f"h residual {pm.h_residual:.3e} too large to trust consistency")
    ys, ws = _enumerate_words(pm, x, spec.sets)
    return float(np.dot(ws, np.asarray(pm.h(ys), dtype=float)))


def _nested_fn(pm: PathMeasure, inner_components):
    """``R(f_1 R(f_2 ... R(f_m h)))`` as a callable (components after f_0)."""
    k = pm.h
    for f in reversed(inner_components):
        prev = k
        if f is None:
            k = pm.op.apply_fn(prev)
        else:
            k = pm.op.apply_fn(lambda y, f=f, prev=prev:
                               np.asarray(f(y), dtype=float) *
                               np.asarray(prev(y), dtype=float))
    return k


def conditional_expectation(pm: PathMeasure, psi, x: float) -> float:
    """Expectation of a cylinder function against the base-``x`` measure
    (total mass ``h(x)``, not normalized)."""
    psi = CylinderFunction.coerce(psi)
    if psi.depth > DEPTH_MAX:
        raise DomainError("cylinder function too deep")
    k = _nested_fn(pm, psi.components[1:])
    f0 = psi.components[0]
    head = 1.0 if f0 is None else float(f0(x))
    return head * float(k(float(x)))


def v0_adjoint(pm: PathMeasure, psi) -> GridFunction:
    """Normalized conditional expectation ``E(psi | x)/h(x)`` on the grid;
    the adjoint of lifting a base function to the path space."""
    psi = CylinderFunction.coerce(psi)
    nodes = pm.op.nodes
    hv = np.asarray(pm.h(nodes), dtype=float)
    if np.any(np.abs(hv) <= EPS_H):
        raise DomainError("h vanishes at a grid node; adjoint undefined")
    k = _nested_fn(pm, psi.components[1:])
    vals = np.asarray(k(nodes), dtype=float)
    f0 = psi.components[0]
    if f0 is not None:
        vals = vals * np.asarray(f0(nodes), dtype=float)
    return GridFunction(vals / hv)


def expectation(pm: PathMeasure, psi, mode: str = "exact",
                samples: int = 100_000, rng: np.random.Generator | None = None):
    """Path-space expectation of a cylinder function.

    ``exact`` integrates the nested operator expression against the base
    measure; ``mc`` averages over sampled paths (bases drawn from ``h dlam``)
    and returns ``(estimate, stderr)``.
    """
    psi = CylinderFunction.coerce(psi)
    if mode == "exact":
        if psi.depth > DEPTH_MAX:
            raise DomainError("cylinder function too deep for exact mode")
        k = _nested_fn(pm, psi.components[1:])
        f0 = psi.components[0]
        if f0 is None:
            return integrate(k, pm.lam)
        return integrate(lambda x: np.asarray(f0(x), dtype=float) *
                         np.asarray(k(x), dtype=float), pm.lam)
    if mode == "mc":
        if rng is None:
            rng = np.random.default_rng(0)
        bases = sample_bases(pm, samples, rng)
        _, coords = sample_paths(pm, bases, psi.depth, rng)
        vals = psi.eval_on_coords(coords)
        if vals.size == 0:
            raise DomainError("no paths sampled")
        return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(vals.size))
    raise DomainError(f"unknown expectation mode '{mode}'")


# -- sampling ---------------------------------------------------------------


def sample_bases(pm: PathMeasure, count: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Draw base points from the probability measure ``h dlam``."""
    lam, h = pm.lam, pm.h
    mids = lam.cell_midpoints()
    cell_w = lam.cell_masses * np.asarray(h(mids), dtype=float)
    atom_pos = np.array([p for p, _ in lam.atoms])
    atom_w = np.array([m * float(h(p)) for p, m in lam.atoms])
    weights = np.concatenate([cell_w, atom_w]) if atom_w.size else cell_w
    total = weights.sum()
    if total <= 0:
        raise DomainError("h dlam has no mass to sample from")
    probs = weights / total
    idx = rng.choice(weights.size, size=count, p=probs)
    out = np.empty(count)
    is_cell = idx < lam.n_cells
    jit = rng.random(count)
    out[is_cell] = (idx[is_cell] + jit[is_cell]) / lam.n_cells
    if np.any(~is_cell):
        out[~is_cell] = atom_pos[idx[~is_cell] - lam.n_cells]
    return out


def sample_paths(pm: PathMeasure, bases, depth: int,
                 rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw branch digits from the ``h``-conditioned kernel, one step at a
    time: digit ``i`` at state ``y`` has probability proportional to
    ``p_i W(tau_i y) h(tau_i y) / h(y)``.

    Returns ``(digits, coords)`` with shapes ``(count, depth)`` and
    ``(count, depth+1)``.  Deterministic given the generator state.
    """
    sys_ = pm.op.system
    ys = np.atleast_1d(np.asarray(bases, dtype=float)).copy()
    count = ys.size
    digits = np.zeros((count, depth), dtype=np.int64)
    coords = np.zeros((count, depth + 1))
    coords[:, 0] = ys
    probs = np.array(sys_.probs)
    for j in range(depth):
        hy = np.asarray(pm.h(ys), dtype=float)
        if np.any(hy <= EPS_H):
            raise DomainError("h fell below its floor along a trajectory")
        pts = pm.op.branch_points(ys)                     # (n, count)
        wv = np.asarray(sys_.weight(pts), dtype=float)
        hv = np.asarray(pm.h(pts), dtype=float)
        kernel = probs[:, None] * wv * hv / hy[None, :]
        total = kernel.sum(axis=0)
        if np.any(total <= 0):
            raise DomainError("transition kernel degenerated to zero mass")
        u = rng.random(count) * total
        chosen = (np.cumsum(kernel, axis=0) < u[None, :]).sum(axis=0)
        chosen = np.minimum(chosen, len(sys_.probs) - 1)
        ys = pts[chosen, np.arange(count)]
        digits[:, j] = chosen
        coords[:, j + 1] = ys
    return digits, coords


def sample_path(pm: PathMeasure, x: float, depth: int,
                rng: np.random.Generator) -> SolPath:
    """One path from the normalized base-``x`` measure."""
    hx = float(pm.h(x))
    if hx <= EPS_H:
        raise DomainError("h(x) below floor; conditioning degenerate")
    digits, _ = sample_paths(pm, np.array([float(x)]), depth, rng)
    return SolPath(base=float(x), digits=tuple(int(d) for d in digits[0]))


def empirical_cylinder_frequency(pm: PathMeasure, x: float, spec: CylinderSpec,
                                 paths: int, rng: np.random.Generator
                                 ) -> tuple[float, float]:
    """Empirical probability of a cylinder event under sampling, with its
    binomial standard error; compare against ``cylinder_mass / h(x)``."""
    _, coords = sample_paths(pm, np.full(paths, float(x)), spec.depth, rng)
    hits = np.ones(paths, dtype=bool)
    for j, a in enumerate(spec.sets):
        if a is not None:
            hits &= np.asarray(a.indicator(coords[:, j + 1]), dtype=bool)
    p_hat = float(hits.mean())
    stderr = float(np.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / paths))
    return p_hat, stderr


# -- the weighted shift ------------------------------------------------------


def _shifted_components(pm: PathMeasure, psi: CylinderFunction, prefactor):
    """Components of ``prefactor(x_0) * psi(shifted path)`` as a cylinder
    function of depth ``max(depth-1, 0)``."""
    sigma = pm.op.system.sigma
    comps = list(psi.components)
    f0 = comps[0]

    def head(x, f0=f0, nxt=(comps[1] if len(comps) > 1 else None)):
        out = np.asarray(prefactor(x), dtype=float)
        if f0 is not None:
            out = out * np.asarray(f0(sigma(x)), dtype=float)
        if nxt is not None:
            out = out * np.asarray(nxt(x), dtype=float)
        return out

    return CylinderFunction([head] + comps[2:])


def quasi_invariance_defect(pm: PathMeasure, psi, mode: str = "exact",
                            samples: int = 100_000,
                            rng: np.random.Generator | None = None):
    """Signed defect of the change-of-variables rule for the path shift:

        E[ (W o Z_0) * (psi o shift) ] - E[ psi ].

    Zero (to rounding) whenever the weight is the density of the pushed base
    measure and ``h`` is harmonic.  Exact mode returns a float; ``mc`` mode
    returns ``(difference, stderr)``.
    """
    psi = CylinderFunction.coerce(psi)
    weight = pm.op.system.weight
    shifted = _shifted_components(pm, psi, lambda x: np.asarray(weight(x)))
    if mode == "exact":
        if psi.depth + 1 > DEPTH_MAX:
            raise DomainError("cylinder too deep for exact quasi-invariance")
        return expectation(pm, shifted, "exact") - expectation(pm, psi, "exact")
    if mode == "mc":
        lhs, se1 = expectation(pm, shifted, "mc", samples, rng)
        rhs, se2 = expectation(pm, psi, "mc", samples, rng)
        return lhs - rhs, float(np.hypot(se1, se2))
    raise DomainError(f"unknown mode '{mode}'")


def u_apply(pm: PathMeasure, psi) -> CylinderFunction:
    """The weighted shift ``(U psi)(omega) = sqrt(W(x_0)) psi(shift omega)``,
    returned as a cylinder function one level shallower."""
    psi = CylinderFunction.coerce(psi)
    weight = pm.op.system.weight
    return _shifted_components(
        pm, psi, lambda x: np.sqrt(np.maximum(np.asarray(weight(x),
                                                         dtype=float), 0.0)))


def unitarity_check(pm: PathMeasure, trials: int = 20, seed: int = 0,
                    depth: int = 2) -> float:
    """Max deviation of ``||U psi||^2`` from ``||psi||^2`` over random
    cylinder functions, both sides by exact enumeration."""
    from .trig import TrigPoly
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        comps = [TrigPoly.random(rng, degree=4) for _ in range(depth + 1)]
        psi = CylinderFunction(comps)
        lhs = expectation(pm, u_apply(pm, psi).squared(), "exact")
        rhs = expectation(pm, psi.squared(), "exact")
        worst = max(worst, abs(lhs - rhs))
    return worst


@dataclass(frozen=True)
class MultiresResult:
    nesting_residual: float
    shift_residual: float


def multires_check(pm: PathMeasure, n_max: int = 4, trials: int = 100,
                   seed: int = 0) -> MultiresResult:
    """Two structural checks of the coordinate filtration on sampled paths.

    Nesting: ``f(x_n) = (f o sigma)(x_{n+1})`` for every coordinate, which is
    the conjugacy between consecutive levels.  Shift: applying the weighted
    shift to a level-``n`` factor lands in level ``n-1``, verified by
    re-expressing both sides through the level-``n-1`` coordinate alone.
    """
    if n_max + 1 > DEPTH_MAX:
        raise DomainError("n_max too deep")
    rng = np.random.default_rng(seed)
    sigma = pm.op.system.sigma
    weight = pm.op.system.weight
    bases = sample_bases(pm, trials, rng)
    _, coords = sample_paths(pm, bases, n_max + 1, rng)

    f = TrigPoly.random(rng, degree=4)
    nesting = 0.0
    for n in range(n_max + 1):
        lhs = np.asarray(f(coords[:, n]))
        rhs = np.asarray(f(sigma(coords[:, n + 1])))
        nesting = max(nesting, float(np.max(np.abs(lhs - rhs))))

    shift = 0.0
    for n in range(1, n_max + 1):
        psi = CylinderFunction([None] * n + [f])
        u_psi = u_apply(pm, psi)
        lhs = u_psi.eval_on_coords(coords)
        z = coords[:, n - 1]
        back = z.copy()
        for _ in range(n - 1):
            back = np.asarray(sigma(back))
        rhs = np.sqrt(np.maximum(np.asarray(weight(back), dtype=float), 0.0)) \
            * np.asarray(f(z))
        shift = max(shift, float(np.max(np.abs(lhs - rhs))))
    return MultiresResult(nesting, shift)


# -- non-Markov witness and harmonic reconstruction -------------------------


def markov_deviation(pm: PathMeasure, set_a: IntervalSet, set_b: IntervalSet,
                     x: float, n: int) -> tuple[float, float, float]:
    """Joint masses ``m_k = P_x(coordinate k in A, coordinate k+1 in B)``
    for ``k = 1`` and ``k = n``; their difference witnesses that the chain
    is not time-homogeneous Markov.  Indicators are evaluated sharply at
    branch images, so the nested sums are exact.
    """
    if n < 2:
        raise DomainError("n must be at least 2")
    if n + 1 > DEPTH_MAX:
        raise DomainError("n too deep")
    rb = pm.op.apply_fn(lambda y: np.asarray(set_b.indicator(y)) *
                        np.asarray(pm.h(y), dtype=float))
    core = (lambda y: np.asarray(set_a.indicator(y)) *
            np.asarray(rb(y), dtype=float))
    fk = core
    m1 = np.nan
    for k in range(1, n + 1):
        fk = pm.op.apply_fn(fk)
        if k == 1:
            m1 = float(fk(float(x)))
    mn = float(fk(float(x)))
    return m1, mn, mn - m1


def harmonic_from_measure(pm: PathMeasure, depth: int = 1
                          ) -> tuple[GridFunction, float]:
    """Rebuild a candidate harmonic function as the total cylinder mass at
    every grid node, and report how far it is from being fixed by ``R``.

    Total mass at depth ``d`` is ``R^d h``; if ``h`` is harmonic this
    reproduces ``h`` and the residual is at the level of the solver's
    tolerance.  Feeding a non-harmonic ``h`` (via a non-strict
    :class:`PathMeasure`) makes the residual report the failure.
    """
    if depth < 1 or depth > DEPTH_MAX:
        raise DomainError("depth out of range")
    k = pm.h
    for _ in range(depth):
        k = pm.op.apply_fn(k)
    nodes = pm.op.nodes
    h_tilde = np.asarray(k(nodes), dtype=float)
    again = np.asarray(pm.op.apply_fn(k)(nodes), dtype=float)
    residual = float(np.max(np.abs(again - h_tilde)))
    return GridFunction(h_tilde), residual
