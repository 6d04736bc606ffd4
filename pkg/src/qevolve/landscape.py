"""Exact single-parameter cross-sections and the gradient-free search direction.

With full-angle rotations every cost cross-section along one parameter ``p`` is

    order 3:  kappa * sin(2p + xi) + C
    order 5:  kappa * sin(2p + xi) + gamma * sin(p + phi) + C

(order 5 arises once a parameter sits in a controlled rotation, or whenever
the cost is linear rather than quadratic in the circuit unitary). Both forms
are recovered exactly from 3 or 5 samples and minimized in closed form or by
a guarded Newton polish.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

from .pauli import Hamiltonian
from .simcore import TWO_PI, Circuit, EvalCounter, canonicalize, expectation, run_circuit

SNAP_TOL = 1e-12
NEWTON_TOL = 1e-12
GRID_POINTS = 64
FIVE_OFFSETS = TWO_PI * np.arange(5) / 5


class CostFunction(Protocol):
    """Deterministic map from a parameter vector to a real cost.

    ``order`` declares the cross-section family (3 or 5); ``counter`` is bumped
    once per call.
    """

    order: int
    counter: EvalCounter
    n_params: int

    def __call__(self, params: np.ndarray) -> float: ...


class VQECost:
    """``<0|U(theta)^dag H U(theta)|0>`` for a fixed circuit and Hamiltonian."""

    def __init__(
        self,
        circuit: Circuit,
        hamiltonian: Hamiltonian,
        initial: Optional[np.ndarray] = None,
        counter: Optional[EvalCounter] = None,
        order: Optional[int] = None,
    ):
        if circuit.n_qubits != hamiltonian.n_qubits:
            raise ValueError("circuit and Hamiltonian widths differ")
        self.circuit = circuit
        self.hamiltonian = hamiltonian
        self.initial = initial
        self.counter = counter if counter is not None else EvalCounter()
        self.order = order or (5 if circuit.has_controlled_rotations else 3)
        self.n_params = circuit.n_params

    def state(self, params) -> np.ndarray:
        """Prepared state; not counted as an evaluation."""
        return run_circuit(self.circuit, params, self.initial)

    def __call__(self, params) -> float:
        return expectation(self.state(params), self.hamiltonian, self.counter)


def circular_distance(a, b):
    return np.abs(np.mod(np.asarray(a) - b + np.pi, TWO_PI) - np.pi)


def wrap_angle(a):
    """Signed representative in ``[-pi, pi)``."""
    return np.mod(np.asarray(a) + np.pi, TWO_PI) - np.pi


@dataclass(frozen=True)
class Sinusoid3:
    kappa: float
    xi: float
    C: float

    def __post_init__(self):
        if self.kappa < 0:
            object.__setattr__(self, "kappa", -self.kappa)
            object.__setattr__(self, "xi", self.xi + np.pi)
        object.__setattr__(self, "xi", float(np.mod(self.xi, TWO_PI)))

    def __call__(self, p):
        return self.kappa * np.sin(2 * np.asarray(p) + self.xi) + self.C


@dataclass(frozen=True)
class Sinusoid5:
    kappa: float
    xi: float
    gamma: float
    phi: float
    C: float

    def __post_init__(self):
        if self.kappa < 0:
            object.__setattr__(self, "kappa", -self.kappa)
            object.__setattr__(self, "xi", self.xi + np.pi)
        if self.gamma < 0:
            object.__setattr__(self, "gamma", -self.gamma)
            object.__setattr__(self, "phi", self.phi + np.pi)
        object.__setattr__(self, "xi", float(np.mod(self.xi, TWO_PI)))
        object.__setattr__(self, "phi", float(np.mod(self.phi, TWO_PI)))

    def __call__(self, p):
        p = np.asarray(p)
        return (
            self.kappa * np.sin(2 * p + self.xi)
            + self.gamma * np.sin(p + self.phi)
            + self.C
        )

    def derivative(self, p, order: int = 1):
        p = np.asarray(p)
        if order == 1:
            return 2 * self.kappa * np.cos(2 * p + self.xi) + self.gamma * np.cos(p + self.phi)
        return -4 * self.kappa * np.sin(2 * p + self.xi) - self.gamma * np.sin(p + self.phi)


def _shifted(params: np.ndarray, i: int, offset: float) -> np.ndarray:
    out = params.copy()
    out[i] = math.fmod(params[i] + offset, TWO_PI)
    return out


def fit3(f: CostFunction, params, i: int, f0: Optional[float] = None) -> Sinusoid3:
    """Reconstruct the order-3 cross-section of coordinate ``i``.

    Samples at offsets 0, pi/4, pi/2; two calls to ``f`` when ``f0`` is given.
    """
    params = np.asarray(params, dtype=np.float64)
    y0 = f(params) if f0 is None else f0
    y1 = f(_shifted(params, i, np.pi / 4))
    y2 = f(_shifted(params, i, np.pi / 2))
    C = 0.5 * (y0 + y2)
    s, c = y0 - C, y1 - C
    return Sinusoid3(math.hypot(s, c), math.atan2(s, c) - 2 * params[i], C)


def fit5(f: CostFunction, params, i: int, f0: Optional[float] = None) -> Sinusoid5:
    """Reconstruct the order-5 cross-section from five equidistant samples.

    Uses the discrete Fourier transform of frequencies 0, 1, 2, which is exact
    for five samples. Four calls to ``f`` when ``f0`` is given.
    """
    params = np.asarray(params, dtype=np.float64)
    y = np.empty(5)
    y[0] = f(params) if f0 is None else f0
    for k in range(1, 5):
        y[k] = f(_shifted(params, i, FIVE_OFFSETS[k]))
    C = y.mean()
    a1, b1 = 0.4 * y @ np.cos(FIVE_OFFSETS), 0.4 * y @ np.sin(FIVE_OFFSETS)
    a2, b2 = 0.4 * y @ np.cos(2 * FIVE_OFFSETS), 0.4 * y @ np.sin(2 * FIVE_OFFSETS)
    t = params[i]
    return Sinusoid5(
        kappa=math.hypot(a2, b2),
        xi=math.atan2(a2, b2) - 2 * t,
        gamma=math.hypot(a1, b1),
        phi=math.atan2(a1, b1) - t,
        C=C,
    )


def _nearest(candidates: np.ndarray, current: float) -> float:
    d = circular_distance(candidates, current)
    best = float(candidates[int(np.argmin(d))])
    if circular_distance(best, current) < SNAP_TOL:
        return float(current)
    return float(np.mod(best, TWO_PI))


def argmin3(model: Sinusoid3, current: float) -> float:
    """Global minimizer of an order-3 model closest to ``current``."""
    if model.kappa == 0.0:
        return float(current)
    first = np.mod((1.5 * np.pi - model.xi) / 2, np.pi)
    return _nearest(np.array([first, first + np.pi]), current)


@dataclass
class ArgminDiagnostics:
    newton_failures: int = 0


def argmin5(
    model: Sinusoid5, current: float, diagnostics: Optional[ArgminDiagnostics] = None
) -> float:
    """Global minimizer of an order-5 model closest to ``current``.

    A 64-point grid brackets every local minimum; each is polished with Newton
    steps on the derivative until it drops below 1e-12. A bracket whose Newton
    run fails keeps its grid point and is recorded in ``diagnostics``.
    """
    if model.kappa == 0.0 and model.gamma == 0.0:
        return float(current)
    grid = TWO_PI * np.arange(GRID_POINTS) / GRID_POINTS
    vals = model(grid)
    is_min = (vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1))
    cands, cvals = [], []
    for p0 in grid[is_min]:
        p = p0
        ok = False
        for _ in range(50):
            g1 = model.derivative(p)
            if abs(g1) < NEWTON_TOL:
                ok = True
                break
            g2 = model.derivative(p, 2)
            if g2 <= 0:
                break
            p = p - g1 / g2
        # a converged step must stay inside its bracket
        if not ok or circular_distance(p, p0) > 2 * TWO_PI / GRID_POINTS:
            if diagnostics is not None:
                diagnostics.newton_failures += 1
            p = p0
        cands.append(float(np.mod(p, TWO_PI)))
        cvals.append(float(model(p)))
    cands, cvals = np.array(cands), np.array(cvals)
    lowest = cvals.min()
    ties = cands[cvals <= lowest + 1e-12 * max(1.0, abs(lowest))]
    return _nearest(ties, current)


def fit(f: CostFunction, params, i: int, f0: Optional[float] = None):
    return fit5(f, params, i, f0) if f.order == 5 else fit3(f, params, i, f0)


def argmin(model, current: float) -> float:
    return argmin5(model, current) if isinstance(model, Sinusoid5) else argmin3(model, current)


@dataclass(frozen=True)
class SearchDirection:
    """Sparse displacement: ``step[j]`` on coordinate ``support[j]``, zero elsewhere."""

    n_params: int
    support: np.ndarray
    step: np.ndarray

    def dense(self) -> np.ndarray:
        d = np.zeros(self.n_params)
        d[self.support] = self.step
        return d

    @property
    def is_zero(self) -> bool:
        return not np.any(self.step)


def search_direction(
    f: CostFunction, params, subset: Sequence[int], f0: float
) -> SearchDirection:
    """Coordinate-wise exact minimizers on ``subset`` minus the current values.

    Every coordinate is fitted at the same frozen base point. Costs
    ``2 |subset|`` (order 3) or ``4 |subset|`` (order 5) evaluations.
    """
    subset = np.asarray(subset, dtype=np.int64)
    if subset.size == 0:
        raise ValueError("the parameter subset must not be empty")
    if np.unique(subset).size != subset.size:
        raise ValueError("the parameter subset has repeated indices")
    params = np.asarray(params, dtype=np.float64)
    step = np.empty(subset.size)
    for j, i in enumerate(subset):
        model = fit(f, params, int(i), f0)
        step[j] = wrap_angle(argmin(model, params[i]) - params[i])
    return SearchDirection(params.size, subset, step)


def line_search(
    f: CostFunction,
    params,
    d: SearchDirection,
    n_samples: int,
    f0: float,
) -> tuple[float, np.ndarray, float]:
    """Best of ``n_samples`` equidistant points on ``params + t d``, ``t`` in [0, 1].

    ``t = 0`` reuses ``f0``, so ``n_samples - 1`` evaluations are spent and the
    returned cost never exceeds ``f0``. A later sample must be strictly lower
    to win.
    """
    if n_samples < 2:
        raise ValueError("a line search needs at least two samples")
    params = np.asarray(params, dtype=np.float64)
    t_best, x_best, c_best = 0.0, params, f0
    for k in range(1, n_samples):
        t = k / (n_samples - 1)
        x = params.copy()
        x[d.support] = canonicalize(params[d.support] + t * d.step)
        c = f(x)
        if c < c_best:
            t_best, x_best, c_best = t, x, c
    return t_best, x_best, c_best


@dataclass(frozen=True)
class IterateConfig:
    subset_size: int = 8
    line_samples: int = 32
    max_resamples: int = 16


@dataclass
class IterationResult:
    params: np.ndarray
    cost: float
    evaluations: int
    t: float = 0.0
    directions: int = 0
    line_searches: int = 0
    converged: bool = False
    truncated: bool = False


class _Tally:
    """Forwards calls to a cost function and counts them locally."""

    def __init__(self, f: CostFunction):
        self.f = f
        self.order = f.order
        self.calls = 0

    def __call__(self, params) -> float:
        self.calls += 1
        return self.f(params)


def iterate(
    f: CostFunction,
    params,
    cfg: IterateConfig,
    rng: np.random.Generator,
    f0: Optional[float] = None,
    budget: Optional[int] = None,
) -> IterationResult:
    """One optimizer step: random subset, search direction, inexact line search.

    A zero direction triggers up to ``cfg.max_resamples`` fresh subsets before
    the point is declared converged. ``budget`` caps the evaluations this call
    may spend; a step that would overrun it is not started.
    """
    tally = _Tally(f)
    params = np.asarray(params, dtype=np.float64)
    if f0 is None:
        f0 = tally(params)
    L = params.size
    m = min(cfg.subset_size, L)
    per_direction = (4 if f.order == 5 else 2) * m
    result = IterationResult(params, f0, 0)
    for _ in range(1 + cfg.max_resamples):
        if budget is not None and tally.calls + per_direction + cfg.line_samples - 1 > budget:
            result.truncated = True
            break
        subset = rng.choice(L, size=m, replace=False)
        d = search_direction(tally, params, subset, f0)
        result.directions += 1
        if d.is_zero:
            continue
        t, x, c = line_search(tally, params, d, cfg.line_samples, f0)
        result.line_searches += 1
        result.params, result.cost, result.t = x, c, t
        break
    else:
        result.converged = True
    result.evaluations = tally.calls
    return result


def scan(f: CostFunction, params, i: int, n_points: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Dense cross-section of coordinate ``i`` on a uniform grid over [0, 2 pi)."""
    params = np.asarray(params, dtype=np.float64)
    if not 0 <= i < params.size:
        raise IndexError(f"parameter index {i} outside [0, {params.size})")
    thetas = TWO_PI * np.arange(n_points) / n_points
    values = np.empty(n_points)
    for k, t in enumerate(thetas):
        x = params.copy()
        x[i] = t
        values[k] = f(x)
    return thetas, values


def write_scan_csv(path, thetas, values, model=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "energy"] + (["model"] if model is not None else []))
        for t, v in zip(thetas, values):
            row = [repr(float(t)), repr(float(v))]
            if model is not None:
                row.append(repr(float(model(t))))
            w.writerow(row)
