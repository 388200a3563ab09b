"""Deterministic bounded derivative-free maximization.

Nelder-Mead simplex search in coordinates rescaled to the unit box, with
out-of-bounds trial points reflected back inside. Several restarts are run
from warm-start points and a scrambled Sobol sequence; the best value over
all restarts wins. Nothing here draws from global random state, so a given
``(spec, seed)`` always produces the same evaluation trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from catforge.errors import InfeasibleError, OptimizationError


@dataclass
class OptimizeSpec:
    objective: Callable[[np.ndarray], float]
    bounds: Sequence[tuple[float, float]]
    restarts: int = 8
    seed: int = 0
    xtol: float = 1e-9
    ftol: float = 1e-13
    max_evals: int = 3000
    starts: Sequence[Sequence[float]] = ()
    step: float = 0.1
    explore: bool = True

    def __post_init__(self):
        self.bounds = [(float(lo), float(hi)) for lo, hi in self.bounds]
        if any(not hi > lo for lo, hi in self.bounds):
            raise ValueError("every bound must be a nonempty interval")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.xtol <= 0 or self.ftol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class OptimizeResult:
    x: np.ndarray
    value: float
    n_evals: int
    converged: bool
    trace: list[tuple[np.ndarray, float]] = field(repr=False, default_factory=list)
    envelope: list[float] = field(default_factory=list)


def _reflect(u: np.ndarray) -> np.ndarray:
    u = np.abs(u)
    u = np.where(u > 1.0, 2.0 - u, u)
    return np.clip(u, 0.0, 1.0)


class _Problem:
    def __init__(self, spec: OptimizeSpec):
        self.spec = spec
        self.lo = np.array([b[0] for b in spec.bounds])
        self.width = np.array([b[1] - b[0] for b in spec.bounds])
        self.trace: list[tuple[np.ndarray, float]] = []

    def to_x(self, u: np.ndarray) -> np.ndarray:
        return self.lo + self.width * u

    def to_u(self, x) -> np.ndarray:
        return _reflect((np.asarray(x, dtype=float) - self.lo) / self.width)

    def __call__(self, u: np.ndarray) -> float:
        x = self.to_x(u)
        try:
            val = float(self.spec.objective(x))
        except (ArithmeticError, ValueError):
            val = -math.inf
        if not math.isfinite(val):
            val = -math.inf
        self.trace.append((x, val))
        return val


def _nelder_mead(prob: _Problem, u0: np.ndarray, budget: int) -> tuple[np.ndarray, float, bool, int]:
    """Maximize ``prob`` from ``u0``; returns (u_best, f_best, converged, evals)."""
    spec = prob.spec
    d = len(u0)
    alpha_r, gamma_e, rho_c, sigma_s = 1.0, 2.0, 0.5, 0.5
    simplex = [u0]
    for i in range(d):
        v = u0.copy()
        v[i] = v[i] + spec.step if v[i] + spec.step <= 1.0 else v[i] - spec.step
        simplex.append(v)
    simplex = np.array(simplex)
    fvals = np.array([prob(v) for v in simplex])
    evals = d + 1
    converged = False
    while evals < budget:
        order = np.argsort(-fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        spread = np.max(np.abs(simplex[1:] - simplex[0]))
        fspread = fvals[0] - fvals[-1] if np.isfinite(fvals[-1]) else math.inf
        if spread < spec.xtol or (fspread <= spec.ftol * max(1.0, abs(fvals[0])) and spread < 1e-4):
            converged = True
            break
        centroid = simplex[:-1].mean(axis=0)
        xr = _reflect(centroid + alpha_r * (centroid - simplex[-1]))
        fr = prob(xr)
        evals += 1
        if fr > fvals[0]:
            xe = _reflect(centroid + gamma_e * (xr - centroid))
            fe = prob(xe)
            evals += 1
            if fe > fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr > fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr > fvals[-1]:
            xc = _reflect(centroid + rho_c * (xr - centroid))
        else:
            xc = _reflect(centroid + rho_c * (simplex[-1] - centroid))
        fc = prob(xc)
        evals += 1
        if fc > max(fr, fvals[-1]):
            simplex[-1], fvals[-1] = xc, fc
            continue
        for i in range(1, d + 1):
            simplex[i] = simplex[0] + sigma_s * (simplex[i] - simplex[0])
            fvals[i] = prob(simplex[i])
        evals += d
    best = int(np.argmax(fvals))
    return simplex[best], float(fvals[best]), converged, evals


def _start_points(prob: _Problem, spec: OptimizeSpec) -> list[np.ndarray]:
    """Warm starts first, then ``restarts`` scrambled Sobol points.

    Warm starts are added on top of the Sobol set rather than replacing part
    of it, so a warm-started run explores a superset of the cold run.
    """
    starts = [prob.to_u(x) for x in spec.starts]
    if spec.explore or not starts:
        sobol = qmc.Sobol(d=len(spec.bounds), scramble=True, seed=spec.seed)
        pts = sobol.random(2 ** max(1, math.ceil(math.log2(spec.restarts))))[: spec.restarts]
        starts.extend(np.asarray(p, dtype=float) for p in pts)
    return starts


def maximize(spec: OptimizeSpec) -> OptimizeResult:
    """Best point over all bounded Nelder-Mead runs (see ``_start_points``)."""
    prob = _Problem(spec)
    best_u, best_f, converged_any = None, -math.inf, False
    envelope = []
    for u0 in _start_points(prob, spec):
        u, f, conv, _ = _nelder_mead(prob, u0, spec.max_evals)
        # one polishing restart from the converged vertex
        u2, f2, conv2, _ = _nelder_mead(prob, u, spec.max_evals // 3)
        if f2 >= f:
            u, f, conv = u2, f2, conv or conv2
        if f > best_f:
            best_u, best_f = u, f
        converged_any = converged_any or conv
        envelope.append(best_f)
    if best_u is None or not math.isfinite(best_f):
        raise OptimizationError("objective was non-finite at every visited point")
    return OptimizeResult(
        x=prob.to_x(best_u),
        value=best_f,
        n_evals=len(prob.trace),
        converged=converged_any,
        trace=prob.trace,
        envelope=envelope,
    )


def maximize_constrained(
    spec: OptimizeSpec,
    constraint: Callable[[np.ndarray], float],
    weight0: float = 1e2,
    stages: int = 5,
    feas_tol: float = 1e-8,
) -> OptimizeResult:
    """Maximize subject to ``constraint(x) >= 0`` with an exterior quadratic penalty.

    The weight grows tenfold per stage and each stage starts from the previous
    stage's best. The returned point is the best *feasible* evaluation seen
    (``g >= -feas_tol``), never a penalized infeasible one.
    """
    feasible: list[tuple[np.ndarray, float]] = []
    trace: list[tuple[np.ndarray, float]] = []
    envelope: list[float] = []
    starts = list(spec.starts)
    n_evals = 0
    converged = False
    for stage in range(stages):
        weight = weight0 * 10.0**stage

        def penalized(x, weight=weight):
            f = float(spec.objective(x))
            g = float(constraint(x))
            if g >= -feas_tol and math.isfinite(f):
                feasible.append((np.array(x, dtype=float), f))
            return f - weight * min(0.0, g) ** 2

        stage_spec = OptimizeSpec(
            objective=penalized,
            bounds=spec.bounds,
            restarts=spec.restarts,
            seed=spec.seed,
            xtol=spec.xtol,
            ftol=spec.ftol,
            max_evals=spec.max_evals,
            starts=starts,
            step=spec.step if stage == 0 else spec.step / 10.0,
            explore=spec.explore and stage == 0,
        )
        res = maximize(stage_spec)
        trace.extend(res.trace)
        n_evals += res.n_evals
        converged = res.converged
        starts = [res.x]
        envelope.append(res.value)
    if not feasible:
        raise InfeasibleError("no feasible point found")
    x_best, f_best = max(feasible, key=lambda item: item[1])
    return OptimizeResult(
        x=x_best, value=f_best, n_evals=n_evals, converged=converged, trace=trace, envelope=envelope
    )
