"""Gaussian-PNRD heralded even-cat generation, GP(2n).

A three-mode Gaussian state (squeezers ``r1, r2, r3``, a beam splitter of
transmissivity ``T`` and a balanced swapped splitter) is displaced by
``-+ i beta`` on the two ancillas, which are then projected on ``|n>|n>``.
The heralded signal is a polynomial of degree ``2n`` in ``a - lam2 a^dag``
acting on a squeezed vacuum, which is what this module evaluates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from catforge import fock
from catforge.errors import DegenerateStateError, InfeasibleError
from catforge.optimize import OptimizeSpec, maximize, maximize_constrained

SUPPORTED_N = (1, 2, 3)
K_DEGENERATE = 1e-14


@dataclass(frozen=True)
class GpParams:
    r1: float
    r2: float
    r3: float
    T: float
    beta: float
    n: int = 1

    def __post_init__(self):
        if not 0.0 < self.T <= 1.0:
            raise ValueError(f"T must lie in (0, 1], got {self.T}")
        if self.beta < 0:
            raise ValueError("beta is a magnitude and must be >= 0")
        if self.n not in SUPPORTED_N:
            raise ValueError(f"herald order n={self.n} not supported (use 1, 2 or 3)")
        if abs(self.xi) >= 1.0:
            raise ValueError(f"|xi| = {abs(self.xi)} >= 1, squeezed core undefined")

    @cached_property
    def lam(self) -> tuple[float, float, float]:
        return (math.tanh(self.r1), math.tanh(self.r2), math.tanh(self.r3))

    @cached_property
    def mu(self) -> tuple[float, float, float]:
        return (math.cosh(self.r1), math.cosh(self.r2), math.cosh(self.r3))

    @cached_property
    def xi(self) -> float:
        lam1, lam2, _ = (math.tanh(self.r1), math.tanh(self.r2), math.tanh(self.r3))
        return self.T * lam1 + (1.0 - self.T) * lam2

    @property
    def chi(self) -> float:
        return math.atanh(self.xi)

    @property
    def beta_tilde(self) -> float:
        return self.beta * (1.0 + self.lam[2])

    def as_vector(self) -> np.ndarray:
        return np.array([self.r1, self.r2, self.r3, self.T, self.beta])

    @classmethod
    def from_vector(cls, x, n: int) -> "GpParams":
        r1, r2, r3, T, beta = (float(v) for v in x)
        return cls(r1, r2, r3, T, beta, n)

    def with_n(self, n: int) -> "GpParams":
        return replace(self, n=n)


def ps_params(r1: float, T: float, n: int = 1) -> GpParams:
    """Photon subtraction from squeezed vacuum as a GP(2n) special case."""
    return GpParams(r1, 0.0, 0.0, T, 0.0, n)


def pa_params(r1: float, beta: float, n: int = 1) -> GpParams:
    """Photon addition to vacuum as a GP(2n) special case."""
    return GpParams(r1, -r1, 0.0, 0.5, beta, n)


def ps_success_rescale(p_raw: float, n: int) -> float:
    """Single-detector photon-subtraction rate from the two-detector GP rate."""
    if n not in SUPPORTED_N:
        raise ValueError(f"herald order n={n} not supported")
    return p_raw * 2 ** (2 * n) * math.factorial(n) ** 2 / math.factorial(2 * n)


def gp_coefficients(p: GpParams) -> list[float]:
    """Polynomial coefficients ``[C_0, C_2, ..., C_2n]`` of the heralded state."""
    _, l2, l3 = p.lam
    t = (1.0 - p.T) / p.T
    b = p.beta_tilde
    b2, b4, b6 = b * b, b**4, b**6
    if p.n == 1:
        return [l2 - l3 + 2.0 * b2, t]
    if p.n == 2:
        c4 = t * t
        c2 = t * (6.0 * l2 - 2.0 * l3 + 4.0 * b2)
        c0 = 3.0 * l2 * l2 - 2.0 * l2 * (l3 - 2.0 * b2) + 3.0 * l3 * l3 - 12.0 * l3 * b2 + 4.0 * b4
        return [c0, c2, c4]
    c6 = t**3
    c4 = 3.0 * t * t * (5.0 * l2 - l3 + 2.0 * b2)
    c2 = 3.0 * t * (
        15.0 * l2 * l2 + 3.0 * l3 * l3 - 12.0 * l3 * b2 + 4.0 * b4 - 6.0 * l2 * (l3 - 2.0 * b2)
    )
    c0 = (
        15.0 * l2**3
        - 15.0 * l3**3
        + 90.0 * l3 * l3 * b2
        - 60.0 * l3 * b4
        + 8.0 * b6
        - 9.0 * l2 * l2 * (l3 - 2.0 * b2)
        + 3.0 * l2 * (3.0 * l3 * l3 - 12.0 * l3 * b2 + 4.0 * b4)
    )
    return [c0, c2, c4, c6]


def gp_dim(p: GpParams, floor: int = 0) -> int:
    return fock.squeezed_dim(p.chi, floor=floor) + 2 * p.n


def gp_unnormalized(p: GpParams, dim: int | None = None) -> tuple[np.ndarray, float]:
    """``psi~ = sum_k C_2k (a - lam2 a^dag)^(2k) |chi>`` and its squared norm."""
    dim = dim or gp_dim(p)
    core = np.zeros(dim, dtype=complex)
    body = fock.squeezed_vacuum_fock(p.chi, dim - 2 * p.n)
    core[: len(body)] = body
    return fock.apply_polynomial(core, gp_coefficients(p), p.lam[1])


def gp_output_state(p: GpParams, dim: int | None = None) -> tuple[np.ndarray, float]:
    """Normalized heralded state and its norm ``K``.

    Raises DegenerateStateError when ``K`` is below ``K_DEGENERATE`` (the
    configuration cannot herald anything, e.g. vacuum inputs).
    """
    psi, k = gp_unnormalized(p, dim)
    if k < K_DEGENERATE:
        raise DegenerateStateError(f"heralding impossible: K={k:.3e}")
    return psi / math.sqrt(k), k


def gp_prefactor(p: GpParams) -> float:
    """Probability prefactor multiplying ``K``."""
    _, _, l3 = p.lam
    m1, m2, m3 = p.mu
    n = p.n
    norm = (2**n * math.factorial(n)) ** 2 * m1 * m2 * m3
    return math.exp(-2.0 * (1.0 + l3) * p.beta**2) / norm / math.sqrt(1.0 - p.xi**2)


def gp_success_probability(p: GpParams, k: float | None = None) -> float:
    if k is None:
        _, k = gp_unnormalized(p)
    return gp_prefactor(p) * k


def gp_fidelity(p: GpParams, alpha: float, target: np.ndarray | None = None) -> float:
    """``|<cat+|phi_2n(p)>|^2``."""
    dim = gp_dim(p, floor=fock.cutoff_for(alpha))
    psi, k = gp_unnormalized(p, dim)
    if k < K_DEGENERATE:
        raise DegenerateStateError(f"heralding impossible: K={k:.3e}")
    if target is None or len(target) > dim:
        target = fock.cat_fock(alpha, "even", fock.cutoff_for(alpha))
    m = len(target)
    return float(abs(np.vdot(target, psi[:m])) ** 2 / k)


# --- optimization ---------------------------------------------------------

R_BOUND = (-2.5, 2.5)
T_BOUND = (0.05, 0.999)
BETA_BOUND = (0.0, 2.0)
FAMILIES = ("gp", "ps", "pa")
# fidelity slack allowed when breaking ties by success probability
TIE_SLACK = 1e-9
# fidelity violations of 1e-4 must outweigh probability gains of order 0.1
TIE_WEIGHT = 1e6


def family_bounds(family: str) -> list[tuple[float, float]]:
    if family == "gp":
        return [R_BOUND, R_BOUND, R_BOUND, T_BOUND, BETA_BOUND]
    if family == "ps":
        return [R_BOUND, T_BOUND]
    if family == "pa":
        return [R_BOUND, BETA_BOUND]
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def family_params(family: str, x, n: int) -> GpParams:
    if family == "gp":
        return GpParams.from_vector(x, n)
    if family == "ps":
        return ps_params(float(x[0]), float(x[1]), n)
    if family == "pa":
        return pa_params(float(x[0]), float(x[1]), n)
    raise ValueError(f"unknown family {family!r}")


def family_vector(family: str, p: GpParams) -> np.ndarray:
    return {
        "gp": p.as_vector(),
        "ps": np.array([p.r1, p.T]),
        "pa": np.array([p.r1, p.beta]),
    }[family]


def family_probability(family: str, p: GpParams) -> float:
    """Success rate as quoted for each family (PS uses a single detector)."""
    prob = gp_success_probability(p)
    return ps_success_rescale(prob, p.n) if family == "ps" else prob


@dataclass(frozen=True)
class GpOptimum:
    alpha: float
    family: str
    params: GpParams
    fidelity: float
    probability: float
    converged: bool
    n_evals: int


def gp_optimize(
    alpha: float,
    n: int = 1,
    family: str = "gp",
    restarts: int = 8,
    seed: int = 0,
    starts=(),
    tie_break: bool = True,
    max_evals: int = 3000,
) -> GpOptimum:
    """Maximize cat fidelity over a circuit family.

    The fidelity optimum is generally a manifold (the state only depends on
    ``xi`` and the coefficient ratios), along which the success probability
    varies a lot. With ``tie_break`` a second constrained search picks the
    most probable point among those within ``TIE_SLACK`` of the best fidelity,
    which makes the reported probability well defined.
    """
    if not 0.0 <= alpha <= 6.0:
        raise ValueError("alpha must lie in [0, 6]")
    bounds = family_bounds(family)
    target = fock.cat_fock(alpha, "even", fock.cutoff_for(alpha))

    def fidelity(x):
        return gp_fidelity(family_params(family, x, n), alpha, target)

    def probability(x):
        return family_probability(family, family_params(family, x, n))

    spec = OptimizeSpec(
        fidelity, bounds, restarts=restarts, seed=seed, starts=list(starts), max_evals=max_evals
    )
    res = maximize(spec)
    x_best, evals, converged = res.x, res.n_evals, res.converged
    if tie_break:
        f_star = res.value
        tie_spec = OptimizeSpec(
            probability,
            bounds,
            restarts=restarts,
            seed=seed,
            starts=[res.x],
            max_evals=max_evals,
        )
        try:
            tie = maximize_constrained(
                tie_spec, lambda x: fidelity(x) - (f_star - TIE_SLACK), weight0=TIE_WEIGHT
            )
            x_best, evals = tie.x, evals + tie.n_evals
        except InfeasibleError:
            pass
    p = family_params(family, x_best, n)
    return GpOptimum(
        alpha=alpha,
        family=family,
        params=p,
        fidelity=gp_fidelity(p, alpha, target),
        probability=family_probability(family, p),
        converged=converged,
        n_evals=evals,
    )


def gp_continuation(
    alphas, n: int = 1, family: str = "gp", restarts: int = 8, seed: int = 0, tie_break: bool = True
) -> list[GpOptimum]:
    """Optimize along an alpha grid, warm-starting each point from the previous optimum."""
    out: list[GpOptimum] = []
    for alpha in alphas:
        starts = [family_vector(family, out[-1].params)] if out else []
        out.append(
            gp_optimize(alpha, n, family, restarts=restarts, seed=seed, starts=starts, tie_break=tie_break)
        )
    return out
