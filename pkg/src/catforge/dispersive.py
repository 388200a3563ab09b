"""Feedforward dispersive cat generation and its noise variants.

A qubit-conditioned pi phase flip maps ``|alpha>`` to ``(|g>|alpha> +
|e>|-alpha>)/sqrt(2)``. Measuring the qubit in the ``|+-|`` basis heralds an
even or odd cat. The odd outcome is displaced by ``+-i gamma`` (fair coin) so
that every run yields an output. All outputs here are exact ensemble averages
in the coherent-state representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from scipy.optimize import minimize_scalar

from catforge.coherent import CoherentMix, displace_mix, fidelity_with_cat, mix
from catforge.errors import InfeasibleError
from catforge.optimize import OptimizeSpec, maximize_constrained

GAMMA_XTOL = 1e-10


def p_plus(alpha: float) -> float:
    return 0.5 * (1.0 + math.exp(-2.0 * alpha * alpha))


def p_minus(alpha: float) -> float:
    return -0.5 * math.expm1(-2.0 * alpha * alpha)


@dataclass(frozen=True)
class DispersiveConfig:
    alpha: float
    gamma: float = 0.0
    q: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("alpha and gamma must be >= 0")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("keep probability q must lie in [0, 1]")

    @property
    def p_plus(self) -> float:
        return p_plus(self.alpha)

    @property
    def p_minus(self) -> float:
        return p_minus(self.alpha)


@dataclass(frozen=True)
class ImperfectCoupling:
    """Finite cooperativity ``C`` and escape efficiency ``eta`` of the cavity."""

    C: float
    eta: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("cooperativity must be positive")
        if not 0.5 < self.eta <= 1.0:
            raise ValueError("escape efficiency must lie in (1/2, 1]")

    @cached_property
    def eta_g(self) -> float:
        return (1.0 - 2.0 * self.eta / (1.0 + 4.0 * self.C)) ** 2

    @cached_property
    def eta_e(self) -> float:
        return (1.0 - 2.0 * self.eta) ** 2

    @cached_property
    def eta_prime(self) -> float:
        return 1.0 - 16.0 * self.eta * self.C / (1.0 + 4.0 * self.C) ** 2

    @cached_property
    def Gamma(self) -> float:
        root = math.sqrt(max(0.0, (1.0 - self.eta_e) * (self.eta_prime - self.eta_g)))
        return 2.0 - self.eta_g - self.eta_e + 2.0 * root


@dataclass(frozen=True)
class QubitChannel:
    """Qubit phase damping (``"pd"``, rate ``lambda``) or amplitude damping (``"ad"``, ``kappa``)."""

    kind: str
    strength: float

    def __post_init__(self):
        if self.kind == "pd":
            if self.strength < 0:
                raise ValueError("phase damping rate must be >= 0")
        elif self.kind == "ad":
            if not 0.0 <= self.strength <= 1.0:
                raise ValueError("decay probability must lie in [0, 1]")
        else:
            raise ValueError(f"unknown qubit channel {self.kind!r}")

    @property
    def coherence(self) -> float:
        if self.kind == "pd":
            return math.exp(-self.strength)
        return math.sqrt(1.0 - self.strength)


# --- conditional states -----------------------------------------------------


def _conditional(a_g: float, a_e: float, coherence: float, sign: int) -> tuple[CoherentMix, float]:
    """Qubit-heralded state over kets ``{a_g, -a_e}`` with damped cross terms."""
    s = sign * coherence
    raw = CoherentMix([a_g, -a_e], [[1.0, s], [s, 1.0]])
    weight = raw.trace().real / 4.0
    return raw.scaled(0.25 / weight), weight


def ideal_conditional(alpha: float, sign: int) -> tuple[CoherentMix, float]:
    return _conditional(alpha, alpha, 1.0, sign)


def imperfect_conditional(alpha: float, c: ImperfectCoupling, sign: int) -> tuple[CoherentMix, float]:
    """``sigma_+-`` and its herald probability for an imperfect cavity."""
    a_g, a_e = math.sqrt(c.eta_g) * alpha, math.sqrt(c.eta_e) * alpha
    state, _ = _conditional(a_g, a_e, math.exp(-c.Gamma * alpha * alpha / 2.0), sign)
    expo = -(c.Gamma + (math.sqrt(c.eta_g) + math.sqrt(c.eta_e)) ** 2) * alpha * alpha / 2.0
    prob = 0.5 * (1.0 + math.exp(expo)) if sign > 0 else -0.5 * math.expm1(expo)
    return state, prob


def damped_conditional(alpha: float, ch: QubitChannel, sign: int) -> tuple[CoherentMix, float]:
    state, _ = _conditional(alpha, alpha, ch.coherence, sign)
    e = ch.coherence * math.exp(-2.0 * alpha * alpha)
    return state, 0.5 * (1.0 + e) if sign > 0 else 0.5 * (1.0 - e)


def feedforward(plus, minus, gamma: float, q: float = 1.0) -> CoherentMix:
    """Average output after displacing the odd outcome by ``+-i gamma`` with probability ``q``."""
    (s_plus, pp), (s_minus, pm) = plus, minus
    if pm == 0.0 or q == 0.0:
        return s_plus
    total = pp + q * pm
    parts = [(pp / total, s_plus)]
    for d in (1j * gamma, -1j * gamma):
        parts.append((0.5 * q * pm / total, displace_mix(s_minus, d)))
    return mix(parts)


def ideal_mixture(alpha: float, gamma: float, q: float = 1.0) -> CoherentMix:
    if alpha == 0.0:
        return CoherentMix.coherent(0.0)
    return feedforward(ideal_conditional(alpha, +1), ideal_conditional(alpha, -1), gamma, q)


def imperfect_mixture(alpha: float, c: ImperfectCoupling, gamma: float) -> CoherentMix:
    if alpha == 0.0:
        return CoherentMix.coherent(0.0)
    return feedforward(imperfect_conditional(alpha, c, +1), imperfect_conditional(alpha, c, -1), gamma)


def damped_mixture(alpha: float, ch: QubitChannel, gamma: float) -> CoherentMix:
    if alpha == 0.0:
        return CoherentMix.coherent(0.0)
    return feedforward(damped_conditional(alpha, ch, +1), damped_conditional(alpha, ch, -1), gamma)


# --- fidelities and gamma optimization ----------------------------------------


def displaced_odd_gain(alpha: float, gamma: float) -> float:
    """``<cat+|D(i gamma)|cat->`` squared, in closed form."""
    if alpha == 0.0:
        return 0.0
    coth = 1.0 / math.tanh(2.0 * alpha * alpha)
    return (1.0 + coth) * 0.5 * math.exp(-gamma * gamma) * math.sin(2.0 * alpha * gamma) ** 2


def fidelity_closed_form(alpha: float, gamma: float, q: float = 1.0) -> float:
    pp, pm = p_plus(alpha), p_minus(alpha)
    return (pp + q * pm * displaced_odd_gain(alpha, gamma)) / (pp + q * pm)


def gamma_interval(alpha: float) -> tuple[float, float]:
    return (0.0, math.pi / (2.0 * alpha))


def _maximize_gamma(fid, alpha: float) -> tuple[float, float]:
    lo, hi = gamma_interval(alpha)
    res = minimize_scalar(
        lambda g: -fid(g), bounds=(lo, hi), method="bounded", options={"xatol": GAMMA_XTOL}
    )
    g = float(res.x)
    # the bounded search never evaluates the closed end; check it explicitly
    if fid(hi) > -res.fun:
        g = hi
    return g, float(fid(g))


def optimize_gamma(alpha: float) -> tuple[float, float]:
    """``(gamma_D, F_D)`` maximizing the closed-form fidelity."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return _maximize_gamma(lambda g: fidelity_closed_form(alpha, g), alpha)


@dataclass(frozen=True)
class DispersiveResult:
    gamma: float
    fidelity: float
    state: CoherentMix


def imperfect_protocol(alpha: float, c: ImperfectCoupling) -> DispersiveResult:
    g, f = _maximize_gamma(lambda g: fidelity_with_cat(imperfect_mixture(alpha, c, g), alpha), alpha)
    return DispersiveResult(g, f, imperfect_mixture(alpha, c, g))


def qubit_damped_protocol(alpha: float, ch: QubitChannel) -> DispersiveResult:
    g, f = _maximize_gamma(lambda g: fidelity_with_cat(damped_mixture(alpha, ch, g), alpha), alpha)
    return DispersiveResult(g, f, damped_mixture(alpha, ch, g))


def ideal_protocol(alpha: float) -> DispersiveResult:
    g, f = optimize_gamma(alpha)
    return DispersiveResult(g, f, ideal_mixture(alpha, g))


@dataclass(frozen=True)
class ProbabilisticResult:
    q: float
    gamma: float
    fidelity: float
    probability: float


def probabilistic_protocol(alpha: float, f_gp: float, seed: int = 0) -> ProbabilisticResult:
    """Keep the odd outcome with probability ``q`` so the fidelity stays above ``f_gp``.

    Among all ``(q, gamma)`` meeting ``F_D(q; gamma) >= f_gp`` the highest
    success rate ``p_+ + q p_-`` wins; ``gamma`` then maximizes the fidelity
    at that ``q``.
    """
    if not 0.0 <= f_gp < 1.0:
        raise ValueError("reference fidelity must lie in [0, 1)")
    pp, pm = p_plus(alpha), p_minus(alpha)
    if alpha == 0.0 or pm < 1e-300:
        return ProbabilisticResult(1.0, 0.0, 1.0, 1.0)
    spec = OptimizeSpec(
        objective=lambda x: pp + x[0] * pm,
        bounds=[(0.0, 1.0), gamma_interval(alpha)],
        restarts=4,
        seed=seed,
        starts=[[0.0, math.pi / (4.0 * alpha)]],
    )
    res = maximize_constrained(spec, lambda x: fidelity_closed_form(alpha, x[1], x[0]) - f_gp)
    q = float(res.x[0])
    # the rate does not depend on gamma, so spend that freedom on fidelity
    gamma, _ = _maximize_gamma(lambda g: fidelity_closed_form(alpha, g, q), alpha)
    fid = fidelity_with_cat(ideal_mixture(alpha, gamma, q), alpha)
    if fid < f_gp - 1e-8:
        raise InfeasibleError(f"fidelity {fid} below the reference {f_gp}")
    return ProbabilisticResult(q, gamma, fid, pp + q * pm)


def probabilistic_closed_form(alpha: float, f_gp: float) -> ProbabilisticResult:
    """Reference solution: the constraint is linear in ``q`` once ``gamma = gamma_D``."""
    pp, pm = p_plus(alpha), p_minus(alpha)
    gamma, _ = optimize_gamma(alpha)
    gain = displaced_odd_gain(alpha, gamma)
    q = 1.0 if gain >= f_gp else min(1.0, pp * (1.0 - f_gp) / (pm * (f_gp - gain)))
    return ProbabilisticResult(q, gamma, fidelity_closed_form(alpha, gamma, q), pp + q * pm)


# --- large-alpha closed forms ---------------------------------------------------


def _wcat_min_gap(alpha: float) -> float:
    return math.pi / (8.0 * alpha * alpha)


def asymptotic_reference(kind: str, **kw) -> float:
    """Large-amplitude closed forms, used only as test references.

    Wigner kinds return the offset above ``W_cat(0, ybar)``.
    """
    a = kw.get("alpha")
    a2 = a * a if a is not None else None
    if kind == "F_D_ideal":
        return 1.0 - math.pi**2 / (32.0 * a2)
    if kind in ("F_D_loss", "F_plus_loss"):
        tau = kw["tau"]
        val = math.exp(-a2 * (1.0 - math.sqrt(tau)) ** 2) * 0.5 * (1.0 + math.exp(-2.0 * a2 * (1.0 - tau)))
        return val * (1.0 - math.pi**2 / (32.0 * a2)) if kind == "F_D_loss" else val
    if kind == "F_pd":
        return 0.5 * (1.0 + math.exp(-kw["lam"])) * (1.0 - math.pi**2 / (32.0 * a2))
    if kind == "F_ad":
        return 0.5 * (1.0 + math.sqrt(1.0 - kw["kappa"])) * (1.0 - math.pi**2 / (32.0 * a2))
    if kind == "F_imp":
        C, eta = kw["C"], kw["eta"]
        e = math.exp(-2.0 * a2 * ((2.0 - eta) / (4.0 * C) + 1.0 - eta))
        return 0.5 * (1.0 + e) * (1.0 - math.pi**2 / (32.0 * a2)) - math.pi**2 * (1.0 - eta) / (
            64.0 * C
        ) * e * (1.0 - math.pi**2 / (16.0 * a2))
    if kind == "W_D_min":
        return _wcat_min_gap(a)
    if kind == "W_D_min_loss":
        tau = kw["tau"]
        e = math.exp(-2.0 * a2 * (1.0 - tau))
        return (1.0 - e) / math.pi + _wcat_min_gap(a) * (-2.0 + (2.0 + tau) * e)
    if kind == "W_D_min_loss_full":
        # exact in tau; W_D_min_loss is its 1 - tau << 1 simplification
        tau = kw["tau"]
        e = math.exp(-2.0 * a2 * (1.0 - tau))
        s = math.sqrt(tau)
        cm, cp, c0 = math.cos(math.pi * (tau - s)), math.cos(math.pi * (tau + s)), math.cos(math.pi * s)
        lead = (2.0 - e * (0.5 * (cm + cp) - c0)) / math.pi
        corr = -2.0 + e * (0.5 * ((1.0 - s) ** 2 * cm + (1.0 + s) ** 2 * cp) - c0)
        return lead + _wcat_min_gap(a) * corr
    if kind == "W_plus_loss":
        return (1.0 - math.exp(-2.0 * a2 * (1.0 - kw["tau"]))) / math.pi
    if kind == "W_imp_min":
        C, eta = kw["C"], kw["eta"]
        damp = math.exp(-a2 / (2.0 * C))
        f1 = 4.0 - math.exp(-2.0 * a2 * (1.0 - eta + eta / (4.0 * C))) - 3.0 * damp * (
            1.0 - math.pi**2 * (1.0 - eta) / (2.0 * C)
        )
        f2 = -2.0 + 3.0 * damp * (1.0 - 3.0 * math.pi**2 * (1.0 - eta) / (4.0 * C))
        return f1 / (2.0 * math.pi) + _wcat_min_gap(a) * f2
    if kind in ("W_pd_min", "W_ad_min"):
        s = math.exp(-kw["lam"]) if kind == "W_pd_min" else math.sqrt(1.0 - kw["kappa"])
        return 2.0 / math.pi * (1.0 - s) + _wcat_min_gap(a) * (3.0 * s - 2.0)
    if kind == "V_D":
        return 1.0 / (4.0 * a2) - 1.0 / (8.0 * a2 * a2)
    if kind == "V_imp":
        C, eta = kw["C"], kw["eta"]
        g = math.exp(2.0 * a2 * (1.0 - eta + (2.0 - eta) / (4.0 * C)))
        h = 0.5 * (1.0 + g)
        return (h - math.pi**2 * (1.0 - eta) / (16.0 * C)) / (4.0 * a2) - (
            h * h - (1.0 + math.pi**2 / 4.0 + g) * math.pi**2 * (1.0 - eta) / (32.0 * C)
        ) / (8.0 * a2 * a2)
    if kind in ("V_pd", "V_ad"):
        if kind == "V_pd":
            h = 0.5 * (1.0 + math.exp(kw["lam"]))
        else:
            s = math.sqrt(1.0 - kw["kappa"])
            h = (1.0 + s) / (2.0 * s)
        return h / (4.0 * a2) - h * h / (8.0 * a2 * a2)
    raise ValueError(f"unknown reference kind {kind!r}")


def v_imp_valid(alpha: float, c: ImperfectCoupling) -> bool:
    """Whether the exponent inside the imperfect-variance expansion is below one."""
    return 2.0 * alpha * alpha * (1.0 - c.eta + (2.0 - c.eta) / (4.0 * c.C)) < 1.0


def odd_overlap(m: CoherentMix, alpha: float) -> float:
    return fidelity_with_cat(m, alpha, "odd")


def all_kinds() -> tuple[str, ...]:
    return (
        "F_D_ideal", "F_D_loss", "F_plus_loss", "F_pd", "F_ad", "F_imp",
        "W_D_min", "W_D_min_loss", "W_D_min_loss_full", "W_plus_loss", "W_imp_min", "W_pd_min", "W_ad_min",
        "V_D", "V_imp", "V_pd", "V_ad",
    )  # fmt: skip

