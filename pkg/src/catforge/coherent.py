"""Exact density operators spanned by finitely many coherent states.

A :class:`CoherentMix` stores ``rho = sum_ij c_ij |beta_i><beta_j|``. Loss,
displacement and fidelities with cat states all have closed forms in this
representation, so nothing is truncated. Displacement phases are folded into
``c_ij`` rather than kept per ket, which keeps ``c`` Hermitian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from catforge import fock


def coherent_overlap(beta, gamma):
    """``<beta|gamma> = exp(-|b|^2/2 - |g|^2/2 + conj(b) g)``; broadcasts."""
    beta = np.asarray(beta, dtype=complex)
    gamma = np.asarray(gamma, dtype=complex)
    val = np.exp(-0.5 * np.abs(beta) ** 2 - 0.5 * np.abs(gamma) ** 2 + np.conj(beta) * gamma)
    return val[()] if val.ndim == 0 else val


def gram(betas: np.ndarray) -> np.ndarray:
    """``G[i, j] = <beta_i|beta_j>``."""
    return coherent_overlap(betas[:, None], betas[None, :])


@dataclass(frozen=True, eq=False)
class CoherentMix:
    betas: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        betas = np.atleast_1d(np.asarray(self.betas, dtype=complex))
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if coeffs.shape != (len(betas), len(betas)):
            raise ValueError("coeffs must be a square matrix matching betas")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def pure(cls, weights, betas) -> "CoherentMix":
        """Projector on ``sum_i w_i |beta_i>`` (normalized)."""
        w = np.asarray(weights, dtype=complex)
        return cls(betas, np.outer(w, w.conj())).normalized()

    @classmethod
    def coherent(cls, beta: complex) -> "CoherentMix":
        return cls([beta], [[1.0]])

    @classmethod
    def cat(cls, alpha: float, parity: str = "even") -> "CoherentMix":
        sign = {"even": 1.0, "odd": -1.0}[parity]
        if parity == "odd" and alpha == 0:
            raise ValueError("odd cat is undefined at alpha=0")
        if parity == "even":
            norm2 = 2.0 * (1.0 + math.exp(-2.0 * alpha * alpha))
        else:
            norm2 = -2.0 * math.expm1(-2.0 * alpha * alpha)
        w = np.array([1.0, sign]) / math.sqrt(norm2)
        return cls([alpha, -alpha], np.outer(w, w))

    def trace(self) -> complex:
        return complex(np.sum(self.coeffs * gram(self.betas).T))

    def normalized(self) -> "CoherentMix":
        return CoherentMix(self.betas, self.coeffs / self.trace().real)

    def scaled(self, weight: float) -> "CoherentMix":
        return CoherentMix(self.betas, weight * self.coeffs)

    def __add__(self, other: "CoherentMix") -> "CoherentMix":
        k, m = len(self.betas), len(other.betas)
        coeffs = np.zeros((k + m, k + m), dtype=complex)
        coeffs[:k, :k] = self.coeffs
        coeffs[k:, k:] = other.coeffs
        return CoherentMix(np.concatenate([self.betas, other.betas]), coeffs)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.coeffs - self.coeffs.conj().T)))

    def min_gram_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(gram(self.betas))))

    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.betas)))


def mix(weighted) -> CoherentMix:
    """Convex combination ``sum_k w_k m_k`` of ``(weight, CoherentMix)`` pairs."""
    parts = [m.scaled(w) for w, m in weighted]
    out = parts[0]
    for part in parts[1:]:
        out = out + part
    return out


def displace_mix(m: CoherentMix, delta: complex) -> CoherentMix:
    """``D(delta) rho D(delta)^dag`` using ``D(d)|b> = e^{(d conj(b) - conj(d) b)/2}|b + d>``."""
    if delta == 0:
        return m
    phase = np.exp(0.5 * (delta * np.conj(m.betas) - np.conj(delta) * m.betas))
    coeffs = phase[:, None] * m.coeffs * np.conj(phase)[None, :]
    return CoherentMix(m.betas + delta, coeffs)


def loss_mix(m: CoherentMix, tau: float) -> CoherentMix:
    """Pure loss: ``b -> sqrt(tau) b`` with environment overlaps on ``c_ij``."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {tau}")
    if tau == 1.0:
        return m
    b = m.betas
    e = 1.0 - tau
    env = np.exp(
        -0.5 * e * (np.abs(b)[:, None] ** 2 + np.abs(b)[None, :] ** 2)
        + e * b[:, None] * np.conj(b)[None, :]
    )
    return CoherentMix(math.sqrt(tau) * b, m.coeffs * env)


def cat_overlaps(betas: np.ndarray, alpha: float, parity: str = "even") -> np.ndarray:
    """``<cat|beta_i>`` for each amplitude."""
    sign = {"even": 1.0, "odd": -1.0}[parity]
    cat = CoherentMix.cat(alpha, parity)
    w = cat.coeffs[0, 0] ** 0.5  # 1/N
    return w * (coherent_overlap(alpha, betas) + sign * coherent_overlap(-alpha, betas))


def fidelity_with_cat(m: CoherentMix, alpha: float, parity: str = "even") -> float:
    """``<cat|rho|cat>`` in closed form."""
    v = cat_overlaps(m.betas, alpha, parity)
    return float(np.real(v @ m.coeffs @ np.conj(v)))


def expect_ket_bra(m: CoherentMix, left, right) -> complex:
    """``<left|rho|right>`` for kets given as CoherentMix-style (weights, betas)."""
    lw, lb = left
    rw, rb = right
    vl = np.conj(lw) @ coherent_overlap(np.asarray(lb)[:, None], m.betas[None, :])
    vr = coherent_overlap(m.betas[:, None], np.asarray(rb)[None, :]) @ rw
    return complex(vl @ m.coeffs @ vr)


def to_fock(m: CoherentMix, dim: int | None = None) -> np.ndarray:
    """Dense number-basis density matrix ``V c V^dag``."""
    dim = dim or fock.cutoff_for(m.max_amplitude())
    vecs = np.stack([fock.coherent_fock(b, dim) for b in m.betas], axis=1)
    rho = vecs @ m.coeffs @ vecs.conj().T
    return 0.5 * (rho + rho.conj().T)
