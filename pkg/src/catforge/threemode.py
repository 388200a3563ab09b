"""Brute-force three-mode simulation of the GP(2n) circuit.

Independent of the polynomial closed form in :mod:`catforge.gp`: every
unitary is the exponential of its generator, built from truncated ladder
operators and applied to the state tensor by a Taylor series on short
sub-steps.
"""

from __future__ import annotations

import math

import numpy as np

from catforge import fock
from catforge.errors import TruncationError
from catforge.gp import GpParams

MIN_DIM = 18
TAYLOR_TOL = 1e-14


def _shape(dim: int, axis: int) -> tuple[int, ...]:
    shape = [1, 1, 1]
    shape[axis] = dim
    return tuple(shape)


def _lower(psi: np.ndarray, axis: int) -> np.ndarray:
    """Truncated annihilation operator acting on one mode of the tensor."""
    dim = psi.shape[axis]
    w = np.sqrt(np.arange(1, dim)).reshape(_shape(dim - 1, axis))
    out = np.zeros_like(psi)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    src[axis] = slice(1, None)
    dst[axis] = slice(None, -1)
    out[tuple(dst)] = w * psi[tuple(src)]
    return out


def _raise(psi: np.ndarray, axis: int) -> np.ndarray:
    """Truncated creation operator acting on one mode of the tensor."""
    dim = psi.shape[axis]
    w = np.sqrt(np.arange(1, dim)).reshape(_shape(dim - 1, axis))
    out = np.zeros_like(psi)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    src[axis] = slice(None, -1)
    dst[axis] = slice(1, None)
    out[tuple(dst)] = w * psi[tuple(src)]
    return out


_LADDER = {"a": _lower, "ad": _raise}


class _Generator:
    """Sum of products of ladder operators, ``sum_k c_k prod_j L_kj``.

    Each term is ``(c, [(axis, "a" | "ad"), ...])``; factors act right to left.
    """

    def __init__(self, terms, dim: int):
        self.terms = terms
        # ||a|| = ||a^dag|| = sqrt(dim - 1) in the truncated space
        self.norm_bound = sum(abs(c) * (dim - 1) ** (len(f) / 2) for c, f in terms)

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        for c, factors in self.terms:
            tmp = psi
            for axis, kind in reversed(factors):
                tmp = _LADDER[kind](tmp, axis)
            out += c * tmp
        return out


def expm_apply(gen: _Generator, psi: np.ndarray) -> np.ndarray:
    """``exp(G) psi`` via Taylor series on sub-steps with ``||G/s|| <= 1``."""
    steps = max(1, int(math.ceil(gen.norm_bound)))
    for _ in range(steps):
        term = psi
        total = psi.copy()
        scale = np.linalg.norm(psi)
        k = 0
        while True:
            k += 1
            term = gen(term) / (steps * k)
            total += term
            if np.linalg.norm(term) < TAYLOR_TOL * scale:
                break
        psi = total
    return psi


def _product_state(vectors) -> np.ndarray:
    a, b, c = vectors
    return np.einsum("i,j,k->ijk", a, b, c)


def _mode_tail(psi: np.ndarray) -> float:
    probs = np.abs(psi) ** 2
    total = probs.sum()
    tails = []
    for axis in range(3):
        marg = probs.sum(axis=tuple(i for i in range(3) if i != axis))
        tails.append(fock.tail_mass(np.sqrt(marg)) / total)
    return max(tails)


def brute_force_three_mode(
    params: GpParams, n: int | None = None, dim: int = 30, tail_tol: float = 1e-6
) -> tuple[np.ndarray, float]:
    """Heralded signal state and herald probability from the full circuit.

    Returns the normalized signal vector (dimension ``dim``) and the joint
    probability of detecting ``n`` photons in each ancilla. The state is the
    zero vector when the probability vanishes.
    """
    n = params.n if n is None else n
    if dim < MIN_DIM:
        raise ValueError(f"per-mode dimension must be >= {MIN_DIM}")
    sq = [fock.squeezed_vacuum_fock(r, dim) for r in (params.r1, params.r2, params.r3)]
    psi = _product_state(sq)

    theta = math.acos(math.sqrt(params.T))
    # U_ab(T) = exp[theta (a^dag b - a b^dag)], U_cb(1/2) = exp[pi/4 (c^dag b - c b^dag)]
    bs_ab = _Generator([(theta, [(0, "ad"), (1, "a")]), (-theta, [(0, "a"), (1, "ad")])], dim)
    bs_cb = _Generator(
        [(math.pi / 4, [(2, "ad"), (1, "a")]), (-math.pi / 4, [(2, "a"), (1, "ad")])], dim
    )
    # D_b(-i beta) D_c(i beta) = exp[-i beta (b^dag + b) + i beta (c^dag + c)]
    ib = 1j * params.beta
    disp = _Generator(
        [(-ib, [(1, "ad")]), (-ib, [(1, "a")]), (ib, [(2, "ad")]), (ib, [(2, "a")])], dim
    )

    psi = expm_apply(bs_ab, psi)
    psi = expm_apply(bs_cb, psi)
    if params.beta:
        psi = expm_apply(disp, psi)

    tail = _mode_tail(psi)
    if tail > tail_tol:
        raise TruncationError(f"per-mode tail mass {tail:.2e} > {tail_tol:.0e}; raise dim")

    signal = psi[:, n, n].copy()
    prob = float(np.sum(np.abs(signal) ** 2))
    if prob > 0:
        signal /= math.sqrt(prob)
    return signal, prob
