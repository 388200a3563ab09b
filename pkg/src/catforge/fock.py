"""Single-mode truncated Fock-space numerics.

Pure states are plain 1-D complex numpy arrays indexed by photon number and
mixed states are 2-D complex arrays. Every function here is pure: inputs are
never modified in place.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from catforge.errors import DegenerateStateError, HeadroomError, TruncationError

TAIL_TOL = 1e-8


def cutoff_for(beta_max: float) -> int:
    """Dimension rule ``ceil(|b|^2 + 8|b| + 20)`` for amplitudes up to ``beta_max``."""
    b = abs(beta_max)
    return int(math.ceil(b * b + 8.0 * b + 20.0))


def tail_mass(vec: np.ndarray, frac: float = 0.9) -> float:
    """Probability carried by indices above ``frac * N_max``."""
    n_max = len(vec) - 1
    start = int(math.floor(frac * n_max)) + 1
    return float(np.sum(np.abs(vec[start:]) ** 2))


def check_truncation(vec: np.ndarray, tol: float = TAIL_TOL) -> np.ndarray:
    tail = tail_mass(vec)
    if tail >= tol * max(1.0, float(np.vdot(vec, vec).real)):
        raise TruncationError(f"tail mass {tail:.3e} exceeds {tol:.1e} at dim={len(vec)}")
    return vec


def normalize(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise DegenerateStateError("cannot normalize the zero vector")
    return vec / norm


def basis(n: int, dim: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=complex)
    vec[n] = 1.0
    return vec


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).T.copy()


def lower(vec: np.ndarray) -> np.ndarray:
    """``a|v>`` without building a matrix."""
    out = np.zeros_like(vec)
    out[:-1] = np.sqrt(np.arange(1, len(vec))) * vec[1:]
    return out


def raise_(vec: np.ndarray) -> np.ndarray:
    """``a^dag|v>``; the top component is dropped by the truncation."""
    out = np.zeros_like(vec)
    out[1:] = np.sqrt(np.arange(1, len(vec))) * vec[:-1]
    return out


def mean_photon_number(state: np.ndarray) -> float:
    n = np.arange(state.shape[0])
    if state.ndim == 1:
        return float(np.sum(n * np.abs(state) ** 2))
    return float(np.real(np.sum(n * np.diag(state))))


def coherent_fock(beta: complex, dim: int) -> np.ndarray:
    """Number-basis amplitudes ``exp(-|b|^2/2) b^n / sqrt(n!)`` of ``|beta>``."""
    amps = np.empty(dim, dtype=complex)
    amps[0] = math.exp(-abs(beta) ** 2 / 2.0)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * beta / math.sqrt(n)
    return check_truncation(amps)


def squeezed_vacuum_fock(r: float, dim: int) -> np.ndarray:
    """Squeezed vacuum ``S(r)|0>`` with ``S(r) = exp(r (a^dag^2 - a^2) / 2)``."""
    lam = math.tanh(r)
    amps = np.zeros(dim, dtype=complex)
    amps[0] = 1.0 / math.sqrt(math.cosh(r))
    for n in range(1, (dim - 1) // 2 + 1):
        amps[2 * n] = amps[2 * n - 2] * (lam / 2.0) * math.sqrt(2 * n * (2 * n - 1)) / n
    return check_truncation(amps)


def squeezed_dim(r: float, floor: int = 0, tol: float = 1e-15) -> int:
    """Smallest comfortable dimension for ``S(r)|0>`` (tail below ``tol``)."""
    lam = abs(math.tanh(r))
    if lam < 1e-12:
        return max(floor, 8)
    # |c_{2n}|^2 falls off like lam^{2n}; leave the top 10% empty
    m = math.log(tol) / math.log(lam)
    return max(floor, int(math.ceil(m / 0.9)) + 8)


def cat_fock(alpha: float, parity: str, dim: int) -> np.ndarray:
    """Even (``"even"``) or odd (``"odd"``) cat ``(|a> +- |-a>)/N_+-``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if parity not in ("even", "odd"):
        raise ValueError(f"unknown parity {parity!r}")
    sign = 1.0 if parity == "even" else -1.0
    if parity == "odd" and alpha == 0.0:
        raise DegenerateStateError("odd cat is undefined at alpha=0")
    coh = np.empty(dim, dtype=complex)
    coh[0] = math.exp(-alpha * alpha / 2.0)
    for n in range(1, dim):
        coh[n] = coh[n - 1] * alpha / math.sqrt(n)
    keep = np.arange(dim) % 2 == (0 if sign > 0 else 1)
    amps = np.where(keep, 2.0 * coh, 0.0).astype(complex)
    if sign > 0:
        norm2 = 2.0 * (1.0 + math.exp(-2.0 * alpha * alpha))
    else:
        norm2 = -2.0 * math.expm1(-2.0 * alpha * alpha)
    return check_truncation(amps / math.sqrt(norm2))


def apply_polynomial(
    state: np.ndarray, coeffs, lam2: float
) -> tuple[np.ndarray, float]:
    """Apply ``sum_k coeffs[k] (a - lam2 a^dag)^(2k)`` to ``state``.

    The computation runs in a space padded by ``2 * deg`` levels so it is
    exact; the result is returned in the original dimension together with
    its squared norm ``K`` (the state is left unnormalized).
    """
    coeffs = list(coeffs)
    deg = len(coeffs) - 1
    dim = len(state)
    pad = 2 * deg
    if pad and np.sum(np.abs(state[dim - pad:]) ** 2) > 1e-16 * np.sum(np.abs(state) ** 2):
        raise HeadroomError(f"need {pad} empty top levels for a degree-{pad} polynomial")
    work = np.zeros(dim + pad, dtype=complex)
    work[:dim] = state
    out = coeffs[0] * work
    for k in range(1, deg + 1):
        for _ in range(2):
            work = lower(work) - lam2 * raise_(work)
        out = out + coeffs[k] * work
    tail = np.sum(np.abs(out[dim:]) ** 2)
    out = out[:dim]
    if tail > 1e-12 * max(np.sum(np.abs(out) ** 2), 1e-300):
        raise HeadroomError("polynomial output leaked past the truncation")
    return out, float(np.sum(np.abs(out) ** 2))


def _loss_kraus_weights(dim: int, tau: float) -> np.ndarray:
    """``w[l, j] = sqrt(C(j+l, l) (1-tau)^l tau^j)`` for the pure-loss channel."""
    j = np.arange(dim)[None, :]
    l = np.arange(dim)[:, None]
    log_t = math.log(tau) if tau > 0 else -np.inf
    log_1t = math.log1p(-tau) if tau < 1 else -np.inf
    logc = gammaln(j + l + 1) - gammaln(j + 1) - gammaln(l + 1)
    with np.errstate(invalid="ignore"):
        jt = np.where(j == 0, 0.0, j * log_t)
        lt = np.where(l == 0, 0.0, l * log_1t)
    return np.exp(0.5 * (logc + jt + lt))


def loss_fock(state: np.ndarray, tau: float) -> np.ndarray:
    """Pure-loss channel of transmissivity ``tau`` acting on a vector or matrix.

    Kraus form of the binomial double sum: the ``l``-photon Kraus operator maps
    ``|j + l>`` to ``|j>`` with weight ``sqrt(C(j+l, l) (1-tau)^l tau^j)``.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {tau}")
    rho = np.outer(state, state.conj()) if state.ndim == 1 else np.asarray(state, dtype=complex)
    dim = rho.shape[0]
    if tau == 1.0:
        return rho.copy()
    w = _loss_kraus_weights(dim, tau)
    out = np.zeros_like(rho)
    for l in range(dim):
        m = dim - l
        wl = w[l, :m]
        out[:m, :m] += wl[:, None] * rho[l:, l:] * wl[None, :]
    return out


def check_density(rho: np.ndarray, herm_tol=1e-10, trace_tol=1e-8, eig_tol=1e-8) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.12f} != 1")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -eig_tol:
        raise ValueError("density matrix has negative eigenvalues")


def displacement_columns(delta: complex, rows: int, cols: int) -> np.ndarray:
    """Matrix elements ``<m|D(delta)|n>`` for ``m < rows``, ``n < cols``.

    Every entry is evaluated from its closed form, so truncation is exact.
    With ``x = |delta|^2`` and ``k >= 0``,
    ``|<n+k|D|n>| = sqrt(n!/(n+k)!) x^(k/2) e^(-x/2) |L_n^(k)(x)|``. The
    normalized Laguerre values ``f_n`` obey
    ``sqrt((n+1)(n+1+k)) f_{n+1} = (2n+k+1-x) f_n - sqrt(n(n+k)) f_{n-1}``,
    which stays bounded by one. (The column recursion through ``a^dag`` loses
    all precision once ``|delta|`` and ``n`` are both moderate.)
    """
    size = max(rows, cols)
    x = abs(delta) ** 2
    if x == 0.0:
        return np.eye(rows, cols, dtype=complex)
    k = np.arange(size, dtype=float)
    table = np.empty((size, size))  # table[n, k] = signed f_n for offset k
    prev = np.zeros(size)
    cur = np.exp(-0.5 * x + 0.5 * k * math.log(x) - 0.5 * gammaln(k + 1.0))
    for n in range(size):
        table[n] = cur
        nxt = ((2 * n + k + 1.0 - x) * cur - np.sqrt(n * (n + k)) * prev) / np.sqrt((n + 1.0) * (n + 1.0 + k))
        prev, cur = cur, nxt
    phase = np.exp(1j * math.atan2(delta.imag, delta.real) * np.arange(size))
    m_idx = np.arange(rows)[:, None]
    n_idx = np.arange(cols)[None, :]
    off = m_idx - n_idx
    lo = np.minimum(m_idx, n_idx)
    vals = table[lo, np.abs(off)]
    # <m|D(d)|n> for m < n equals conj(<n|D(-d)|m>)
    return np.where(off >= 0, vals * phase[np.abs(off)], vals * (-1.0) ** np.abs(off) * np.conj(phase[np.abs(off)]))


def displace_fock(state: np.ndarray, delta: complex, out_dim: int | None = None) -> np.ndarray:
    """``D(delta)`` applied to a vector or (as ``D rho D^dag``) a matrix."""
    dim = state.shape[0]
    out_dim = out_dim or dim
    d = displacement_columns(delta, out_dim, dim)
    if state.ndim == 1:
        return d @ state
    return d @ state @ d.conj().T
