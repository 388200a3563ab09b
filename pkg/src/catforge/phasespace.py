"""Wigner cuts, y-quadrature homodyne densities and distillable squeezing.

Every quantity accepts either a number-basis state (1-D vector or 2-D density
matrix) or a :class:`~catforge.coherent.CoherentMix`. Conventions: ``zeta = x
+ i y`` with the vacuum Wigner peak ``2/pi``; ``y = i(a^dag - a)/sqrt(2)`` in
canonical units with ``<y|n> = i^n psi_n(y)`` (``psi_n`` the normalized
Hermite functions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from catforge import fock
from catforge.coherent import CoherentMix
from catforge.errors import DegenerateStateError, TruncationError

SERIES_TOL = 1e-12
SERIES_RUN = 5
FLAT_TOL = 1e-12


def _as_matrix(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj()) if state.ndim == 1 else state


# --- Wigner function ----------------------------------------------------------


def _parity_series(diag: np.ndarray, total: float) -> float:
    """Sum ``(-1)^n diag[n]``, stopping once increments and the leftover mass are negligible."""
    signs = np.where(np.arange(len(diag)) % 2 == 0, 1.0, -1.0)
    partial = np.cumsum(signs * diag)
    # probability not yet summed bounds the rest of the alternating series
    remaining = total - np.cumsum(diag)
    small = (np.abs(diag) < SERIES_TOL) & (remaining < SERIES_TOL)
    run = 0
    for n, ok in enumerate(small):
        run = run + 1 if ok else 0
        if run >= SERIES_RUN:
            return float(partial[n])
    raise TruncationError("Wigner parity series did not stabilize; raise the dimension")


def wigner_fock(state: np.ndarray, x: float, y: float) -> float:
    """``(2/pi) sum_n (-1)^n <n|D^dag(zeta) rho D(zeta)|n>`` at ``zeta = x + i y``."""
    state = np.asarray(state, dtype=complex)
    dim = state.shape[0]
    zeta = complex(x, y)
    rows = dim + fock.cutoff_for(abs(zeta))
    d = fock.displacement_columns(-zeta, rows, dim)
    if state.ndim == 1:
        diag = np.abs(d @ state) ** 2
        total = float(np.vdot(state, state).real)
    else:
        diag = np.real(np.einsum("ij,jk,ik->i", d, state, d.conj()))
        total = float(np.trace(state).real)
    return 2.0 / math.pi * _parity_series(diag, total)


def _wigner_kernel(beta: np.ndarray, gamma: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """``(pi/2) W`` of ``|beta><gamma|`` at ``zeta``; arrays broadcast."""
    shifted = 2.0 * zeta - beta
    return np.exp(
        np.conj(zeta) * beta
        - zeta * np.conj(beta)
        - 0.5 * np.abs(gamma) ** 2
        - 0.5 * np.abs(shifted) ** 2
        + np.conj(gamma) * shifted
    )


def wigner_mix(m: CoherentMix, x, y):
    """Closed-form Wigner function of a coherent-state mixture; broadcasts over x, y."""
    zeta = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
    z = zeta[..., None, None]
    terms = m.coeffs * _wigner_kernel(m.betas[:, None], m.betas[None, :], z)
    total = terms.sum(axis=(-2, -1))
    scale = np.abs(terms).sum(axis=(-2, -1))
    if np.any(np.abs(total.imag) > 1e-12 * (1.0 + scale)):
        raise ValueError("Wigner function has a non-negligible imaginary part")
    out = 2.0 / math.pi * total.real
    return float(out) if out.ndim == 0 else out


def wigner(state, x, y):
    if isinstance(state, CoherentMix):
        return wigner_mix(state, x, y)
    xs, ys = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    vals = np.array([wigner_fock(state, a, b) for a, b in zip(xs.ravel(), ys.ravel())])
    return float(vals[0]) if xs.ndim == 0 else vals.reshape(xs.shape)


def wigner_cat(alpha: float, x, y):
    """Even-cat Wigner function in closed form."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    norm = math.pi * (1.0 + math.exp(-2.0 * alpha * alpha))
    val = (
        2.0 * np.exp(-2.0 * (x * x + y * y)) * np.cos(4.0 * alpha * y)
        + np.exp(-2.0 * ((x - alpha) ** 2 + y * y))
        + np.exp(-2.0 * ((x + alpha) ** 2 + y * y))
    ) / norm
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class WignerMin:
    y: float
    value: float
    negative: bool


def find_wigner_min(state, alpha: float) -> WignerMin:
    """First interference minimum of ``W(0, y)`` on ``0 < y < pi/(2 alpha)``.

    A state without a negative value there is reported with ``negative=False``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    hi = math.pi / (2.0 * alpha)
    res = minimize_scalar(
        lambda t: wigner(state, 0.0, t), bounds=(0.0, hi), method="bounded", options={"xatol": 1e-10}
    )
    return WignerMin(float(res.x), float(res.fun), bool(res.fun < 0.0))


# --- homodyne density -----------------------------------------------------------


def hermite_functions(y, dim: int) -> np.ndarray:
    """Normalized Hermite functions ``psi_0 .. psi_{dim-1}`` at points ``y``; shape (len(y), dim)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    psi = np.zeros((len(y), dim))
    psi[:, 0] = math.pi**-0.25 * np.exp(-0.5 * y * y)
    if dim > 1:
        psi[:, 1] = math.sqrt(2.0) * y * psi[:, 0]
    for n in range(1, dim - 1):
        psi[:, n + 1] = math.sqrt(2.0 / (n + 1)) * y * psi[:, n] - math.sqrt(n / (n + 1)) * psi[:, n - 1]
    return psi


def _fock_projections(y, dim: int):
    """``<y|n>`` and its first two y-derivatives, shape (len(y), dim)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    psi = hermite_functions(y, dim + 1)
    n = np.arange(dim)
    d1 = np.sqrt(n / 2.0) * np.concatenate([np.zeros((len(y), 1)), psi[:, : dim - 1]], axis=1)
    d1 = d1 - np.sqrt((n + 1) / 2.0) * psi[:, 1 : dim + 1]
    d2 = (y[:, None] ** 2 - 2.0 * n - 1.0) * psi[:, :dim]
    phase = 1j ** (n % 4)
    return phase * psi[:, :dim], phase * d1, phase * d2


def _coherent_projections(y, betas: np.ndarray):
    """``<y|beta_i>`` and the log-derivative ``g_i = sqrt(2) i beta_i - y``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))[:, None]
    b = betas[None, :]
    f = math.pi**-0.25 * np.exp(
        -0.5 * np.abs(b) ** 2 - 0.5 * y * y + math.sqrt(2.0) * 1j * b * y + 0.5 * b * b
    )
    return f, math.sqrt(2.0) * 1j * b - y


def homodyne_derivatives(state, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``p(y)``, ``p'(y)`` and ``p''(y)`` evaluated analytically."""
    if isinstance(state, CoherentMix):
        f, g = _coherent_projections(y, state.betas)
        w = np.einsum("ij,yi,yj->yij", state.coeffs, f, f.conj())
        s = g[:, :, None] + np.conj(g)[:, None, :]
        p = np.einsum("yij->y", w)
        p1 = np.einsum("yij,yij->y", w, s)
        p2 = np.einsum("yij,yij->y", w, s * s - 2.0)
        return p.real, p1.real, p2.real
    rho = _as_matrix(state)
    v, v1, v2 = _fock_projections(y, rho.shape[0])
    rv = np.conj(v) @ rho.T  # row k: sum_m rho_nm conj(v_km)
    p = np.einsum("kn,kn->k", v, rv)
    p1 = 2.0 * np.einsum("kn,kn->k", v1, rv).real
    p2 = 2.0 * np.einsum("kn,kn->k", v2, rv).real + 2.0 * np.einsum(
        "kn,nm,km->k", v1, rho, np.conj(v1)
    ).real
    return p.real, p1, p2


def homodyne_pdf(state, y):
    p, _, _ = homodyne_derivatives(state, y)
    return float(p[0]) if np.ndim(y) == 0 else p


def homodyne_cat(alpha: float, y):
    """Even-cat y-quadrature density in closed form."""
    y = np.asarray(y, dtype=float)
    val = np.exp(-y * y) * (1.0 + np.cos(2.0 * math.sqrt(2.0) * alpha * y))
    val = val / (math.sqrt(math.pi) * (1.0 + math.exp(-2.0 * alpha * alpha)))
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class PhaseGrid:
    axis: str
    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError("axis must be 'x' or 'y'")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    def integral(self) -> float:
        return float(trapezoid(self.values, self.points))


def wigner_cut(state, points, axis: str = "y", at: float = 0.0) -> PhaseGrid:
    pts = np.asarray(points, dtype=float)
    if axis == "y":
        vals = wigner(state, np.full_like(pts, at), pts)
    else:
        vals = wigner(state, pts, np.full_like(pts, at))
    return PhaseGrid(axis, pts, np.asarray(vals, dtype=float))


def homodyne_grid(state, points) -> PhaseGrid:
    pts = np.asarray(points, dtype=float)
    return PhaseGrid("y", pts, homodyne_derivatives(state, pts)[0])


# --- distillable squeezing ---------------------------------------------------------


@dataclass(frozen=True)
class DistillableReport:
    V: float
    p0: float
    p2: float

    @property
    def nonclassical(self) -> bool:
        return self.V < 0.5


def distillable_variance(state) -> DistillableReport:
    """``V = p(0) / |p''(0)|`` from analytic derivatives."""
    p, _, p2 = homodyne_derivatives(state, np.array([0.0]))
    if abs(p2[0]) < FLAT_TOL:
        raise DegenerateStateError("homodyne density is flat at the origin")
    return DistillableReport(float(p[0] / abs(p2[0])), float(p[0]), float(p2[0]))
