"""Riesz-spectral models, modal truncation and realification.

A spectral model supplies eigenvalues and projections of the input
operator and initial condition onto the adjoint eigenbasis.  Truncation
keeps finitely many modes and rewrites complex-eigenvalue modes as real
2x2 rotation blocks acting on (Re z, Im z).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .polyalg import Polynomial

_QUAD_TOL = 1e-10
_REAL_TOL = 1e-9


@dataclass(frozen=True)
class SpectralModel:
    """Diagonal representation of a Riesz-spectral generator with control.

    `mode_indices(n)` enumerates the first n model-specific mode labels
    (heat: 1..n; wave: conjugate pairs 1,-1,..,n,-n).  The projection
    callables must be pure functions of the label.
    """

    name: str
    epsilon: float
    x0: float
    m: int
    mode_indices: Callable[[int], list]
    eigenvalue: Callable[[int], complex]
    input_projection: Callable[[int], np.ndarray]
    initial_projection: Callable[[int], complex]


@dataclass(frozen=True)
class Horizon:
    """Fixed final time T or free final time in [0, T]."""

    kind: str  # "fixed" | "free"
    T: float

    def __post_init__(self):
        if self.kind not in ("fixed", "free"):
            raise ValueError(f"horizon kind {self.kind!r} must be 'fixed' or 'free'")
        if self.T <= 0:
            raise ValueError("horizon length must be positive")

    @classmethod
    def fixed(cls, T: float) -> "Horizon":
        return cls("fixed", T)

    @classmethod
    def free(cls, T0: float) -> "Horizon":
        return cls("free", T0)


@dataclass(frozen=True)
class ModalSystem:
    """Finite real modal system z' = Lambda z + B u with interval bounds.

    `blocks` lists the realified dynamics: ('real', lam) for a scalar mode
    or ('pair', re, im) for a 2x2 rotation block [[re,-im],[im,re]] acting
    on consecutive variables (Re z, Im z).
    """

    blocks: tuple
    b: np.ndarray
    z0: np.ndarray
    state_bounds: np.ndarray  # (N, 2)
    terminal_bounds: np.ndarray  # (N, 2)
    horizon: Horizon
    model_name: str = "custom"

    @property
    def n_states(self) -> int:
        return int(self.z0.size)

    @property
    def m(self) -> int:
        return int(self.b.shape[1])

    def dynamics_matrix(self) -> np.ndarray:
        N = self.n_states
        A = np.zeros((N, N))
        k = 0
        for blk in self.blocks:
            if blk[0] == "real":
                A[k, k] = blk[1]
                k += 1
            else:
                _, re, im = blk
                A[k : k + 2, k : k + 2] = [[re, -im], [im, re]]
                k += 2
        return A

    def validate(self):
        N = self.n_states
        if self.b.shape != (N, self.m):
            raise ValueError("input matrix shape mismatch")
        for arr, label in ((self.state_bounds, "state"), (self.terminal_bounds, "terminal")):
            if arr.shape != (N, 2):
                raise ValueError(f"{label} bounds must be (N, 2)")
            if np.any(arr[:, 0] > arr[:, 1]):
                raise ValueError(f"empty {label} interval")
        lo, hi = self.state_bounds[:, 0], self.state_bounds[:, 1]
        if np.any(self.z0 < lo - 1e-12) or np.any(self.z0 > hi + 1e-12):
            raise ValueError("infeasible initial condition: z0 outside state bounds")


@dataclass(frozen=True)
class ControlSet:
    """Basic compact semialgebraic control set {u : w_j(u) >= 0}.

    The Archimedean witness M - |u|^2 is appended automatically when no
    listed constraint already has that form.  `box` is used by the
    simulators for clipping and for the witness constant.
    """

    m: int
    constraint_polys: tuple
    box: np.ndarray | None = None

    @classmethod
    def from_box(cls, box) -> "ControlSet":
        box = np.atleast_2d(np.asarray(box, dtype=float))
        m = box.shape[0]
        polys = []
        for i in range(m):
            lo, hi = box[i]
            if not lo < hi:
                raise ValueError(f"control interval {i} is empty")
            ui = Polynomial.u(i + 1, 0, m)
            polys.append((hi - ui) * (ui - lo))
        return cls(m=m, constraint_polys=tuple(_with_witness(polys, m, box)), box=box)

    @classmethod
    def from_polys(cls, m: int, polys, box=None) -> "ControlSet":
        box_arr = None if box is None else np.atleast_2d(np.asarray(box, dtype=float))
        return cls(
            m=m, constraint_polys=tuple(_with_witness(list(polys), m, box_arr)), box=box_arr
        )


def _is_witness(p: Polynomial, m: int) -> bool:
    # matches M - sum u_i^2 for some M > 0
    terms = dict(p.terms)
    const_key = (0,) * (1 + m)
    M = terms.pop(const_key, 0.0)
    if M <= 0 or len(terms) != m:
        return False
    for i in range(m):
        e = [0] * (1 + m)
        e[1 + i] = 2
        if terms.get(tuple(e)) != -1.0:
            return False
    return True


def _with_witness(polys: list, m: int, box) -> list:
    if any(_is_witness(p, m) for p in polys):
        return polys
    if box is None:
        M = float(m)
    else:
        M = float(np.sum(np.max(box**2, axis=1)))
    w = Polynomial.constant(M, 0, m)
    for i in range(m):
        w = w - Polynomial.u(i + 1, 0, m) ** 2
    return polys + [w]


# ---------------------------------------------------------------------------
# heat model
# ---------------------------------------------------------------------------


def _actuator_support(epsilon: float, x0: float) -> tuple:
    # indicator support clipped to the spatial domain [0, 1]
    return max(0.0, x0 - epsilon), min(1.0, x0 + epsilon)


def heat_model(epsilon: float, x0: float) -> SpectralModel:
    """1-D diffusion benchmark: lambda_k = -k^2 pi^2, modes sqrt(2) sin(k pi x).

    The input shape is the normalized indicator (1/eps) 1_[x0-eps, x0+eps]
    restricted to [0, 1]; the initial temperature is cos(pi x).  Both
    projections have closed forms, verified elsewhere against adaptive
    quadrature at 1e-10.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0 < x0 < 1:
        raise ValueError("x0 must lie in (0, 1)")
    a, c = _actuator_support(epsilon, x0)

    def eigenvalue(k: int) -> complex:
        return complex(-((k * np.pi) ** 2))

    def input_projection(k: int) -> np.ndarray:
        kp = k * np.pi
        val = np.sqrt(2.0) / (epsilon * kp) * (np.cos(kp * a) - np.cos(kp * c))
        return np.array([complex(val)])

    def initial_projection(k: int) -> complex:
        # integral of cos(pi x) sqrt(2) sin(k pi x); zero for odd k
        if k == 1 or k % 2 == 1:
            return 0.0 + 0.0j
        return complex(np.sqrt(2.0) / np.pi * (2.0 * k) / (k**2 - 1))

    return SpectralModel(
        name="heat",
        epsilon=epsilon,
        x0=x0,
        m=1,
        mode_indices=lambda n: list(range(1, n + 1)),
        eigenvalue=eigenvalue,
        input_projection=input_projection,
        initial_projection=initial_projection,
    )


# ---------------------------------------------------------------------------
# wave model
# ---------------------------------------------------------------------------

# The string benchmark in first-order form (w, dw/dt) on H^1_0 x L^2 with the
# energy inner product <(w1,v1),(w2,v2)> = int w1' conj(w2') + v1 conj(v2).
# Eigenvalues are i k pi for nonzero integer k.  The printed eigenfunctions
# give Phi_{-n} = -conj(Phi_n); the negative-index sign is flipped here so
# that Phi_{-n} = conj(Phi_n) and projections of real data come in conjugate
# pairs, which is what the realification assumes.


def _wave_phi(k: int):
    n = abs(k)

    def position(x):
        return np.sin(n * np.pi * x) / (1j * k * np.pi)

    def velocity(x):
        return np.sin(n * np.pi * x)

    return position, velocity


def _energy_inner(f_pos_d, f_vel, g_pos_d, g_vel) -> complex:
    """Energy inner product from derivative-of-position and velocity callables."""

    def re_im(fn):
        re = quad(lambda x: fn(x).real, 0, 1, epsabs=_QUAD_TOL, limit=200)[0]
        im = quad(lambda x: fn(x).imag, 0, 1, epsabs=_QUAD_TOL, limit=200)[0]
        return re + 1j * im

    part1 = re_im(lambda x: f_pos_d(x) * np.conj(g_pos_d(x)))
    part2 = re_im(lambda x: f_vel(x) * np.conj(g_vel(x)))
    return part1 + part2


@lru_cache(maxsize=None)
def _wave_adjoint_coeffs(n: int) -> np.ndarray:
    """Coefficients of Psi_{+n}, Psi_{-n} on the frequency-n pair basis.

    Solves the biorthonormality system <Phi_k, Psi_j> = delta_kj in the
    energy inner product, with the pair basis e1 = (sin(n pi x), 0),
    e2 = (0, sin(n pi x)).
    """
    npi = n * np.pi
    G = np.zeros((2, 2), dtype=complex)
    for row, k in enumerate((n, -n)):
        pos, vel = _wave_phi(k)
        pos_d = lambda x, k=k: np.cos(abs(k) * np.pi * x) * abs(k) * np.pi / (1j * k * np.pi)
        # basis e1: position sin(n pi x), derivative n pi cos(n pi x); zero velocity
        G[row, 0] = _energy_inner(pos_d, vel, lambda x: npi * np.cos(npi * x), lambda x: 0.0 * x)
        # basis e2: zero position; velocity sin(n pi x)
        G[row, 1] = _energy_inner(pos_d, vel, lambda x: 0.0 * x, lambda x: np.sin(npi * x))
    # Psi_j = sum_l C[l, j] e_l with conj(C) = inv(G)
    return np.conj(np.linalg.inv(G))


def _wave_psi_coeffs(k: int) -> np.ndarray:
    """Pair-basis coefficients (position, velocity) of Psi_k."""
    C = _wave_adjoint_coeffs(abs(k))
    return C[:, 0] if k > 0 else C[:, 1]


def wave_model(epsilon: float, x0: float) -> SpectralModel:
    """1-D vibrating-string benchmark in first-order (position, velocity) form.

    Initial data w(x,0) = sin(2 pi x), dw/dt(x,0) = sin^2(2 pi x); the
    control enters the velocity equation through the same normalized
    indicator input shape as the diffusion benchmark.  Adjoint
    eigenfunctions come from the numerical biorthonormality solve.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0 < x0 < 1:
        raise ValueError("x0 must lie in (0, 1)")
    a, c = _actuator_support(epsilon, x0)

    def indices(n: int) -> list:
        out = []
        for k in range(1, n + 1):
            out.extend((k, -k))
        return out

    def eigenvalue(k: int) -> complex:
        return 1j * k * np.pi

    @lru_cache(maxsize=None)
    def input_projection(k: int) -> np.ndarray:
        # <(0, b), Psi_k> reduces to the velocity term over the actuator support
        n = abs(k)
        vel_c = _wave_psi_coeffs(k)[1]
        integral = quad(
            lambda x: np.sin(n * np.pi * x), a, c, epsabs=_QUAD_TOL, limit=200
        )[0]
        return np.array([np.conj(vel_c) * integral / epsilon])

    @lru_cache(maxsize=None)
    def initial_projection(k: int) -> complex:
        n = abs(k)
        pos_c, vel_c = _wave_psi_coeffs(k)
        psi_pos_d = lambda x: pos_c * n * np.pi * np.cos(n * np.pi * x)
        psi_vel = lambda x: vel_c * np.sin(n * np.pi * x)
        w0_d = lambda x: 2 * np.pi * np.cos(2 * np.pi * x)
        v0 = lambda x: np.sin(2 * np.pi * x) ** 2
        return _energy_inner(w0_d, v0, psi_pos_d, psi_vel)

    return SpectralModel(
        name="wave",
        epsilon=epsilon,
        x0=x0,
        m=1,
        mode_indices=indices,
        eigenvalue=eigenvalue,
        input_projection=input_projection,
        initial_projection=initial_projection,
    )


# ---------------------------------------------------------------------------
# truncation and realification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundsConfig:
    """Interval bounds for the truncated system.

    state = "auto" uses [-c*s, c*s] for every mode, where s is the sup of
    |initial projections| over the model's leading modes (floored at 0.5 so
    zero initial data still yields a usable box) and c = state_scale.  The
    sup is taken over a fixed leading range so the default does not depend
    on the truncation order.  terminal = "origin" pins every mode to
    [-slack, slack].
    """

    state: object = "auto"  # "auto" | array-like (N, 2)
    state_scale: float = 2.0
    terminal: object = "origin"  # "origin" | array-like (N, 2)
    terminal_slack: float = 0.0
    sup_scan_modes: int = 64


def _realify_modes(model: SpectralModel, n_modes: int):
    labels = model.mode_indices(n_modes)
    blocks, b_rows, z0 = [], [], []
    for k in labels:
        lam = complex(model.eigenvalue(k))
        bk = np.asarray(model.input_projection(k), dtype=complex)
        zk = complex(model.initial_projection(k))
        scale = max(1.0, abs(lam))
        if abs(lam.imag) <= _REAL_TOL * scale:
            if abs(zk.imag) > 1e-8 or np.any(np.abs(bk.imag) > 1e-8):
                raise ValueError(f"mode {k}: real eigenvalue with complex projections")
            blocks.append(("real", lam.real))
            b_rows.append(bk.real)
            z0.append(zk.real)
        else:
            blocks.append(("pair", lam.real, lam.imag))
            b_rows.append(bk.real)
            b_rows.append(bk.imag)
            z0.extend((zk.real, zk.imag))
    return tuple(blocks), np.array(b_rows, dtype=float), np.array(z0, dtype=float)


def _auto_halfwidth(model: SpectralModel, scale: float, scan: int) -> float:
    sup = 0.0
    for k in model.mode_indices(scan):
        zk = complex(model.initial_projection(k))
        sup = max(sup, abs(zk.real), abs(zk.imag))
    return scale * max(sup, 0.5)


def truncate_and_realify(
    model: SpectralModel, n_modes: int, bounds: BoundsConfig, horizon: Horizon
) -> ModalSystem:
    """Keep the first `n_modes` modes and rewrite complex pairs as 2x2 blocks.

    Real eigenvalues stay scalar; a complex eigenvalue a+ib becomes the
    block [[a,-b],[b,a]] on (Re z, Im z), so the wave model at n modes has
    4n real state variables.  Raises when z0 violates the state box.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    blocks, B, z0 = _realify_modes(model, n_modes)
    N = z0.size

    if isinstance(bounds.state, str) and bounds.state == "auto":
        hw = _auto_halfwidth(model, bounds.state_scale, bounds.sup_scan_modes)
        state_b = np.column_stack((-hw * np.ones(N), hw * np.ones(N)))
    else:
        state_b = np.asarray(bounds.state, dtype=float)
        if state_b.shape != (N, 2):
            raise ValueError(f"state bounds must have shape ({N}, 2)")

    if isinstance(bounds.terminal, str) and bounds.terminal == "origin":
        s = float(bounds.terminal_slack)
        term_b = np.column_stack((-s * np.ones(N), s * np.ones(N)))
    else:
        term_b = np.asarray(bounds.terminal, dtype=float)
        if term_b.shape != (N, 2):
            raise ValueError(f"terminal bounds must have shape ({N}, 2)")

    sysm = ModalSystem(
        blocks=blocks,
        b=B,
        z0=z0,
        state_bounds=state_b,
        terminal_bounds=term_b,
        horizon=horizon,
        model_name=model.name,
    )
    sysm.validate()
    return sysm


def integrator_system(
    z0: float = 0.5,
    horizon: Horizon | None = None,
    state_halfwidth: float = 1.0,
) -> ModalSystem:
    """Single pure-integrator mode z' = u, the classical minimal-time benchmark."""
    if horizon is None:
        horizon = Horizon.free(1.0)
    return ModalSystem(
        blocks=(("real", 0.0),),
        b=np.array([[1.0]]),
        z0=np.array([z0]),
        state_bounds=np.array([[-state_halfwidth, state_halfwidth]]),
        terminal_bounds=np.array([[0.0, 0.0]]),
        horizon=horizon,
        model_name="integrator",
    )
