"""Truncated number-basis oracle.

States are built by summing coherent amplitude vectors and applying ladder
operators; displacements and Wigner values use the exact Laguerre matrix
elements of D(z). Nothing here relies on the closed forms in
:mod:`subplanck.closedform`, which makes it an independent check on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import TruncationError
from .specialfn import laguerre_sequence
from .states import CoherentSuperposition, DeformedState

__all__ = [
    "FockVector",
    "TAIL_WIDTH",
    "TAIL_TOL",
    "MAX_CUTOFF",
    "coherent_fock",
    "apply_create",
    "apply_annihilate",
    "displace_fock",
    "displacement_matrix",
    "inner",
    "wigner_fock",
    "wigner_fock_cross",
    "auto_cutoff",
    "state_to_fock",
    "pnd_fock",
    "sensitivity_fock",
    "oracle_deform",
]

TAIL_WIDTH = 8
TAIL_TOL = 1e-12
MAX_CUTOFF = 4096


@dataclass(frozen=True)
class FockVector:
    """Amplitudes a_0..a_N in the number basis; ``cutoff`` is N."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError("amps must be a non-empty 1-d array")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def cutoff(self) -> int:
        return self.amps.size - 1

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def tail_fraction(self, width: int = TAIL_WIDTH) -> float:
        total = self.norm2
        if total == 0:
            return 0.0
        tail = float(np.sum(np.abs(self.amps[-width:]) ** 2)) if width else 0.0
        return tail / total

    def normalized(self) -> "FockVector":
        return FockVector(self.amps / math.sqrt(self.norm2))

    def resized(self, cutoff: int) -> "FockVector":
        if cutoff < self.cutoff:
            raise ValueError("resizing only pads with zeros")
        out = np.zeros(cutoff + 1, dtype=complex)
        out[: self.amps.size] = self.amps
        return FockVector(out)


def _check_tail(v: FockVector, what: str) -> FockVector:
    frac = v.tail_fraction()
    if frac > TAIL_TOL:
        raise TruncationError(f"{what}: tail weight {frac:.2e} above {TAIL_TOL:g} at cutoff {v.cutoff}")
    return v


def coherent_fock(alpha: complex, cutoff: int) -> FockVector:
    """a_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!) for n = 0..cutoff."""
    alpha = complex(alpha)
    n = np.arange(cutoff + 1)
    if alpha == 0:
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[0] = 1.0
        return FockVector(amps)
    logmag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    amps = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    return _check_tail(FockVector(amps), f"coherent state alpha={alpha:.4g}")


def apply_create(v: FockVector, k: int = 1) -> FockVector:
    """(a^dag)^k v, unnormalised; the truncated basis must have room for it."""
    amps = v.amps
    n_max = v.cutoff
    out = np.zeros_like(amps)
    if k == 0:
        return v
    if k > n_max:
        raise TruncationError("creation order exceeds the cutoff")
    n = np.arange(n_max + 1 - k)
    logfac = 0.5 * (gammaln(n + k + 1) - gammaln(n + 1))
    out[k:] = amps[: n_max + 1 - k] * np.exp(logfac)
    lost_n = np.arange(n_max + 1 - k, n_max + 1)
    lost = float(np.sum(np.abs(amps[n_max + 1 - k :]) ** 2 * np.exp(gammaln(lost_n + k + 1) - gammaln(lost_n + 1))))
    res = FockVector(out)
    kept = res.norm2
    if kept == 0 or lost > TAIL_TOL * kept:
        raise TruncationError(f"creation by {k} pushes weight past cutoff {n_max}")
    return _check_tail(res, f"creation by {k}")


def apply_annihilate(v: FockVector, k: int = 1) -> FockVector:
    """a^k v, unnormalised."""
    amps = v.amps
    n_max = v.cutoff
    out = np.zeros_like(amps)
    if k == 0:
        return v
    if k <= n_max:
        n = np.arange(n_max + 1 - k)
        logfac = 0.5 * (gammaln(n + k + 1) - gammaln(n + 1))
        out[: n_max + 1 - k] = amps[k:] * np.exp(logfac)
    return FockVector(out)


def _diag_log_prefactor(nmax: int, d: int) -> np.ndarray:
    """0.5 * (ln n! - ln (n+d)!) for n = 0..nmax."""
    n = np.arange(nmax + 1)
    return 0.5 * (gammaln(n + 1) - gammaln(n + d + 1))


def displacement_matrix(z: complex, cutoff: int) -> np.ndarray:
    """<m|D(z)|n> for m, n = 0..cutoff.

    For m >= n: sqrt(n!/m!) z^(m-n) exp(-|z|^2/2) L_n^(m-n)(|z|^2); the
    upper triangle uses (-conj z) in place of z.
    """
    z = complex(z)
    size = cutoff + 1
    mat = np.zeros((size, size), dtype=complex)
    x = abs(z) ** 2
    if z == 0:
        return np.eye(size, dtype=complex)
    logz = math.log(abs(z))
    for d in range(size):
        nmax = size - 1 - d
        lag = laguerre_sequence(nmax, d, x)
        mag = np.exp(_diag_log_prefactor(nmax, d) + d * logz - 0.5 * x) * lag
        lower = mag * np.exp(1j * d * np.angle(z))
        idx = np.arange(nmax + 1)
        mat[idx + d, idx] = lower
        if d:
            mat[idx, idx + d] = mag * np.exp(1j * d * np.angle(-np.conj(z)))
    return mat


def displace_fock(v: FockVector, delta: complex) -> FockVector:
    """D(delta) v, checking that no weight leaves the truncated basis."""
    out = FockVector(displacement_matrix(delta, v.cutoff) @ v.amps)
    before, after = v.norm2, out.norm2
    if before > 0 and abs(after - before) > 1e-10 * before:
        raise TruncationError(
            f"displacement by {complex(delta):.4g} loses norm ({after / before - 1:.2e}) at cutoff {v.cutoff}"
        )
    return _check_tail(out, f"displacement by {complex(delta):.4g}")


def inner(u: FockVector, v: FockVector) -> complex:
    """<u|v>, zero-padding the shorter vector."""
    n = max(u.cutoff, v.cutoff)
    a = u.resized(n).amps if u.cutoff < n else u.amps
    b = v.resized(n).amps if v.cutoff < n else v.amps
    return complex(np.vdot(a, b))


def wigner_fock_cross(u: FockVector, v: FockVector, beta, *, check_region: bool = True):
    """Peak-one Wigner function of |u><v|.

    Uses W(beta) = <v| D(2 beta) P |u> with P the photon-number parity, which
    only involves matrix elements between retained basis states.
    """
    n = max(u.cutoff, v.cutoff)
    a = u.resized(n).amps if u.cutoff < n else u.amps
    b = v.resized(n).amps if v.cutoff < n else v.amps
    beta_arr = np.asarray(beta, dtype=complex)
    if check_region and np.any(np.abs(beta_arr) > math.sqrt(n) / 2 + 1e-12):
        raise ValueError(
            f"|beta| up to {np.max(np.abs(beta_arr)):.3g} is outside the kernel region sqrt(N)/2 = {math.sqrt(n) / 2:.3g}"
        )
    flat = beta_arr.ravel()
    z = 2.0 * flat
    x = np.abs(z) ** 2
    logz = np.log(np.where(z == 0, 1.0, np.abs(z)))
    ph = np.exp(1j * np.angle(z))
    parity = np.where(np.arange(n + 1) % 2, -1.0, 1.0)
    pu = parity * a  # P|u>
    bc = np.conj(b)
    total = np.zeros(flat.shape, dtype=complex)
    for d in range(n + 1):
        nmax = n - d
        idx = np.arange(nmax + 1)
        # lower diagonal contributes conj(b_{k+d}) * D_{k+d,k} * pu_k, upper conj(b_k) * D_{k,k+d} * pu_{k+d}
        wl = bc[idx + d] * pu[idx]
        wu = bc[idx] * pu[idx + d] if d else None
        if not np.any(wl) and (wu is None or not np.any(wu)):
            continue
        lag = laguerre_sequence(nmax, d, x)  # (nmax+1, P)
        logpre = _diag_log_prefactor(nmax, d)[:, None]
        if d:
            mag = np.exp(logpre + d * logz[None, :] - 0.5 * x[None, :]) * lag
            mag = np.where(z[None, :] == 0, 0.0, mag)
        else:
            mag = np.exp(logpre - 0.5 * x[None, :]) * lag
        s_low = wl @ mag
        total += s_low * ph**d
        if d:
            s_up = wu @ mag
            total += s_up * (-np.conj(ph)) ** d
    out = total.reshape(beta_arr.shape)
    return complex(out) if out.ndim == 0 else out


def wigner_fock(v: FockVector, beta, *, check_region: bool = True):
    """Peak-one Wigner function of the normalised state v."""
    w = np.asarray(wigner_fock_cross(v, v, beta, check_region=check_region)) / v.norm2
    out = w.real
    return float(out) if out.ndim == 0 else out


def _family_params(state):
    if isinstance(state, DeformedState):
        return state.base, state.recipe.r, state.recipe.q
    if isinstance(state, CoherentSuperposition):
        return state, 0, 0
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _build(state, cutoff: int) -> FockVector:
    base, _, _ = _family_params(state)
    amps = np.zeros(cutoff + 1, dtype=complex)
    for c, a in base.terms:
        amps += c * coherent_fock(a, cutoff).amps
    v = FockVector(amps)
    if isinstance(state, DeformedState):
        rec = state.recipe
        if rec.mode == "sa":
            v = apply_annihilate(apply_create(v, rec.r), rec.q)
        else:
            v = apply_create(apply_annihilate(v, rec.q), rec.r)
    if v.norm2 == 0:
        from .exceptions import NullStateError

        raise NullStateError("the oracle vector vanishes")
    return _check_tail(v, "oracle state")


def auto_cutoff(state, *, min_cutoff: int = 0) -> int:
    """Smallest tried cutoff N whose oracle vector passes the tail check.

    Starts from max|alpha|^2 + r + q + 12 sqrt(max|alpha|^2 + r + 1) and
    doubles until the tail-weight invariant holds.
    """
    base, r, q = _family_params(state)
    a2 = base.max_abs_alpha**2
    n = int(math.ceil(a2 + r + q + 12.0 * math.sqrt(a2 + r + 1.0)))
    n = max(n, min_cutoff, TAIL_WIDTH + r + 1)
    while n <= MAX_CUTOFF:
        try:
            _build(state, n)
            return n
        except TruncationError:
            n *= 2
    raise TruncationError(f"no cutoff up to {MAX_CUTOFF} holds the state")


def state_to_fock(state, cutoff: int | None = None) -> FockVector:
    """Unnormalised oracle vector for a superposition or deformed state."""
    if cutoff is None:
        cutoff = auto_cutoff(state)
    return _build(state, cutoff)


def pnd_fock(state, n_max: int) -> np.ndarray:
    """|<n|psi>|^2 for n = 0..n_max of the normalised state."""
    v = state_to_fock(state)
    if n_max > v.cutoff:
        v = state_to_fock(state, cutoff=n_max)
    p = np.abs(v.amps) ** 2 / v.norm2
    return p[: n_max + 1]


def sensitivity_fock(state, delta, cutoff: int | None = None) -> np.ndarray:
    """|<psi|D(delta)|psi>|^2 evaluated by explicit displacement."""
    deltas = np.atleast_1d(np.asarray(delta, dtype=complex))
    if cutoff is None:
        extra = float(np.max(np.abs(deltas))) if deltas.size else 0.0
        base_cut = auto_cutoff(state)
        cutoff = int(base_cut + math.ceil(extra**2 + 12.0 * extra + 8.0))
    v = state_to_fock(state, cutoff)
    n2 = v.norm2
    out = np.array([abs(inner(v, displace_fock(v, d))) ** 2 / n2**2 for d in deltas.ravel()])
    out = out.reshape(np.shape(delta))
    return float(out) if out.ndim == 0 else out


def oracle_deform(base: CoherentSuperposition, recipe, cutoff: int | None = None) -> DeformedState:
    """Deformed state whose norm constant comes from the oracle.

    Works for any base, including two-component cats that have no closed
    form; the result can be fed to every function in this module.
    """
    probe = DeformedState(base=base, recipe=recipe, norm_const=1.0)
    v = state_to_fock(probe, cutoff)
    return DeformedState(base=base, recipe=recipe, norm_const=v.norm2)
