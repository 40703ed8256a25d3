"""Closed-form Wigner functions, displacement sensitivities, PNDs and overlaps.

Wigner values use the peak-one convention: a coherent state has
W(beta) = exp(-2 |alpha - beta|^2), i.e. pi/2 times the usual normalisation.
Evaluators accept scalars or arrays of complex phase-space points and
return floats or arrays of the same shape.

Superpositions carry arbitrary coefficients; the (i, j) term of every double
sum is weighted by c_i conj(c_j) for Wigner functions (ket i, bra j) and by
conj(c_i) c_j for overlaps (bra i, ket j).
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import NullStateError, NumericalGuardError, UnsupportedFamilyError
from .specialfn import compensated_sum, gamma_value, hermite2, hermite2_table, laguerre_sequence, log_factorial
from .states import CoherentSuperposition, DeformedState, OperatorRecipe, deform, make_coherent

__all__ = [
    "IMAG_RTOL",
    "wigner_cross",
    "overlap_cross",
    "wigner",
    "wigner_residue",
    "wigner_superposition",
    "wigner_sa_coherent",
    "wigner_as_coherent",
    "wigner_sa_kitten",
    "wigner_as_kitten",
    "sensitivity",
    "overlap_amplitude",
    "pnd_sa_coherent",
    "pnd_as_coherent",
    "fidelity_deformed_vs_base",
    "base_overlap",
]

IMAG_RTOL = 1e-10
SENSITIVITY_ATOL = 1e-9
ROUNDING_ULPS = 64.0
EPS = float(np.finfo(float).eps)


def _g(ai, aj):
    return -0.5 * (abs(ai) ** 2 + abs(aj) ** 2)


def wigner_cross(alpha_i, alpha_j, beta):
    """Cross Wigner term of |alpha_i><alpha_j| (peak-one scale), evaluated verbatim."""
    beta = np.asarray(beta, dtype=complex)
    ai, aj = complex(alpha_i), complex(alpha_j)
    expo = _g(ai, aj) - ai * np.conj(aj) - 2.0 * (
        np.abs(beta) ** 2 - np.conj(aj) * beta - ai * np.conj(beta)
    )
    out = np.exp(expo)
    return complex(out) if out.ndim == 0 else out


def overlap_cross(alpha_i, alpha_j, delta):
    """<alpha_i| D(delta) |alpha_j>."""
    delta = np.asarray(delta, dtype=complex)
    ai, aj = complex(alpha_i), complex(alpha_j)
    expo = (
        _g(ai, aj)
        + np.conj(ai) * aj
        + np.conj(ai) * delta
        - aj * np.conj(delta)
        - 0.5 * np.abs(delta) ** 2
    )
    out = np.exp(expo)
    return complex(out) if out.ndim == 0 else out


def _gamma_array(r: int) -> np.ndarray:
    return np.array([gamma_value(n, r) for n in range(r + 1)])


def _as_poly(r: int, u) -> np.ndarray:
    """sum_n |Gamma_n| u^(r-n), which equals r! L_r(-u).

    The Laguerre recurrence stays accurate where the power sum cancels
    heavily (u near the negative real axis).
    """
    u = np.asarray(u, dtype=complex)
    return math.factorial(r) * laguerre_sequence(r, 0, -u)[r]


def _sa_sum(x1, y1, x2, y2, r, q, gam):
    """sum_n gam[n] H_{r-n,q}(x1, y1) H_{r-n,q}(x2, y2)."""
    t1 = hermite2_table(r, q, x1, y1)
    t2 = hermite2_table(r, q, x2, y2)
    # t[m] holds order m = r - n
    weights = gam[::-1].reshape((r + 1,) + (1,) * (t1.ndim - 1))
    return np.sum(weights * t1 * t2, axis=0)


def _wigner_kernel(ai, aj, beta, recipe: OperatorRecipe | None):
    """W_{A|a_i><a_j|A^dag}(beta) without the norm constant."""
    base = wigner_cross(ai, aj, beta)
    if recipe is None or recipe.is_identity:
        return np.asarray(base)
    r, q = recipe.r, recipe.q
    if recipe.mode == "sa":
        om_i = 2.0 * beta - ai
        om_j = 2.0 * beta - aj
        s = _sa_sum(1j * np.conj(om_j), 1j * ai, -1j * om_i, -1j * np.conj(aj), r, q, _gamma_array(r))
        return base * s
    u = (2.0 * beta - ai) * (np.conj(aj) - 2.0 * np.conj(beta))
    s = _as_poly(r, u)
    sign = -1.0 if r % 2 else 1.0
    return sign * (ai * np.conj(aj)) ** q * base * s


def _overlap_kernel(ai, aj, delta, recipe: OperatorRecipe | None):
    """<a_i| A^dag D(delta) A |a_j> without the norm constant."""
    base = overlap_cross(ai, aj, delta)
    if recipe is None or recipe.is_identity:
        return np.asarray(base)
    r, q = recipe.r, recipe.q
    if recipe.mode == "sa":
        s = _sa_sum(
            1j * (np.conj(ai) - np.conj(delta)),
            1j * aj,
            -1j * (aj + delta),
            -1j * np.conj(ai),
            r,
            q,
            np.abs(_gamma_array(r)),
        )
        return base * s
    u = (np.conj(ai) - np.conj(delta)) * (aj + delta)
    s = _as_poly(r, u)
    return (np.conj(ai) * aj) ** q * base * s


def _split(state):
    if isinstance(state, DeformedState):
        return state.base, state.recipe, state.norm_const
    if isinstance(state, CoherentSuperposition):
        return state, None, state.norm_const
    raise TypeError(f"expected a CoherentSuperposition or DeformedState, got {type(state).__name__}")


def _as_real(values: np.ndarray, points: np.ndarray, what: str, scale=0.0) -> np.ndarray:
    """Drop the imaginary part after checking it is rounding-sized.

    ``scale`` is the sum of term magnitudes; rounding in a sum of that size
    can legitimately leave about ROUNDING_ULPS * eps * scale behind, which is
    allowed on top of the relative tolerance.
    """
    tol = IMAG_RTOL * np.maximum(1.0, np.abs(values.real)) + ROUNDING_ULPS * EPS * scale
    bad = np.abs(values.imag) > tol
    if np.any(bad):
        k = int(np.flatnonzero(bad.ravel())[0])
        at = complex(np.broadcast_to(points, values.shape).ravel()[k])
        raise NumericalGuardError(
            f"{what}: imaginary residue {values.ravel()[k].imag:.3e} at point {at:.6g}"
        )
    return values.real


def _wigner_complex(state, beta_arr):
    """Assembled double sum divided by the norm, plus the sum of term magnitudes."""
    base, recipe, norm = _split(state)
    total = np.zeros(beta_arr.shape, dtype=complex)
    scale = np.zeros(beta_arr.shape)
    c, a = base.coefficients, base.alphas
    for ci, ai in zip(c, a):
        for cj, aj in zip(c, a):
            w = ci * np.conj(cj)
            if w == 0:
                continue
            term = w * _wigner_kernel(ai, aj, beta_arr, recipe)
            total = total + term
            scale = scale + np.abs(term)
    return total / norm, scale / norm


def wigner_residue(state, beta):
    """Imaginary part left in the assembled Wigner sum (zero in exact arithmetic)."""
    total, _ = _wigner_complex(state, np.asarray(beta, dtype=complex))
    out = np.abs(total.imag)
    return float(out) if out.ndim == 0 else out


def wigner(state, beta):
    """Peak-one Wigner function of any supported state at beta."""
    beta_arr = np.asarray(beta, dtype=complex)
    total, scale = _wigner_complex(state, beta_arr)
    if not np.all(np.isfinite(total)):
        raise NumericalGuardError("non-finite Wigner value")
    out = _as_real(total, beta_arr, "Wigner function", scale)
    return float(out) if out.ndim == 0 else out


def wigner_superposition(state: CoherentSuperposition, beta):
    """Wigner function of an undeformed superposition (coherent, cat, compass)."""
    if not isinstance(state, CoherentSuperposition):
        raise TypeError("wigner_superposition expects a CoherentSuperposition")
    return wigner(state, beta)


def _coherent_deformed(alpha, mode, r, q) -> DeformedState:
    return deform(make_coherent(alpha), OperatorRecipe(mode, r, q))


def wigner_sa_coherent(alpha, r: int, q: int, beta):
    """Wigner function of a^q a^dag^r |alpha>, normalised."""
    return wigner(_coherent_deformed(alpha, "sa", r, q), beta)


def wigner_as_coherent(alpha, r: int, q: int, beta):
    """Wigner function of a^dag^r a^q |alpha>, normalised."""
    if complex(alpha) == 0 and q > 0:
        raise NullStateError("a^q annihilates the vacuum")
    return wigner(_coherent_deformed(alpha, "as", r, q), beta)


def _require_kitten(state, mode):
    if not isinstance(state, DeformedState) or state.base.family != "compass":
        raise UnsupportedFamilyError("expected a deformed compass state")
    if state.recipe.mode != mode:
        raise ValueError(f"expected an {mode.upper()} recipe, got {state.recipe.mode.upper()}")


def wigner_sa_kitten(state: DeformedState, beta):
    _require_kitten(state, "sa")
    return wigner(state, beta)


def wigner_as_kitten(state: DeformedState, beta):
    _require_kitten(state, "as")
    return wigner(state, beta)


def overlap_amplitude(state, delta):
    """Normalised <psi| D(delta) |psi>."""
    base, recipe, norm = _split(state)
    delta_arr = np.asarray(delta, dtype=complex)
    total = np.zeros(delta_arr.shape, dtype=complex)
    c, a = base.coefficients, base.alphas
    for ci, ai in zip(c, a):
        for cj, aj in zip(c, a):
            w = np.conj(ci) * cj
            if w == 0:
                continue
            total = total + w * _overlap_kernel(ai, aj, delta_arr, recipe)
    total = total / norm
    if not np.all(np.isfinite(total)):
        raise NumericalGuardError("non-finite overlap value")
    return complex(total) if total.ndim == 0 else total


def sensitivity(state, delta):
    """S(delta) = |<psi| D(delta) |psi>|^2 for a normalised state."""
    amp = np.asarray(overlap_amplitude(state, delta))
    s = np.abs(amp) ** 2
    if np.any(s > 1.0 + SENSITIVITY_ATOL):
        k = int(np.argmax(s))
        at = complex(np.broadcast_to(np.asarray(delta, dtype=complex), s.shape).ravel()[k])
        raise NumericalGuardError(f"sensitivity {s.ravel()[k]:.12g} exceeds 1 at delta={at:.6g}")
    s = np.minimum(s, 1.0)
    return float(s) if s.ndim == 0 else s


def _log_abs_alpha_power(alpha: complex, power: np.ndarray) -> np.ndarray:
    """log(|alpha|^(2*power)) with 0^0 = 1 and 0^p = 0 (as -inf)."""
    mag = abs(alpha)
    if mag == 0:
        return np.where(power == 0, 0.0, -np.inf)
    return 2.0 * power * math.log(mag)


def _log_fact(n: np.ndarray) -> np.ndarray:
    return np.array([log_factorial(int(k)) for k in np.ravel(n)]).reshape(np.shape(n))


def pnd_sa_coherent(alpha, r: int, q: int, n):
    """Photon-number distribution of the normalised SA coherent state."""
    alpha = complex(alpha)
    state = _coherent_deformed(alpha, "sa", r, q)
    n_arr = np.asarray(n, dtype=int)
    if np.any(n_arr < 0):
        raise ValueError("photon numbers must be non-negative")
    k = q + n_arr - r  # index of the coherent amplitude feeding |n>
    valid = k >= 0
    kk = np.where(valid, k, 0)
    logv = (
        2.0 * _log_fact(q + n_arr)
        - _log_fact(n_arr)
        - 2.0 * _log_fact(kk)
        + _log_abs_alpha_power(alpha, kk)
        - abs(alpha) ** 2
        - math.log(state.norm_const)
    )
    out = np.where(valid, np.exp(logv), 0.0)
    return float(out) if out.ndim == 0 else out


def pnd_as_coherent(alpha, r: int, q: int, n):
    """Photon-number distribution of the normalised AS coherent state (zero below n = r)."""
    alpha = complex(alpha)
    if alpha == 0 and q > 0:
        raise NullStateError("a^q annihilates the vacuum")
    state = _coherent_deformed(alpha, "as", r, q)
    n_arr = np.asarray(n, dtype=int)
    if np.any(n_arr < 0):
        raise ValueError("photon numbers must be non-negative")
    valid = n_arr >= r
    nr = np.where(valid, n_arr - r, 0)
    logv = (
        _log_fact(n_arr)
        - 2.0 * _log_fact(nr)
        + _log_abs_alpha_power(alpha, nr + q)
        - abs(alpha) ** 2
        - math.log(state.norm_const)
    )
    out = np.where(valid, np.exp(logv), 0.0)
    return float(out) if out.ndim == 0 else out


def base_overlap(state: DeformedState) -> complex:
    """<base| A |base> for the unnormalised base and recipe operator A."""
    base, recipe = state.base, state.recipe
    r, q = recipe.r, recipe.q
    c, a = base.coefficients, base.alphas
    terms = []
    for ci, ai in zip(c, a):
        for cj, aj in zip(c, a):
            w = np.conj(ci) * cj * np.exp(_g(ai, aj) + np.conj(ai) * aj)
            if recipe.mode == "sa":
                # <a_i| a^q a^dag^r |a_j> = <a_i|a_j> (-i)^(r+q) H_{r,q}(i a_i*, i a_j)
                terms.append(w * (-1j) ** (r + q) * hermite2(r, q, 1j * np.conj(ai), 1j * aj))
            else:
                terms.append(w * np.conj(ai) ** r * aj**q)
    return compensated_sum(terms)


def fidelity_deformed_vs_base(state: DeformedState) -> float:
    """|<base|deformed>|^2 with both states normalised.

    Compass bases use the closed form; coherent bases are evaluated in the
    truncated Fock basis.
    """
    if not isinstance(state, DeformedState):
        raise TypeError("fidelity_deformed_vs_base expects a DeformedState")
    if state.base.family == "coherent":
        from . import fock

        v = fock.state_to_fock(state)
        b = fock.state_to_fock(state.base, cutoff=v.cutoff)
        return float(abs(fock.inner(b, v)) ** 2 / (fock.inner(b, b).real * fock.inner(v, v).real))
    amp = base_overlap(state)
    f = abs(amp) ** 2 / (state.norm_const * state.base.norm_const)
    if f > 1.0 + SENSITIVITY_ATOL:
        raise NumericalGuardError(f"fidelity {f:.12g} exceeds 1")
    return float(min(f, 1.0))
