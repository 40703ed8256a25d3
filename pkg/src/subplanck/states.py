"""State families: coherent, horizontal cat, compass, and their SA/AS deformations.

Complex amplitudes map to quadratures through alpha = (x + i p) / sqrt(2),
so ``make_cat(c0)`` puts its two components at x = +c0 and x = -c0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .exceptions import NullStateError, NumericalGuardError, UnsupportedFamilyError
from .specialfn import compensated_sum, gamma_value, hermite2_scaled

__all__ = [
    "CoherentSuperposition",
    "OperatorRecipe",
    "DeformedState",
    "MAX_ORDER",
    "make_coherent",
    "make_cat",
    "make_compass",
    "norm_compass",
    "superposition_norm",
    "deform",
    "state_from_dict",
    "state_to_dict",
]

MAX_ORDER = 64
SQRT2 = math.sqrt(2.0)
IMAG_RTOL = 1e-10


@dataclass(frozen=True)
class CoherentSuperposition:
    """Unnormalised sum of coherent states, ``sum_i c_i |alpha_i>``."""

    terms: tuple[tuple[complex, complex], ...]
    family: str = "custom"
    c0: float | None = None

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a superposition needs at least one term")
        terms = tuple((complex(c), complex(a)) for c, a in self.terms)
        for c, a in terms:
            if not (np.isfinite(c.real) and np.isfinite(c.imag)):
                raise ValueError("coefficients must be finite")
            if not (np.isfinite(a.real) and np.isfinite(a.imag)):
                raise ValueError("amplitudes must be finite")
        if all(c == 0 for c, _ in terms):
            raise ValueError("at least one coefficient must be nonzero")
        object.__setattr__(self, "terms", terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=complex)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for _, a in self.terms], dtype=complex)

    @property
    def norm_const(self) -> float:
        return superposition_norm(self)

    @property
    def max_abs_alpha(self) -> float:
        return float(np.max(np.abs(self.alphas)))


@dataclass(frozen=True)
class OperatorRecipe:
    """Photon addition/subtraction recipe.

    ``"sa"`` applies a^q a^dag^r (r additions first, then q subtractions);
    ``"as"`` applies a^dag^r a^q (q subtractions first).
    """

    mode: Literal["sa", "as"]
    r: int = 0
    q: int = 0

    def __post_init__(self):
        mode = str(self.mode).lower()
        if mode not in ("sa", "as"):
            raise ValueError(f"mode must be 'sa' or 'as', got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        for name in ("r", "q"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
            if v > MAX_ORDER:
                raise ValueError(f"{name}={v} exceeds the supported order {MAX_ORDER}")
            object.__setattr__(self, name, int(v))

    @property
    def is_identity(self) -> bool:
        return self.r == 0 and self.q == 0


@dataclass(frozen=True)
class DeformedState:
    """A superposition with an operator recipe applied, plus its norm constant."""

    base: CoherentSuperposition
    recipe: OperatorRecipe
    norm_const: float = field(compare=False)

    def __post_init__(self):
        if not self.norm_const > 0:
            raise ValueError("norm_const must be positive")

    @property
    def family(self) -> str:
        return self.base.family

    @property
    def max_abs_alpha(self) -> float:
        return self.base.max_abs_alpha


def make_coherent(alpha: complex) -> CoherentSuperposition:
    return CoherentSuperposition(((1.0, complex(alpha)),), family="coherent")


def _check_c0(c0):
    c0 = float(c0)
    if not c0 > 0 or not math.isfinite(c0):
        raise ValueError(f"c0 must be a positive finite number, got {c0!r}")
    return c0


def make_cat(c0: float) -> CoherentSuperposition:
    """Horizontal even cat |c0/sqrt2> + |-c0/sqrt2> (unnormalised)."""
    c0 = _check_c0(c0)
    a = c0 / SQRT2
    return CoherentSuperposition(((1.0, a), (1.0, -a)), family="cat", c0=c0)


def make_compass(c0: float) -> CoherentSuperposition:
    """Compass (four-headed kitten for small c0) with components at +-c0/sqrt2, +-i c0/sqrt2."""
    c0 = _check_c0(c0)
    a = c0 / SQRT2
    return CoherentSuperposition(
        ((1.0, a), (1.0, -a), (1.0, 1j * a), (1.0, -1j * a)), family="compass", c0=c0
    )


def _real_positive(total: complex, scale: float, what: str) -> float:
    if abs(total.imag) > IMAG_RTOL * max(1.0, abs(total.real), scale):
        raise NumericalGuardError(f"{what} has imaginary residue {total.imag:.3e}")
    return total.real


def superposition_norm(state: CoherentSuperposition) -> float:
    """<psi|psi> = sum_ij conj(c_i) c_j G(a_i, a_j) exp(conj(a_i) a_j)."""
    c, a = state.coefficients, state.alphas
    terms = []
    for ci, ai in zip(c, a):
        for cj, aj in zip(c, a):
            terms.append(
                np.conj(ci) * cj * np.exp(-0.5 * (abs(ai) ** 2 + abs(aj) ** 2) + np.conj(ai) * aj)
            )
    total = compensated_sum(terms)
    return _real_positive(total, sum(abs(t) for t in terms), "superposition norm")


def norm_compass(c0: float) -> float:
    """Normalisation constant of the (unnormalised) compass superposition."""
    return superposition_norm(make_compass(c0))


def _sa_pair_terms(ai: complex, aj: complex, r: int, q: int) -> list[tuple[complex, float]]:
    """Terms of <a_i| a^r a^dag^q a^q a^dag^r |a_j> / <a_i|a_j> as (mantissa, log scale).

    Sum over n of Gamma * H_{r-n,q}[i a_j, i a_i*] H_{r-n,q}[i a_i*, i a_j] times (-1)^(r+q).
    """
    h1 = hermite2_scaled(r, q, 1j * aj, 1j * np.conj(ai))
    h2 = hermite2_scaled(r, q, 1j * np.conj(ai), 1j * aj)
    sign = -1.0 if (r + q) % 2 else 1.0
    out = []
    for n in range(r + 1):
        m1, e1 = h1[r - n]
        m2, e2 = h2[r - n]
        g = gamma_value(n, r)
        if g == 0 or m1 == 0 or m2 == 0:
            continue
        out.append((sign * math.copysign(1.0, g) * m1 * m2, math.log(abs(g)) + (e1 + e2) * math.log(2.0)))
    return out


def _as_pair_terms(ai: complex, aj: complex, r: int, q: int) -> list[tuple[complex, float]]:
    """Terms of <a_i| a^dag^q a^r a^dag^r a^q |a_j> / <a_i|a_j>: (a_i* a_j)^q sum_n (-1)^n Gamma (a_i* a_j)^(r-n)."""
    z = np.conj(ai) * aj
    if z == 0:
        # only the (r-n) = 0, q = 0 term survives
        if q == 0:
            return [(1.0 + 0j, math.log(abs(gamma_value(r, r))))]
        return []
    logz, unit = math.log(abs(z)), z / abs(z)
    out = []
    for n in range(r + 1):
        c = abs(gamma_value(n, r))
        p = q + r - n
        out.append((unit**p, math.log(c) + p * logz))
    return out


def _deformed_norm(base: CoherentSuperposition, recipe: OperatorRecipe) -> float:
    c, a = base.coefficients, base.alphas
    r, q = recipe.r, recipe.q
    pair_terms = _sa_pair_terms if recipe.mode == "sa" else _as_pair_terms
    mants, logs = [], []
    for ci, ai in zip(c, a):
        for cj, aj in zip(c, a):
            w = np.conj(ci) * cj
            if w == 0:
                continue
            overlap_log = -0.5 * (abs(ai) ** 2 + abs(aj) ** 2) + (np.conj(ai) * aj).real
            overlap_phase = np.exp(1j * (np.conj(ai) * aj).imag)
            for mant, lg in pair_terms(ai, aj, r, q):
                mants.append(w * overlap_phase * mant)
                logs.append(lg + overlap_log)
    if not logs:
        raise NullStateError("the operator recipe annihilates the base state")
    top = max(logs)
    scaled = [m * math.exp(lg - top) for m, lg in zip(mants, logs)]
    total = compensated_sum(scaled)
    scale = sum(abs(s) for s in scaled)
    value = _real_positive(total, scale, "deformed norm")
    if value <= 0 or value <= 1e-13 * scale:
        raise NullStateError("the operator recipe annihilates the base state")
    if top > 700:
        # the constant itself is stored as a float
        result = math.exp(math.log(value) + top)
    else:
        result = value * math.exp(top)
    if not (result > 1e-300 and math.isfinite(result)):
        raise NullStateError(f"deformed norm {result!r} is outside the representable range")
    return result


def deform(base: CoherentSuperposition, recipe: OperatorRecipe) -> DeformedState:
    """Apply an SA or AS recipe to a coherent or compass base.

    The norm constant is the closed-form <psi|A^dag A|psi> for the
    unnormalised base; two-component cats are rejected since no closed
    form is provided for them.
    """
    if base.family not in ("coherent", "compass"):
        raise UnsupportedFamilyError(
            f"closed-form deformation is only available for coherent and compass bases, got {base.family!r}"
        )
    if recipe.mode == "as" and recipe.q > 0 and np.all(base.alphas == 0):
        raise NullStateError("photon subtraction from the vacuum gives the null state")
    return DeformedState(base=base, recipe=recipe, norm_const=_deformed_norm(base, recipe))


def state_from_dict(spec: dict):
    """Build a state from ``{family, c0 | alpha, mode, r, q}``."""
    if not isinstance(spec, dict):
        raise ValueError("state descriptor must be a JSON object")
    family = spec.get("family")
    if family == "coherent":
        alpha = spec.get("alpha")
        if alpha is None:
            raise ValueError("coherent family needs 'alpha': [re, im]")
        if isinstance(alpha, (int, float)):
            alpha = [alpha, 0.0]
        if len(alpha) != 2:
            raise ValueError("'alpha' must be [re, im]")
        base = make_coherent(complex(float(alpha[0]), float(alpha[1])))
    elif family in ("cat", "compass"):
        if "c0" not in spec:
            raise ValueError(f"{family} family needs 'c0'")
        base = (make_cat if family == "cat" else make_compass)(spec["c0"])
    else:
        raise ValueError(f"unknown family {family!r}")
    mode = str(spec.get("mode", "none")).lower()
    if mode == "none":
        return base
    recipe = OperatorRecipe(mode, int(spec.get("r", 0)), int(spec.get("q", 0)))
    return deform(base, recipe)


def state_to_dict(state) -> dict:
    base = state.base if isinstance(state, DeformedState) else state
    out: dict = {"family": base.family}
    if base.family == "coherent":
        a = complex(base.alphas[0])
        out["alpha"] = [a.real, a.imag]
    elif base.family in ("cat", "compass"):
        out["c0"] = base.c0
    else:
        raise ValueError("custom superpositions have no JSON descriptor")
    if isinstance(state, DeformedState):
        out.update(mode=state.recipe.mode, r=state.recipe.r, q=state.recipe.q)
    else:
        out.update(mode="none", r=0, q=0)
    return out
