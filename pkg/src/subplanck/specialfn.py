"""Special functions used by the closed-form evaluators and the Fock oracle.

Two-index Hermite polynomials follow the convention

    H_{m,n}(x, y) = sum_k (-1)^k m! n! / (k! (m-k)! (n-k)!) x^(m-k) y^(n-k),

with generating function exp(s*x + t*y - s*t).
"""

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "log_factorial",
    "gamma_coeff",
    "gamma_value",
    "hermite2",
    "hermite2_scaled",
    "hermite2_table",
    "laguerre_assoc",
    "laguerre_sequence",
    "compensated_sum",
]


def log_factorial(n: int) -> float:
    """Return ln(n!)."""
    n = int(n)
    if n < 0:
        raise ValueError(f"log_factorial needs n >= 0, got {n}")
    if n < 2:
        return 0.0
    return math.lgamma(n + 1)


def gamma_coeff(n: int, r: int) -> tuple[int, float]:
    """Signed log form of (-1)^n (r!)^2 / (n! [(r-n)!]^2).

    Returns
    -------
    sign : int
        (-1)^n.
    log_magnitude : float
        2 ln r! - ln n! - 2 ln (r-n)!.
    """
    n, r = int(n), int(r)
    if n < 0 or r < 0:
        raise ValueError("gamma_coeff needs non-negative arguments")
    if n > r:
        raise ValueError(f"gamma_coeff needs n <= r, got n={n}, r={r}")
    sign = -1 if n % 2 else 1
    logmag = 2.0 * log_factorial(r) - log_factorial(n) - 2.0 * log_factorial(r - n)
    return sign, logmag


@lru_cache(maxsize=256)
def gamma_value(n: int, r: int) -> float:
    """Gamma coefficient as a float, exact integer arithmetic before rounding."""
    if n > r or n < 0:
        raise ValueError(f"gamma_value needs 0 <= n <= r, got n={n}, r={r}")
    num = math.factorial(r) ** 2
    den = math.factorial(n) * math.factorial(r - n) ** 2
    # exact: the quotient equals C(r, n) * r! / (r-n)!
    value = float(num // den)
    return -value if n % 2 else value


def compensated_sum(values) -> complex:
    """Accurately rounded sum of complex terms (real and imaginary parts separately)."""
    values = list(values)
    re = math.fsum(v.real for v in values)
    im = math.fsum(v.imag for v in values)
    return complex(re, im)


def hermite2_scaled(mmax: int, n: int, x: complex, y: complex) -> list[tuple[complex, int]]:
    """H_{m,n}(x, y) for m = 0..mmax as (mantissa, binary exponent) pairs.

    The recurrence state is renormalised by powers of two whenever it grows
    large, so orders far beyond double range stay representable; the value is
    ``mantissa * 2**exponent``.
    """
    mmax, n = int(mmax), int(n)
    if mmax < 0 or n < 0:
        raise ValueError(f"hermite2 needs non-negative orders, got ({mmax}, {n})")
    x, y = complex(x), complex(y)
    cur = [1 + 0j]
    for _ in range(n):
        cur.append(cur[-1] * y)
    exp2 = 0
    out = [(cur[n], 0)]
    for _ in range(mmax):
        nxt = [x * cur[0]]
        for k in range(1, n + 1):
            nxt.append(x * cur[k] - k * cur[k - 1])
        cur = nxt
        big = max(max(abs(c.real), abs(c.imag)) for c in cur)
        if big > 1e150 or (0.0 < big < 1e-150):
            shift = math.frexp(big)[1]
            cur = [math.ldexp(c.real, -shift) + 1j * math.ldexp(c.imag, -shift) for c in cur]
            exp2 += shift
        out.append((cur[n], exp2))
    return out


def hermite2(m: int, n: int, x: complex, y: complex) -> complex:
    """Two-index Hermite polynomial H_{m,n}(x, y).

    Evaluated by the three-term recurrence in the first index with binary
    rescaling; see :func:`hermite2_scaled` for the overflow-free form.
    """
    if int(m) < 0 or int(n) < 0:
        raise ValueError(f"hermite2 needs non-negative orders, got ({m}, {n})")
    mant, exp2 = hermite2_scaled(m, n, x, y)[int(m)]
    return complex(math.ldexp(mant.real, exp2), math.ldexp(mant.imag, exp2))


def hermite2_table(mmax: int, n: int, x, y) -> np.ndarray:
    """H_{m,n}(x, y) for m = 0..mmax, vectorised over array arguments.

    Uses H_{m+1,k} = x H_{m,k} - k H_{m,k-1} starting from H_{0,k} = y^k.
    The result has shape ``(mmax + 1,) + broadcast(x, y).shape``.
    """
    if mmax < 0 or n < 0:
        raise ValueError("hermite2_table needs non-negative orders")
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    shape = np.broadcast_shapes(x.shape, y.shape)
    x = np.broadcast_to(x, shape)
    cur = np.empty((n + 1,) + shape, dtype=complex)
    cur[0] = 1.0
    for k in range(1, n + 1):
        cur[k] = cur[k - 1] * y
    out = np.empty((mmax + 1,) + shape, dtype=complex)
    out[0] = cur[n]
    ks = np.arange(1, n + 1).reshape((n,) + (1,) * len(shape))
    for m in range(1, mmax + 1):
        nxt = cur * x
        if n:
            nxt[1:] -= ks * cur[:-1]
        cur = nxt
        out[m] = cur[n]
    return out


def laguerre_sequence(nmax: int, k: float, x) -> np.ndarray:
    """Associated Laguerre L_j^(k)(x) for j = 0..nmax by forward recurrence.

    Shape of the result is ``(nmax + 1,) + np.shape(x)``; complex arguments
    give a complex result.
    """
    if nmax < 0:
        raise ValueError("laguerre_sequence needs nmax >= 0")
    x = np.asarray(x)
    x = x.astype(complex if np.iscomplexobj(x) else float)
    out = np.empty((nmax + 1,) + x.shape, dtype=x.dtype)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = 1.0 + k - x
    for j in range(1, nmax):
        out[j + 1] = ((2 * j + 1 + k - x) * out[j] - (j + k) * out[j - 1]) / (j + 1)
    return out


def laguerre_assoc(n: int, k: float, x):
    """Associated Laguerre polynomial L_n^(k)(x)."""
    if n < 0 or k < 0:
        raise ValueError("laguerre_assoc needs n >= 0 and k >= 0")
    val = laguerre_sequence(int(n), k, x)[int(n)]
    return float(val) if np.ndim(val) == 0 else val
