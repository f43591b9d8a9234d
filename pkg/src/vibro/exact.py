"""Exact matrix-function references: permanents, hafnians and loop hafnians.

These are the ground-truth routines the randomized estimators are tested
against.  All of them are exponential-time brute force with hard size guards,
except for the low-rank loop hafnian, which runs in
``C(n + r - 1, r - 1) * poly(n)`` for a rank-``r`` factorization.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NumericError, SizeLimitError

PERMANENT_MAX = 20
HAFNIAN_MAX = 16
LOOP_HAFNIAN_MAX = 14
LOW_RANK_MAX = 6

_SYM_TOL = 1e-10


def _as_square(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _require_symmetric(a, name="matrix", tol=_SYM_TOL):
    scale = max(1.0, np.abs(a).max()) if a.size else 1.0
    if a.size and np.abs(a - a.T).max() > tol * scale:
        raise ValueError(f"{name} is not symmetric within {tol}")


def permanent_exact(a):
    """Permanent of a square matrix by the Gray-coded Glynn formula, O(2^n n).

    Per(A) = 2^(1-n) * sum over sign vectors d with d_1 = +1 of
    (prod_i d_i) * prod_j (sum_i d_i A_ij).
    """
    a = _as_square(a)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > PERMANENT_MAX:
        raise SizeLimitError(f"permanent_exact limited to n <= {PERMANENT_MAX}, got {n}")
    row = a.sum(axis=0).astype(complex)
    total = np.prod(row)
    sign = 1.0
    gray = 0
    for i in range(1, 1 << (n - 1)):
        new_gray = i ^ (i >> 1)
        changed = gray ^ new_gray
        j = changed.bit_length()  # flips row j (rows 1..n-1 of a)
        if new_gray & changed:
            row -= 2.0 * a[j]
        else:
            row += 2.0 * a[j]
        sign = -sign
        total += sign * np.prod(row)
        gray = new_gray
    return complex(total / (1 << (n - 1)))


def hafnian_exact(sigma):
    """Hafnian by perfect-matching enumeration, (n-1)!! terms.

    The diagonal never enters.  Odd dimension gives 0.
    """
    sigma = _as_square(sigma, "sigma")
    _require_symmetric(sigma, "sigma")
    n = sigma.shape[0]
    if n % 2 == 1:
        return 0.0 + 0.0j
    if n > HAFNIAN_MAX:
        raise SizeLimitError(f"hafnian_exact limited to n <= {HAFNIAN_MAX}, got {n}")

    def rec(idx):
        if not idx:
            return 1.0 + 0.0j
        i0 = idx[0]
        total = 0.0 + 0.0j
        for pos in range(1, len(idx)):
            rest = idx[1:pos] + idx[pos + 1:]
            total += sigma[i0, idx[pos]] * rec(rest)
        return total

    return complex(rec(tuple(range(n))))


def loop_hafnian_exact(sigma_tilde):
    """Loop hafnian by enumeration of matchings with loops.

    Unmatched indices contribute their diagonal entry.
    """
    sigma_tilde = _as_square(sigma_tilde, "sigma_tilde")
    _require_symmetric(sigma_tilde, "sigma_tilde")
    n = sigma_tilde.shape[0]
    if n > LOOP_HAFNIAN_MAX:
        raise SizeLimitError(
            f"loop_hafnian_exact limited to n <= {LOOP_HAFNIAN_MAX}, got {n}"
        )

    def rec(idx):
        if not idx:
            return 1.0 + 0.0j
        i0 = idx[0]
        rest0 = idx[1:]
        total = sigma_tilde[i0, i0] * rec(rest0)
        for pos in range(len(rest0)):
            rest = rest0[:pos] + rest0[pos + 1:]
            total += sigma_tilde[i0, rest0[pos]] * rec(rest)
        return total

    return complex(rec(tuple(range(n))))


def repeat_rows_cols(b, counts):
    """Repeat row and column ``i`` of ``b`` ``counts[i]`` times.

    A zero count deletes the row and column.  Row/column repetition cannot
    increase the rank of the matrix.
    """
    b = _as_square(b, "b")
    counts = np.asarray(counts, dtype=int)
    if counts.ndim != 1 or counts.shape[0] != b.shape[0]:
        raise ValueError(
            f"counts length {counts.shape} does not match matrix size {b.shape[0]}"
        )
    if np.any(counts < 0):
        raise ValueError("counts must be nonnegative")
    return np.repeat(np.repeat(b, counts, axis=0), counts, axis=1)


def loop_hafnian_table(sigma, mu, counts_max):
    """Loop hafnians of all repeated matrices up to per-index counts.

    Returns an array ``f`` of shape ``counts_max + 1`` where
    ``f[v] = lhaf(repeat(sigma, v) with diagonal repeat(mu, v))``.
    Computed by the generating-function recursion
    ``f(v) = mu_i f(v - e_i) + sum_j sigma[i, j] (v_j - [i == j]) f(v - e_i - e_j)``
    (``i`` the first index with ``v_i > 0``), which enumerates exactly the
    matchings-with-loops sum while sharing subproblems across outcomes.
    """
    sigma = _as_square(sigma, "sigma")
    _require_symmetric(sigma, "sigma")
    mu = np.asarray(mu, dtype=complex)
    counts_max = np.asarray(counts_max, dtype=int)
    q = sigma.shape[0]
    if mu.shape != (q,) or counts_max.shape != (q,):
        raise ValueError("mu and counts_max must match the matrix size")
    if np.any(counts_max < 0):
        raise ValueError("counts_max must be nonnegative")

    dims = tuple(counts_max + 1)
    f = np.zeros(dims, dtype=complex)
    f[(0,) * q] = 1.0
    for v in np.ndindex(*dims):
        if not any(v):
            continue
        i = next(idx for idx, vi in enumerate(v) if vi)
        prev = list(v)
        prev[i] -= 1
        total = mu[i] * f[tuple(prev)]
        for j in range(q):
            vj = prev[j]
            if vj == 0:
                continue
            prev2 = list(prev)
            prev2[j] -= 1
            total += sigma[i, j] * vj * f[tuple(prev2)]
        f[v] = total
    return f


def integer_partitions(total, parts):
    """All nonnegative integer ``parts``-tuples summing to ``total``.

    Ordered tuples (compositions); there are C(total + parts - 1, parts - 1).
    """
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if total < 0:
        raise ValueError("total must be >= 0")
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for v in range(remaining + 1):
            rec(prefix + (v,), remaining - v, slots - 1)

    rec((), total, parts)
    return out


def even_partitions(total, parts):
    """The all-even subset of ``integer_partitions(total, parts)``.

    Empty unless ``total`` is even; there are C(total/2 + parts - 1, parts - 1).
    """
    if total % 2 == 1:
        return []
    return [tuple(2 * v for v in p) for p in integer_partitions(total // 2, parts)]


def double_factorial(m):
    """(m)!! with the convention (m)!! = 1 for m <= 0."""
    if m <= 0:
        return 1
    return math.prod(range(m, 0, -2))


@dataclass(frozen=True)
class LowRankFactor:
    """Rank factorization ``g @ g.T = sigma`` plus per-row loop weights."""

    g: np.ndarray
    mu: np.ndarray
    rank: int

    def __post_init__(self):
        g = np.asarray(self.g, dtype=complex)
        mu = np.asarray(self.mu, dtype=complex)
        if g.ndim != 2:
            raise ValueError("g must be a 2-d array")
        if mu.shape != (g.shape[0],):
            raise ValueError("mu length must match the number of rows of g")
        if g.shape[1] != self.rank:
            raise ValueError("rank must equal the number of columns of g")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "mu", mu)


def takagi(sigma):
    """Takagi decomposition ``sigma = u @ diag(vals) @ u.T`` of a complex symmetric matrix.

    Returns ``(vals, u)`` with ``vals`` the singular values in descending
    order and ``u`` unitary.  Degenerate singular-value subspaces are handled
    by a square-root correction block per group.
    """
    sigma = _as_square(sigma, "sigma")
    _require_symmetric(sigma, "sigma", tol=1e-8)
    n = sigma.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    if np.allclose(sigma, 0):
        return np.zeros(n), np.eye(n, dtype=complex)

    v, s, wh = np.linalg.svd(sigma)
    w = wh.conj().T
    # group indices with (near-)equal singular values
    groups = []
    start = 0
    for i in range(1, n + 1):
        if i == n or abs(s[i] - s[start]) > 1e-8 * max(1.0, s[start]):
            groups.append(list(range(start, i)))
            start = i
    blocks = []
    for grp in groups:
        sub = v[:, grp].T @ w[:, grp].conj()
        blocks.append(scipy.linalg.sqrtm(sub))
    q = scipy.linalg.block_diag(*blocks)
    u = v @ np.conj(q)
    residual = np.abs(u @ np.diag(s) @ u.T - sigma).max()
    if residual > 1e-8 * max(1.0, np.abs(sigma).max()):
        raise NumericError(f"Takagi residual {residual:.3e} exceeds tolerance")
    return s, u


def low_rank_factor(sigma, mu, trunc_tol=1e-10):
    """Factor a complex symmetric ``sigma`` as ``g @ g.T`` with minimal column count.

    Singular values at or below ``trunc_tol`` are truncated to determine the
    rank.  ``mu`` is carried through as the loop-weight vector.
    """
    sigma = _as_square(sigma, "sigma")
    mu = np.asarray(mu, dtype=complex)
    if mu.shape != (sigma.shape[0],):
        raise ValueError("mu length must match sigma")
    vals, u = takagi(sigma)
    rank = int(np.sum(vals > trunc_tol))
    g = u[:, :rank] * np.sqrt(vals[:rank])
    residual = np.abs(g @ g.T - sigma).max() if sigma.size else 0.0
    if residual > 1e-8 * max(1.0, np.abs(sigma).max() if sigma.size else 1.0):
        raise NumericError(f"low-rank factorization residual {residual:.3e}")
    return LowRankFactor(g=g, mu=mu, rank=rank)


def loop_hafnian_low_rank(factor):
    """Loop hafnian from a rank factorization via polynomial expansion.

    Expands ``q(x) = prod_i (sum_j g_ij x_j + mu_i)`` one linear factor at a
    time as a map from exponent tuples to coefficients, then sums
    ``lambda_e * prod_i (e_i - 1)!!`` over the all-even exponent tuples.  Cost
    is ``|P(n, r)| * poly(n)`` where ``P`` is the set of exponent tuples.
    """
    g = factor.g
    mu = factor.mu
    n, r = g.shape
    if r > LOW_RANK_MAX:
        raise SizeLimitError(f"loop_hafnian_low_rank limited to rank <= {LOW_RANK_MAX}")
    if r == 0:
        return complex(np.prod(mu)) if n else 1.0 + 0.0j

    coeffs = {(0,) * r: 1.0 + 0.0j}
    for i in range(n):
        new = {}
        row = g[i]
        mu_i = mu[i]
        for expo, c in coeffs.items():
            if mu_i != 0:
                new[expo] = new.get(expo, 0.0) + c * mu_i
            for j in range(r):
                gij = row[j]
                if gij == 0:
                    continue
                bumped = expo[:j] + (expo[j] + 1,) + expo[j + 1:]
                new[bumped] = new.get(bumped, 0.0) + c * gij
        coeffs = new

    total = 0.0 + 0.0j
    for expo, c in coeffs.items():
        if any(e % 2 for e in expo):
            continue
        weight = 1
        for e in expo:
            weight *= double_factorial(e - 1)
        total += c * weight
    return complex(total)
