"""Randomized estimators for permanent- and hafnian-shaped Fourier components.

Three families:

* a roots-of-unity Glynn/Gurvits estimator generalized to repeated rows and
  columns, unbiased for ``Per(A) / n!`` with sample values bounded by
  ``||B||^n``;
* Kan-formula estimators for hafnians and loop hafnians (signed binomial sums
  over quadratic forms), including the repeated-index variant;
* the assembled pipeline that turns a phase-conjugated Gaussian transform
  into the symmetric coupling matrix, loop weights and normalization used by
  those estimators.

All sampled variants follow the deterministic block-stream contract of
:mod:`vibro.streams`; real and imaginary parts are estimated from independent
streams so their errors stay uncorrelated.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import gaussian
from .exact import repeat_rows_cols
from .exceptions import NumericError
from .spectra import check_weights
from .streams import block_rng, block_sizes

DEFAULT_CONFIDENCE = 0.99

_RE_STREAM = 1
_IM_STREAM = 2
_EXHAUSTIVE_LIMIT = 1 << 22


@dataclass(frozen=True)
class EstimateWithBound:
    """A Monte Carlo estimate with its empirical and analytic error budgets.

    ``analytic_bound`` is the worst-case additive error at level
    ``confidence`` implied by the Hoeffding/Chernoff envelope of the sample
    values; the empirical ``stderr`` is usually far smaller.  Exhaustive
    evaluations carry ``stderr = analytic_bound = 0``.
    """

    value: complex
    stderr: float
    n_samples: int
    analytic_bound: float
    confidence: float

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


def plan_samples(epsilon, confidence):
    """Samples needed for additive error ``epsilon`` at the given confidence.

    Two-sided Hoeffding for unit-bounded estimators:
    ``N = ceil(2 ln(2 / (1 - confidence)) / epsilon^2)``.
    """
    epsilon = float(epsilon)
    confidence = float(confidence)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    return max(1, math.ceil(2.0 * math.log(2.0 / (1.0 - confidence)) / epsilon ** 2))


def hoeffding_epsilon(n_samples, confidence):
    """The inverse of :func:`plan_samples`: achievable ``epsilon`` at ``N`` samples."""
    return math.sqrt(2.0 * math.log(2.0 / (1.0 - confidence)) / int(n_samples))


def _mean_stderr_complex(re_vals_fn, im_vals_fn, n_samples, seed):
    """Mean of Re from one stream and of Im from an independent one."""
    sums = [0.0, 0.0]
    sqs = [0.0, 0.0]
    count = 0
    for b, size in enumerate(block_sizes(n_samples)):
        re_vals = re_vals_fn(block_rng(seed, _RE_STREAM, b), size)
        im_vals = im_vals_fn(block_rng(seed, _IM_STREAM, b), size)
        sums[0] += re_vals.sum()
        sums[1] += im_vals.sum()
        sqs[0] += np.sum(re_vals ** 2)
        sqs[1] += np.sum(im_vals ** 2)
        count += size
    mean_re = sums[0] / count
    mean_im = sums[1] / count
    var_re = max(sqs[0] / count - mean_re ** 2, 0.0)
    var_im = max(sqs[1] / count - mean_im ** 2, 0.0)
    stderr = math.sqrt((var_re + var_im) / count)
    return complex(mean_re, mean_im), stderr, count


def _gurvits_values(b, n, xs):
    """GenGly values for root-index samples ``xs`` (rows are samples)."""
    k = n.size
    roots = [np.exp(2j * math.pi * np.arange(n_i + 1) / (n_i + 1)) for n_i in n]
    x = np.empty(xs.shape, dtype=complex)
    for i in range(k):
        x[:, i] = roots[i][xs[:, i]]
    y = x * np.sqrt(n)
    by = y @ b.T
    factors = (np.conj(y) * by) / n
    return np.prod(factors ** n, axis=1)


def gurvits_generalized(b, n, n_samples, seed, confidence=DEFAULT_CONFIDENCE,
                        exhaustive=False):
    """Randomized estimate of ``Per(A) / n!`` with ``A`` = ``b`` with repeats.

    ``A`` repeats row and column ``i`` of the ``k x k`` matrix ``b``
    ``n[i]`` times.  Samples ``x`` uniformly from the product of root-of-unity
    sets ``R[n_i + 1]``, sets ``y_i = sqrt(n_i) x_i`` and averages
    ``prod_i (conj(y_i) (B y)_i / n_i)^{n_i}`` over the modes with
    ``n_i >= 1`` (zero modes are dropped; they do not affect the target).
    Sample values are bounded by ``||B||^n``, giving the analytic bound
    ``eps(confidence, N) ||B||^n``.  With ``exhaustive=True`` the whole sample
    space is enumerated and the result is exact.
    """
    b = np.asarray(b, dtype=complex)
    n = np.asarray(n, dtype=int)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or n.shape != (b.shape[0],):
        raise ValueError("b must be square with one count per row")
    if np.any(n < 0):
        raise ValueError("counts must be nonnegative")
    if n.sum() < 1:
        raise ValueError("at least one count must be positive")

    keep = n > 0
    b = b[np.ix_(keep, keep)]
    n = n[keep]
    n_total = int(n.sum())
    norm_b = np.linalg.norm(b, 2)

    if exhaustive:
        sizes = n + 1
        space = int(np.prod(sizes))
        if space > _EXHAUSTIVE_LIMIT:
            raise ValueError(f"exhaustive sample space too large: {space}")
        grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
        xs = np.stack([g.ravel() for g in grids], axis=1)
        value = complex(np.mean(_gurvits_values(b, n, xs)))
        return EstimateWithBound(value=value, stderr=0.0, n_samples=space,
                                 analytic_bound=0.0, confidence=1.0)

    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    sizes = n + 1

    def draw(rng, size):
        xs = np.empty((size, n.size), dtype=np.int64)
        for i, s in enumerate(sizes):
            xs[:, i] = rng.integers(0, s, size)
        return xs

    value, stderr, count = _mean_stderr_complex(
        lambda rng, size: _gurvits_values(b, n, draw(rng, size)).real,
        lambda rng, size: _gurvits_values(b, n, draw(rng, size)).imag,
        n_samples, seed,
    )
    bound = hoeffding_epsilon(count, confidence) * norm_b ** n_total
    return EstimateWithBound(value=value, stderr=stderr, n_samples=count,
                             analytic_bound=bound, confidence=confidence)


def phase_shift_matrix(u, weights, grid, k):
    """``V = U^dag diag(e^{-i k theta omega}) U`` (unit spectral norm)."""
    u = gaussian.require_unitary(u)
    weights = check_weights(weights, u.shape[0])
    phases = np.exp(-1j * k * grid.theta * weights.astype(float))
    return u.conj().T @ (phases[:, None] * u)


def fourier_fock(u, weights, grid, k, n, n_samples, seed,
                 confidence=DEFAULT_CONFIDENCE, exhaustive=False):
    """Fourier component ``<n| V |n> = Per(V_{n,n}) / n!`` for a Fock input.

    Delegates to :func:`gurvits_generalized` on ``V = U^dag D U``; since
    ``||V|| = 1`` the analytic bound is ``eps(confidence, N)``.  ``n = 0``
    returns exactly 1.
    """
    n = np.asarray(n, dtype=int)
    k = int(k)
    if not 0 <= k <= grid.omega_max:
        raise ValueError(f"k must lie in [0, {grid.omega_max}]")
    if np.all(n == 0):
        return EstimateWithBound(value=1.0 + 0.0j, stderr=0.0, n_samples=1,
                                 analytic_bound=0.0, confidence=1.0)
    v = phase_shift_matrix(u, weights, grid, k)
    return gurvits_generalized(v, n, n_samples, seed, confidence=confidence,
                               exhaustive=exhaustive)


@dataclass(frozen=True)
class SigmaSystem:
    """Coupling matrix, loop weights and normalization of a Gaussian transform.

    ``sigma`` is the symmetric 2M x 2M matrix whose repeated loop hafnian
    yields Fock-diagonal matrix elements, ``zeta`` the diagonal replacement
    vector (already including the displacement on its first half), and
    ``z_norm`` the normalization ``Z`` with ``<0|W|0> = 1/Z``.
    """

    sigma: np.ndarray
    zeta: np.ndarray
    z_norm: complex

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=complex)
        z = np.asarray(self.zeta, dtype=complex)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError("sigma must be a square 2M x 2M matrix")
        if z.shape != (s.shape[0],):
            raise ValueError("zeta must have length 2M")
        if s.size and np.abs(s - s.T).max() > 1e-10 * max(1.0, np.abs(s).max()):
            raise NumericError("sigma must be symmetric within 1e-10")
        norm = np.linalg.norm(s, 2) if s.size else 1.0
        if s.size and abs(norm - 1.0) > 1e-8:
            raise NumericError(f"sigma spectral norm {norm} deviates from 1")
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "zeta", z)

    @property
    def modes(self):
        return self.sigma.shape[0] // 2


def build_sigma_system(form):
    """Sigma/zeta/Z data of a Bloch-Messiah form ``D(xi) U2 S(r) U1``.

    ``sigma = [[U2 T U2^T, U2 C U1], [U1^T C U2^T, -U1^T T U1]]`` with
    ``T = diag(tanh r)``, ``C = diag(sech r)``; its spectral norm is 1 for any
    inputs.  ``zeta = (xi - U2 T U2^T xi*, -U1^T C U2^T xi*)`` and
    ``1/Z = exp(xi^T U2 T U2^T xi / 2) / sqrt(prod cosh r_i)``.
    """
    u2, u1, r, xi = form.u2, form.u1, form.r, form.xi
    t = np.tanh(r)
    c = 1.0 / np.cosh(r)
    top_left = u2 @ (t[:, None] * u2.T)
    top_right = u2 @ (c[:, None] * u1)
    bottom_right = -(u1.T @ (t[:, None] * u1))
    m = form.modes
    sigma = np.zeros((2 * m, 2 * m), dtype=complex)
    sigma[:m, :m] = top_left
    sigma[:m, m:] = top_right
    sigma[m:, :m] = top_right.T
    sigma[m:, m:] = bottom_right
    zeta_alpha = xi - top_left @ xi.conj()
    zeta_beta = -(u1.T @ (c * (u2.T @ xi.conj())))
    zeta = np.concatenate([zeta_alpha, zeta_beta])
    log_z = 0.5 * np.sum(np.log(np.cosh(r))) - 0.5 * (xi @ (top_left @ xi))
    return SigmaSystem(sigma=sigma, zeta=zeta, z_norm=complex(np.exp(log_z)))


def _symmetrize_check(sigma, tol=1e-10):
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("sigma must be square")
    if sigma.size and np.abs(sigma - sigma.T).max() > tol * max(1.0, np.abs(sigma).max()):
        raise ValueError(f"sigma must be symmetric within {tol}")
    return sigma


def _bit_vectors(n):
    if n > 22:
        raise ValueError("exhaustive enumeration limited to n <= 22")
    idx = np.arange(1 << n, dtype=np.uint64)
    return (idx[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & 1


def kan_hafnian_estimate(sigma, n_samples, seed, confidence=DEFAULT_CONFIDENCE,
                         exhaustive=False):
    """Hafnian of a symmetric matrix by Kan's signed quadratic-form average.

    ``haf(S) = E_v[(-1)^{sum v} 2^{n/2} / (n/2)! (h^T S h)^{n/2}]`` over
    uniform ``v in {0,1}^n`` with ``h = 1/2 - v``; odd ``n`` gives exactly 0.
    The sample envelope ``(n ||S||)^{n/2} / ((n/2)! 2^{n/2})`` sets the
    analytic bound.  The matrix diagonal never biases the average.
    """
    sigma = _symmetrize_check(sigma)
    n = sigma.shape[0]
    if n % 2 == 1:
        return EstimateWithBound(value=0.0 + 0.0j, stderr=0.0, n_samples=1,
                                 analytic_bound=0.0, confidence=1.0)
    if n == 0:
        return EstimateWithBound(value=1.0 + 0.0j, stderr=0.0, n_samples=1,
                                 analytic_bound=0.0, confidence=1.0)
    half = n // 2
    scale = 2.0 ** half / math.factorial(half)

    def values(v):
        h = 0.5 - v
        quad = np.einsum("si,ij,sj->s", h, sigma, h)
        signs = 1.0 - 2.0 * (np.sum(v, axis=1) % 2)
        return signs * scale * quad ** half

    if exhaustive:
        vals = values(_bit_vectors(n).astype(float))
        return EstimateWithBound(value=complex(vals.mean()), stderr=0.0,
                                 n_samples=vals.size, analytic_bound=0.0,
                                 confidence=1.0)

    value, stderr, count = _mean_stderr_complex(
        lambda rng, size: values(rng.integers(0, 2, (size, n)).astype(float)).real,
        lambda rng, size: values(rng.integers(0, 2, (size, n)).astype(float)).imag,
        n_samples, seed,
    )
    envelope = (n * np.linalg.norm(sigma, 2)) ** half / (math.factorial(half) * 2.0 ** half)
    bound = hoeffding_epsilon(count, confidence) * envelope
    return EstimateWithBound(value=value, stderr=stderr, n_samples=count,
                             analytic_bound=bound, confidence=confidence)


def kan_hafnian_repeated(sigma, n, mode="full_enum", n_samples=None, seed=0,
                         confidence=DEFAULT_CONFIDENCE):
    """Hafnian of ``sigma`` with row/column ``i`` repeated ``n[i]`` times.

    Evaluates Kan's nested binomial sum
    ``haf(S_n) = (1/(n/2)!) sum_v (-1)^{sum v} prod_i C(n_i, v_i)
    (h^T S h / 2)^{n/2}`` with ``h = n/2 - v``; ``full_enum`` iterates the
    whole ``prod (n_i + 1)`` grid exactly, ``sampled`` draws ``v_i ~
    Binomial(n_i, 1/2)`` so the binomial weights fold into the proposal.
    Odd total returns exactly 0.
    """
    sigma = _symmetrize_check(sigma)
    n = np.asarray(n, dtype=int)
    if n.shape != (sigma.shape[0],):
        raise ValueError("counts must match the matrix size")
    if np.any(n < 0):
        raise ValueError("counts must be nonnegative")
    total = int(n.sum())
    if total % 2 == 1:
        return EstimateWithBound(value=0.0 + 0.0j, stderr=0.0, n_samples=1,
                                 analytic_bound=0.0, confidence=1.0)
    if total == 0:
        return EstimateWithBound(value=1.0 + 0.0j, stderr=0.0, n_samples=1,
                                 analytic_bound=0.0, confidence=1.0)
    half = total // 2
    half_fact = math.factorial(half)

    if mode == "full_enum":
        sizes = n + 1
        space = int(np.prod(sizes))
        if space > _EXHAUSTIVE_LIMIT:
            raise ValueError(f"full enumeration space too large: {space}")
        grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
        vs = np.stack([g.ravel() for g in grids], axis=1).astype(float)
        h = n / 2.0 - vs
        quad = np.einsum("si,ij,sj->s", h, sigma, h)
        signs = 1.0 - 2.0 * (np.sum(vs, axis=1) % 2)
        weights = np.ones(space)
        for i, n_i in enumerate(n):
            weights *= np.array([math.comb(n_i, int(v)) for v in vs[:, i]])
        value = np.sum(signs * weights * (quad / 2.0) ** half) / half_fact
        return EstimateWithBound(value=complex(value), stderr=0.0, n_samples=space,
                                 analytic_bound=0.0, confidence=1.0)
    if mode != "sampled":
        raise ValueError("mode must be 'full_enum' or 'sampled'")

    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    scale = 2.0 ** total / half_fact

    def values(rng, size):
        vs = rng.binomial(n[None, :].repeat(size, axis=0), 0.5).astype(float)
        h = n / 2.0 - vs
        quad = np.einsum("si,ij,sj->s", h, sigma, h)
        signs = 1.0 - 2.0 * (np.sum(vs, axis=1) % 2)
        return signs * scale * (quad / 2.0) ** half

    value, stderr, count = _mean_stderr_complex(
        lambda rng, size: values(rng, size).real,
        lambda rng, size: values(rng, size).imag,
        n_samples, seed,
    )
    norm = np.linalg.norm(sigma, 2)
    envelope = scale * (norm * float(np.sum(n.astype(float) ** 2)) / 8.0) ** half
    bound = hoeffding_epsilon(count, confidence) * envelope
    return EstimateWithBound(value=value, stderr=stderr, n_samples=count,
                             analytic_bound=bound, confidence=confidence)


def kan_loop_hafnian_estimate(sigma, mu, n_samples, seed,
                              confidence=DEFAULT_CONFIDENCE, exhaustive=False):
    """Loop hafnian (pair weights off-diagonal of ``sigma``, loop weights ``mu``).

    Kan's nonzero-mean formula:
    ``lhaf = sum_v (-1)^{sum v} sum_{r=0}^{[n/2]}
    (h^T S h / 2)^r (h . mu)^{n-2r} / (r! (n-2r)!)`` with ``h = 1/2 - v``.
    The sampled variant draws ``(v, r)`` uniformly and multiplies by the
    sample-space size ``2^n ([n/2] + 1)``; the analytic bound is the written
    envelope ``[n/2] n^{n/2} ||S||^r ||mu||^{n-2r} / (2^r r! (n-2r)!)``
    maximized over ``r``.  The expectation does not depend on the diagonal of
    ``sigma``.
    """
    sigma = _symmetrize_check(sigma)
    mu = np.asarray(mu, dtype=complex)
    n = sigma.shape[0]
    if mu.shape != (n,):
        raise ValueError("mu must match the matrix size")
    if n == 0:
        return EstimateWithBound(value=1.0 + 0.0j, stderr=0.0, n_samples=1,
                                 analytic_bound=0.0, confidence=1.0)
    r_count = n // 2 + 1
    r_fact = np.array([math.factorial(r) for r in range(r_count)])
    tail_fact = np.array([math.factorial(n - 2 * r) for r in range(r_count)])

    def summand(v, r_idx):
        h = 0.5 - v
        quad = np.einsum("si,ij,sj->s", h, sigma, h)
        dots = h @ mu
        signs = 1.0 - 2.0 * (np.sum(v, axis=1) % 2)
        return (signs * (quad / 2.0) ** r_idx * dots ** (n - 2 * r_idx)
                / (r_fact[r_idx] * tail_fact[r_idx]))

    if exhaustive:
        v = _bit_vectors(n).astype(float)
        total = 0.0 + 0.0j
        for r_idx in range(r_count):
            total += np.sum(summand(v, np.full(v.shape[0], r_idx)))
        return EstimateWithBound(value=complex(total), stderr=0.0,
                                 n_samples=v.shape[0] * r_count,
                                 analytic_bound=0.0, confidence=1.0)

    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    space = 2.0 ** n * r_count

    def values(rng, size):
        v = rng.integers(0, 2, (size, n)).astype(float)
        r_idx = rng.integers(0, r_count, size)
        return space * summand(v, r_idx)

    value, stderr, count = _mean_stderr_complex(
        lambda rng, size: values(rng, size).real,
        lambda rng, size: values(rng, size).imag,
        n_samples, seed,
    )
    norm_s = np.linalg.norm(sigma, 2)
    norm_mu = np.linalg.norm(mu)
    envelope = 0.0
    for r_idx in range(r_count):
        envelope = max(
            envelope,
            (n // 2) * n ** (n / 2.0) * norm_s ** r_idx * norm_mu ** (n - 2 * r_idx)
            / (2.0 ** r_idx * r_fact[r_idx] * tail_fact[r_idx]),
        )
    bound = hoeffding_epsilon(count, confidence) * envelope
    return EstimateWithBound(value=value, stderr=stderr, n_samples=count,
                             analytic_bound=bound, confidence=confidence)


def repeated_sigma(system, n):
    """Expanded coupling matrix and loop-weight vector for input counts ``n``.

    Row/column ``i`` of each M x M block is repeated ``n_i`` times (covariance
    entries fill the off-diagonal of repeated groups); the diagonal of the
    expanded matrix is then replaced by the repeated ``zeta``.  Returns
    ``(matrix with zeta diagonal, expanded sigma, expanded zeta)``.
    """
    n = np.asarray(n, dtype=int)
    counts = np.concatenate([n, n])
    big_sigma = repeat_rows_cols(system.sigma, counts)
    big_zeta = np.repeat(system.zeta, counts)
    with_diag = big_sigma.copy()
    np.fill_diagonal(with_diag, big_zeta)
    return with_diag, big_sigma, big_zeta


def fourier_fock_squeezed(circuit, weights, grid, k, n, n_samples, seed,
                          confidence=DEFAULT_CONFIDENCE, exhaustive=False):
    """Fourier component for a displaced squeezed Fock input state.

    Builds the phase-conjugated transform, Bloch-Messiah-decomposes it, forms
    the sigma system, and estimates ``lhaf(expanded) / (n! Z)`` with the Kan
    loop-hafnian estimator (plain hafnian estimator when displacement
    vanishes).  ``n = 0`` returns exactly ``1/Z``, the Gaussian-case value.
    """
    weights = check_weights(weights, circuit.modes)
    n = np.asarray(n, dtype=int)
    if n.shape != (circuit.modes,) or np.any(n < 0):
        raise ValueError("n must be a nonnegative vector, one entry per mode")
    k = int(k)
    if not 0 <= k <= grid.omega_max:
        raise ValueError(f"k must lie in [0, {grid.omega_max}]")

    transform = gaussian.conjugated_phase_shift(
        circuit, -k * grid.theta * weights.astype(float))
    system = build_sigma_system(gaussian.bloch_messiah(transform))
    z = system.z_norm
    if int(n.sum()) == 0:
        return EstimateWithBound(value=complex(1.0 / z), stderr=0.0, n_samples=1,
                                 analytic_bound=0.0, confidence=1.0)

    n_fact = float(np.prod([math.factorial(int(x)) for x in n]))
    denom = n_fact * z
    _, big_sigma, big_zeta = repeated_sigma(system, n)

    if np.abs(system.zeta).max() < 1e-14:
        est = kan_hafnian_repeated(system.sigma, np.concatenate([n, n]),
                                   mode="full_enum" if exhaustive else "sampled",
                                   n_samples=n_samples, seed=seed,
                                   confidence=confidence)
    else:
        est = kan_loop_hafnian_estimate(big_sigma, big_zeta, n_samples, seed,
                                        confidence=confidence, exhaustive=exhaustive)
    return EstimateWithBound(value=complex(est.value / denom),
                             stderr=est.stderr / abs(denom),
                             n_samples=est.n_samples,
                             analytic_bound=est.analytic_bound / abs(denom),
                             confidence=est.confidence)
