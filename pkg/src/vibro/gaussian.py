"""Gaussian-unitary substrate: circuits, Bogoliubov transforms, Bloch-Messiah.

Conventions.  A passive circuit with matrix ``U`` maps coherent states as
``|x> -> |U x>`` and annihilation operators (Heisenberg picture) as
``W^dag a W = U a``; Fock amplitudes are ``<m|W|n> = Per(U_{m,n}) / sqrt(m! n!)``
with row ``i`` repeated ``m_i`` times and column ``j`` repeated ``n_j`` times.
A squeezer ``S(r)`` with ``r >= 0`` maps ``a -> a cosh r + a^dag sinh r``
(the x quadrature is stretched by ``e^r``).  A general Gaussian unitary is
stored by its Bogoliubov data ``(A, B, xi)``:
``W^dag a_i W = sum_j A_ij a_j + B_ij a_j^dag + xi_i``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import NumericError

UNITARY_TOL = 1e-10
SYMPLECTIC_TOL = 1e-8


def require_unitary(u, tol=UNITARY_TOL, name="unitary"):
    """Validate and return ``u`` as a complex square unitary matrix."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"{name} must be square, got shape {u.shape}")
    if not np.all(np.isfinite(u.view(float))):
        raise ValueError(f"{name} has non-finite entries")
    defect = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() if u.size else 0.0
    if defect > tol:
        raise ValueError(f"{name} fails the unitarity check: defect {defect:.3e} > {tol}")
    return u


def _as_complex_vector(v, m, name):
    v = np.asarray(v, dtype=complex)
    if v.shape != (m,):
        raise ValueError(f"{name} must have length {m}, got shape {v.shape}")
    if not np.all(np.isfinite(v.view(float))):
        raise ValueError(f"{name} has non-finite entries")
    return v


def _as_real_vector(v, m, name, nonnegative=False, positive=False):
    v = np.asarray(v, dtype=float)
    if v.shape != (m,):
        raise ValueError(f"{name} must have length {m}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    if positive and np.any(v <= 0):
        raise ValueError(f"{name} must be strictly positive")
    if nonnegative and np.any(v < 0):
        raise ValueError(f"{name} must be nonnegative")
    return v


@dataclass(frozen=True)
class GaussianCircuit:
    """Input-form Gaussian state preparation: ``U D(alpha) S(r0) |n>``.

    ``unitary`` acts last; ``alpha`` displaces in the input basis (before the
    unitary), so the prepared state's displacement vector is ``U @ alpha``.
    """

    unitary: np.ndarray
    squeezing: np.ndarray
    displacement: np.ndarray

    def __post_init__(self):
        u = require_unitary(self.unitary, name="circuit unitary")
        m = u.shape[0]
        r0 = _as_real_vector(self.squeezing, m, "squeezing", nonnegative=True)
        alpha = _as_complex_vector(self.displacement, m, "displacement")
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "squeezing", r0)
        object.__setattr__(self, "displacement", alpha)

    @property
    def modes(self):
        return self.unitary.shape[0]


@dataclass(frozen=True)
class DoktorovSpec:
    """Harmonic-mode change data: frequencies, mode rotation and displacement."""

    omega_initial: np.ndarray
    omega_final: np.ndarray
    rotation: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        u = require_unitary(self.rotation, name="rotation")
        m = u.shape[0]
        wi = _as_real_vector(self.omega_initial, m, "omega_initial", positive=True)
        wf = _as_real_vector(self.omega_final, m, "omega_final", positive=True)
        d = _as_real_vector(self.delta, m, "delta")
        object.__setattr__(self, "rotation", u)
        object.__setattr__(self, "omega_initial", wi)
        object.__setattr__(self, "omega_final", wf)
        object.__setattr__(self, "delta", d)

    @property
    def modes(self):
        return self.rotation.shape[0]


@dataclass(frozen=True)
class BogoliubovTransform:
    """Gaussian unitary in Bogoliubov form ``a -> A a + B a^dag + xi``."""

    a_block: np.ndarray
    b_block: np.ndarray
    displacement: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_block, dtype=complex)
        b = np.asarray(self.b_block, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != a.shape:
            raise ValueError("A and B must be equal square matrices")
        m = a.shape[0]
        xi = _as_complex_vector(self.displacement, m, "displacement")
        eye = np.eye(m)
        d1 = np.abs(a @ a.conj().T - b @ b.conj().T - eye).max() if m else 0.0
        d2 = np.abs(a @ b.T - b @ a.T).max() if m else 0.0
        if max(d1, d2) > SYMPLECTIC_TOL:
            raise NumericError(
                f"Bogoliubov blocks violate symplectic conditions: {d1:.3e}, {d2:.3e}"
            )
        object.__setattr__(self, "a_block", a)
        object.__setattr__(self, "b_block", b)
        object.__setattr__(self, "displacement", xi)

    @property
    def modes(self):
        return self.a_block.shape[0]


@dataclass(frozen=True)
class BlochMessiahForm:
    """Canonical form ``W = D(xi) U2 S(r) U1`` of a Gaussian unitary.

    ``r`` is nonnegative and sorted descending.  Recomposition reads
    ``A = U2 diag(cosh r) U1`` and ``B = U2 diag(sinh r) conj(U1)``.
    """

    u2: np.ndarray
    r: np.ndarray
    u1: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        u2 = require_unitary(self.u2, name="u2")
        m = u2.shape[0]
        u1 = require_unitary(self.u1, name="u1")
        if u1.shape != (m, m):
            raise ValueError("u1 and u2 must have equal sizes")
        r = _as_real_vector(self.r, m, "r", nonnegative=True)
        if np.any(np.diff(r) > 1e-12):
            raise ValueError("squeezing values must be sorted descending")
        xi = _as_complex_vector(self.xi, m, "xi")
        object.__setattr__(self, "u2", u2)
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "xi", xi)

    @property
    def modes(self):
        return self.u2.shape[0]

    def to_transform(self):
        """Recompose the Bogoliubov blocks of ``D(xi) U2 S(r) U1``."""
        a = self.u2 @ (np.cosh(self.r)[:, None] * self.u1)
        b = self.u2 @ (np.sinh(self.r)[:, None] * self.u1.conj())
        return BogoliubovTransform(a, b, self.xi)


def identity_transform(m):
    """The identity Gaussian unitary on ``m`` modes."""
    return BogoliubovTransform(np.eye(m, dtype=complex), np.zeros((m, m), dtype=complex),
                               np.zeros(m, dtype=complex))


def passive_transform(u):
    """Linear-optical circuit with matrix ``u``."""
    u = require_unitary(u)
    m = u.shape[0]
    return BogoliubovTransform(u, np.zeros((m, m), dtype=complex), np.zeros(m, dtype=complex))


def displacement_transform(alpha):
    """Displacement ``D(alpha)``: ``a -> a + alpha``."""
    alpha = np.asarray(alpha, dtype=complex)
    m = alpha.shape[0]
    return BogoliubovTransform(np.eye(m, dtype=complex), np.zeros((m, m), dtype=complex), alpha)


def squeezer_transform(r):
    """Per-mode squeezers ``S(r)``: ``a -> a cosh r + a^dag sinh r`` (real ``r``)."""
    r = np.asarray(r, dtype=float)
    return BogoliubovTransform(np.diag(np.cosh(r)).astype(complex),
                               np.diag(np.sinh(r)).astype(complex),
                               np.zeros(r.shape[0], dtype=complex))


def compose(t1, t2):
    """Bogoliubov data of the operator product ``W1 W2`` (``W2`` acts first)."""
    if t1.modes != t2.modes:
        raise ValueError(f"mode count mismatch: {t1.modes} vs {t2.modes}")
    a = t1.a_block @ t2.a_block + t1.b_block @ t2.b_block.conj()
    b = t1.a_block @ t2.b_block + t1.b_block @ t2.a_block.conj()
    xi = t1.displacement + t1.a_block @ t2.displacement + t1.b_block @ t2.displacement.conj()
    return BogoliubovTransform(a, b, xi)


def inverse(t):
    """Bogoliubov data of ``W^dag``."""
    a_inv = t.a_block.conj().T
    b_inv = -t.b_block.T
    xi_inv = -(a_inv @ t.displacement + b_inv @ t.displacement.conj())
    return BogoliubovTransform(a_inv, b_inv, xi_inv)


def bloch_messiah(t):
    """Decompose a Bogoliubov transform as ``D(xi) U2 S(r) U1``.

    Built on the SVD of the ``A`` block; the unitary phases are fixed from the
    ``B`` block, with degenerate singular-value groups resolved by a matrix
    square root of the corresponding block (deterministic for a given input).
    """
    a, b, xi = t.a_block, t.b_block, t.displacement
    m = t.modes
    if m == 0:
        z = np.zeros((0, 0), dtype=complex)
        return BlochMessiahForm(z, np.zeros(0), z, xi)

    p, s, qh = np.linalg.svd(a)
    # singular values of A are >= 1 up to rounding; snap the passive block to r = 0
    s = np.where(s < 1.0 + 1e-12, 1.0, s)
    r = np.arccosh(s)
    sinh_r = np.sinh(r)
    d = p.conj().T @ b @ qh.T  # target: diag(sinh r) up to phase freedom

    groups = []
    start = 0
    for i in range(1, m + 1):
        if i == m or abs(s[i] - s[start]) > 1e-8 * max(1.0, s[start]):
            groups.append(list(range(start, i)))
            start = i
    lam = np.zeros((m, m), dtype=complex)
    for grp in groups:
        sl = np.ix_(grp, grp)
        if sinh_r[grp[0]] <= 1e-12:
            lam[sl] = np.eye(len(grp))
            continue
        w = d[sl] / sinh_r[grp[0]]
        if len(grp) == 1:
            lam[sl] = np.sqrt(w)
        else:
            lam[sl] = scipy.linalg.sqrtm(w)

    u2 = p @ lam
    u1 = lam.conj().T @ qh
    form = BlochMessiahForm(u2=u2, r=r, u1=u1, xi=xi)
    recomposed = form.to_transform()
    err = max(np.abs(recomposed.a_block - a).max(), np.abs(recomposed.b_block - b).max())
    if err > SYMPLECTIC_TOL:
        raise NumericError(f"Bloch-Messiah recomposition residual {err:.3e}")
    return form


def circuit_transform(circuit):
    """Bogoliubov data of the preparation operator ``U D(alpha) S(r0)``."""
    return compose(passive_transform(circuit.unitary),
                   compose(displacement_transform(circuit.displacement),
                           squeezer_transform(circuit.squeezing)))


def conjugated_phase_shift(circuit, phases):
    """The transform ``S(r0)^dag D(alpha)^dag U^dag P(phases) U D(alpha) S(r0)``.

    ``P(phases)`` is the product of per-mode phase shifters with coherent-state
    matrix ``diag(e^{i phases})``.  With ``phases = -k theta omega`` the Fock
    expectation ``<n|W|n>`` of the result is the k-th Fourier component of the
    weighted photon-count distribution.
    """
    phases = _as_real_vector(phases, circuit.modes, "phases")
    prep = circuit_transform(circuit)
    phase = passive_transform(np.diag(np.exp(1j * phases)))
    return compose(inverse(prep), compose(phase, prep))


def doktorov_to_circuit(spec):
    """Input-form circuit preparing ``U_Dok |0>`` for a harmonic mode change.

    Composes ``D(delta / sqrt(2)) Sdag(ln sqrt(omega_f)) U_R S(ln sqrt(omega_i))``
    as a Bogoliubov transform, Bloch-Messiah-decomposes it, and drops the
    trailing passive factor, which fixes the vacuum.  The spectroscopic
    displacement enters as ``delta / sqrt(2)`` here and nowhere else.
    """
    r_i = 0.5 * np.log(spec.omega_initial)
    r_f = 0.5 * np.log(spec.omega_final)
    w = compose(displacement_transform(spec.delta.astype(complex) / np.sqrt(2.0)),
                compose(squeezer_transform(-r_f),
                        compose(passive_transform(spec.rotation),
                                squeezer_transform(r_i))))
    form = bloch_messiah(w)
    alpha = form.u2.conj().T @ form.xi
    return GaussianCircuit(unitary=form.u2, squeezing=form.r, displacement=alpha)
