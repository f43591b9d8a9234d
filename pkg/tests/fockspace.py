"""Truncated Fock-space simulator used as an independent oracle in tests.

Operators are dense matrices on a photon-number-truncated Hilbert space;
unitaries come from scipy.linalg.expm.  Truncation error is controlled by the
cutoff, which each test chooses with margin.  Conventions match the package:
a passive circuit with matrix U sends |x> -> |Ux> (so W^dag a W = U a), and
S(r) sends a -> a cosh r + a^dag sinh r.
"""

import itertools

import numpy as np
import scipy.linalg


def destroy(cutoff):
    return np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(complex)


def single_mode_ops(cutoff, modes):
    """Annihilation operators for each mode on the tensor-product space."""
    a = destroy(cutoff)
    eye = np.eye(cutoff, dtype=complex)
    ops = []
    for i in range(modes):
        factors = [a if j == i else eye for j in range(modes)]
        op = factors[0]
        for f in factors[1:]:
            op = np.kron(op, f)
        ops.append(op)
    return ops


def vacuum(cutoff, modes):
    v = np.zeros(cutoff ** modes, dtype=complex)
    v[0] = 1.0
    return v


def fock(cutoff, occupations):
    """Basis vector |n_1, ..., n_M>."""
    modes = len(occupations)
    idx = 0
    for n in occupations:
        if n >= cutoff:
            raise ValueError("occupation above cutoff")
        idx = idx * cutoff + n
    v = np.zeros(cutoff ** modes, dtype=complex)
    v[idx] = 1.0
    return v


def basis_occupations(cutoff, modes):
    return list(itertools.product(range(cutoff), repeat=modes))


def displacement_op(alpha, ops):
    gen = sum(a_i * ac - np.conj(a_i) * a for a_i, a in zip(alpha, ops)
              for ac in [a.conj().T])
    return scipy.linalg.expm(gen)


def squeeze_op(r, ops):
    gen = 0
    for r_i, a in zip(r, ops):
        ad = a.conj().T
        gen = gen + 0.5 * r_i * (ad @ ad - a @ a)
    return scipy.linalg.expm(gen)


def passive_op(u, ops):
    """Fock-space unitary with W^dag a W = u a."""
    k = scipy.linalg.logm(np.asarray(u, dtype=complex))
    gen = 0
    for i, ai in enumerate(ops):
        for j, aj in enumerate(ops):
            gen = gen + k[i, j] * (ai.conj().T @ aj)
    return scipy.linalg.expm(gen)


def number_phase_op(phases, ops):
    """exp(i sum_j phases_j n_j)."""
    gen = 0
    for phi, a in zip(phases, ops):
        gen = gen + 1j * phi * (a.conj().T @ a)
    return scipy.linalg.expm(gen)


def prepare_circuit_state(circuit, cutoff):
    """State U D(alpha) S(r0) |0> on the truncated space."""
    modes = circuit.modes
    ops = single_mode_ops(cutoff, modes)
    state = vacuum(cutoff, modes)
    state = squeeze_op(circuit.squeezing, ops) @ state
    state = displacement_op(circuit.displacement, ops) @ state
    state = passive_op(circuit.unitary, ops) @ state
    return state, ops
