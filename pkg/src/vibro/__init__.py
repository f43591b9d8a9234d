"""Classical computation of molecular vibronic spectra.

Grouped photon-count distributions of linear-optical circuits are recovered
through their Fourier components: exactly for Gaussian input states, by
randomized permanent/hafnian estimators for Fock-state inputs, with
brute-force enumeration oracles, accuracy budgets, and sparse peak recovery
for very large spectral grids.
"""

from .exceptions import (
    CutoffError,
    InconsistencyError,
    NumericError,
    RecoveryIncompleteError,
    SizeLimitError,
)
from .gaussian import (
    BlochMessiahForm,
    BogoliubovTransform,
    DoktorovSpec,
    GaussianCircuit,
    bloch_messiah,
    compose,
    conjugated_phase_shift,
    doktorov_to_circuit,
    inverse,
    require_unitary,
)
from .exact import (
    LowRankFactor,
    double_factorial,
    even_partitions,
    hafnian_exact,
    integer_partitions,
    loop_hafnian_exact,
    loop_hafnian_low_rank,
    loop_hafnian_table,
    low_rank_factor,
    permanent_exact,
    repeat_rows_cols,
    takagi,
)

__version__ = "0.1.0"
