"""Numerical laboratory for the Chalker-Coddington network model on a cylinder.

Layers: ``model`` (scattering blocks, disorder, finite unitary), ``transfer``
(2x2 blocks, layer matrices, cocycle, reconstruction), ``lyapunov``
(QR-stabilized spectrum estimates and exact laws), ``spectral``
(eigendecompositions, density of states, determinant identity, bands,
decay fits), ``cli``/``records`` (harness and persistence).
"""

__version__ = "0.1.0"

from .model import (
    FiniteOperator,
    ModelParams,
    NodePhaseField,
    PhaseField,
    SiteIndex,
    apply_operator,
    build_cylinder_operator,
    build_full_cylinder_operator,
    extreme_block_check,
    reduce_phases,
    sample_node_phases,
    sample_phase_field,
    scattering_matrix,
)
from .transfer import (
    LayerPhases,
    Propagator,
    TransferBlock,
    TransferMatrix,
    cocycle_step,
    form_signature,
    layer_matrices,
    phase_slotting,
    propagate,
    reconstruct_and_verify,
    reconstruct_columns,
    t_eo,
    t_oe,
)
from .lyapunov import (
    CocycleRunConfig,
    LocalizationLength,
    LyapunovResult,
    ZIndependenceReport,
    exponent_lower_bounds,
    localization_length,
    lyapunov_spectrum,
    thouless_rhs,
    xi_upper_bound,
    z_independence_check,
)
from .spectral import (
    BandStructure,
    DecayFit,
    DetIdentityCheck,
    DOSHistogram,
    ParityOperators,
    SpectrumResult,
    band_grid,
    band_structure,
    band_symbol,
    build_parity_operators,
    determinant_identity_residual,
    dos_moments,
    eigendecompose,
    eigenvector_decay_fit,
    krylov_rank,
    ks_statistic,
)
from .records import CSV_HEADER, ResultRecord, canonical_row, emit, read_records
