"""Monte Carlo simulation of a quasi-deterministic polarization analyzer model.

Photons are counted one at a time through analyzers that draw a stochastic
matrix Stokes orientation per photon and pick an eigenchannel from the sign of
``S1(0) P1(0)``. Two protocols are provided: in-sequence Malus counting and
coincidence counting of causally coupled photon pairs.
"""
from .analysis import (
    FitReport,
    binomial_sigma,
    chi_square_fit,
    closed_form_plus_probability,
    expected_gamma,
)
from .analyzer import (
    Analyzer,
    ArccosUniform,
    Channel,
    ChannelOutcome,
    Criterion,
    Gaussian,
    draw_p1,
    sample_arg,
    transit,
)
from .experiments import (
    AngleGrid,
    CoincidenceConfig,
    CountTable,
    MalusConfig,
    ResultRow,
    chsh_run,
    chsh_s,
    gamma,
    normalized_pp,
    reference_curves,
    run_coincidence,
    run_malus,
)
from .rng import RandomStream
from .sources import FixedBeta, PairSourceSpec, SingleSourceSpec, UniformBeta, emit_pair, emit_photon
from .stokes import (
    EigenPair,
    FieldState,
    HermitianAnalyzerMatrix,
    Kind,
    StokesP,
    StokesS,
    eigenstate_residuals,
    eigenvalues,
    field_to_stokes,
    matrix_to_stokes,
    rotate_stokes,
)

__version__ = "0.1.0"
