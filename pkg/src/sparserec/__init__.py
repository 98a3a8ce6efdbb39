"""Sparse signal recovery from nonadaptive random linear measurements."""

from sparserec.errors import (
    DegenerateFitError,
    FileFormatError,
    InfeasibleFactorizationError,
    InstanceTooLargeError,
    InvalidArgumentError,
    InvalidInputError,
    WavFormatError,
)
from sparserec.transforms import (
    CoefficientVector,
    PowerLawFit,
    Signal,
    dct_forward,
    dct_inverse,
    dct_matrix,
    fit_power_law,
    hard_threshold,
    sorted_magnitudes,
)
from sparserec.sensing import (
    CoherenceResult,
    MeasurementVector,
    RipEstimate,
    SensingMatrix,
    estimate_rip,
    exact_rip,
    generate_matrix,
    load_matrix,
    measure,
    measurement_bound,
    mutual_coherence,
    save_matrix,
)
from sparserec.solvers import (
    RecoveryProblem,
    RecoveryResult,
    SolverConfig,
    basis_pursuit,
    l0_oracle,
    omp,
    reweighted_l1,
)
from sparserec.experiment import (
    ExperimentConfig,
    SweepReport,
    SweepRow,
    load_wav_segment,
    make_signal,
    run_recovery,
    sweep,
    synth_compressible,
    synth_sparse,
    transform_coding_mse,
)

__version__ = "0.1.0"
