"""Cover-Hart loss kernels, kernel scores and risk-bound verification."""
from .distributions import (
    Distribution,
    Empirical,
    FinitePMF,
    GaussianR,
    GaussianRd,
    MixtureGaussR,
    SphereUniform,
    TwoPoint,
    point_mass,
    random_distribution,
    sample,
)
from .exceptions import (
    ConfigError,
    CoverHartError,
    InvalidParameter,
    OptimizerDiverged,
    SpaceMismatch,
    TooManyPoints,
    UncertifiedKernel,
)
from .kernels import (
    ConeCombination,
    Geodesic,
    KernelSpec,
    LossKernel,
    LpPower,
    Misclassification,
    PowerDistance,
    cone_combine,
    evaluate,
    geodesic,
    lp_power,
    make_kernel,
    misclassification,
    power_distance,
)
from .membership import (
    MetricCertificate,
    NegDefCertificate,
    check_metric,
    check_negdef,
    lattice_points,
    sample_points,
)
from .nn import (
    GaussianRegression,
    NNReport,
    NoisyLabel,
    OneNearestNeighbor,
    SyntheticTask,
    run_nn_experiment,
)
from .risk import (
    BayesAct,
    CoverHartReport,
    OptimizerConfig,
    RiskEstimate,
    cover_hart_report,
    estimate_alpha,
    estimate_beta,
)
from .scoring import (
    ScoreReport,
    ScoringRule,
    brier_rule,
    check_propriety,
    chp_report,
    crps_rule,
    divergence,
    kernel_score,
)
from .spaces import INF, DiscreteLabels, RealLine, RealVector, SampleSpace, Sphere

__version__ = "0.1.0"
