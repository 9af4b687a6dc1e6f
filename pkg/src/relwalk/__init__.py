"""Spectral toolkit for reversible random walks on finite partitioned spaces."""

from .errors import (
    AsymmetricGeneratorSet,
    AsymmetricSupport,
    BaseMeasureMismatch,
    ConsistencyError,
    CycleInconsistency,
    DegenerateSet,
    DegenerateSpectrum,
    DegenerateTriangle,
    DetailedBalanceViolation,
    DimensionMismatch,
    DisconnectedLink,
    DuplicateTriangle,
    EigenFailure,
    EmptyClass,
    EmptyLink,
    EmptySet,
    IsolatedPoint,
    IsolatedVertex,
    MassSumMismatch,
    MissingEdgeBlock,
    NoGap,
    NonPositiveMass,
    NotEquivalent,
    NotUnitary,
    NumericalError,
    ParseError,
    ProbSumError,
    RelwalkError,
    RowSumError,
    SupportViolation,
    ValidationError,
    ZeroField,
)
from .relation import (
    FiniteRelation,
    Graphing,
    GraphingReport,
    build_graphing,
    build_relation,
    cocycle,
    validate_graphing,
)
from .walks import (
    RandomWalk,
    cayley_action_walk,
    convolve,
    custom_walk,
    detailed_balance_violation,
    power,
    regular_walk,
    support_components,
    with_declared_eta,
)
from .spectral import (
    C2Report,
    DiffusionOperator,
    DirichletReport,
    Field,
    PoincareReport,
    Representation,
    SpectrumReport,
    c2_criterion,
    diffusion,
    dirichlet_report,
    eigensystem,
    energy,
    energy_n,
    fixed_space,
    gauge_representation,
    gradient_energy,
    make_field,
    poincare_report,
    project_fixed,
    random_gauge_representation,
    raw_representation,
    regular_representation,
    simple_diffusion,
    spectrum,
    trivial_representation,
    weighted_inner,
    weighted_norm_sq,
)
from .garland import (
    Complex2,
    DominationReport,
    LinkGraph,
    TriangleWalks,
    ZukReport,
    build_complex,
    delta_mu_bound,
    link,
    link_lambda1,
    step2_domination,
    triangle_walks,
    zuk_report,
)
from .ergodic import (
    AlmostFixedReport,
    ConcentrationReport,
    FolnerReport,
    SweepCandidate,
    almost_fixed_from_set,
    boundary,
    concentration_report,
    folner_search,
    search_scores,
    sweep_folner,
    threshold_sets,
)
__version__ = "0.1.0"


def __getattr__(name):
    # imported lazily so `python -m relwalk.cli` does not double-load the module
    if name in ("parse_document", "serialize"):
        from . import cli
        return getattr(cli, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
