"""Small simplices among point sets: volumes, lifting, recursive search, exponent bounds."""

from .errors import (
    BudgetExceededError,
    CertificateError,
    DegenerateBasisError,
    DegenerateError,
    HeilbronnError,
    PreconditionError,
)
from .exponents import (
    ExponentBound,
    base_bound,
    best_split,
    check_log_bound,
    dp_table,
    induction_step_check,
)
from .finder import (
    EXHAUSTIVE,
    SimplexSelection,
    brute_force_min_determinant,
    brute_force_min_simplex,
    find_small_simplex,
    recursive_find,
)
from .geometry import (
    PointSet,
    gram_matrix,
    perturb,
    project_complement,
    random_rotation,
    read_pointset,
    simplex_volume,
    vol_k,
    write_pointset,
)
from .harness import ExperimentConfig, ExperimentRecord, fit_exponent, generate, run_experiment
from .lifting import central_project, lift_to_sphere

__version__ = "0.1.0"
