from .core import (
    ContingencyTable,
    InsufficientDataError,
    ParetoEntry,
    ParetoTable,
    TestResult,
    average_ranks,
    chi_squared_independence,
    descriptive,
    kruskal_wallis,
    one_way_anova,
    pareto,
    pearson,
    spearman,
)
from .special import (
    chi2_sf,
    f_sf,
    log_gamma,
    reg_incomplete_beta,
    reg_lower_gamma,
    reg_upper_gamma,
    student_t_two_sided,
)

__all__ = [
    "ContingencyTable",
    "InsufficientDataError",
    "ParetoEntry",
    "ParetoTable",
    "TestResult",
    "average_ranks",
    "chi_squared_independence",
    "descriptive",
    "kruskal_wallis",
    "one_way_anova",
    "pareto",
    "pearson",
    "spearman",
    "chi2_sf",
    "f_sf",
    "log_gamma",
    "reg_incomplete_beta",
    "reg_lower_gamma",
    "reg_upper_gamma",
    "student_t_two_sided",
]
