"""Data thinning: split observations into independent folds and use them for validation."""
from .rng import RandomStream, substream
from .thinning import (
    FAMILIES,
    Binomial,
    DomainError,
    Exponential,
    FoldSet,
    Gamma,
    Gaussian,
    Multinomial,
    MultivariateGaussian,
    NegativeBinomial,
    PlanError,
    Poisson,
    ThinPlan,
    UsageError,
    fold_complement,
    multithin,
    thin,
    thin_dataset,
)

__all__ = [
    "FAMILIES",
    "Binomial",
    "DomainError",
    "Exponential",
    "FoldSet",
    "Gamma",
    "Gaussian",
    "Multinomial",
    "MultivariateGaussian",
    "NegativeBinomial",
    "PlanError",
    "Poisson",
    "RandomStream",
    "ThinPlan",
    "UsageError",
    "fold_complement",
    "multithin",
    "substream",
    "thin",
    "thin_dataset",
]
