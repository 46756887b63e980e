from .model import DistanceModel, downsample, fit_distance_model, fit_vectors, mean_error, reconstruction_error
from .categorize import (
    AgreementRow,
    DomainScore,
    GROUPS,
    categorize_domains,
    read_scores_csv,
    strategy_agreement,
    write_agreement_csv,
    write_scores_csv,
)

__all__ = [
    "DistanceModel",
    "downsample",
    "fit_distance_model",
    "fit_vectors",
    "mean_error",
    "reconstruction_error",
    "AgreementRow",
    "DomainScore",
    "GROUPS",
    "categorize_domains",
    "read_scores_csv",
    "strategy_agreement",
    "write_agreement_csv",
    "write_scores_csv",
]
