from compbcp.models.conditional import (
    PairResample,
    conditional_pair_sample,
    resample_coordinate,
    resample_pair,
    resample_single,
)
from compbcp.models.covariates import (
    CovariateModel,
    DataSet,
    McmcConfig,
    apply_transform,
    check_model_rows,
    check_rows,
    make_dataset,
    model_from_dict,
    sample_rows,
    toeplitz_covariance,
)
from compbcp.models.fitting import fit_dirichlet

__all__ = [
    "CovariateModel",
    "DataSet",
    "McmcConfig",
    "PairResample",
    "apply_transform",
    "check_model_rows",
    "check_rows",
    "conditional_pair_sample",
    "fit_dirichlet",
    "make_dataset",
    "model_from_dict",
    "resample_coordinate",
    "resample_pair",
    "resample_single",
    "sample_rows",
    "toeplitz_covariance",
]
