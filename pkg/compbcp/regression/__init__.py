from compbcp.regression.lasso import LassoFit, cv_lasso, fold_assignment, lambda_grid, lasso_fit, lasso_objective
from compbcp.regression.statistics import r2_statistic, r2_statistic_batch

__all__ = [
    "LassoFit",
    "cv_lasso",
    "fold_assignment",
    "lambda_grid",
    "lasso_fit",
    "lasso_objective",
    "r2_statistic",
    "r2_statistic_batch",
]
