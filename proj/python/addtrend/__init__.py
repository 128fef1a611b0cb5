"""Additive trend filtering: piecewise polynomial additive models fit by
cyclic or parallel backfitting, with falling-factorial extrapolation,
degrees-of-freedom estimation, and KKT certification."""

try:
    from ._addtrend import (  # noqa: F401
        AddtrendError,
        AdditiveModel,
        PredictiveModel,
        certify,
        check_ptilde_rank,
        cv_single_lambda,
        default_lambda_grid,
        fit_additive,
        fit_additive_splines,
        gen_scenario,
        lambda_max,
        read_model,
        tf_admm,
        tf_dp_k0,
        write_model,
    )
except ImportError:  # extension built out of tree (e.g. straight from CMake)
    from _addtrend import (  # noqa: F401
        AddtrendError,
        AdditiveModel,
        PredictiveModel,
        certify,
        check_ptilde_rank,
        cv_single_lambda,
        default_lambda_grid,
        fit_additive,
        fit_additive_splines,
        gen_scenario,
        lambda_max,
        read_model,
        tf_admm,
        tf_dp_k0,
        write_model,
    )

__all__ = [
    "AddtrendError",
    "AdditiveModel",
    "PredictiveModel",
    "certify",
    "check_ptilde_rank",
    "cv_single_lambda",
    "default_lambda_grid",
    "fit_additive",
    "fit_additive_splines",
    "gen_scenario",
    "lambda_max",
    "read_model",
    "tf_admm",
    "tf_dp_k0",
    "write_model",
]
