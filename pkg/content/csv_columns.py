# content/csv_columns.py
"""
Column schemas of the CSV files the CLI writes
"""

STATS_COLUMNS = {
    "alpha1": "particle level a1 (P = P0 tau^a1)",
    "alpha2": "time level a2 (N = N0 tau^a2)",
    "P": "particles",
    "N": "time steps",
    "M1": "outer samples (law realizations)",
    "M2": "inner samples per law",
    "seed": "master seed of the run the row was sampled with",
    "mean": "sample mean of the (mixed) difference",
    "V1": "sample variance of the inner means",
    "V2": "mean of the inner sample variances",
    "std_error": "sqrt(V1/M1 + V2/(M1 M2))",
    "model_cost": "M1 N P^2 + M1 M2 N P",
    "wall_time": "seconds; empty unless --record-timing",
    "flags": "'|'-joined diagnostics (single_outer, single_inner, negative_variance_clamped)",
}

RATIO_COLUMNS = {
    "alpha1": "particle level a1",
    "alpha2": "time level a2",
    "quantity": "'level' for G_a or 'difference' for the mixed difference",
    "ratio": "estimator variance with control over plain estimator variance",
    "var_is": "estimator variance with the control",
    "var_mc": "estimator variance without control",
    "mean_is": "sample mean with the control",
    "mean_mc": "sample mean without control",
    "degenerate": "1 when the plain variance is zero",
}
