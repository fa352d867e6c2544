"""Exact L1 complexity of depth-bounded tree ensembles.

The compiled core exposes the complexity measures (including anchored
Hardy-Krause variation and the disjoint-split variant), the constrained and
penalized lattice least-squares estimators, the greedy booster baseline, the
minimax packing family, and the Monte Carlo rate harness.
"""

from ._core import (  # noqa: F401
    BasisAtom,
    BudgetError,
    Dataset,
    InfeasibleError,
    PackingFamily,
    ParseError,
    SparseEnsemble,
    assouad_bound,
    complexity_report,
    constrained_lse,
    dual_alpha,
    family_checks,
    flip_axis,
    greedy_boost,
    haar_h,
    hk_variation,
    infimal_conv_hk,
    load_dataset,
    lp_replication_penalty,
    objective_value,
    parse_xgb_dump,
    penalized_lse,
    psi,
    psi_primitive,
    run_rate_experiment,
    snap_to_midpoints,
    total_variation_1d,
    v_tilde,
    vxgb_1d,
    vxgb_ensemble,
    vxgb_points,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
