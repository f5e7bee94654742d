"""Inexact proximal gradient lab.

Chain-structured hard-instance construction, a dual restarted-APG solver,
stationarity auditors, and span-oracle support tracking. The heavy lifting
lives in the compiled extension; this package re-exports its surface.
"""

from ipglab._core import (
    ChainOperator,
    Instance,
    InstanceParams,
    SolveResult,
    audit_ap,
    audit_p_relaxed,
    audit_sp,
    beta_lower_bound,
    block_average_lower_bound,
    build_instance,
    default_beta,
    full_chain_gram_eigs,
    lower_bound_episode,
    near_stationary_recovery,
    phi,
    phi_prime,
    project_linf_ball,
    prox_pairwise_l1,
    prox_weighted_l1,
    psi,
    psi_prime,
    run_ipg_tracked,
    run_verify,
    solve,
    stacked_condition_number,
    subdiff_distance_weighted_l1,
    support_of,
    varphi,
)

__all__ = [
    "ChainOperator",
    "Instance",
    "InstanceParams",
    "SolveResult",
    "audit_ap",
    "audit_p_relaxed",
    "audit_sp",
    "beta_lower_bound",
    "block_average_lower_bound",
    "build_instance",
    "default_beta",
    "full_chain_gram_eigs",
    "lower_bound_episode",
    "near_stationary_recovery",
    "phi",
    "phi_prime",
    "project_linf_ball",
    "prox_pairwise_l1",
    "prox_weighted_l1",
    "psi",
    "psi_prime",
    "run_ipg_tracked",
    "run_verify",
    "solve",
    "stacked_condition_number",
    "subdiff_distance_weighted_l1",
    "support_of",
    "varphi",
]
