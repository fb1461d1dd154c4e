"""Collaborative edge caching simulator with learned user preferences."""

from ._edgecache import (
    CostParams,
    ExperimentConfig,
    TopologyConfig,
    aggregate_rho,
    average_cost_het,
    average_cost_hom,
    build_schedule,
    compare_static_dynamic,
    het_access_probs,
    hom_access_probs,
    make_dataset,
    run_experiment,
    slot_joints,
    zipf_pmf,
)


def config(**overrides):
    """ExperimentConfig with the given keys set, e.g. config(num_bs=2, schemes="bs-first")."""
    cfg = ExperimentConfig()
    for key, value in overrides.items():
        cfg.set(key, str(value))
    cfg.validate()
    return cfg


__all__ = [
    "CostParams",
    "ExperimentConfig",
    "TopologyConfig",
    "aggregate_rho",
    "average_cost_het",
    "average_cost_hom",
    "build_schedule",
    "compare_static_dynamic",
    "config",
    "het_access_probs",
    "hom_access_probs",
    "make_dataset",
    "run_experiment",
    "slot_joints",
    "zipf_pmf",
]
