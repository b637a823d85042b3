"""Divergence-point auditing of multi-agent reasoning slates."""

from ._core import (
    AgentOutput,
    AgentSlate,
    AggregationResult,
    BackendError,
    ConfigError,
    IoError,
    OracleParams,
    PolicyConfig,
    TreeConfig,
    acpo_grad,
    acpo_loss,
    answers_equal,
    audit,
    classify_regime,
    estimate_var_mean,
    load_slates,
    majority_vote,
    mine_traps,
    mv_vs_auditor,
    normalize_answer,
    theoretical_var_mean,
    tree_json,
)

__all__ = [
    "AgentOutput",
    "AgentSlate",
    "AggregationResult",
    "BackendError",
    "ConfigError",
    "IoError",
    "OracleParams",
    "PolicyConfig",
    "TreeConfig",
    "acpo_grad",
    "acpo_loss",
    "answers_equal",
    "audit",
    "classify_regime",
    "estimate_var_mean",
    "load_slates",
    "majority_vote",
    "mine_traps",
    "mv_vs_auditor",
    "normalize_answer",
    "theoretical_var_mean",
    "tree_json",
]
