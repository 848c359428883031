"""Metamorphosis strategies: equivalent-but-more-complex rewrites."""

from .record import MutationRecord
from .logic import LogicMutationConfig, demorganize, inject_redundant, mutate_logic
from .datapath import (
    DatapathMutationConfig, OpaquePredicate, MuxSite,
    cascade_mux, find_mux_sites, gen_opaque_predicate, mutate_datapath,
    wrap_in_dead_branch,
)
from .fsm import FsmModel, FsmMutationConfig, StateNode, chain_transition, \
    detect_fsm, lower, mutate_fsm, split_state, to_dot
from .clock import ClockDomain, ClockMutationConfig, SyncSite, \
    convolute_synchronizer, find_sync_sites, mutate_clock, split_domain

STRATEGIES = ("logic", "datapath", "fsm", "clock")


def mutate(module, strategy, seed=0, **kwargs):
    """Apply one named strategy with its default configuration."""
    if strategy == "logic":
        return mutate_logic(module, LogicMutationConfig(seed=seed, **kwargs))
    if strategy == "datapath":
        return mutate_datapath(module, DatapathMutationConfig(seed=seed, **kwargs))
    if strategy == "fsm":
        return mutate_fsm(module, FsmMutationConfig(seed=seed, **kwargs))
    if strategy == "clock":
        return mutate_clock(module, ClockMutationConfig(seed=seed, **kwargs))
    raise ValueError(f"unknown strategy: {strategy}")
