"""Random evidence workloads for measuring incremental evaluation."""
from __future__ import annotations

import random

from .circuit import QDag
from .evaluator import ValueState


def random_operations(dag: QDag, n_ops: int, seed: int, updates_only: bool = False,
                      mode: str = "paper") -> dict:
    """Apply ``n_ops`` seeded observe/retract operations and tally the work.

    With ``updates_only`` every operation observes a currently unknown
    variable, so ESNs only ever flip from 1 to 0; once every variable is
    observed the state is re-initialized (not counted as an operation).
    Returns plain counters; ``visits`` holds nodes visited per operation.
    """
    rng = random.Random(seed)
    state = ValueState(dag, mode=mode)
    domains = state.domains
    names = sorted(domains)
    if not names:
        raise ValueError("dag has no evidence-specific nodes to exercise")
    visits = []
    recomputes = 0
    resets = 0
    for _ in range(n_ops):
        before = state.counters.mul_recomputes
        if updates_only:
            unknown = [v for v, s in state.evidence.items() if s is None]
            if not unknown:
                state.reset()
                resets += 1
                unknown = names
            var = rng.choice(sorted(unknown))
            visits.append(state.observe(var, rng.choice(domains[var])))
        elif rng.random() < 0.6:
            var = rng.choice(names)
            visits.append(state.observe(var, rng.choice(domains[var])))
        else:
            visits.append(state.retract(rng.choice(names)))
        recomputes += state.counters.mul_recomputes - before
    drift = state.recompute_all()
    return {
        "mode": mode,
        "ops": n_ops,
        "nodes": dag.num_nodes,
        "edges": dag.num_edges,
        "nodes_visited_total": sum(visits),
        "nodes_visited_mean": sum(visits) / n_ops if n_ops else 0.0,
        "nodes_visited_max": max(visits, default=0),
        "mul_recomputes": recomputes,
        "resets": resets,
        "max_drift": drift,
        "visits": visits,
    }
