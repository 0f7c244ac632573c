"""Per-agent observation bundle: local FOV, static graph and intent graph."""

from __future__ import annotations

from dataclasses import dataclass

from mapfkit.env import EnvState
from mapfkit.intent import DEFAULT_HORIZON, IntentGraphObs, build_intent_graph
from mapfkit.local_obs import DEFAULT_FOV, LocalObs, local_observation
from mapfkit.static_features import StaticGraphObs, build_static_graph


@dataclass(frozen=True)
class ObservationBundle:
    ego_id: int
    step: int
    local: LocalObs
    static_graph: StaticGraphObs
    intent_graph: IntentGraphObs

    def to_json(self) -> dict:
        return {
            "ego_id": self.ego_id,
            "step": self.step,
            "local": self.local.to_json(),
            "static": self.static_graph.to_json(),
            "intent": self.intent_graph.to_json(),
        }


def observe(state: EnvState, map_nodes, ego_id: int, f: int = DEFAULT_HORIZON, fov: int = DEFAULT_FOV,
            intent: IntentGraphObs | None = None) -> ObservationBundle:
    """Observation of agent ``ego_id`` at the current step.

    ``map_nodes`` comes from the map's skeleton graph, extracted once per map.
    The intent graph is shared by all agents at a step, so callers observing
    every agent can pass it in.
    """
    if not 0 <= ego_id < state.n_agents:
        raise IndexError(f"no agent {ego_id}")
    if intent is None:
        intent = build_intent_graph(state.grid, state.positions, state.goals, f)
    return ObservationBundle(
        ego_id,
        state.step,
        local_observation(state.grid, state.positions, state.goals, ego_id, fov),
        build_static_graph(state.grid, map_nodes, state.positions[ego_id], state.goals[ego_id]),
        intent,
    )


def observe_all(state: EnvState, map_nodes, f: int = DEFAULT_HORIZON, fov: int = DEFAULT_FOV) -> list[ObservationBundle]:
    intent = build_intent_graph(state.grid, state.positions, state.goals, f)
    return [observe(state, map_nodes, i, f, fov, intent) for i in range(state.n_agents)]
