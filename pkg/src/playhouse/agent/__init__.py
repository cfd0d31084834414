"""Hierarchical multimodal agent: configuration, model, action heads."""

from .config import ABLATIONS, AgentConfig
from .heads import (COMPONENT_INDEX, MOVEMENT_COMPONENTS, Component,
                    action_to_values, batch_component_targets,
                    movement_components, uniform_movement_nats,
                    values_to_action)
from .model import AgentModel, RecurrentState
from .policy import AgentPolicy

__all__ = [
    "ABLATIONS", "AgentConfig", "AgentModel", "AgentPolicy", "Component",
    "COMPONENT_INDEX", "MOVEMENT_COMPONENTS", "RecurrentState",
    "action_to_values", "batch_component_targets", "movement_components",
    "uniform_movement_nats", "values_to_action",
]
