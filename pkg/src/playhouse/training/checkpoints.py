"""Self-describing agent checkpoints: numcore checkpoint container plus a
versioned agent-config header."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

from ..agent.config import AgentConfig
from ..agent.model import AgentModel
from ..numcore.checkpoint import load_checkpoint, save_checkpoint

AGENT_HEADER_VERSION = 1


def save_agent(path, model: AgentModel, extra: dict | None = None) -> Path:
    header = {"agent_header_version": AGENT_HEADER_VERSION,
              "agent_config": asdict(model.config)}
    if extra:
        header.update(extra)
    path = Path(path)
    save_checkpoint(path, model.params.state_arrays(), header=header)
    return path


def load_agent(path) -> tuple[AgentModel, dict]:
    arrays, header = load_checkpoint(path)
    raw = dict(header["agent_config"])
    raw["conv_channels"] = tuple(raw["conv_channels"])
    raw["conv_strides"] = tuple(raw["conv_strides"])
    config = AgentConfig(**raw)
    model = AgentModel(config, seed=0)
    model.params.load_arrays(arrays, strict=True)
    return model, header
