"""Agent hyperparameters and ablation switches."""

from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class AgentConfig:
    # perception
    raster_height: int = 36
    raster_width: int = 48
    conv_channels: tuple[int, ...] = (8, 16, 24, 32)
    conv_strides: tuple[int, ...] = (1, 1, 2, 2)
    d_model: int = 64
    mmt_layers: int = 2
    mmt_heads: int = 4
    # language
    vocab_size: int = 771          # 3 specials + 256 bytes + 512 words
    max_tokens: int = 25
    lang_layers: int = 2
    lang_heads: int = 4
    # memory and control
    memory_layers: int = 2
    memory_dim: int = 128
    low_level_dim: int = 128
    period: int = 8
    cond_dim: int = 32
    # scaling
    width_multiplier: float = 1.0
    # ablations
    no_vision: bool = False
    no_language: bool = False
    no_contrastive: bool = False
    no_hierarchy: bool = False
    low_res_vision: bool = False

    def __post_init__(self):
        if len(self.conv_channels) != len(self.conv_strides):
            raise ValueError("conv_channels and conv_strides length mismatch")
        if self.d_model % self.mmt_heads:
            raise ValueError("d_model must divide evenly among heads")
        if self.no_vision and self.no_language:
            raise ValueError("cannot ablate both vision and language")

    # width-scaled dimensions ------------------------------------------------

    def _scale(self, n: int) -> int:
        return max(4, int(round(n * self.width_multiplier)))

    @property
    def dm(self) -> int:
        m = self.mmt_heads
        return max(m, (self._scale(self.d_model) // m) * m)

    @property
    def channels(self) -> tuple[int, ...]:
        return tuple(self._scale(c) for c in self.conv_channels)

    @property
    def d_memory(self) -> int:
        return self._scale(self.memory_dim)

    @property
    def d_low(self) -> int:
        return self._scale(self.low_level_dim)

    @property
    def d_cond(self) -> int:
        return self._scale(self.cond_dim)

    @property
    def effective_period(self) -> int:
        """Movement actions emitted per observation: the flat (no-hierarchy)
        agent observes every tick and acts once per observation."""
        return 1 if self.no_hierarchy else self.period

    @property
    def input_height(self) -> int:
        return self.raster_height // 2 if self.low_res_vision else self.raster_height

    @property
    def input_width(self) -> int:
        return self.raster_width // 2 if self.low_res_vision else self.raster_width

    def with_ablation(self, name: str) -> "AgentConfig":
        known = ("no_vision", "no_language", "no_contrastive", "no_hierarchy",
                 "low_res_vision")
        if name not in known:
            raise ValueError(f"unknown ablation {name}")
        kwargs = {name: True}
        if name == "no_vision":
            kwargs["no_contrastive"] = True  # nothing left to contrast
        if name == "no_language":
            kwargs["no_contrastive"] = True
        return replace(self, **kwargs)


ABLATIONS = ("no_vision", "no_language", "no_contrastive", "no_hierarchy",
             "low_res_vision")
