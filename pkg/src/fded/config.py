"""Run configuration: one JSON document, unknown keys rejected."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .depth_edge import AdaptiveThresholdParams
from .flow import FlowParams
from .flow_edge import FlowEdgeParams
from .fusion import PipelineConfig
from .losses import LossParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MetricParams:
    tol: int = 2


@dataclass(frozen=True)
class RunConfig:
    threshold: AdaptiveThresholdParams = field(default_factory=AdaptiveThresholdParams)
    flow: FlowParams = field(default_factory=FlowParams)
    flow_edge: FlowEdgeParams = field(default_factory=FlowEdgeParams)
    loss: LossParams = field(default_factory=LossParams)
    metrics: MetricParams = field(default_factory=MetricParams)
    emit_diagnostics: bool = True
    external_flow: bool = False
    seed: int = 0

    def pipeline(self, background_depth: float | None = None) -> PipelineConfig:
        thr = self.threshold
        if background_depth is not None and thr.background_depth is None:
            thr = dataclasses.replace(thr, background_depth=background_depth)
        return PipelineConfig(thr, self.flow, self.flow_edge, self.emit_diagnostics, self.external_flow)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return _build(cls, d, "")


def _build(cls, d, prefix: str):
    if not isinstance(d, dict):
        raise ConfigError(f"config section {prefix or '<root>'!r} must be an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in d:
        if key not in fields:
            raise ConfigError(f"unknown config key {prefix + key!r}")
    kwargs = {}
    for key, value in d.items():
        sub = _NESTED.get((cls, key))
        kwargs[key] = _build(sub, value, f"{prefix}{key}.") if sub is not None else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config section {prefix or '<root>'!r}: {exc}") from None


_NESTED = {
    (RunConfig, "threshold"): AdaptiveThresholdParams,
    (RunConfig, "flow"): FlowParams,
    (RunConfig, "flow_edge"): FlowEdgeParams,
    (RunConfig, "loss"): LossParams,
    (RunConfig, "metrics"): MetricParams,
}
