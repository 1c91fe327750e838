"""Tolerances and integrator settings."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace


@dataclass(frozen=True)
class Tolerances:
    """All numerical tolerances used by checks and verdicts, in one place."""

    transition_tol: float = 1e-12
    spd_tol: float = 1e-12
    rank_tol: float = 1e-9
    fd_symmetry_tol: float = 1e-6
    cross_check_tol: float = 1e-7
    cross_tol: float = 1e-8
    energy_tol: float = 1e-8
    foliation_tol: float = 1e-7
    lift_tol: float = 1e-6
    identity_tol: float = 1e-6
    violation_tol: float = 1e-3

    def override(self, **kwargs) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(kwargs) - known
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in kwargs.items()})

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()

INTEGRATORS = ("rk4", "rk45_adaptive", "implicit_midpoint")


@dataclass(frozen=True)
class FlowConfig:
    integrator: str = "rk4"
    step: float = 1e-3
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_chart_switches: int = 64
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_chart_switches < 0:
            raise ValueError("max_chart_switches must be nonnegative")

    def with_step(self, step: float) -> "FlowConfig":
        return replace(self, step=float(step))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tolerances"] = self.tolerances.to_dict()
        return d
