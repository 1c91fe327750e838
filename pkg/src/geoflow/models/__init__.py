"""Registry of built-in model spaces."""

from __future__ import annotations

from typing import Callable

from .base import DeclaredProperties, ModelSpace, PrincipalBundle, Submersion
from .euclidean import flat_split, heisenberg, warped_control
from .hopf import hopf_s3, octonionic_hopf

REGISTRY: dict[str, Callable[[], ModelSpace]] = {
    "heisenberg": heisenberg,
    "flat_split": flat_split,
    "warped_control": warped_control,
    "hopf_s3": hopf_s3,
    "octonionic_hopf": octonionic_hopf,
}


def list_models() -> list[str]:
    return sorted(REGISTRY)


def load_model(name: str, verify: bool = False, n: int = 4) -> ModelSpace:
    """Build a registered model; with ``verify`` its declared properties are checked
    against :func:`~geoflow.connections.foliation_diagnostics` on ``n`` samples."""
    try:
        model = REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(list_models())}") from None
    if verify:
        from ..connections import foliation_diagnostics

        report = foliation_diagnostics(model, n=n, trace=False)
        if not report.decomposition_ok or report.mismatches(model.declared):
            raise ValueError(f"model {name} does not match its declared properties: {report.mismatches(model.declared)}")
    return model


__all__ = [
    "DeclaredProperties",
    "ModelSpace",
    "PrincipalBundle",
    "REGISTRY",
    "Submersion",
    "flat_split",
    "heisenberg",
    "hopf_s3",
    "list_models",
    "load_model",
    "octonionic_hopf",
    "warped_control",
]
