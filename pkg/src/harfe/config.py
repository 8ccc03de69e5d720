"""Experiment configuration schema.

Configs are YAML (or JSON) documents with the sections ``target``,
``features``, ``solver``, ``protocol``, ``output`` and, for the ``diagnose``
command, ``diagnose``.  Unknown keys are rejected.  See ``configs/`` in the
repository for annotated examples.
"""

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

__all__ = [
    "ExperimentConfig",
    "apply_overrides",
    "load_config",
]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class TargetConfig(_Section):
    synthetic: str | None = None
    csv: str | None = None
    target_column: int | str = -1
    has_header: bool = True
    delimiter: str = ","
    d: int | None = None
    input_distribution: list | None = None
    noise_sigma: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.synthetic is None) == (self.csv is None):
            raise ValueError("target needs exactly one of 'synthetic' or 'csv'")
        return self


class WeightsConfig(_Section):
    kind: Literal["gaussian", "uniform"] = "gaussian"
    scale: float = Field(1.0, gt=0)
    low: float = -1.0
    high: float = 1.0


class BiasConfig(_Section):
    kind: Literal["auto", "none", "uniform"] = "auto"
    low: float = 0.0
    high: float = 6.283185307179586


class FeaturesConfig(_Section):
    n_features: int = Field(1000, ge=1)
    q: int = Field(2, ge=1)
    activation: Literal["sin", "complex_exp", "relu", "sigmoid"] = "sin"
    weights: WeightsConfig = WeightsConfig()
    bias: BiasConfig = BiasConfig()


class SolverSection(_Section):
    s: int = Field(..., ge=1)
    mu: float = Field(0.1, gt=0)
    lam: float | None = Field(None, alias="lambda", ge=0)
    m_lambda: float | None = Field(None, ge=0)
    lambdas: list[float] | None = None
    epsilon: float = Field(0.0, ge=0)
    max_iter: int = Field(50, ge=1)
    support_stability_stop: bool = False

    @model_validator(mode="after")
    def _one_penalty(self):
        given = sum(x is not None for x in (self.lam, self.m_lambda, self.lambdas))
        if given > 1:
            raise ValueError("give at most one of 'lambda', 'm_lambda' or 'lambdas'")
        if self.lambdas is not None and (not self.lambdas or min(self.lambdas) < 0):
            raise ValueError("'lambdas' must be a nonempty list of nonnegative values")
        return self


class ProtocolConfig(_Section):
    m_train: int | None = Field(None, ge=1)
    m_test: int | None = Field(None, ge=1)
    split_fraction: float = Field(0.5, gt=0, lt=1)
    split_counts: list[int] | None = None
    validation_fraction: float = Field(0.2, gt=0, lt=1)
    trials: int = Field(1, ge=1)
    aggregate: Literal["mean", "median"] = "mean"
    normalize: bool = False
    seed: int = Field(0, ge=0, lt=2**63)
    n_jobs: int = 1


class OutputConfig(_Section):
    directory: str = "results"
    formats: list[Literal["csv", "json"]] = ["csv", "json"]


class MatrixConfig(_Section):
    kind: Literal["identity", "gaussian", "random_features", "csv"] = "gaussian"
    m: int = Field(40, ge=1)
    N: int = Field(10, ge=1)
    normalize: bool = True
    path: str | None = None
    d: int = Field(5, ge=1)
    q: int | None = None
    input_scale: float = Field(1.0, gt=0)
    weight_scale: float = Field(1.0, gt=0)
    seed: int = Field(0, ge=0)


class PlantedConfig(_Section):
    s: int = Field(2, ge=1)
    lam: float = Field(1e-12, alias="lambda", ge=0)
    mu: float = Field(1.0, gt=0)
    max_iter: int = Field(10, ge=5)
    seed: int = Field(0, ge=0)


class DiagnoseConfig(_Section):
    matrix: MatrixConfig = MatrixConfig()
    rip_s: list[int] = [1, 2]
    budget: int = Field(200_000, ge=1)
    coherence: bool = True
    kappa_s: list[int] = []
    planted: PlantedConfig | None = None


class ExperimentConfig(_Section):
    name: str = "experiment"
    target: TargetConfig | None = None
    features: FeaturesConfig = FeaturesConfig()
    solver: SolverSection | None = None
    protocol: ProtocolConfig = ProtocolConfig()
    output: OutputConfig = OutputConfig()
    diagnose: DiagnoseConfig | None = None

    def require_training(self):
        if self.target is None or self.solver is None:
            raise ValueError("this command needs 'target' and 'solver' sections")
        return self

    def resolved(self):
        """Plain dict of every setting, defaults included, for provenance."""
        return self.model_dump(mode="json", by_alias=True)


def _set_path(doc, dotted, value):
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ValueError(f"cannot set {dotted!r}: {key!r} is not a section")
    node[keys[-1]] = value


def apply_overrides(doc, overrides):
    """Apply ``section.key=value`` strings; values are parsed as YAML scalars."""
    doc = dict(doc)
    for item in overrides or ():
        if "=" not in item:
            raise ValueError(f"override {item!r} must look like section.key=value")
        key, raw = item.split("=", 1)
        _set_path(doc, key.strip(), yaml.safe_load(raw))
    return doc


def load_config(path=None, overrides=None, base=None):
    """Read a config file, apply overrides and validate.

    ``base`` is an already-parsed mapping used instead of (or underneath)
    the file.
    """
    doc = {} if base is None else dict(base)
    if path is not None:
        text = Path(path).read_text()
        loaded = yaml.safe_load(text) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"{path}: config must be a mapping")
        doc.update(loaded)
    doc = apply_overrides(doc, overrides)
    return ExperimentConfig.model_validate(doc)
