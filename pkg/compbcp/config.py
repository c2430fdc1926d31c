"""Run configuration: YAML files, flag overrides and the resolved-config echo."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from compbcp import __version__
from compbcp.errors import ConfigurationError
from compbcp.io.loaders import JSONLoader, YAMLLoader
from compbcp.models.covariates import CovariateModel, model_from_dict
from compbcp.parallel import default_n_jobs

logger = logging.getLogger(__name__)

CONFIG_ECHO = "config.json"


def load_yaml(path: Path | str) -> dict[str, Any]:
    return YAMLLoader(path).load()


def model_section(document: dict[str, Any]) -> dict[str, Any]:
    """The ``model:`` section of a document (or the document itself), with a top-level ``mcmc:`` merged in."""
    section = dict(document.get("model", document))
    if "mcmc" in document and "mcmc" not in section:
        section["mcmc"] = document["mcmc"]
    if "family" not in section:
        raise ConfigurationError("A model file needs a 'model' section with a 'family' key")
    return section


def load_model(path: Path | str) -> CovariateModel:
    """
    Read a covariate model from YAML::

        model:
          family: dirichlet
          p: 20
          alpha: 2.0
    """
    return model_from_dict(model_section(load_yaml(path)))


def resolve(*layers: dict[str, Any] | None) -> dict[str, Any]:
    """Merge layers left to right; later layers win and None values never override."""
    resolved: dict[str, Any] = {}
    for layer in layers:
        for key, value in (layer or {}).items():
            if value is not None:
                resolved[key] = value
    return resolved


@dataclass
class RunConfig:
    """Fully resolved parameters of one CLI run."""

    command: str
    out: Path
    seed: int = 0
    threads: int = field(default_factory=default_n_jobs)
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.out = Path(self.out)
        if self.seed < 0:
            raise ConfigurationError(f"Seed must be non-negative, got {self.seed}")
        if self.threads < 1:
            raise ConfigurationError(f"Thread count must be >= 1, got {self.threads}")

    def to_dict(self) -> dict[str, Any]:
        # Output directory and worker count stay out: neither changes results.
        return {
            "command": self.command,
            "seed": self.seed,
            "version": __version__,
            **self.params,
        }

    def write(self) -> Path:
        path = JSONLoader(self.out / CONFIG_ECHO).save(self.to_dict())
        logger.debug(f"Wrote resolved config to {path}")
        return path
