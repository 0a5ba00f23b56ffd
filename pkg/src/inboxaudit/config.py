"""Run configuration: plain key=value files with flag overrides (flags win)."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class AdapterConfig:
    """External classifier endpoint settings."""
    endpoint: str = ""
    model: str = "llama3.1-8b-instruct"
    timeout_s: float = 30.0
    retries: int = 2
    pool_size: int = 4


@dataclass
class AuditConfig:
    corpus_dir: str = "corpus"
    registry_path: str = "registry.csv"
    ip2asn_path: str = ""
    abuse_path: str = ""
    provider_list_path: str = ""
    cloud_list_path: str = ""
    org_map_path: str = ""
    sector_map_path: str = ""
    rule_table_path: str = ""
    trusted_mx: str = "mx.audit.example"
    audit_timezone: str = "UTC"
    classifier: str = "rules"
    adapter: AdapterConfig = field(default_factory=AdapterConfig)
    seed: int = 42
    output_dir: str = "out"
    peak_sigma: float = 2.0
    decomposition_period: int = 7
    pca_components: int = 5
    pca_variance_threshold: float = 0.80
    k_min: int = 2
    k_max: int = 10
    kmeans_restarts: int = 10
    # convention reproducing the published skewness on the bundled table;
    # see fixture-check output for the pinned choice and its caveats
    moment_convention: str = "sample"

    def validate(self) -> None:
        if self.classifier not in ("rules", "external"):
            raise ConfigError(f"classifier must be rules|external, got {self.classifier!r}")
        if self.classifier == "external" and not self.adapter.endpoint:
            raise ConfigError("classifier=external requires adapter_endpoint")
        if self.moment_convention not in ("sample", "population"):
            raise ConfigError(f"bad moment_convention: {self.moment_convention!r}")
        if not (2 <= self.k_min <= self.k_max):
            raise ConfigError(f"bad k range: {self.k_min}..{self.k_max}")
        if self.kmeans_restarts < 1:
            raise ConfigError("kmeans_restarts must be >= 1")
        if self.peak_sigma <= 0:
            raise ConfigError("peak_sigma must be positive")
        if self.decomposition_period < 2:
            raise ConfigError("decomposition_period must be >= 2")
        if not (0.0 < self.pca_variance_threshold <= 1.0):
            raise ConfigError("pca_variance_threshold must be in (0, 1]")


_SCALAR_FIELDS = {f.name: f.type for f in dataclasses.fields(AuditConfig)
                  if f.name != "adapter"}
_ADAPTER_FIELDS = {f"adapter_{f.name}": f.name for f in dataclasses.fields(AdapterConfig)}


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read a key=value file; '#' starts a comment, blank lines are skipped."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        values[key] = value
    return values


def _coerce(key: str, value: str, target_type: type) -> object:
    try:
        if target_type is bool:
            lowered = value.lower()
            if lowered in ("1", "true", "yes"):
                return True
            if lowered in ("0", "false", "no"):
                return False
            raise ValueError(value)
        return target_type(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def build_config(file_values: dict[str, str] | None = None,
                 overrides: dict[str, object] | None = None) -> AuditConfig:
    """Assemble an AuditConfig from file values and explicit overrides.

    Overrides (CLI flags) win over file values; both win over defaults.
    Unknown keys are errors so typos fail loudly.
    """
    cfg = AuditConfig()
    merged: dict[str, object] = dict(file_values or {})
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    for key, value in merged.items():
        if key in _ADAPTER_FIELDS:
            attr = _ADAPTER_FIELDS[key]
            current = getattr(cfg.adapter, attr)
            if isinstance(value, str):
                value = _coerce(key, value, type(current))
            setattr(cfg.adapter, attr, value)
        elif key in _SCALAR_FIELDS:
            current = getattr(cfg, key)
            if isinstance(value, str) and not isinstance(current, str):
                value = _coerce(key, value, type(current))
            setattr(cfg, key, value)
        else:
            raise ConfigError(f"unknown config key: {key!r}")

    cfg.validate()
    return cfg
