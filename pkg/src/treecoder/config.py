"""Run configuration (a single JSON file).

Relative paths are resolved against the directory holding the config file.
Credentials are never read from the file: an HTTP backend names the
environment variable that holds its key.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from treecoder.prompting import BUILTIN_TEMPLATES

BACKEND_KINDS = ("http", "replay", "oracle")


class ConfigError(ValueError):
    pass


@dataclass
class BackendConfig:
    kind: str = "replay"
    endpoint: str | None = None
    model_id: str = "default"
    credential_env_var: str | None = "OPENAI_API_KEY"
    temperature: float = 0.0
    min_temperature: float = 0.0
    max_output_tokens: int = 1024
    max_in_flight: int = 4
    max_attempts: int = 5
    script_path: str | None = None
    false_negative_rate: float = 0.0
    false_positive_rate: float = 0.0


@dataclass
class RunConfig:
    ontology_path: str
    documents_dir: str
    output_dir: str
    backend: BackendConfig = field(default_factory=BackendConfig)
    gold_labels_path: str | None = None
    template_path: str = "tree-gpt"
    coder_template_path: str = "coder"
    budget: int = 50
    workers: int = 1
    cache_dir: str | None = None
    class_set_policy: str = "gold"
    rng_seed: int = 0
    frontier: str = "fifo"

    def to_dict(self) -> dict:
        return asdict(self)

    def sha256(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


FIELD_HELP = {
    "ontology_path": "flat ontology file (code, parent, level, assignable, description)",
    "documents_dir": "directory of <doc_id>.txt case notes",
    "output_dir": "where predictions.tsv, traces/, manifest.json are written",
    "gold_labels_path": "doc_id<TAB>code TSV; required for the oracle backend",
    "template_path": "tree-search template file or built-in name: tree-gpt, tree-llama",
    "coder_template_path": "baseline template file or built-in name: coder",
    "budget": "max prompts per document (default 50)",
    "workers": "documents searched concurrently (default 1)",
    "cache_dir": "content-addressed response cache directory (optional)",
    "class_set_policy": "macro class set: gold (default) or union",
    "rng_seed": "seed for every random draw (oracle noise, retry jitter)",
    "frontier": "fifo (default) or lifo expansion order",
    "backend.kind": "http | replay | oracle",
    "backend.endpoint": "chat-completions URL (http)",
    "backend.model_id": "model name sent on the wire",
    "backend.credential_env_var": "environment variable holding the API key (http)",
    "backend.temperature": "sampling temperature (default 0)",
    "backend.min_temperature": "lower clamp for temperature, e.g. 0.001 for Llama-2 hosts",
    "backend.max_output_tokens": "max_tokens sent on the wire",
    "backend.max_in_flight": "concurrent HTTP requests allowed",
    "backend.max_attempts": "HTTP attempts before giving up (default 5)",
    "backend.script_path": "replay script JSON or a cache directory to replay (replay)",
    "backend.false_negative_rate": "oracle miss probability for truly relevant codes",
    "backend.false_positive_rate": "oracle hit probability for irrelevant codes",
}


def _resolve(base: Path, value: str | None) -> str | None:
    if value is None:
        return None
    path = Path(value)
    return str(path if path.is_absolute() else (base / path))


def _build(cls, data: dict, prefix: str = ""):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(prefix + u for u in unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{prefix or 'config'}: {exc}") from None


def parse_config(data: dict, base_dir: str | Path = ".") -> RunConfig:
    base = Path(base_dir)
    data = dict(data)
    backend = _build(BackendConfig, dict(data.pop("backend", {})), "backend.")
    cfg = _build(RunConfig, {**data, "backend": backend})
    for name in ("ontology_path", "documents_dir", "output_dir", "gold_labels_path", "cache_dir"):
        setattr(cfg, name, _resolve(base, getattr(cfg, name)))
    for name in ("template_path", "coder_template_path"):
        value = getattr(cfg, name)
        if value not in BUILTIN_TEMPLATES:
            setattr(cfg, name, _resolve(base, value))
    if backend.script_path:
        backend.script_path = _resolve(base, backend.script_path)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return parse_config(data, path.parent)


def validate(cfg: RunConfig, *, needs_documents: bool = True) -> None:
    """Raise :class:`ConfigError` naming the first offending field."""

    def need_path(name: str, value: str | None, kind: str = "file") -> None:
        if value is None:
            raise ConfigError(f"{name}: required")
        p = Path(value)
        ok = p.is_dir() if kind == "dir" else p.is_file()
        if not ok:
            raise ConfigError(f"{name}: {kind} does not exist: {value}")

    need_path("ontology_path", cfg.ontology_path)
    if needs_documents:
        need_path("documents_dir", cfg.documents_dir, "dir")
    if cfg.gold_labels_path is not None:
        need_path("gold_labels_path", cfg.gold_labels_path)
    for name in ("template_path", "coder_template_path"):
        value = getattr(cfg, name)
        if value not in BUILTIN_TEMPLATES:
            need_path(name, value)
    if not isinstance(cfg.budget, int) or cfg.budget < 1:
        raise ConfigError(f"budget: must be an integer >= 1, got {cfg.budget!r}")
    if not isinstance(cfg.workers, int) or cfg.workers < 1:
        raise ConfigError(f"workers: must be an integer >= 1, got {cfg.workers!r}")
    if cfg.class_set_policy not in ("gold", "union"):
        raise ConfigError(f"class_set_policy: must be 'gold' or 'union', got {cfg.class_set_policy!r}")
    if cfg.frontier not in ("fifo", "lifo"):
        raise ConfigError(f"frontier: must be 'fifo' or 'lifo', got {cfg.frontier!r}")

    b = cfg.backend
    if b.kind not in BACKEND_KINDS:
        raise ConfigError(f"backend.kind: must be one of {BACKEND_KINDS}, got {b.kind!r}")
    if b.temperature < 0:
        raise ConfigError(f"backend.temperature: must be >= 0, got {b.temperature}")
    if b.min_temperature < 0:
        raise ConfigError(f"backend.min_temperature: must be >= 0, got {b.min_temperature}")
    if b.max_output_tokens < 1:
        raise ConfigError(f"backend.max_output_tokens: must be >= 1, got {b.max_output_tokens}")
    if b.kind == "http" and not b.endpoint:
        raise ConfigError("backend.endpoint: required for the http backend")
    if b.kind == "replay":
        if not b.script_path:
            raise ConfigError("backend.script_path: required for the replay backend")
        if not Path(b.script_path).exists():
            raise ConfigError(f"backend.script_path: does not exist: {b.script_path}")
    if b.kind == "oracle":
        if cfg.gold_labels_path is None:
            raise ConfigError("gold_labels_path: required for the oracle backend")
        for name in ("false_negative_rate", "false_positive_rate"):
            value = getattr(b, name)
            if not 0 <= value <= 1:
                raise ConfigError(f"backend.{name}: must be in [0, 1], got {value}")


def fields_help() -> str:
    width = max(len(k) for k in FIELD_HELP)
    return "\n".join(f"  {k.ljust(width)}  {v}" for k, v in FIELD_HELP.items())
