"""Project configuration: one JSON file in the project root, flag
overrides on top, environment variables only for credentials."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .llm import ModelSpec

CONFIG_FILENAME = "semlayer.json"

DEFAULTS = {
    "rows_n": 3,
    "unique_limit": 10,
    "temperature": 0.7,
    "timeout": 30.0,
    "max_in_flight": 4,
}


class ConfigError(Exception):
    pass


@dataclass
class ProjectConfig:
    root: Path
    data_dir: Path
    metadata_dir: Path
    store_path: Path
    ui_dir: Optional[Path] = None
    models: dict[str, dict] = field(default_factory=dict)
    defaults: dict = field(default_factory=lambda: dict(DEFAULTS))

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ProjectConfig":
        if path is None:
            path = Path.cwd() / CONFIG_FILENAME
        path = Path(path)
        raw: dict = {}
        root = path.parent if path.name.endswith(".json") else path
        if path.is_file():
            raw = json.loads(path.read_text(encoding="utf-8"))
        defaults = dict(DEFAULTS)
        defaults.update(raw.get("defaults", {}))
        ui_dir = raw.get("ui_dir")
        return cls(
            root=root,
            data_dir=root / raw.get("data_dir", "data"),
            metadata_dir=root / raw.get("metadata_dir", "metadata"),
            store_path=root / raw.get("store_path", "semlayer.store.sqlite"),
            ui_dir=(root / ui_dir) if ui_dir else None,
            models=raw.get("models", {}),
            defaults=defaults,
        )

    def model_spec(self, name: str) -> ModelSpec:
        """Resolve a model: registry entry by name, or an inline endpoint
        (`mock:<dir>` / an http(s) URL) for ad-hoc runs."""
        if name in self.models:
            entry = dict(self.models[name])
            endpoint = entry.pop("endpoint")
            if endpoint.startswith("mock:"):
                target = endpoint.removeprefix("mock:").removeprefix("//")
                if not Path(target).is_absolute():
                    endpoint = f"mock:{self.root / target}"
            entry.setdefault("temperature", self.defaults["temperature"])
            entry.setdefault("timeout", self.defaults["timeout"])
            entry.setdefault("max_in_flight", self.defaults["max_in_flight"])
            return ModelSpec(name=entry.pop("name", name), endpoint=endpoint, **entry)
        if name.startswith(("mock:", "http://", "https://")):
            return ModelSpec(
                name=name,
                endpoint=name,
                temperature=self.defaults["temperature"],
                timeout=self.defaults["timeout"],
                max_in_flight=self.defaults["max_in_flight"],
            )
        raise ConfigError(
            f"model {name!r} is not in the registry and is not an endpoint"
        )

    def database_paths(self) -> dict[str, Path]:
        if not self.data_dir.is_dir():
            raise ConfigError(f"data directory {self.data_dir} does not exist")
        paths = {}
        for pattern in ("*.sqlite", "*.db"):
            for p in sorted(self.data_dir.glob(pattern)):
                if ".anon" in p.name:
                    continue
                paths[p.stem] = p
        return paths
