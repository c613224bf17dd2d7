"""TOML configuration for the service and CLI.

One file wires everything: the graph snapshot path, a default provider,
optional named providers, and server settings. Secrets never live in the
file; ``api_key_env`` names the environment variable to read.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ..gateway import ProviderConfig, RetryPolicy

DEFAULT_CONFIG_ENV = "CELLANNOT_CONFIG"
DEFAULT_API_KEY_ENV = "CELLANNOT_API_KEY"


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    workers: int = 2
    journal: str = ""
    static: str = "frontend/dist"  # web console build, served when present


@dataclass
class AppConfig:
    graph_snapshot: str = ""
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    providers: dict[str, ProviderConfig] = field(default_factory=dict)
    server: ServerConfig = field(default_factory=ServerConfig)
    base_dir: Path = field(default_factory=Path)

    def resolve_provider(self, name: str | None = None) -> ProviderConfig:
        """Default provider, or a named entry from [providers.<name>]."""
        if name is None:
            return self.provider
        if name not in self.providers:
            known = ", ".join(sorted(self.providers)) or "none defined"
            raise KeyError(f"unknown provider {name!r} (named providers: {known})")
        return self.providers[name]

    def snapshot_path(self) -> Path | None:
        if not self.graph_snapshot:
            return None
        path = Path(self.graph_snapshot)
        return path if path.is_absolute() else self.base_dir / path


def _provider_from_table(table: dict, base_dir: Path) -> ProviderConfig:
    retry = RetryPolicy(
        attempts=int(table.get("retry_attempts", 3)),
        backoff=float(table.get("retry_backoff", 0.5)),
    )
    api_key_env = table.get("api_key_env", DEFAULT_API_KEY_ENV)
    script = table.get("script") or None
    if script and not Path(script).is_absolute():
        script = str(base_dir / script)
    cache_dir = table.get("cache_dir") or None
    if cache_dir and not Path(cache_dir).is_absolute():
        cache_dir = str(base_dir / cache_dir)
    return ProviderConfig(
        kind=table.get("kind", "mock"),
        model=table.get("model", "mock-model"),
        endpoint=table.get("endpoint", ""),
        api_key=os.environ.get(api_key_env, ""),
        script=script,
        cache_dir=cache_dir,
        max_in_flight=int(table.get("max_in_flight", 4)),
        retry=retry,
    )


def load_config(path: str | Path) -> AppConfig:
    """Parse a config file; relative paths resolve against its directory."""
    path = Path(path)
    with path.open("rb") as handle:
        data = tomllib.load(handle)
    base_dir = path.parent.resolve()
    graph_table = data.get("graph", {})
    server_table = data.get("server", {})
    config = AppConfig(
        graph_snapshot=graph_table.get("snapshot", ""),
        provider=_provider_from_table(data.get("provider", {}), base_dir),
        providers={
            name: _provider_from_table(table, base_dir)
            for name, table in data.get("providers", {}).items()
        },
        server=ServerConfig(
            host=server_table.get("host", "127.0.0.1"),
            port=int(server_table.get("port", 8000)),
            workers=int(server_table.get("workers", 2)),
            journal=server_table.get("journal", ""),
            static=server_table.get("static", "frontend/dist"),
        ),
        base_dir=base_dir,
    )
    return config


def find_config(explicit: str | None = None) -> Path | None:
    """Resolve the config path: flag, then env var, then ./cellannot.toml."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(DEFAULT_CONFIG_ENV)
    if env:
        return Path(env)
    default = Path("cellannot.toml")
    return default if default.exists() else None
