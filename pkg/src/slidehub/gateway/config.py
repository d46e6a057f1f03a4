"""Runtime settings with CLI flag > env var > config file > default precedence.

Environment variables: EXACT_STORAGE_ROOT, EXACT_BIND, EXACT_DB_PATH, and
EXACT_PUBLIC_URL (the base URL peers use to reach this instance).  The
optional config file is JSON with the same keys lower-cased.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path


class ConfigError(Exception):
    pass


ENV_KEYS = {
    "storage_root": "EXACT_STORAGE_ROOT",
    "bind": "EXACT_BIND",
    "db_path": "EXACT_DB_PATH",
    "public_base_url": "EXACT_PUBLIC_URL",
}

DEFAULTS = {
    "storage_root": "data/storage",
    "bind": "127.0.0.1:8000",
    "db_path": "data/slidehub.db",
    "public_base_url": None,
}


@dataclass
class Settings:
    storage_root: Path
    db_path: Path
    bind: str
    public_base_url: str | None = None

    @property
    def host(self) -> str:
        return self.bind.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        try:
            return int(self.bind.rsplit(":", 1)[1])
        except (IndexError, ValueError):
            raise ConfigError(f"bind must be host:port, got {self.bind!r}") from None

    @property
    def base_url(self) -> str:
        return self.public_base_url or f"http://{self.bind}"


def load_settings(config_file=None, **flags) -> Settings:
    """Resolve settings; raises ConfigError on a malformed config file."""
    values = dict(DEFAULTS)

    if config_file is not None:
        path = Path(config_file)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)

    for key, env in ENV_KEYS.items():
        if os.environ.get(env):
            values[key] = os.environ[env]

    for key, value in flags.items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown setting {key!r}")
        if value is not None:
            values[key] = value

    settings = Settings(
        storage_root=Path(values["storage_root"]),
        db_path=Path(values["db_path"]),
        bind=str(values["bind"]),
        public_base_url=values["public_base_url"],
    )
    settings.port  # validates bind format
    return settings
