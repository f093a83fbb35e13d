"""Settings manager: reads settings.ini via configparser."""
from __future__ import annotations

from configparser import ConfigParser
from pathlib import Path

from src.core.errors import ConfigError
from src.core.roles import COMMENT_PREFIX


class SettingsManager:
    def __init__(self, ini_path: Path | None) -> None:
        self.ini_path = Path(ini_path) if ini_path is not None else None
        self.config = ConfigParser(comment_prefixes=(COMMENT_PREFIX, ";"), inline_comment_prefixes=(COMMENT_PREFIX,))
        if self.ini_path is not None:
            if not self.ini_path.exists():
                raise ConfigError(f"settings file not found: {self.ini_path}")
            self.config.read(self.ini_path, encoding="utf-8")

    @classmethod
    def from_string(cls, text: str) -> "SettingsManager":
        mgr = cls(None)
        mgr.config.read_string(text)
        return mgr

    # ------------------------------------------------------------------
    # Generic getters
    # ------------------------------------------------------------------
    def get(self, section: str, key: str, fallback: str = "") -> str:
        return self.config.get(section, key, fallback=fallback).strip()

    def getint(self, section: str, key: str, fallback: int = 0) -> int:
        try:
            return self.config.getint(section, key, fallback=fallback)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None

    def getfloat(self, section: str, key: str, fallback: float = 0.0) -> float:
        try:
            return self.config.getfloat(section, key, fallback=fallback)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None

    def getbool(self, section: str, key: str, fallback: bool = False) -> bool:
        try:
            return self.config.getboolean(section, key, fallback=fallback)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None

    def getpath(self, section: str, key: str) -> Path | None:
        value = self.get(section, key)
        return Path(value) if value else None

    # ------------------------------------------------------------------
    # Convenience properties
    # ------------------------------------------------------------------
    @property
    def log_level(self) -> str:
        return self.get("GENERAL", "log_level", "INFO")

    @property
    def log_dir(self) -> Path | None:
        return self.getpath("GENERAL", "log_dir")

    @property
    def show_progress(self) -> bool:
        return self.getbool("GENERAL", "show_progress", False)

    @property
    def role_sugar(self) -> dict[str, str]:
        """Return alias→canonical role mapping from the [ROLES] section."""
        if not self.config.has_section("ROLES"):
            return {}
        return {k.upper(): v.strip().upper() for k, v in self.config.items("ROLES")}
