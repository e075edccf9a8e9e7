import json
import os
import platform
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import ValidationError

CONFIG_DIR_NAME = "markov-urng"
FORMATS = ("csv", "json", "text")
MAX_GRID_POINTS = 10_000


def get_default_config_dir() -> Path:
    """Get the appropriate config directory for the current platform"""
    system = platform.system()
    if system == "Windows":
        base = os.environ.get("APPDATA", os.path.expanduser("~\\AppData\\Roaming"))
        return Path(base) / CONFIG_DIR_NAME
    elif system == "Darwin":
        return Path.home() / "Library" / "Application Support" / CONFIG_DIR_NAME
    else:
        xdg_config = os.environ.get("XDG_CONFIG_HOME", Path.home() / ".config")
        return Path(xdg_config) / CONFIG_DIR_NAME


def resolve_config_path(path_arg: Optional[str]) -> Path:
    """Resolve user-provided config path or use default"""
    if path_arg:
        p = Path(os.path.expanduser(path_arg))
        if p.is_dir() or str(p).endswith(os.sep):
            return p / "config.json"
        # Treat as a file path
        return p
    return get_default_config_dir() / "config.json"


def parse_grid(spec: str) -> List[float]:
    """'start:stop:step' (stop included when hit) or a comma list like '0.5,1,2'."""
    text = spec.strip()
    try:
        if ":" in text:
            parts = [float(v) for v in text.split(":")]
            if len(parts) != 3:
                raise ValueError("expected start:stop:step")
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            if count > MAX_GRID_POINTS:
                raise ValueError(f"more than {MAX_GRID_POINTS} points")
            values = [round(start + i * step, 12) for i in range(count)]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ValidationError(f"bad grid '{spec}': {e}")
    if not values:
        raise ValidationError(f"grid '{spec}' is empty")
    return values


def parse_theta_grid(spec: str) -> List[float]:
    values = parse_grid(spec)
    if min(values) <= -1:
        raise ValidationError(f"theta grid '{spec}' reaches theta <= -1")
    return values


class URNGConfig:
    def __init__(self, path_arg: Optional[str] = None):
        self.config_path: Path = resolve_config_path(path_arg)
        self.data = self.load_config()

    @property
    def config_dir(self) -> Path:
        return self.config_path.parent

    def _default_config(self) -> dict:
        return {
            "default_model": None,
            "default_theta_grid": "-0.5:2:0.5",
            "default_format": "csv",
            "bits": False,
            "recent_models": [],
        }

    def load_config(self) -> dict:
        """Load configuration from file, keeping defaults for missing keys"""
        data = self._default_config()
        if self.config_path.exists():
            try:
                with open(self.config_path, "r", encoding="utf-8") as f:
                    stored = json.load(f)
            except (json.JSONDecodeError, OSError):
                return data
            if isinstance(stored, dict):
                data.update(stored)
        return data

    def save_config(self):
        """Persist configuration to file"""
        try:
            self.config_dir.mkdir(parents=True, exist_ok=True)
            with open(self.config_path, "w", encoding="utf-8") as f:
                json.dump(self.data, f, indent=2, ensure_ascii=False)
        except OSError:
            pass

    def set_default_model(self, model_path: str):
        model_path = str(Path(os.path.expanduser(model_path)).resolve())
        self.data["default_model"] = model_path
        recent = [p for p in self.data.get("recent_models", []) if p != model_path]
        recent.insert(0, model_path)
        self.data["recent_models"] = recent[:10]
        self.save_config()

    def set_default_theta_grid(self, spec: str):
        parse_theta_grid(spec)
        self.data["default_theta_grid"] = spec
        self.save_config()

    def set_default_format(self, fmt: str):
        if fmt not in FORMATS:
            raise ValidationError(f"format must be one of {', '.join(FORMATS)}")
        self.data["default_format"] = fmt
        self.save_config()

    def set_bits(self, flag: bool):
        self.data["bits"] = bool(flag)
        self.save_config()
