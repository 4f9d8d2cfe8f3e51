import copy
import logging
import os

import yaml

from netdiag import exceptions, status, util
from netdiag.defaults import (
    CONFIG_DEFAULTS,
    CONFIG_FIELD_ENVVAR_ALLOWLIST,
    DEFAULT_CONFIG_FILE,
)

from typing import Any, Callable, Dict, Optional  # noqa: F401


LOG = logging.getLogger(__name__)

VALID_PROFILES = ("table-compat", "degree-adaptive")
VALID_HEURISTICS = ("min-fill", "min-degree")

# Basic schema validation top-level keys for parse_config handling
VALID_NETDIAG_CONFIG_KEYS = tuple(sorted(CONFIG_DEFAULTS))

# Environment values arrive as strings
_COERCE = {
    "tie_epsilon": float,
    "top_k": int,
    "enumeration_cap": int,
    "url_timeout": int,
}  # type: Dict[str, Callable[[Any], Any]]


class NetDiagConfig:
    """Effective configuration: defaults, config file, env and CLI flags."""

    def __init__(self, cfg: "Optional[Dict[str, Any]]" = None) -> None:
        if cfg is not None:
            self.cfg_path = None  # type: Optional[str]
            self.cfg = copy.copy(CONFIG_DEFAULTS)
            self.cfg.update(cfg)
        else:
            self.cfg_path = get_config_path()
            self.cfg = parse_config(self.cfg_path)

    def override(self, **values: "Any") -> None:
        """Apply CLI flag values; None means the flag was not given."""
        changed = {k: v for k, v in values.items() if v is not None}
        if changed:
            LOG.debug("Config overridden by flags: %r", sorted(changed))
            self.cfg.update(changed)
            validate_config(self.cfg)

    @property
    def profile(self) -> str:
        return self.cfg["profile"]

    @property
    def priors_file(self) -> "Optional[str]":
        return self.cfg.get("priors_file")

    @property
    def tie_epsilon(self) -> float:
        return float(self.cfg["tie_epsilon"])

    @property
    def top_k(self) -> int:
        return int(self.cfg["top_k"])

    @property
    def enumeration_cap(self) -> int:
        return int(self.cfg["enumeration_cap"])

    @property
    def elimination_heuristic(self) -> str:
        return self.cfg["elimination_heuristic"]

    @property
    def url_timeout(self) -> int:
        return int(self.cfg["url_timeout"])

    @property
    def log_level(self):
        log_level = self.cfg.get("log_level")
        try:
            return getattr(logging, log_level.upper())
        except AttributeError:
            return getattr(logging, CONFIG_DEFAULTS["log_level"])

    @property
    def log_file(self) -> "Optional[str]":
        return self.cfg.get("log_file")


def get_config_path() -> str:
    """Get config path to be used when loading config dict."""
    config_file = os.environ.get("NETDIAG_CONFIG_FILE")
    if config_file:
        return config_file

    local_cfg = os.path.join(
        os.getcwd(), os.path.basename(DEFAULT_CONFIG_FILE)
    )
    if os.path.exists(local_cfg):
        return local_cfg

    return DEFAULT_CONFIG_FILE


def validate_config(cfg: "Dict[str, Any]") -> None:
    def invalid(key):
        return exceptions.ConfigError(
            status.MESSAGE_INVALID_CONFIG_VALUE.format(
                key=key, value=cfg[key]
            )
        )

    for key, coerce in _COERCE.items():
        try:
            cfg[key] = coerce(cfg[key])
        except (TypeError, ValueError):
            raise invalid(key)
    if cfg["profile"] not in VALID_PROFILES:
        raise invalid("profile")
    if cfg["elimination_heuristic"] not in VALID_HEURISTICS:
        raise invalid("elimination_heuristic")
    if cfg["tie_epsilon"] < 0:
        raise invalid("tie_epsilon")
    for key in ("top_k", "enumeration_cap", "url_timeout"):
        if cfg[key] < 1:
            raise invalid(key)


def parse_config(config_path=None):
    """Parse known netdiag config file

    Attempt to find configuration in cwd and fallback to DEFAULT_CONFIG_FILE.
    Any missing configuration keys will be set to CONFIG_DEFAULTS.

    Values are overridden by any allowlisted environment variable with prefix
    'NETDIAG_'. NETDIAG_LOG is shorthand for NETDIAG_LOG_LEVEL.

    @param config_path: Fullpath to netdiag configfile. If unspecified, use
        DEFAULT_CONFIG_FILE.

    @return: Dict of configuration values.
    """
    cfg = copy.copy(CONFIG_DEFAULTS)

    if not config_path:
        config_path = get_config_path()

    LOG.debug("Using netdiag configuration file at %s", config_path)
    if os.path.exists(config_path):
        try:
            content = yaml.safe_load(util.load_file(config_path))
        except yaml.YAMLError as e:
            raise exceptions.ConfigError(
                status.MESSAGE_INVALID_DOCUMENT.format(what="config", error=e)
            )
        if content:
            cfg.update(content)
    env_keys = {}
    for key, value in os.environ.items():
        key = key.lower()
        if key == "netdiag_log":
            env_keys["log_level"] = value
        elif key in CONFIG_FIELD_ENVVAR_ALLOWLIST:
            # Strip leading NETDIAG_
            env_keys[key[8:]] = value
    cfg.update(env_keys)
    # log about invalid keys before ignoring
    for key in sorted(set(cfg.keys()).difference(VALID_NETDIAG_CONFIG_KEYS)):
        logging.warning(
            "Ignoring invalid netdiag.conf key: %s=%s", key, cfg.pop(key)
        )
    validate_config(cfg)
    return cfg
