"""Run configuration: defaults < key=value file < command-line flags."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from typing import Any, Mapping, Optional

from .solvers import FamilyId, Kind

ENV_VAR = "OBSTRUCT_CONFIG"
DEDUPE_MODES = ("permutation", "labeled", "none")


class ConfigError(ValueError):
    def __init__(self, keys, message):
        self.keys = sorted(set(keys))
        super().__init__(f"invalid configuration ({', '.join(self.keys)}): {message}")


@dataclass(frozen=True)
class Config:
    kind: Kind
    k: int
    t: int
    seed: int = 0
    random_budget: int = 200
    len_max: int = 0              # 0 means 3(t+1)
    stage3_max_minors: int = 64
    workers: int = 1
    checkpoint_interval: int = 0  # nodes between checkpoints, 0 = only when stopping
    checkpoint: Optional[str] = None
    resume: Optional[str] = None
    out: Optional[str] = None
    node_budget: int = 0          # 0 = unlimited
    dedupe: str = "permutation"
    audit_rate: float = 0.01
    cache_dir: Optional[str] = None

    @property
    def family(self) -> FamilyId:
        return FamilyId(self.kind, self.k)

    @property
    def extension_len(self) -> int:
        return self.len_max or 3 * (self.t + 1)

    def echo(self) -> dict:
        """The effective configuration as plain JSON-able values.  Paths
        that only steer where files go are left out so reruns compare equal."""
        out = {}
        for f in fields(self):
            if f.name in ("checkpoint", "resume", "out", "cache_dir"):
                continue
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, Kind) else v
        return out


_INT_KEYS = {"k", "t", "seed", "random_budget", "len_max", "stage3_max_minors", "workers",
             "checkpoint_interval", "node_budget"}
_KNOWN = {f.name for f in fields(Config)}
_ALIASES = {"family": "kind", "budget": "node_budget"}


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    bad = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                bad.append(f"line{lineno}")
                continue
            key, val = (s.strip() for s in line.split("=", 1))
            values[_ALIASES.get(key, key)] = val
    if bad:
        raise ConfigError(bad, f"{path}: expected key=value")
    return values


def load_config(flags: Mapping[str, Any] | None = None, path: str | None = None,
                env: Mapping[str, str] | None = None) -> Config:
    """Merge defaults, the config file (``path`` or ``$OBSTRUCT_CONFIG``) and
    explicitly given ``flags`` (entries that are None count as unset)."""
    env = os.environ if env is None else env
    merged: dict[str, Any] = {}
    path = path or env.get(ENV_VAR)
    if path:
        merged.update(read_config_file(path))
    for key, val in (flags or {}).items():
        if val is not None:
            merged[_ALIASES.get(key, key)] = val

    unknown = [key for key in merged if key not in _KNOWN]
    if unknown:
        raise ConfigError(unknown, "unknown keys")
    missing = [key for key in ("kind", "k") if key not in merged]
    if missing:
        raise ConfigError(["family" if m == "kind" else m for m in missing],
                          "family and k are required")

    bad: dict[str, str] = {}
    values: dict[str, Any] = {}
    for key, val in merged.items():
        try:
            values[key] = _coerce(key, val)
        except (TypeError, ValueError):
            bad[key] = f"cannot parse {val!r}"
    if bad:
        raise ConfigError(bad, "; ".join(f"{k}: {m}" for k, m in bad.items()))

    values.setdefault("t", values["k"] + 2)
    checks = {
        "k": values["k"] >= 0,
        "t": values["t"] >= 1,
        "random_budget": values.get("random_budget", 1) >= 0,
        "len_max": values.get("len_max", 0) >= 0,
        "stage3_max_minors": values.get("stage3_max_minors", 1) >= 0,
        "workers": values.get("workers", 1) >= 1,
        "checkpoint_interval": values.get("checkpoint_interval", 0) >= 0,
        "node_budget": values.get("node_budget", 0) >= 0,
        "dedupe": values.get("dedupe", "permutation") in DEDUPE_MODES,
        "audit_rate": 0.0 <= values.get("audit_rate", 0.0) <= 1.0,
    }
    failed = [key for key, ok in checks.items() if not ok]
    if failed:
        raise ConfigError(failed, ", ".join(f"{k}={values[k]!r}" for k in failed))
    return Config(**values)


def _coerce(key: str, val: Any) -> Any:
    if key == "kind":
        return Kind(str(val).lower())
    if key in _INT_KEYS:
        if isinstance(val, bool):
            raise ValueError
        return int(val)
    if key == "audit_rate":
        return float(val)
    return None if val in ("", "none", "None") and key != "dedupe" else str(val)


def replace(cfg: Config, **changes) -> Config:
    return dataclasses.replace(cfg, **changes)
