"""Run configuration: seed, worker count, output target and named tolerances.

A config file is optional; it holds ``key = value`` lines, ``#`` comments
allowed.  Keys are ``seed``, ``threads`` or any tolerance name below.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .sampling import DEFAULT_SEED, THREADS_ENV, resolve_threads

DEFAULT_TOLERANCES: dict[str, float] = {
    "equal_rtol": 1e-12,     # |g| below this times (s ell_n + ell_ns) counts as a tie
    "residual_tol": 1e-10,   # MLE score-equation residual
    "ratio_band": 0.05,      # asymptotic ratio band at the end of a regime path
    "ks_pass": 0.02,         # KS distance below which T is called normal
    "ks_fail": 0.1,          # KS distance above which T is called non-normal
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = DEFAULT_SEED
    threads: int = 1
    output: Path | None = None  # None means standard output
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance name(s): {', '.join(sorted(unknown))}")

    def tol(self, name: str) -> float:
        return self.tolerances[name]

    def override(self, name: str, value: str) -> None:
        if name == "seed":
            self.seed = _parse_seed(value)
        elif name == "threads":
            self.threads = resolve_threads(value)
        elif name in DEFAULT_TOLERANCES:
            try:
                self.tolerances[name] = float(value)
            except ValueError:
                raise ConfigError(f"tolerance {name} needs a number, got {value!r}") from None
        else:
            raise ConfigError(f"unknown setting {name!r}")


def _parse_seed(value: str) -> int:
    try:
        seed = int(value, 0)
    except ValueError:
        raise ConfigError(f"seed must be an integer, got {value!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def parse_assignment(line: str) -> tuple[str, str]:
    if "=" not in line:
        raise ConfigError(f"expected key=value, got {line!r}")
    key, value = line.split("=", 1)
    return key.strip(), value.strip()


def load_config(path: str | os.PathLike | None = None, env: dict | None = None) -> RunConfig:
    """Defaults, then the environment thread count, then the file at ``path``."""
    env = os.environ if env is None else env
    cfg = RunConfig()
    if env.get(THREADS_ENV):
        cfg.threads = resolve_threads(env[THREADS_ENV])
    if path is not None:
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                cfg.override(*parse_assignment(line))
    return cfg
