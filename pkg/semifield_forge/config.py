from __future__ import annotations

import functools
import os
import re

from pydantic import BaseModel, ConfigDict

from .errors import InvalidParams

__all__ = ("Settings", "get_settings", "BOUND_ENV_VAR")

BOUND_ENV_VAR = "SEMIFIELD_FORGE_BOUND"

_POWER_RE = re.compile(r"^\s*(\d+)\s*(?:\*\*|\^)\s*(\d+)\s*$")


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    size_bound: int = 2**20
    table_bound: int = 3**6
    random_pairs: int = 1000

    @classmethod
    def from_env(cls) -> Settings:
        raw = os.environ.get(BOUND_ENV_VAR)
        if raw is None or not raw.strip():
            return cls()
        return cls(size_bound=_parse_bound(raw))

    def with_field_bits(self, bits: int | None) -> Settings:
        if bits is None:
            return self
        if bits < 1:
            raise InvalidParams(f"`max_field_bits` must be positive, got {bits}")
        return self.model_copy(update={"size_bound": 2**bits})


def _parse_bound(raw: str) -> int:
    match = _POWER_RE.match(raw)
    if match:
        value = int(match.group(1)) ** int(match.group(2))
    elif raw.strip().isdigit():
        value = int(raw)
    else:
        raise InvalidParams(f"`{BOUND_ENV_VAR}` must be an integer or a power like 2**20, got {raw!r}")
    if value < 2:
        raise InvalidParams(f"`{BOUND_ENV_VAR}` must be at least 2, got {value}")
    return value


@functools.lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.from_env()
