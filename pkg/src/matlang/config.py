from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .scalars import Tower

DEFAULT_EPS = 1e-9
DEFAULT_DELTA = 1e-6


@dataclass(frozen=True)
class EvalConfig:
    """Numeric tower plus the zero/equality tolerance ``eps`` and the
    eigenvalue-grouping tolerance ``delta`` (both used by the float tower only)."""

    tower: Tower = Tower.FLOAT
    eps: float = DEFAULT_EPS
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not (self.eps > 0 and self.delta > 0):
            raise ValueError("eps and delta must be positive")

    @property
    def exact(self) -> bool:
        return self.tower is Tower.EXACT

    def with_tower(self, tower: Tower) -> EvalConfig:
        return replace(self, tower=tower)

    @classmethod
    def from_env(cls, tower: Tower = Tower.FLOAT, **overrides) -> EvalConfig:
        """Defaults, then ``MATLANG_EPS`` / ``MATLANG_DELTA``, then explicit overrides."""
        kw = {"tower": tower}
        if "MATLANG_EPS" in os.environ:
            kw["eps"] = float(os.environ["MATLANG_EPS"])
        if "MATLANG_DELTA" in os.environ:
            kw["delta"] = float(os.environ["MATLANG_DELTA"])
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)


EXACT = EvalConfig(Tower.EXACT)
FLOAT = EvalConfig(Tower.FLOAT)
