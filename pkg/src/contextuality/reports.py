"""Small check-report containers returned by validation routines."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CheckEntry:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass(frozen=True)
class CheckReport:
    entries: tuple[CheckEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_residual(self) -> float:
        return max((e.residual for e in self.entries), default=0.0)

    def failures(self) -> tuple[CheckEntry, ...]:
        return tuple(e for e in self.entries if not e.passed)
