"""Level-index ("tower") numbers for moduli far beyond double range.

A positive value is stored as ``exp^height(mant)``.  Canonical form keeps
``height == 0`` whenever the value fits in a double; otherwise
``EXP_CAP < mant <= exp(EXP_CAP)``, so ordering is lexicographic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

EXP_CAP = 709.0
_BIG = math.exp(EXP_CAP)


def _li0(x):
    """Level-index of a non-negative float."""
    if x < 0:
        return x
    lev = 0
    while x >= 1.0:
        x = math.log(x)
        lev += 1
    return lev + x


@dataclass(frozen=True)
class Tower:
    height: int
    mant: float

    def __post_init__(self):
        h, m = self.height, self.mant
        while h > 0 and m <= EXP_CAP:
            m = math.exp(m)
            h -= 1
        if not math.isfinite(m):
            raise ValueError("non-finite tower mantissa")
        while m > _BIG:
            m = math.log(m)
            h += 1
        object.__setattr__(self, "height", h)
        object.__setattr__(self, "mant", m)

    @classmethod
    def of(cls, x) -> "Tower":
        return x if isinstance(x, Tower) else cls(0, float(x))

    @classmethod
    def from_log(cls, lg) -> "Tower":
        return cls.of(lg).exp()

    # -- arithmetic ----------------------------------------------------
    def exp(self) -> "Tower":
        if self.height == 0:
            if self.mant <= EXP_CAP:
                return Tower(0, math.exp(self.mant))
            return Tower(1, self.mant)
        return Tower(self.height + 1, self.mant)

    def log(self) -> "Tower":
        if self.height == 0:
            return Tower(0, math.log(self.mant))
        if self.height == 1:
            return Tower(0, self.mant)
        return Tower(self.height - 1, self.mant)

    def add(self, a: float) -> "Tower":
        """value + a for a float a (absorbed once the value is huge)."""
        if self.height == 0:
            return Tower(0, self.mant + a)
        if self.height == 1:
            return Tower(1, self.mant + math.log1p(a * math.exp(-self.mant)))
        return self

    def scale(self, c: float) -> "Tower":
        """value * c for a float c > 0."""
        if self.height == 0:
            v = self.mant * c
            if math.isfinite(v):
                return Tower(0, v)
            return Tower(1, math.log(self.mant) + math.log(c))
        if self.height == 1:
            return Tower(1, self.mant + math.log(c))
        return self

    # -- views ---------------------------------------------------------
    def __float__(self):
        return self.mant if self.height == 0 else math.inf

    def level_index(self) -> float:
        if self.height == 0:
            return _li0(self.mant)
        return self.height + _li0(self.mant)

    def _key(self):
        return (self.height, self.mant)

    def __lt__(self, other):
        other = Tower.of(other)
        if self.height == 0 and other.height == 0:
            return self.mant < other.mant
        return self._key() < other._key()

    def __le__(self, other):
        return not Tower.of(other) < self

    def __gt__(self, other):
        return Tower.of(other) < self

    def __ge__(self, other):
        return not self < Tower.of(other)

    def __eq__(self, other):
        if not isinstance(other, (Tower, int, float)):
            return NotImplemented
        return self._key() == Tower.of(other)._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        if self.height == 0:
            return f"Tower({self.mant!r})"
        return f"Tower(exp^{self.height}({self.mant!r}))"


def level_index(x) -> float:
    return Tower.of(x).level_index()
