"""Hexagon configurations, their dihedral classes and admissible media.

A face configuration is the six orientations of its vertices read counter
clockwise from the face's ``A(i, j)`` vertex, written as a string over
``L``/``R`` (``"LLLLLL"`` is the all-left face).  Two configurations are in
the same class when a rotation or reflection of the hexagon maps one onto the
other; a class is named by its lexicographically smallest member.

Which classes count as admissible is data, held in a :class:`ClassTable`.
Two tables are shipped.  Both contain the homogeneous faces, the alternating
face, and the two-right (and two-left) face with the rights opposite each
other.  They differ in the remaining two-right class: ``adjacent`` (the
default) admits the faces whose two rights are neighbours, ``meta`` the faces
whose rights sit one vertex apart.  Only ``adjacent`` contains every face of
a fresh admissible medium, whose unshaded faces always show the orientations
in neighbouring pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from math import comb
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np

from .lattice import FaceCoord, face_vertices
from .medium import RIGHT, Medium

ADMISSIBLE = "admissible"
NONADMISSIBLE = "nonadmissible"

ALL_CONFIGS: tuple[str, ...] = tuple("".join(c) for c in product("LR", repeat=6))


class InvalidTable(ValueError):
    pass


def dihedral_images(config: str) -> list[str]:
    """The 12 images of ``config`` under rotations and reflections (with repeats)."""
    _check(config)
    rots = [config[s:] + config[:s] for s in range(6)]
    rev = config[::-1]
    refl = [rev[s:] + rev[:s] for s in range(6)]
    return rots + refl


def _check(config: str) -> None:
    if len(config) != 6 or set(config) - {"L", "R"}:
        raise ValueError(f"not a hexagon configuration: {config!r}")


def canonicalize(config: str) -> str:
    return min(dihedral_images(config))


def flip(config: str) -> str:
    """Exchange left and right at every vertex."""
    return config.translate(str.maketrans("LR", "RL"))


def right_count(config: str) -> int:
    return config.count("R")


@lru_cache(maxsize=None)
def orbits() -> dict[str, tuple[str, ...]]:
    """Canonical representative -> sorted members, over all 64 configurations."""
    out: dict[str, list[str]] = {}
    for c in ALL_CONFIGS:
        out.setdefault(canonicalize(c), []).append(c)
    return {k: tuple(sorted(v)) for k, v in sorted(out.items())}


def config_index(config: str) -> int:
    """Bit ``i`` is set when vertex ``i`` is a right rotator."""
    return sum(1 << i for i, ch in enumerate(config) if ch == "R")


@dataclass(frozen=True)
class ClassTable:
    admissible: frozenset
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        reps = set(orbits())
        unknown = set(self.admissible) - reps
        if unknown:
            raise InvalidTable(f"not canonical representatives: {sorted(unknown)}")
        for rep in self.admissible:
            if canonicalize(flip(rep)) not in self.admissible:
                raise InvalidTable(f"{rep} is admissible but its left-right flip is not")

    # -- shipped tables -------------------------------------------------------

    @classmethod
    def builtin(cls, name: str = "adjacent") -> "ClassTable":
        if name not in _BUILTIN:
            raise KeyError(f"unknown table {name!r}; choose from {sorted(_BUILTIN)}")
        return cls(frozenset(canonicalize(c) for c in _BUILTIN[name]), name=name)

    @classmethod
    def default(cls) -> "ClassTable":
        return cls.builtin("adjacent")

    # -- queries ----------------------------------------------------------------

    def is_admissible(self, config: str) -> bool:
        return canonicalize(config) in self.admissible

    def mask(self) -> np.ndarray:
        """Boolean lookup indexed by :func:`config_index`."""
        m = np.zeros(64, dtype=bool)
        for c in ALL_CONFIGS:
            m[config_index(c)] = self.is_admissible(c)
        return m

    def counts_by_rights(self) -> tuple[int, ...]:
        n = [0] * 7
        for c in ALL_CONFIGS:
            if self.is_admissible(c):
                n[right_count(c)] += 1
        return tuple(n)

    # -- file format ----------------------------------------------------------------

    def dumps(self) -> str:
        lines = [f"{rep} {ADMISSIBLE if rep in self.admissible else NONADMISSIBLE}"
                 for rep in orbits()]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, name: str = "custom") -> "ClassTable":
        """Parse ``<LLRLRR> <admissible|nonadmissible>`` lines.

        Every class must appear exactly once under its canonical name; blank
        lines and ``#`` comments are ignored.
        """
        seen: dict[str, bool] = {}
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in (ADMISSIBLE, NONADMISSIBLE):
                raise InvalidTable(f"line {n}: expected '<config> admissible|nonadmissible'")
            rep = parts[0]
            try:
                canon = canonicalize(rep)
            except ValueError as exc:
                raise InvalidTable(f"line {n}: {exc}") from None
            if canon != rep:
                raise InvalidTable(f"line {n}: {rep} is not canonical (use {canon})")
            if rep in seen:
                raise InvalidTable(f"line {n}: class {rep} listed twice")
            seen[rep] = parts[1] == ADMISSIBLE
        missing = set(orbits()) - set(seen)
        if missing:
            raise InvalidTable(f"classes missing from table: {sorted(missing)}")
        return cls(frozenset(r for r, ok in seen.items() if ok), name=name)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ClassTable":
        p = Path(path)
        return cls.loads(p.read_text(), name=p.stem)


_BUILTIN = {
    "adjacent": ("LLLLLL", "RRRRRR", "RLRLRL", "RRLLLL", "RLLRLL", "LLRRRR", "LRRLRR"),
    "meta": ("LLLLLL", "RRRRRR", "RLRLRL", "RLRLLL", "RLLRLL", "LRLRRR", "LRRLRR"),
}


# -- media ------------------------------------------------------------------------

def face_config(medium: Medium, face: FaceCoord) -> str:
    """Current orientations around ``face``, counter clockwise from ``A(i, j)``."""
    return "".join("R" if medium.current(s) == RIGHT else "L" for s in face_vertices(face))


@dataclass(frozen=True)
class RegionCheck:
    admissible: bool
    offending: Optional[FaceCoord] = None
    config: Optional[str] = None

    def __bool__(self) -> bool:
        return self.admissible


def is_admissible_region(medium: Medium, faces: Iterable[FaceCoord],
                         table: Optional[ClassTable] = None) -> RegionCheck:
    """First face (in the given order) whose configuration is not admissible."""
    table = table or ClassTable.default()
    for f in faces:
        f = FaceCoord(*f)
        cfg = face_config(medium, f)
        if not table.is_admissible(cfg):
            return RegionCheck(False, f, cfg)
    return RegionCheck(True)


def faces_in_box(radius: int) -> list[FaceCoord]:
    return [FaceCoord(i, j) for i in range(-radius, radius + 1)
            for j in range(-radius, radius + 1)]


# -- probabilities ------------------------------------------------------------------

def admissible_polynomial(table: Optional[ClassTable] = None) -> tuple[int, ...]:
    """Integer coefficients ``c_0..c_6`` of P(p) = sum c_m p^m."""
    counts = (table or ClassTable.default()).counts_by_rights()
    coef = [0] * 7
    for k, n in enumerate(counts):
        # n * p^k * (1 - p)^(6 - k)
        for j in range(7 - k):
            coef[k + j] += n * comb(6 - k, j) * (-1) ** j
    return tuple(coef)


def admissible_probability(p: float, table: Optional[ClassTable] = None) -> float:
    """Probability that an IID(p) hexagon is admissible."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    counts = (table or ClassTable.default()).counts_by_rights()
    return sum(n * p ** k * (1.0 - p) ** (6 - k) for k, n in enumerate(counts))


def sample_admissible_rate(p: float, n: int, seed: int = 0,
                           table: Optional[ClassTable] = None) -> float:
    """Monte Carlo estimate of :func:`admissible_probability` from ``n`` hexagons."""
    rng = np.random.default_rng(seed)
    bits = rng.random((n, 6)) < p
    idx = bits @ (1 << np.arange(6))
    return float((table or ClassTable.default()).mask()[idx].mean())
