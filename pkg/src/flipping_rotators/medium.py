"""Scatterer configurations over the infinite honeycomb lattice.

Initial orientations are never stored: each one is a pure function of the
master seed and the site (or, for the correlated admissible model, of the
shaded face containing the site).  A :class:`Medium` only remembers how many
times each site has been visited, which is all the flip rule needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence, TextIO

import numpy as np

from .hashing import MASK64, hash_key, threshold
from .lattice import (
    H_MINUS,
    H_PLUS,
    FaceCoord,
    SiteCoord,
    _shaded_face_fast,
    face_key,
    site_class,
    site_key,
)

LEFT = -1
RIGHT = 1

IID = "iid"
FAMILY = "family"
ADMISSIBLE = "admissible"
HOMOGENEOUS = "homogeneous"
EXPLICIT = "explicit"

KINDS = (IID, FAMILY, ADMISSIBLE, HOMOGENEOUS, EXPLICIT)


class UnknownClass(KeyError):
    pass


def example5_f1(p: float) -> float:
    return 0.5 * math.cos(0.5 * math.pi * p)


def example5_f2(p: float) -> float:
    return 1.0 - 0.5 * math.cos(0.5 * math.pi * p)


@dataclass(frozen=True)
class MediumSpec:
    """Immutable description of how a medium's initial configuration is drawn.

    Use the classmethod constructors rather than filling fields by hand.
    """

    kind: str
    p: float | None = None
    seed: int = 0
    functions: tuple[Callable[[float], float], ...] = ()
    assignment: Mapping[str, int] = field(default_factory=dict)
    color_class: int = 0
    orientation: int = LEFT
    table: Mapping[SiteCoord, int] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown medium kind {self.kind!r}")
        if self.kind in (IID, FAMILY, ADMISSIBLE):
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError(f"{self.kind} medium needs p in [0, 1], got {self.p!r}")
        if self.orientation not in (LEFT, RIGHT):
            raise ValueError("orientation must be -1 or +1")
        object.__setattr__(self, "seed", int(self.seed) & MASK64)

    # -- constructors -----------------------------------------------------

    @classmethod
    def iid(cls, p: float, seed: int = 0) -> "MediumSpec":
        return cls(IID, p=p, seed=seed, name="iid")

    @classmethod
    def family(
        cls,
        p: float,
        functions: Sequence[Callable[[float], float]],
        assignment: Mapping[str, int],
        seed: int = 0,
        name: str = "family",
    ) -> "MediumSpec":
        return cls(FAMILY, p=p, seed=seed, functions=tuple(functions),
                   assignment=dict(assignment), name=name)

    @classmethod
    def example5(cls, p: float, seed: int = 0) -> "MediumSpec":
        """H+ sites use f1(p) = cos(pi p / 2) / 2, H- sites use f2 = 1 - f1."""
        return cls.family(p, (example5_f1, example5_f2), {H_PLUS: 0, H_MINUS: 1},
                          seed=seed, name="family")

    @classmethod
    def admissible(cls, p: float, seed: int = 0, color_class: int = 0) -> "MediumSpec":
        return cls(ADMISSIBLE, p=p, seed=seed, color_class=color_class % 3, name="admissible")

    @classmethod
    def homogeneous(cls, orientation: int) -> "MediumSpec":
        name = "all-right" if orientation == RIGHT else "all-left"
        return cls(HOMOGENEOUS, orientation=orientation, name=name)

    @classmethod
    def explicit(cls, table: Mapping[SiteCoord, int], default: int = LEFT,
                 seed: int = 0) -> "MediumSpec":
        """Orientations listed in ``table``; every other site uses ``default``."""
        for o in table.values():
            if o not in (LEFT, RIGHT):
                raise ValueError("orientations must be -1 or +1")
        return cls(EXPLICIT, seed=seed, orientation=default,
                   table={SiteCoord(*s): o for s, o in table.items()}, name="explicit")

    # -- probabilities ------------------------------------------------------

    def right_probability(self, site: SiteCoord) -> float:
        """Marginal probability that ``site`` starts as a right rotator."""
        if self.kind == IID or self.kind == ADMISSIBLE:
            return self.p
        if self.kind == FAMILY:
            return family_probability(self, site)
        if self.kind == HOMOGENEOUS:
            return 1.0 if self.orientation == RIGHT else 0.0
        return 1.0 if self.table.get(site, self.orientation) == RIGHT else 0.0

    def kernel_params(self):
        """Flattened parameters understood by :mod:`flipping_rotators.engine`."""
        empty_keys = np.zeros(0, dtype=np.int64)
        empty_vals = np.zeros(0, dtype=np.int8)
        if self.kind == EXPLICIT:
            items = sorted((site_key(s), o) for s, o in self.table.items())
            keys = np.array([k for k, _ in items], dtype=np.int64)
            vals = np.array([o for _, o in items], dtype=np.int8)
            return (2, np.uint64(self.seed), np.uint64(0), np.uint64(0), False, False,
                    0, keys, vals, self.orientation)
        if self.kind == HOMOGENEOUS:
            always = self.orientation == RIGHT
            return (0, np.uint64(self.seed), np.uint64(0), np.uint64(0), always, always,
                    0, empty_keys, empty_vals, self.orientation)
        if self.kind == ADMISSIBLE:
            thr, always = threshold(self.p)
            return (1, np.uint64(self.seed), np.uint64(thr), np.uint64(thr), always, always,
                    self.color_class, empty_keys, empty_vals, LEFT)
        thr_a, always_a = threshold(self.right_probability(SiteCoord(0, 0, 0)))
        thr_b, always_b = threshold(self.right_probability(SiteCoord(0, 0, 1)))
        return (0, np.uint64(self.seed), np.uint64(thr_a), np.uint64(thr_b), always_a, always_b,
                0, empty_keys, empty_vals, LEFT)

    def header(self) -> str:
        p = "none" if self.p is None else repr(float(self.p))
        return f"# medium-snapshot v1 seed={self.seed} kind={self.name or self.kind} p={p}"


def family_probability(spec: MediumSpec, site: SiteCoord) -> float:
    if spec.kind != FAMILY:
        raise ValueError("family_probability needs a family medium")
    cls = site_class(site)
    try:
        index = spec.assignment[cls]
    except KeyError:
        raise UnknownClass(cls) from None
    value = spec.functions[index](spec.p)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"f_{index}({spec.p}) = {value} is not a probability")
    return value


def _below(h: int, prob: float) -> bool:
    thr, always = threshold(prob)
    return always or h < thr


def initial_orientation(spec: MediumSpec, site: SiteCoord) -> int:
    """Deterministic initial orientation of ``site`` under ``spec``."""
    kind = spec.kind
    if kind == HOMOGENEOUS:
        return spec.orientation
    if kind == EXPLICIT:
        return spec.table.get(site, spec.orientation)
    if kind == ADMISSIBLE:
        i, j = _shaded_face_fast(site.a, site.b, site.sub, spec.color_class)
        h = hash_key(spec.seed, face_key(FaceCoord(i, j)))
        return RIGHT if _below(h, spec.p) else LEFT
    h = hash_key(spec.seed, site_key(site))
    return RIGHT if _below(h, spec.right_probability(site)) else LEFT


class Medium:
    """Initial configuration plus the record of visits made so far.

    ``current(h) = initial(h) * (-1) ** visits(h)``; ``dirty_count`` is the
    number of sites whose orientation differs from the initial one.
    """

    def __init__(self, spec: MediumSpec):
        self.spec = spec
        self.visits: dict[SiteCoord, int] = {}
        self.flipped: set[SiteCoord] = set()
        self._initial: dict[SiteCoord, int] = {}

    def initial(self, site: SiteCoord) -> int:
        o = self._initial.get(site)
        if o is None:
            o = initial_orientation(self.spec, site)
            self._initial[site] = o
        return o

    def current(self, site: SiteCoord) -> int:
        o = self.initial(site)
        return -o if site in self.flipped else o

    def record_visit(self, site: SiteCoord, delta: int = 1) -> None:
        """Count a visit (``delta=-1`` undoes one); flips the scatterer either way."""
        n = self.visits.get(site, 0) + delta
        if n:
            self.visits[site] = n
        else:
            self.visits.pop(site, None)
        if site in self.flipped:
            self.flipped.discard(site)
        else:
            self.flipped.add(site)

    @property
    def dirty_count(self) -> int:
        return len(self.flipped)

    def visit_count(self, site: SiteCoord) -> int:
        return self.visits.get(site, 0)

    def copy(self) -> "Medium":
        m = Medium(self.spec)
        m.visits = dict(self.visits)
        m.flipped = set(self.flipped)
        m._initial = self._initial
        return m

    def orientation_state(self) -> frozenset:
        """Hashable summary of everything that differs from the initial medium."""
        return frozenset(self.flipped)

    def snapshot(self, region: Iterable[SiteCoord]) -> "Snapshot":
        return Snapshot(self.spec.header(), {s: self.current(s) for s in map(_as_site, region)})


def current_orientation(medium: Medium, site: SiteCoord) -> int:
    return medium.current(site)


def record_visit(medium: Medium, site: SiteCoord) -> None:
    medium.record_visit(site)


def _as_site(s) -> SiteCoord:
    return s if isinstance(s, SiteCoord) else SiteCoord(*s)


@dataclass
class Snapshot:
    header: str
    table: dict[SiteCoord, int]

    def restore(self, default: int = LEFT) -> Medium:
        return Medium(MediumSpec.explicit(self.table, default=default))

    def dump(self, fh: TextIO) -> None:
        fh.write(self.header + "\n")
        for s in sorted(self.table):
            fh.write(f"{s.a} {s.b} {'AB'[s.sub]} {'R' if self.table[s] == RIGHT else 'L'}\n")

    def dumps(self) -> str:
        import io

        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "Snapshot":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# medium-snapshot v1"):
            raise ValueError("missing medium-snapshot header")
        table = {}
        for n, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4 or parts[2] not in ("A", "B") or parts[3] not in ("L", "R"):
                raise ValueError(f"line {n}: malformed snapshot record {line!r}")
            site = SiteCoord(int(parts[0]), int(parts[1]), "AB".index(parts[2]))
            table[site] = RIGHT if parts[3] == "R" else LEFT
        return cls(lines[0], table)
