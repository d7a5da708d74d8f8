"""Honeycomb lattice geometry.

Sites are addressed as ``(a, b, sub)`` where ``sub`` is 0 for the A
sublattice and 1 for B.  With lattice vectors ``u = (3/2, sqrt(3)/2)`` and
``w = (3/2, -sqrt(3)/2)``::

    embed(A(a, b)) = a*u + b*w
    embed(B(a, b)) = embed(A(a, b)) + (1, 0)

so every A site is the left end of a horizontal bond and its B partner the
right end.  Directions are integers ``k`` in ``0..5`` meaning the unit vector
at ``60*k`` degrees.  Even directions leave A sites, odd ones leave B sites.

Hexagonal faces are indexed so that ``F(i, j)`` has vertices (counter
clockwise) ``A(i,j), B(i,j), A(i+1,j), B(i+1,j-1), A(i+1,j-1), B(i,j-1)``.
The colour ``(i - j) mod 3`` three-colours the faces and every site touches
one face of each colour.
"""

from __future__ import annotations

import math
from typing import NamedTuple

A = 0
B = 1

H_MINUS = "H-"
H_PLUS = "H+"

SQRT3_2 = math.sqrt(3.0) / 2.0


class IllegalDirection(ValueError):
    pass


class SiteCoord(NamedTuple):
    a: int
    b: int
    sub: int  # 0 = A, 1 = B

    def __str__(self) -> str:
        return f"{'AB'[self.sub]}({self.a},{self.b})"


class FaceCoord(NamedTuple):
    i: int
    j: int


ORIGIN = SiteCoord(0, 0, A)

# Displacement in (da, db, new_sub) per direction, for A and B sites.
_STEP_FROM_A = {0: (0, 0), 2: (0, -1), 4: (-1, 0)}
_STEP_FROM_B = {3: (0, 0), 5: (0, 1), 1: (1, 0)}

# Unit vectors, used only for floating point checks.
UNIT = tuple((math.cos(math.pi * k / 3), math.sin(math.pi * k / 3)) for k in range(6))


def is_legal(site: SiteCoord, d: int) -> bool:
    return (d & 1) == site.sub


def neighbor(site: SiteCoord, d: int) -> SiteCoord:
    """Adjacent site reached by moving one bond in direction ``d``."""
    a, b, sub = site
    if sub == A:
        delta = _STEP_FROM_A.get(d)
    else:
        delta = _STEP_FROM_B.get(d)
    if delta is None:
        raise IllegalDirection(f"direction {d} is not legal at {site}")
    return SiteCoord(a + delta[0], b + delta[1], 1 - sub)


def opposite(d: int) -> int:
    return (d + 3) % 6


def rotate(d: int, orientation: int) -> int:
    """Rotate a direction by 60 degrees: +1 turns right (clockwise), -1 left."""
    if orientation == 1:
        return (d + 5) % 6
    if orientation == -1:
        return (d + 1) % 6
    raise ValueError(f"orientation must be +1 or -1, got {orientation!r}")


def embed(site: SiteCoord) -> tuple[float, float]:
    a, b, sub = site
    return (1.5 * (a + b) + sub, SQRT3_2 * (a - b))


def norm_sq(site: SiteCoord) -> float:
    """Squared distance from the origin, computed exactly then converted.

    ``|embed|^2 = (3(a+b)/2 + sub)^2 + 3(a-b)^2/4``; multiplying by 4 keeps
    everything integral.
    """
    a, b, sub = site
    s = 3 * (a + b) + 2 * sub
    d = a - b
    return (s * s + 3 * d * d) / 4.0


def site_class(site: SiteCoord) -> str:
    return H_MINUS if site.sub == A else H_PLUS


def mirror_x(site: SiteCoord) -> SiteCoord:
    """Reflection through the vertical line x = 1/2 (swaps A(0,0) and B(0,0))."""
    a, b, sub = site
    return SiteCoord(-b, -a, 1 - sub)


def face_vertices(face: FaceCoord) -> tuple[SiteCoord, ...]:
    i, j = face
    return (
        SiteCoord(i, j, A),
        SiteCoord(i, j, B),
        SiteCoord(i + 1, j, A),
        SiteCoord(i + 1, j - 1, B),
        SiteCoord(i + 1, j - 1, A),
        SiteCoord(i, j - 1, B),
    )


def face_color(face: FaceCoord) -> int:
    return (face.i - face.j) % 3


def incident_faces(site: SiteCoord) -> tuple[FaceCoord, FaceCoord, FaceCoord]:
    a, b, sub = site
    if sub == A:
        return (FaceCoord(a, b), FaceCoord(a - 1, b), FaceCoord(a - 1, b + 1))
    return (FaceCoord(a, b), FaceCoord(a, b + 1), FaceCoord(a - 1, b + 1))


def shaded_face_of(site: SiteCoord, color_class: int = 0) -> FaceCoord:
    """The unique incident face of colour ``color_class``."""
    for face in incident_faces(site):
        if face_color(face) == color_class % 3:
            return face
    raise AssertionError("incident faces must cover all three colours")


def _shaded_face_fast(a: int, b: int, sub: int, color_class: int) -> tuple[int, int]:
    # Closed form of shaded_face_of; mirrored in the numba kernel.
    c = (a - b - color_class) % 3
    if sub == A:
        # faces F(a,b), F(a-1,b), F(a-1,b+1) have colours c0, c0-1, c0-2
        if c == 0:
            return a, b
        if c == 1:
            return a - 1, b
        return a - 1, b + 1
    # faces F(a,b), F(a,b+1), F(a-1,b+1) have colours c0, c0-1, c0-2
    if c == 0:
        return a, b
    if c == 1:
        return a, b + 1
    return a - 1, b + 1


# -- integer keys ---------------------------------------------------------
#
# Trajectory logs and hash inputs use a single int64 per site:
#   key = a * 2**33 + b * 2 + sub
# which is injective for |a| < 2**29 and |b| < 2**31.

def site_key(site: SiteCoord) -> int:
    return site.a * (1 << 33) + site.b * 2 + site.sub


def decode_keys(keys):
    """``(a, b, sub)`` from a key or an int64 array of keys."""
    sub = keys & 1
    rest = keys >> 1
    b = ((rest + (1 << 31)) & 0xFFFFFFFF) - (1 << 31)
    a = (rest - b) >> 32
    return a, b, sub


def key_site(key: int) -> SiteCoord:
    return SiteCoord(*decode_keys(key))


def face_key(face: FaceCoord) -> int:
    return face.i * (1 << 32) + face.j


ORIGIN_KEY = 0
