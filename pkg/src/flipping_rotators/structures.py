"""Online detection of loops, reflectors, semi-reflectors and their fate.

A reflecting structure is two consecutive loops at a common base
(``T[t1, t*]`` and ``T[t*, t2]``) in which each loop passes through the two
distinct base neighbours ``r(t1+1)`` and ``r(t2-1)`` exactly once, and whose sites
were never visited before ``t1``.  If some earlier visit exists the same
shape is a semi-reflector, characterised by the last such time ``tau``;
shapes with ``tau == t1 - 1`` (the entry site lies on a loop) are skipped
because nothing forces the particle to leave the way it came in.

Detection happens when the base is visited for the third time, so records
carry both the encounter time ``t1`` and the confirmation time ``t2``.
Positions are handled as integer site keys (see
:func:`flipping_rotators.lattice.site_key`).
"""

from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dynamics import PERIODIC
from .lattice import SiteCoord, decode_keys, key_site, site_key

REFLECTING = "reflecting"
SEMI_REFLECTING = "semi-reflecting"

ACTIVE = "active"
TRANSFORMED = "transformed"
ANNIHILATED = "annihilated"
RETIRED = "retired-by-periodicity"

LOOP_CLOSED = "LoopClosed"
REFLECTOR_CONFIRMED = "ReflectorConfirmed"
SEMI_REFLECTOR_CONFIRMED = "SemiReflectorConfirmed"
TRANSFORM_TRAVERSED = "TransformTraversed"
ANNIHILATION = "Annihilation"
ORIGIN_RETURN = "OriginReturn"
PERIOD_DETECTED = "PeriodDetected"


class OutOfOrderInput(ValueError):
    pass


class InsufficientLog(ValueError):
    pass


class PreconditionUnmet(ValueError):
    pass


@dataclass(eq=False)
class ReflectorRecord:
    id: int
    base: int
    t1: int
    t_star: int
    t2: int
    kind: str
    tau: Optional[int] = None
    status: str = ACTIVE
    annihilated_at: Optional[int] = None
    seq: tuple = ()
    sites: frozenset = frozenset()
    watch_start: int = 0
    traversals: list = field(default_factory=list)

    @property
    def base_site(self) -> SiteCoord:
        return key_site(self.base)

    @property
    def live(self) -> bool:
        return self.kind == REFLECTING and self.status in (ACTIVE, TRANSFORMED)


@dataclass
class StructureEvent:
    time: int
    kind: str
    record: Optional[ReflectorRecord] = None
    confirmed: int = -1
    span: Optional[tuple[int, int]] = None
    status: Optional[str] = None

    def __post_init__(self):
        if self.confirmed < 0:
            self.confirmed = self.time
        if self.status is None and self.record is not None:
            self.status = self.record.status

    def to_dict(self) -> dict:
        rec = self.record
        base = key_site(rec.base) if rec is not None else None
        if self.kind == TRANSFORM_TRAVERSED:
            t1, t2 = self.span
            t_star = None
        elif rec is not None:
            t1, t_star, t2 = rec.t1, rec.t_star, rec.t2
        else:
            t1 = t_star = t2 = None
        return {
            "time": self.time,
            "kind": self.kind,
            "base": None if base is None else {"a": base.a, "b": base.b, "sub": "AB"[base.sub]},
            "t1": t1,
            "tStar": t_star,
            "t2": t2,
            "tau": None if rec is None else rec.tau,
            "status": self.status,
            "record": None if rec is None else rec.id,
            "confirmed": self.confirmed,
        }


class StructureAnalyzer:
    """Feed positions in time order; collects :class:`StructureEvent` objects.

    ``emit_loops`` additionally records every closed loop, which is noisy and
    off by default.
    """

    def __init__(self, emit_loops: bool = False):
        self.log: list[int] = []
        self._prev = np.empty(1024, dtype=np.int64)
        self.visits: dict[int, list[int]] = {}
        self.records: list[ReflectorRecord] = []
        self.events: list[StructureEvent] = []
        self.emit_loops = emit_loops
        self.max_live = 0
        self._members: dict[int, list[ReflectorRecord]] = {}
        self._by_base: dict[int, list[ReflectorRecord]] = {}
        self._pending: dict[int, list] = {}
        self._encounters: list[int] = []

    # -- input --------------------------------------------------------------

    def feed(self, position: SiteCoord, time: int) -> list[StructureEvent]:
        return self.feed_key(site_key(position), time)

    def feed_keys(self, keys: Iterable[int], start: int = 0) -> None:
        t = start
        for k in keys:
            self.feed_key(k, t)
            t += 1

    def feed_key(self, key: int, t: int) -> list[StructureEvent]:
        if t != len(self.log):
            raise OutOfOrderInput(f"expected time {len(self.log)}, got {t}")
        log = self.log
        log.append(key)
        vl = self.visits.get(key)
        if vl is None:
            vl = self.visits[key] = []
        if t == self._prev.shape[0]:
            self._prev = np.concatenate([self._prev, np.empty_like(self._prev)])
        self._prev[t] = vl[-1] if vl else -1
        vl.append(t)
        out: list[StructureEvent] = []

        if t > 0 and key == log[0]:
            out.append(StructureEvent(t, ORIGIN_RETURN))
        if self._pending:
            self._advance_pending(key, t, out)
        recs = self._members.get(key)
        if recs:
            for rec in recs:
                if rec.live and rec.id not in self._pending and t > rec.watch_start:
                    if key == rec.base:
                        self._pending[rec.id] = [rec, t, 1]
                    else:
                        self._resolve_entry(rec, t, t, out)
        if len(vl) >= 2 and self.emit_loops:
            out.append(StructureEvent(t, LOOP_CLOSED, span=(vl[-2], t)))
        if len(vl) >= 3:
            self._check_candidate(vl[-3], vl[-2], t, out)
        if out:
            self.events.extend(out)
        return out

    # -- annihilation bookkeeping ------------------------------------------

    def _advance_pending(self, key: int, t: int, out) -> None:
        done = []
        for rid, entry in self._pending.items():
            rec, start, pos = entry
            expected = rec.seq[-1 - pos] if rec.status == ACTIVE else rec.seq[pos]
            if key != expected:
                done.append(rid)
                self._resolve_entry(rec, start, t, out)
                continue
            entry[2] = pos + 1
            if pos + 1 == len(rec.seq):
                done.append(rid)
        for rid in done:
            del self._pending[rid]

    def _resolve_entry(self, rec: ReflectorRecord, tau: int, now: int, out) -> None:
        """First entry into ``rec`` that is not a clean re-traversal."""
        protected = any(rec.watch_start < e <= tau for e in self._encounters)
        if protected:
            rec.watch_start = now
            return
        rec.status = ANNIHILATED
        rec.annihilated_at = tau
        out.append(StructureEvent(tau, ANNIHILATION, rec, confirmed=now))

    # -- reflector detection --------------------------------------------------

    def _count(self, key: int, lo: int, hi: int) -> int:
        vl = self.visits[key]
        return bisect_right(vl, hi) - bisect_left(vl, lo)

    def _check_candidate(self, t1: int, ts: int, t2: int, out) -> None:
        if t1 <= 0:
            return
        log = self.log
        y = log[t1 + 1]
        z = log[t2 - 1]
        if y == z:
            return
        c = self._count
        if not (c(y, t1, ts) == 1 and c(y, ts, t2) == 1
                and c(z, t1, ts) == 1 and c(z, ts, t2) == 1):
            return
        base = log[t1]
        n = t2 - t1 + 1
        for rec in self._by_base.get(base, ()):
            if len(rec.seq) == n and tuple(log[t1:t2 + 1]) == self._expected_traversal(rec):
                self._transform(rec, t1, t2, out)
                return
        if self._count(log[t1 - 1], t1, t2):
            # the entry site lies on the loops, so the exit direction is not
            # forced and the shape reflects nothing
            return
        # tau is the latest pre-t1 visit among the first visits inside the segment
        prev = self._prev[t1:t2 + 1]
        prev = prev[prev < t1]
        tau = int(prev.max()) if prev.size else -1
        reflecting = tau < 0
        seq = tuple(log[t1:t2 + 1]) if reflecting else ()
        sites = frozenset(seq)
        rec = ReflectorRecord(
            id=len(self.records), base=base, t1=t1, t_star=ts, t2=t2,
            kind=REFLECTING if reflecting else SEMI_REFLECTING,
            tau=None if reflecting else tau, seq=seq, sites=sites, watch_start=t2,
        )
        self.records.append(rec)
        if reflecting:
            self._by_base.setdefault(base, []).append(rec)
            for s in sites:
                self._members.setdefault(s, []).append(rec)
            self._encounters.append(t1)
            out.append(StructureEvent(t2, REFLECTOR_CONFIRMED, rec))
            self._update_live()
        else:
            out.append(StructureEvent(t2, SEMI_REFLECTOR_CONFIRMED, rec))

    @staticmethod
    def _expected_traversal(rec: ReflectorRecord) -> tuple:
        # each passage flips every scatterer, so passages alternate direction
        return rec.seq[::-1] if len(rec.traversals) % 2 == 0 else rec.seq

    def _transform(self, rec: ReflectorRecord, t1: int, t2: int, out) -> None:
        if rec.status == ANNIHILATED:
            return
        rec.status = TRANSFORMED if rec.status == ACTIVE else ACTIVE
        rec.watch_start = t2
        self._pending.pop(rec.id, None)
        self._encounters.append(t1)
        rec.traversals.append(((t1, t2), rec.status))
        out.append(StructureEvent(t2, TRANSFORM_TRAVERSED, rec, span=(t1, t2)))

    def _update_live(self) -> None:
        n = self.live_count()
        if n > self.max_live:
            self.max_live = n

    def live_count(self) -> int:
        return sum(1 for r in self.records if r.live)

    # -- output -------------------------------------------------------------

    def finish(self, kind: str, period: Optional[int] = None) -> None:
        if kind == PERIODIC and period is not None:
            self.events.append(StructureEvent(period, PERIOD_DETECTED))
            for r in self.records:
                if r.live:
                    r.status = RETIRED

    def reflectors(self) -> list[ReflectorRecord]:
        return [r for r in self.records if r.kind == REFLECTING]

    def semi_reflectors(self) -> list[ReflectorRecord]:
        return [r for r in self.records if r.kind == SEMI_REFLECTING]

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e.kind == kind)

    def write_jsonl(self, fh) -> None:
        for e in self.events:
            fh.write(json.dumps(e.to_dict()) + "\n")


def analyze(keys: Sequence[int], emit_loops: bool = False) -> StructureAnalyzer:
    an = StructureAnalyzer(emit_loops=emit_loops)
    an.feed_keys(keys.tolist() if isinstance(keys, np.ndarray) else keys)
    return an


# -- verification ------------------------------------------------------------

def check_reflecting_property(record: ReflectorRecord, log: Sequence[int]) -> bool:
    """``r(t2 + t) == r(t1 - t)`` over the range the structure guarantees.

    For reflectors the range is ``0 <= t <= t1``; for semi-reflectors it
    stops at ``t1 - tau``.
    """
    t1, t2 = record.t1, record.t2
    last = t1 if record.kind == REFLECTING else t1 - record.tau
    if len(log) <= t2 + last:
        raise InsufficientLog(f"need positions up to t={t2 + last}, have {len(log) - 1}")
    return all(log[t2 + t] == log[t1 - t] for t in range(last + 1))


def check_transform_property(record: ReflectorRecord, log: Sequence[int],
                             first_only: bool = True) -> bool:
    """Re-traversal ``T[t3, t4]`` of a reflector sends the particle home:
    ``r(t4 + t) == r(t1 - t)`` for ``0 <= t <= t1``.

    Only the first traversal is checked by default.  Later ones, and the
    transform of the second reflector of a trapping pair, can legitimately
    fail: the way home then crosses the other reflector in its altered state.
    Traversals whose follow-up is not yet in ``log`` are skipped.
    """
    if record.kind != REFLECTING:
        raise ValueError("transforms are defined for reflecting structures only")
    t1 = record.t1
    travs = record.traversals[:1] if first_only else record.traversals
    for (t3, t4), _ in travs:
        if len(log) <= t4 + t1:
            continue
        if not all(log[t4 + t] == log[t1 - t] for t in range(t1 + 1)):
            return False
    return True


def trapped_period(t1: int, t2: int, t3: int, t4: int) -> int:
    return 2 * (t4 + t3 - t2 - t1)


def trapping_pair(records: Iterable[ReflectorRecord]) -> tuple[ReflectorRecord, ReflectorRecord]:
    """The last two reflectors that were never annihilated."""
    alive = [r for r in records if r.kind == REFLECTING and r.status != ANNIHILATED]
    if len(alive) < 2:
        raise PreconditionUnmet(f"need two surviving reflectors, found {len(alive)}")
    return alive[-2], alive[-1]


def period_consistency(source, period) -> bool:
    """Check a measured period against ``2 (t4 + t3 - t2 - t1)``.

    ``source`` is an analyzer, a list of events, or a list of records;
    ``period`` is an int or any object with a ``period`` attribute.
    Raises :class:`PreconditionUnmet` when the run has no two surviving
    reflectors or did not end periodic.
    """
    measured = getattr(period, "period", period)
    if measured is None:
        raise PreconditionUnmet("run is not periodic")
    if isinstance(source, StructureAnalyzer):
        records = source.records
    else:
        records = []
        seen = set()
        for item in source:
            rec = item.record if isinstance(item, StructureEvent) else item
            if rec is not None and id(rec) not in seen:
                seen.add(id(rec))
                records.append(rec)
        records.sort(key=lambda r: r.t2)
    first, second = trapping_pair(records)
    return trapped_period(first.t1, first.t2, second.t1, second.t2) == int(measured)


# -- cyclic decomposition -------------------------------------------------------

@dataclass
class Cycle:
    start: int
    end: int
    closed: bool
    self_avoiding: bool
    symmetric: Optional[bool]


def mirror_keys(keys: np.ndarray) -> np.ndarray:
    """Vectorised :func:`flipping_rotators.lattice.mirror_x` on site keys."""
    a, b, sub = decode_keys(np.asarray(keys, dtype=np.int64))
    return (-b) * (1 << 33) + (-a) * 2 + (1 - sub)


def cycle_decomposition(log, origin_returns) -> list[Cycle]:
    """Split ``log`` at the origin returns and test each piece.

    Closed pieces ``T[tau_{i-1}, tau_i]`` are self-avoiding when no position
    repeats before the closing return; the symmetry flag says whether the
    piece's site set is invariant under reflection in x = 1/2.  A trailing
    open piece (after the last return) is reported with ``closed=False`` and
    self-avoiding meaning all its positions are distinct.
    """
    log = np.asarray(log, dtype=np.int64)
    bounds = [0] + [int(t) for t in origin_returns if 0 < t < len(log)]
    cycles = []
    for s, e in zip(bounds, bounds[1:]):
        seg = log[s:e]
        avoid = np.unique(seg).size == seg.size
        uniq = np.unique(log[s:e + 1])
        sym = bool(np.array_equal(np.unique(mirror_keys(uniq)), uniq))
        cycles.append(Cycle(s, e, True, bool(avoid), sym))
    last = bounds[-1]
    if last < len(log) - 1:
        seg = log[last:]
        cycles.append(Cycle(last, len(log) - 1, False,
                            bool(np.unique(seg).size == seg.size), None))
    return cycles
