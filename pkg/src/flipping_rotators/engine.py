"""Compiled simulation kernel.

The medium lives in an open-addressing hash table (int64 site key ->
visit count) that grows as new sites are visited; initial orientations are
recomputed from the seed on every visit, so memory is proportional to the
number of distinct sites touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import CAP_REACHED, PERIODIC
from .hashing import nb_hash_key, nb_mix64
from .lattice import key_site
from .medium import MediumSpec

_EMPTY = np.iinfo(np.int64).min
_TWO33 = np.int64(1) << np.int64(33)


@njit(cache=True, inline="always")
def _site_key(a, b, sub):
    return a * _TWO33 + b * 2 + sub


@njit(cache=True, inline="always")
def _face_key(i, j):
    return i * (np.int64(1) << np.int64(32)) + j


@njit(cache=True)
def _initial(kind, seed, thr_a, thr_b, always_a, always_b, color, ex_keys, ex_vals,
             ex_default, a, b, sub):
    if kind == 2:
        key = _site_key(a, b, sub)
        n = ex_keys.shape[0]
        if n > 0:
            i = np.searchsorted(ex_keys, key)
            if i < n and ex_keys[i] == key:
                return np.int64(ex_vals[i])
        return np.int64(ex_default)
    if kind == 1:
        c = (a - b - color) % 3
        if sub == 0:
            if c == 0:
                fi, fj = a, b
            elif c == 1:
                fi, fj = a - 1, b
            else:
                fi, fj = a - 1, b + 1
        else:
            if c == 0:
                fi, fj = a, b
            elif c == 1:
                fi, fj = a, b + 1
            else:
                fi, fj = a - 1, b + 1
        if always_a:
            return np.int64(1)
        h = nb_hash_key(seed, _face_key(fi, fj))
        return np.int64(1) if h < thr_a else np.int64(-1)
    if sub == 0:
        if always_a:
            return np.int64(1)
        h = nb_hash_key(seed, _site_key(a, b, sub))
        return np.int64(1) if h < thr_a else np.int64(-1)
    if always_b:
        return np.int64(1)
    h = nb_hash_key(seed, _site_key(a, b, sub))
    return np.int64(1) if h < thr_b else np.int64(-1)


@njit(cache=True, inline="always")
def _move(a, b, sub, d):
    """Neighbour of site (a, b, sub) along the legal direction ``d``."""
    if sub == 0:
        if d == 2:
            b -= 1
        elif d == 4:
            a -= 1
        return a, b, np.int64(1)
    if d == 5:
        b += 1
    elif d == 1:
        a += 1
    return a, b, np.int64(0)


@njit(cache=True, inline="always")
def _turn(d, o):
    return (d + 5) % 6 if o == 1 else (d + 1) % 6


@njit(cache=True)
def _lookup(keys, mask, key):
    i = np.int64(nb_mix64(np.uint64(key)) & np.uint64(mask))
    while True:
        k = keys[i]
        if k == key or k == _EMPTY:
            return i
        i = (i + 1) & mask


@njit(cache=True)
def _grow(keys, counts):
    size = keys.shape[0] * 2
    mask = size - 1
    nkeys = np.full(size, _EMPTY, dtype=np.int64)
    ncounts = np.zeros(size, dtype=np.int64)
    for i in range(keys.shape[0]):
        k = keys[i]
        if k != _EMPTY:
            j = _lookup(nkeys, mask, k)
            nkeys[j] = k
            ncounts[j] = counts[i]
    return nkeys, ncounts


@njit(cache=True, nogil=True)
def simulate_kernel(kind, seed, thr_a, thr_b, always_a, always_b, color, ex_keys, ex_vals,
                    ex_default, cap, stop_on_period, log_positions, sample_times):
    """Run from the canonical initial state for at most ``cap`` steps.

    Returns ``(period, steps, returns, max_sq4, log, samples, distinct, final)``
    where period is the first exact recurrence time (0 if none), ``max_sq4`` and
    ``samples`` hold 4*|r|^2 as exact integers, and ``final`` is
    ``(key, dir, dirty)`` at the last step.
    """
    size = np.int64(1) << np.int64(12)
    keys = np.full(size, _EMPTY, dtype=np.int64)
    counts = np.zeros(size, dtype=np.int64)
    mask = size - 1
    fill = 0

    a = np.int64(0)
    b = np.int64(0)
    sub = np.int64(0)
    d = np.int64(0)
    dirty = 0

    nret = 0
    returns = np.zeros(16, dtype=np.int64)

    if log_positions:
        log = np.zeros(min(cap + 1, 1 << 20), dtype=np.int64)
    else:
        log = np.zeros(1, dtype=np.int64)
    log[0] = 0

    nsamp = sample_times.shape[0]
    samples = np.zeros(nsamp, dtype=np.int64)
    si = 0
    while si < nsamp and sample_times[si] == 0:
        samples[si] = 0
        si += 1

    max_sq4 = np.int64(0)
    status = 0
    t = np.int64(0)
    while t < cap:
        a, b, sub = _move(a, b, sub, d)
        t += 1
        key = _site_key(a, b, sub)
        slot = _lookup(keys, mask, key)
        if keys[slot] == _EMPTY:
            keys[slot] = key
            fill += 1
        c = counts[slot]
        o = _initial(kind, seed, thr_a, thr_b, always_a, always_b, color, ex_keys, ex_vals,
                     ex_default, a, b, sub)
        if c & 1:
            o = -o
            dirty -= 1
        else:
            dirty += 1
        counts[slot] = c + 1
        d = _turn(d, o)

        s = 3 * (a + b) + 2 * sub
        df = a - b
        sq4 = s * s + 3 * df * df
        if sq4 > max_sq4:
            max_sq4 = sq4
        while si < nsamp and sample_times[si] == t:
            samples[si] = sq4
            si += 1
        if log_positions:
            if t >= log.shape[0]:
                nlog = np.zeros(min(cap + 1, log.shape[0] * 2), dtype=np.int64)
                nlog[: log.shape[0]] = log
                log = nlog
            log[t] = key
        if key == 0:
            if nret == returns.shape[0]:
                nr = np.zeros(nret * 2, dtype=np.int64)
                nr[:nret] = returns
                returns = nr
            returns[nret] = t
            nret += 1
            if d == 0 and dirty == 0 and status == 0:
                status = t
                if stop_on_period:
                    break
        if fill * 2 > size:
            keys, counts = _grow(keys, counts)
            size = keys.shape[0]
            mask = size - 1

    if log_positions:
        log = log[: t + 1]
    final = np.array([_site_key(a, b, sub), d, dirty], dtype=np.int64)
    return status, t, returns[:nret], max_sq4, log, samples, fill, final


@njit(cache=True)
def roundtrip_kernel(kind, seed, thr_a, thr_b, always_a, always_b, color, ex_keys, ex_vals,
                     ex_default, trials, rng_seed):
    """Random one-step round trips through the forward and reverse rules.

    Each trial draws a site, a legal direction, a medium seed and a prior
    visit count for the destination, steps forward, then backward, and
    compares the whole state.  Returns the number of trials that failed.
    """
    np.random.seed(rng_seed)
    failures = 0
    for _ in range(trials):
        a0 = np.int64(np.random.randint(-1000000, 1000000))
        b0 = np.int64(np.random.randint(-1000000, 1000000))
        sub0 = np.int64(np.random.randint(0, 2))
        d0 = np.int64(2 * np.random.randint(0, 3) + sub0)
        s = nb_mix64(seed ^ np.uint64(np.random.randint(0, 2**62)))
        prior = np.int64(np.random.randint(0, 4))

        # forward: move, scatter on the current orientation, flip
        a, b, sub = _move(a0, b0, sub0, d0)
        o = _initial(kind, s, thr_a, thr_b, always_a, always_b, color, ex_keys, ex_vals,
                     ex_default, a, b, sub)
        if prior & 1:
            o = -o
        d = _turn(d0, o)
        count = prior + 1

        # reverse: undo the turn with the flipped orientation, unflip, move back
        o = _initial(kind, s, thr_a, thr_b, always_a, always_b, color, ex_keys, ex_vals,
                     ex_default, a, b, sub)
        if count & 1:
            o = -o
        d = _turn(d, o)
        count -= 1
        a, b, sub = _move(a, b, sub, (d + 3) % 6)

        if a != a0 or b != b0 or sub != sub0 or d != d0 or count != prior:
            failures += 1
    return failures


@njit(cache=True)
def initial_kernel(kind, seed, thr_a, thr_b, always_a, always_b, color, ex_keys, ex_vals,
                   ex_default, a_arr, b_arr, sub_arr):
    out = np.empty(a_arr.shape[0], dtype=np.int8)
    for i in range(a_arr.shape[0]):
        out[i] = _initial(kind, seed, thr_a, thr_b, always_a, always_b, color, ex_keys,
                          ex_vals, ex_default, a_arr[i], b_arr[i], sub_arr[i])
    return out


@dataclass
class FastRun:
    """Result of :func:`simulate`.

    ``log`` (when requested) holds integer site keys for times ``0..steps``;
    decode with :func:`flipping_rotators.lattice.key_site`.
    """

    kind: str
    steps: int
    period: int | None
    origin_returns: np.ndarray
    max_displacement_sq: float
    distinct_sites: int
    log: np.ndarray | None = None
    samples: np.ndarray | None = None
    final_key: int = 0
    final_dir: int = 0
    final_dirty: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def periodic(self) -> bool:
        return self.kind == PERIODIC

    def sites(self):
        return [key_site(int(k)) for k in self.log]


def simulate(
    spec: MediumSpec,
    cap: int,
    *,
    log: bool = False,
    stop_on_period: bool = True,
    sample_times=None,
) -> FastRun:
    """Compiled equivalent of :func:`flipping_rotators.dynamics.run`.

    ``sample_times`` (sorted, non-negative) selects times at which |r|^2 is
    recorded; with ``stop_on_period=False`` the run always lasts ``cap``
    steps, which is what mean-square-displacement series need.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if sample_times is None:
        st = np.zeros(0, dtype=np.int64)
    else:
        st = np.asarray(sample_times, dtype=np.int64)
        if st.size and (np.any(np.diff(st) < 0) or st[0] < 0):
            raise ValueError("sample_times must be sorted and non-negative")
    status, steps, returns, max_sq4, lg, samples, distinct, final = simulate_kernel(
        *spec.kernel_params(), np.int64(cap), stop_on_period, log, st)
    periodic = status > 0
    period = int(status) if periodic else None
    return FastRun(
        kind=PERIODIC if periodic else CAP_REACHED,
        steps=int(steps),
        period=period,
        origin_returns=returns,
        max_displacement_sq=max_sq4 / 4.0,
        distinct_sites=int(distinct),
        log=lg if log else None,
        samples=samples / 4.0 if sample_times is not None else None,
        final_key=int(final[0]),
        final_dir=int(final[1]),
        final_dirty=int(final[2]),
    )


def roundtrip_failures(spec: MediumSpec, trials: int, rng_seed: int = 0) -> int:
    """Failed forward/reverse round trips out of ``trials`` randomized ones."""
    return int(roundtrip_kernel(*spec.kernel_params(), np.int64(trials), rng_seed))


def initial_orientations(spec: MediumSpec, sites) -> np.ndarray:
    arr = np.asarray([tuple(s) for s in sites], dtype=np.int64).reshape(-1, 3)
    return initial_kernel(*spec.kernel_params(), arr[:, 0].copy(), arr[:, 1].copy(),
                          arr[:, 2].copy())
