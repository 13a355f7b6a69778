"""Compiled event loop shared by every lattice simulation.

The loop keeps one pending arrival per *active* clock in a binary heap.  A
clock is active when its arrival would change the configuration (a birth arrow
from a site carrying the species to one lacking it, a death mark on a carrier,
a stirring pair whose two values differ on that level).  Inactive clocks are
never sampled; because each clock's arrival set is a fixed function of its
address (see :mod:`symbiosim.rng`), re-activating a clock at time ``t`` simply
looks up its first arrival after ``t``.  The dynamics are therefore exactly
those of the graphical representation, with cost proportional to the number
of effective events.

All state lives in plain arrays so the loop can be suspended and resumed from
Python.  Scalar parameters are packed:

``fp = [birth_rate, mu_rate, solo_rate, stir_rate, birth_block, horizon]``
``ip = [d, K, n_species, stirring, swap_species]``

where ``K`` is the number of clock slots per (site, species).
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .rng import clock_hash, next_arrival, stream_key

DONE = 0
ABSORBED = 1
MAX_EVENTS = 2
LOG_FULL = 3

# log codes are kind * 2 + species
EV_BIRTH = 0
EV_DEATH_MU = 1
EV_DEATH_SOLO = 2
EV_STIR = 3


def n_slots(dim: int, stirring: bool) -> int:
    return 2 * dim + 2 + (dim if stirring else 0)


@njit(cache=True, inline="always")
def _has(codes, x, s):
    return (codes[x] >> s) & 1


@njit(cache=True)
def _rate_if_active(c, codes, nbr, fp, ip):
    d = ip[0]
    K = ip[1]
    slot = c % K
    xs = c // K
    s = xs % 2
    x = xs // 2
    if s >= ip[2]:
        return 0.0
    hx = _has(codes, x, s)
    if slot < 2 * d:
        if hx == 0:
            return 0.0
        y = nbr[x, slot]
        if y < 0 or _has(codes, y, s) == 1:
            return 0.0
        return fp[0]
    if slot == 2 * d:
        return fp[1] if hx == 1 else 0.0
    if slot == 2 * d + 1:
        if hx == 1 and _has(codes, x, 1 - s) == 0:
            return fp[2]
        return 0.0
    y = nbr[x, 2 * (slot - 2 * d - 2)]
    if y < 0 or hx == _has(codes, y, s):
        return 0.0
    return fp[3]


@njit(cache=True)
def _heap_push(ht, hc, hv, hsize, t, c, v):
    i = hsize[0]
    hsize[0] = i + 1
    while i > 0:
        p = (i - 1) >> 1
        if ht[p] <= t:
            break
        ht[i] = ht[p]
        hc[i] = hc[p]
        hv[i] = hv[p]
        i = p
    ht[i] = t
    hc[i] = c
    hv[i] = v


@njit(cache=True)
def _heap_pop(ht, hc, hv, hsize):
    n = hsize[0] - 1
    hsize[0] = n
    if n == 0:
        return
    t = ht[n]
    c = hc[n]
    v = hv[n]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= n:
            break
        r = l + 1
        m = l
        if r < n and ht[r] < ht[l]:
            m = r
        if ht[m] >= t:
            break
        ht[i] = ht[m]
        hc[i] = hc[m]
        hv[i] = hv[m]
        i = m
    ht[i] = t
    hc[i] = c
    hv[i] = v


@njit(cache=True)
def _heap_compact(ht, hc, hv, hsize, active, ver):
    n = 0
    for i in range(hsize[0]):
        c = hc[i]
        if active[c] and hv[i] == ver[c]:
            ht[n] = ht[i]
            hc[n] = hc[i]
            hv[n] = hv[i]
            n += 1
    hsize[0] = 0
    tt = ht[:n].copy()
    cc = hc[:n].copy()
    vv = hv[:n].copy()
    for i in range(n):
        _heap_push(ht, hc, hv, hsize, tt[i], cc[i], vv[i])


@njit(cache=True)
def _refresh(c, t, codes, nbr, fp, ip, key, active, ver, ht, hc, hv, hsize):
    r = _rate_if_active(c, codes, nbr, fp, ip)
    if r > 0.0:
        if active[c]:
            return
        active[c] = True
        ver[c] += 1
        K = ip[1]
        slot = c % K
        xs = c // K
        addr = ((xs // 2) * 2 + ((xs % 2) ^ ip[4])) * K + slot
        w = fp[4] if slot < 2 * ip[0] else r
        ta = next_arrival(clock_hash(key, addr), r, w, t, fp[5])
        if ta < np.inf:
            if hsize[0] == ht.size:
                _heap_compact(ht, hc, hv, hsize, active, ver)
            _heap_push(ht, hc, hv, hsize, ta, c, ver[c])
    elif active[c]:
        active[c] = False
        ver[c] += 1


@njit(cache=True)
def _toggle(x, s, t, codes, nbr, edge, fp, ip, key, active, ver, ht, hc, hv, hsize, counts, flags):
    d = ip[0]
    K = ip[1]
    old = codes[x]
    new = old ^ (1 << s)
    codes[x] = new
    delta = 1 if (new >> s) & 1 else -1
    counts[s] += delta
    if old == 3 or new == 3:
        counts[2] += delta
    if delta > 0 and edge[x]:
        flags[0] = 1
    base = (x * 2 + s) * K
    for slot in range(K):
        _refresh(base + slot, t, codes, nbr, fp, ip, key, active, ver, ht, hc, hv, hsize)
    if ip[2] == 2:
        _refresh((x * 2 + 1 - s) * K + 2 * d + 1, t, codes, nbr, fp, ip, key, active, ver, ht, hc, hv, hsize)
    for j in range(2 * d):
        z = nbr[x, j]
        if z >= 0:
            _refresh((z * 2 + s) * K + (j ^ 1), t, codes, nbr, fp, ip, key, active, ver, ht, hc, hv, hsize)
    if ip[3] == 1:
        for i in range(d):
            z = nbr[x, 2 * i + 1]
            if z >= 0:
                _refresh((z * 2 + s) * K + 2 * d + 2 + i, t, codes, nbr, fp, ip, key, active, ver, ht, hc, hv, hsize)


@njit(cache=True)
def init_clocks(t, codes, nbr, fp, ip, key, active, ver, ht, hc, hv, hsize, counts):
    """Activate every clock that is effective in ``codes`` and recount species."""
    d = ip[0]
    K = ip[1]
    active[:] = False
    hsize[0] = 0
    counts[:] = 0
    for x in range(codes.size):
        cx = codes[x]
        if cx & 1:
            counts[0] += 1
        if cx & 2:
            counts[1] += 1
        if cx == 3:
            counts[2] += 1
        for s in range(ip[2]):
            if (cx >> s) & 1:
                base = (x * 2 + s) * K
                for slot in range(K):
                    _refresh(base + slot, t, codes, nbr, fp, ip, key, active, ver, ht, hc, hv, hsize)
                if ip[3] == 1:
                    for i in range(d):
                        z = nbr[x, 2 * i + 1]
                        if z >= 0:
                            _refresh((z * 2 + s) * K + 2 * d + 2 + i, t, codes, nbr, fp, ip, key,
                                     active, ver, ht, hc, hv, hsize)


@njit(cache=True)
def _peek(ht, hc, hv, hsize, active, ver):
    while hsize[0] > 0:
        c = hc[0]
        if active[c] and hv[0] == ver[c]:
            return ht[0]
        _heap_pop(ht, hc, hv, hsize)
    return np.inf


@njit(cache=True)
def run(codes, nbr, edge, fp, ip, key, active, ver, ht, hc, hv, hsize, counts, flags, now,
        t_end, max_events, log_on, log_t, log_site, log_code, log_partner, log_state, log_n,
        sample_t, sample_out, sample_i):
    """Advance until ``t_end`` (inclusive), ``max_events`` events or a full log.

    Returns a status code.  Sample rows record ``counts`` at each sample time
    not later than the next event.
    """
    d = ip[0]
    K = ip[1]
    nev = 0
    while True:
        if nev >= max_events:
            return MAX_EVENTS
        tn = _peek(ht, hc, hv, hsize, active, ver)
        while sample_i[0] < sample_t.size and sample_t[sample_i[0]] < tn and sample_t[sample_i[0]] <= t_end:
            k = sample_i[0]
            sample_out[k, 0] = counts[0]
            sample_out[k, 1] = counts[1]
            sample_out[k, 2] = counts[2]
            sample_i[0] = k + 1
        if tn == np.inf or tn > t_end:
            if t_end < np.inf:
                now[0] = t_end
            return ABSORBED if tn == np.inf else DONE
        if log_on and log_n[0] >= log_t.size:
            return LOG_FULL
        c = hc[0]
        _heap_pop(ht, hc, hv, hsize)
        active[c] = False
        ver[c] += 1
        now[0] = tn
        slot = c % K
        xs = c // K
        s = xs % 2
        x = xs // 2
        partner = -1
        if slot < 2 * d:
            y = nbr[x, slot]
            _toggle(y, s, tn, codes, nbr, edge, fp, ip, key, active, ver, ht, hc, hv, hsize, counts, flags)
            kind = EV_BIRTH
            partner = x
            x = y
        elif slot == 2 * d or slot == 2 * d + 1:
            _toggle(x, s, tn, codes, nbr, edge, fp, ip, key, active, ver, ht, hc, hv, hsize, counts, flags)
            kind = EV_DEATH_MU if slot == 2 * d else EV_DEATH_SOLO
        else:
            y = nbr[x, 2 * (slot - 2 * d - 2)]
            _toggle(x, s, tn, codes, nbr, edge, fp, ip, key, active, ver, ht, hc, hv, hsize, counts, flags)
            _toggle(y, s, tn, codes, nbr, edge, fp, ip, key, active, ver, ht, hc, hv, hsize, counts, flags)
            kind = EV_STIR
            partner = y
        _refresh(c, tn, codes, nbr, fp, ip, key, active, ver, ht, hc, hv, hsize)
        flags[1] += 1
        nev += 1
        if log_on:
            i = log_n[0]
            log_t[i] = tn
            log_site[i] = x
            log_code[i] = kind * 2 + s
            log_partner[i] = partner
            log_state[i] = codes[x]
            log_n[0] = i + 1


@njit(cache=True)
def batch(init_codes, nbr, edge, fp, ip, seed, trial0, ntrials, t_end, sample_t, max_events):
    """Run independent trials ``trial0 .. trial0+ntrials-1`` from ``init_codes``.

    Returns final counts ``(ntrials, 3)``, boundary-hit flags, event counts and
    the sampled counts ``(ntrials, len(sample_t), 3)``.
    """
    n = init_codes.size
    nclocks = n * 2 * ip[1]
    active = np.zeros(nclocks, dtype=np.bool_)
    ver = np.zeros(nclocks, dtype=np.int64)
    cap = 2 * nclocks + 16
    ht = np.empty(cap, dtype=np.float64)
    hc = np.empty(cap, dtype=np.int64)
    hv = np.empty(cap, dtype=np.int64)
    hsize = np.zeros(1, dtype=np.int64)
    counts = np.zeros(3, dtype=np.int64)
    flags = np.zeros(2, dtype=np.int64)
    now = np.zeros(1, dtype=np.float64)
    dummy_f = np.empty(0, dtype=np.float64)
    dummy_i = np.empty(0, dtype=np.int64)
    dummy_u = np.empty(0, dtype=np.uint8)
    log_n = np.zeros(1, dtype=np.int64)
    sample_i = np.zeros(1, dtype=np.int64)
    ns = sample_t.size
    final = np.zeros((ntrials, 3), dtype=np.int64)
    hit = np.zeros(ntrials, dtype=np.bool_)
    nevents = np.zeros(ntrials, dtype=np.int64)
    samples = np.zeros((ntrials, ns, 3), dtype=np.int64)
    codes = np.empty(n, dtype=np.uint8)
    for k in range(ntrials):
        codes[:] = init_codes
        key = stream_key(seed, trial0 + k)
        flags[:] = 0
        now[0] = 0.0
        sample_i[0] = 0
        init_clocks(0.0, codes, nbr, fp, ip, key, active, ver, ht, hc, hv, hsize, counts)
        for x in range(n):
            if codes[x] != 0 and edge[x]:
                flags[0] = 1
        run(codes, nbr, edge, fp, ip, key, active, ver, ht, hc, hv, hsize, counts, flags, now,
            t_end, max_events, False, dummy_f, dummy_i, dummy_i, dummy_i, dummy_u, log_n,
            sample_t, samples[k], sample_i)
        final[k, 0] = counts[0]
        final[k, 1] = counts[1]
        final[k, 2] = counts[2]
        hit[k] = flags[0] == 1
        nevents[k] = flags[1]
    return final, hit, nevents, samples
