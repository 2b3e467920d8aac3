"""Compiled samplers (numba, nogil).

``group_walk_steps``
    Step-by-step walk on a monomial group (every generator has
    lam = b^k and c in Z[1/b] or F_p[x, 1/x]).  It consumes the counter stream
    exactly like :class:`affine_harmonic.rng.CounterStream` so trajectories match
    the exact pure-Python engine draw for draw.
``group_walk_split``
    Same law for groups whose support is {lam-move up, lam-move down, +c0, -c0}
    with uniform weights.  Only the lam-exponent walk is simulated step by step;
    the number of c-moves at each visited level is drawn as a negative binomial
    and their net sign as a binomial, both read bit-exactly from random words.
``line_walk``
    Integer-valued symmetric walks on the line.

All c-values are carried as unnormalized base-b digit arrays, so the final
comparisons |c| < T are exact (ambiguous archimedean cases are flagged and
resolved by the caller in exact arithmetic).
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np
from numba import types, uint64, int64
from numba.extending import intrinsic

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
SUBSTREAM = np.uint64(0xD1B54A32D192ED03)

MODE_ARCH = 0
MODE_PADIC = 1
MODE_LAURENT = 2

AMBIGUOUS = 2


@intrinsic
def _ctpop(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.ctpop(args[0])

    return sig, codegen


@intrinsic
def _cttz(typingctx, x):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.cttz(args[0], context.get_constant(types.boolean, False))

    return sig, codegen


@nb.njit(inline="always")
def mix64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


@nb.njit(inline="always")
def stream_key(seed, index):
    return mix64(mix64(uint64(seed)) ^ mix64(uint64(index) + GOLDEN))


@nb.njit(inline="always")
def substream_key(key, sub):
    return mix64(key ^ (uint64(sub) * SUBSTREAM))


@nb.njit(inline="always")
def word_at(key, k):
    return mix64(key + uint64(k) * GOLDEN)


# bit reader state: [key, counter, word, bits left]


@nb.njit(inline="always")
def _refill(st):
    st[1] += uint64(1)
    st[2] = word_at(st[0], st[1])
    st[3] = uint64(64)


@nb.njit(cache=True)
def _read_bit(st):
    if st[3] == uint64(0):
        _refill(st)
    b = st[2] & uint64(1)
    st[2] >>= uint64(1)
    st[3] -= uint64(1)
    return int64(b)


@nb.njit(inline="always")
def _select(w, k):
    """Position of the k-th set bit of w (k >= 1, w has at least k set bits)."""
    pos = int64(0)
    width = int64(32)
    while width > 0:
        low = w & ((uint64(1) << uint64(width)) - uint64(1))
        c = int64(_ctpop(low))
        if c < k:
            k -= c
            w >>= uint64(width)
            pos += width
        else:
            w = low
        width >>= 1
    return pos


@nb.njit(cache=True)
def negbin_half(key, v):
    """Zeros before the v-th one in the bit stream of ``key`` (failures before v successes, p = 1/2)."""
    zeros = int64(0)
    need = v
    ctr = uint64(0)
    while True:
        ctr += uint64(1)
        w = word_at(key, ctr)
        c = int64(_ctpop(w))
        if c < need:
            need -= c
            zeros += 64 - c
            continue
        pos = _select(w, need)
        return zeros + pos + 1 - need


@nb.njit(cache=True)
def ones_in_prefix(key, k):
    """Number of ones among the first k bits of the bit stream of ``key``."""
    s = int64(0)
    ctr = uint64(0)
    while k >= 64:
        ctr += uint64(1)
        s += int64(_ctpop(word_at(key, ctr)))
        k -= 64
    if k > 0:
        ctr += uint64(1)
        s += int64(_ctpop(word_at(key, ctr) & ((uint64(1) << uint64(k)) - uint64(1))))
    return s


# ---------------------------------------------------------------------------
# exact decisions on digit arrays
#
# A threshold T is passed per decision as (kind, float value, integer cut,
# digit array aligned with the walk's digit array):
#   THR_DIGITS  archimedean, T has a finite base-b expansion: exact sign tests
#   THR_FLOAT   archimedean, other T: float test, AMBIGUOUS near the boundary
#   THR_CUT     p-adic (cut on the valuation) or laurent (cut on the degree)
#   THR_INF     T = +infinity

THR_DIGITS = 0
THR_FLOAT = 1
THR_CUT = 2
THR_INF = 3


@nb.njit(cache=True)
def _normalize(raw, out, base):
    carry = int64(0)
    if base & (base - 1) == 0:
        shift = int64(0)
        while (int64(1) << shift) < base:
            shift += 1
        m = base - 1
        for i in range(raw.shape[0]):
            tot = raw[i] + carry
            out[i] = tot & m
            carry = tot >> shift
        return carry
    for i in range(raw.shape[0]):
        tot = raw[i] + carry
        d = tot % base
        out[i] = d
        carry = (tot - d) // base
    return carry


@nb.njit(cache=True)
def _sign(raw, work, base):
    carry = _normalize(raw, work, base)
    if carry < 0:
        return -1
    if carry > 0:
        return 1
    for i in range(work.shape[0]):
        if work[i] != 0:
            return 1
    return 0


@nb.njit(cache=True)
def _sign_shifted(raw, tdig, sgn, tmp, work, base):
    """sign(V + sgn * T) for digit arrays V, T."""
    for i in range(raw.shape[0]):
        tmp[i] = raw[i] + sgn * tdig[i]
    return _sign(tmp, work, base)


@nb.njit(cache=True)
def _abs_float(raw, tmp, work, base, lowpos):
    s = _sign(raw, work, base)
    if s < 0:
        for i in range(raw.shape[0]):
            tmp[i] = -raw[i]
        _normalize(tmp, work, base)
    acc = 0.0
    for i in range(raw.shape[0] - 1, -1, -1):
        acc = acc * base + work[i]
    return acc * (float(base) ** lowpos)


@nb.njit(cache=True)
def _padic_val(raw, work, base, lowpos):
    """(is_zero, valuation) of a digit array."""
    carry = _normalize(raw, work, base)
    for i in range(raw.shape[0]):
        if work[i] != 0:
            return False, lowpos + i
    if carry == 0:
        return True, 0
    v = lowpos + raw.shape[0]
    while carry % base == 0:
        carry //= base
        v += 1
    return False, v


@nb.njit(cache=True)
def _laurent_deg(raw, p, lowpos):
    for i in range(raw.shape[0] - 1, -1, -1):
        if raw[i] % p != 0:
            return False, lowpos + i
    return True, 0


@nb.njit(cache=True)
def _decide(raw, tmp, work, mode, base, lowpos, big, kind, tf, ti, tdig):
    """|V| < T (big = False) or |V| > T (big = True); 0, 1 or AMBIGUOUS."""
    if kind == THR_INF:
        return 0 if big else 1
    if mode == MODE_ARCH:
        if kind == THR_DIGITS:
            hi = _sign_shifted(raw, tdig, -1, tmp, work, base)
            lo = _sign_shifted(raw, tdig, 1, tmp, work, base)
            if big:
                return 1 if (hi > 0 or lo < 0) else 0
            return 1 if (hi < 0 and lo > 0) else 0
        a = _abs_float(raw, tmp, work, base, lowpos)
        if abs(a - tf) <= 1e-9 * max(tf, 1.0):
            return AMBIGUOUS
        if big:
            return 1 if a > tf else 0
        return 1 if a < tf else 0
    if mode == MODE_PADIC:
        z, v = _padic_val(raw, work, base, lowpos)
        if big:
            return 1 if ((not z) and v < ti) else 0
        return 1 if (z or v >= ti) else 0
    z, d = _laurent_deg(raw, base, lowpos)
    if big:
        return 1 if ((not z) and d > ti) else 0
    return 1 if (z or d <= ti) else 0


@nb.njit(cache=True)
def _ms_from_visited(visited, lo_e, rho_sign, logb, q):
    """Greedy maximal 1-separated subset of the visited rho values below -q."""
    n = visited.shape[0]
    count = 0
    last = -np.inf
    if rho_sign > 0:
        for i in range(n):
            if visited[i]:
                r = (lo_e + i) * logb
                if r < -q and r >= last + 1.0:
                    count += 1
                    last = r
    else:
        for i in range(n - 1, -1, -1):
            if visited[i]:
                r = -(lo_e + i) * logb
                if r < -q and r >= last + 1.0:
                    count += 1
                    last = r
    return count


@nb.njit(cache=True)
def _finish(j, inc, full, tmp, work, c0_pos, c0_coef, dmin, mode, base,
            thr_kind, thr_float, thr_int, thr_dig, out_small, out_drift):
    full[:] = inc
    for k in range(c0_pos.shape[0]):
        full[c0_pos[k] - dmin] += c0_coef[k]
    out_small[j] = _decide(full, tmp, work, mode, base, dmin, False,
                           thr_kind[0], thr_float[0], thr_int[0], thr_dig[0])
    out_drift[j] = _decide(inc, tmp, work, mode, base, dmin, True,
                           thr_kind[1], thr_float[1], thr_int[1], thr_dig[1])


# ---------------------------------------------------------------------------
# group walks
#
# Shared arguments:
#   e0, c0_pos, c0_coef   start point: lam = b^e0, c given by digits
#   lo_e, hi_e            the walk runs while lo_e <= e <= hi_e
#   dmin, ndig            absolute digit positions covered by the arrays
#   rho_sign, logb        rho = rho_sign * e * log b (for the MS statistic)
# Outputs per trajectory: stop time, censored flag, final exponent,
# |c(X_stop)| < T_small, |c(X_stop) - c(X_0)| > T_drift, MS count.


@nb.njit(nogil=True, cache=True)
def group_walk_steps(
    seed, start, n,
    nbits, gen_of_u,
    de, term_ptr, term_pos, term_coef,
    e0, c0_pos, c0_coef,
    lo_e, hi_e, max_steps,
    dmin, ndig,
    mode, base, thr_kind, thr_float, thr_int, thr_dig,
    rho_sign, logb, ms_q, track_ms,
    out_time, out_cens, out_e, out_small, out_drift, out_ms,
):
    D = gen_of_u.shape[0]
    mask = (uint64(1) << uint64(nbits)) - uint64(1) if nbits > 0 else uint64(0)
    per_word = 64 // nbits if nbits > 0 else 0
    inc = np.zeros(ndig, dtype=np.int64)
    full = np.zeros(ndig, dtype=np.int64)
    tmp = np.zeros(ndig, dtype=np.int64)
    work = np.zeros(ndig, dtype=np.int64)
    nvis = hi_e - lo_e + 1
    visited = np.zeros(max(nvis, 1), dtype=np.int8)
    for j in range(n):
        key = stream_key(seed, start + j)
        inc[:] = 0
        if track_ms:
            visited[:] = 0
        e = e0
        t = 0
        ctr = uint64(0)
        word = uint64(0)
        left = 0
        cens = False
        while lo_e <= e <= hi_e:
            if t >= max_steps:
                cens = True
                break
            if track_ms:
                visited[e - lo_e] = 1
            if nbits == 0:
                g = gen_of_u[0]
            else:
                while True:
                    if left == 0:
                        ctr += uint64(1)
                        word = word_at(key, ctr)
                        left = per_word
                    u = int64(word & mask)
                    word >>= uint64(nbits)
                    left -= 1
                    if u < D:
                        break
                g = gen_of_u[u]
            for k in range(term_ptr[g], term_ptr[g + 1]):
                inc[e + term_pos[k] - dmin] += term_coef[k]
            e += de[g]
            t += 1
        out_time[j] = t
        out_cens[j] = cens
        out_e[j] = e
        out_ms[j] = 0
        if cens:
            out_small[j] = 0
            out_drift[j] = 0
            continue
        _finish(j, inc, full, tmp, work, c0_pos, c0_coef, dmin, mode, base,
                thr_kind, thr_float, thr_int, thr_dig, out_small, out_drift)
        if track_ms:
            out_ms[j] = _ms_from_visited(visited[:nvis], lo_e, rho_sign, logb, ms_q)


LEVEL_OFFSET = 1 << 32


@nb.njit(nogil=True, cache=True)
def group_walk_split(
    seed, start, n,
    up_pos, up_coef,
    e0, c0_pos, c0_coef,
    lo_e, hi_e, max_steps,
    dmin, ndig,
    mode, base, thr_kind, thr_float, thr_int, thr_dig,
    rho_sign, logb, ms_q, track_ms,
    out_time, out_cens, out_e, out_small, out_drift, out_ms,
):
    """Walk whose step law is uniform on {lam-up, lam-down, +c0, -c0}.

    up_pos/up_coef are the digits of c0.  The lam-exponent path reads one bit
    per lam-move from substream 1.  At a level visited v times the number of
    c-moves made there is the number of zeros before the v-th one in that
    level's own bit stream, and their signs are the first bits of a second
    level stream.  Per-level streams keep every quantity monotone in the
    interval on a fixed seed.
    """
    inc = np.zeros(ndig, dtype=np.int64)
    full = np.zeros(ndig, dtype=np.int64)
    tmp = np.zeros(ndig, dtype=np.int64)
    work = np.zeros(ndig, dtype=np.int64)
    nvis = hi_e - lo_e + 1
    visits = np.zeros(max(nvis, 1), dtype=np.int64)
    vis8 = np.zeros(max(nvis, 1), dtype=np.int8)
    span = uint64(hi_e - lo_e)
    for j in range(n):
        key = stream_key(seed, start + j)
        kpath = substream_key(key, 1)
        knb = substream_key(key, 2)
        ksg = substream_key(key, 3)
        inc[:] = 0
        visits[:] = 0
        e = e0
        moves = int64(0)
        cens = False
        if lo_e <= e <= hi_e:
            ctr = uint64(0)
            done = False
            while not done:
                ctr += uint64(1)
                word = word_at(kpath, ctr)
                for _ in range(64):
                    visits[e - lo_e] += 1
                    e += 2 * int64(word & uint64(1)) - 1
                    word >>= uint64(1)
                    moves += 1
                    if uint64(e - lo_e) > span:
                        done = True
                        break
                    if moves >= max_steps:
                        cens = True
                        done = True
                        break
        t = moves
        if not cens:
            for i in range(nvis):
                v = visits[i]
                if v == 0:
                    continue
                lev = lo_e + i
                kk = negbin_half(substream_key(knb, lev + LEVEL_OFFSET), v)
                if kk == 0:
                    continue
                s = ones_in_prefix(substream_key(ksg, lev + LEVEL_OFFSET), kk)
                net = 2 * s - kk
                t += kk
                if net != 0:
                    for k in range(up_pos.shape[0]):
                        inc[lev + up_pos[k] - dmin] += net * up_coef[k]
            if t > max_steps:
                cens = True
        out_time[j] = max_steps if cens else t
        out_cens[j] = cens
        out_e[j] = e
        out_ms[j] = 0
        if cens:
            out_small[j] = 0
            out_drift[j] = 0
            continue
        _finish(j, inc, full, tmp, work, c0_pos, c0_coef, dmin, mode, base,
                thr_kind, thr_float, thr_int, thr_dig, out_small, out_drift)
        if track_ms:
            for i in range(nvis):
                vis8[i] = 1 if visits[i] > 0 else 0
            out_ms[j] = _ms_from_visited(vis8[:nvis], lo_e, rho_sign, logb, ms_q)


# ---------------------------------------------------------------------------
# line walks

DIST_UNIT = 0
DIST_UNIFORM = 1
DIST_SYMGEOM = 2


@nb.njit(inline="always")
def _uniform01(key, ctr):
    return float((word_at(key, ctr) >> uint64(11)) + uint64(1)) * (1.0 / 9007199254740992.0)


@nb.njit(nogil=True, cache=True)
def line_walk(
    seed, start, n,
    kind, kparam, qparam,
    y0, lo, hi, max_steps,
    occ_m, ms_q,
    out_time, out_cens, out_side, out_jump, out_occ, out_ms, out_min,
):
    """Integer walk from y0 until it leaves [lo, hi].

    Records: exit time, exit side (+1 above hi, -1 below lo), largest |Z_t|
    for t <= exit time, time spent in [0, occ_m] before exit, and the number of
    distinct visited values < -ms_q before exit (for integer values this is the
    maximal 1-separated subset).
    """
    nvis = hi - lo + 1
    visited = np.zeros(max(nvis, 1), dtype=np.int8)
    st = np.zeros(4, dtype=np.uint64)
    nb_bits = 0
    d = 0
    if kind == DIST_UNIFORM:
        d = 2 * kparam
        nb_bits = 0
        while (1 << nb_bits) < d:
            nb_bits += 1
    logq = math.log(qparam) if kind == DIST_SYMGEOM else 0.0
    for j in range(n):
        key = stream_key(seed, start + j)
        st[0] = key
        st[1] = 0
        st[2] = 0
        st[3] = 0
        ukey = substream_key(key, 7)
        uctr = uint64(0)
        visited[:] = 0
        y = y0
        t = 0
        maxjump = 0
        occ = 0
        ymin = y0
        cens = False
        while lo <= y <= hi:
            if t >= max_steps:
                cens = True
                break
            visited[y - lo] = 1
            if 0 <= y <= occ_m:
                occ += 1
            if y < ymin:
                ymin = y
            if kind == DIST_UNIT:
                z = 2 * _read_bit(st) - 1
            elif kind == DIST_UNIFORM:
                while True:
                    u = 0
                    for b in range(nb_bits):
                        u |= _read_bit(st) << b
                    if u < d:
                        break
                z = u + 1 if u < kparam else -(u - kparam + 1)
            else:
                uctr += uint64(1)
                mag = 1 + int64(math.floor(math.log(_uniform01(ukey, uctr)) / logq))
                z = mag if _read_bit(st) else -mag
            az = z if z > 0 else -z
            if az > maxjump:
                maxjump = az
            y += z
            t += 1
        out_time[j] = t
        out_cens[j] = cens
        out_side[j] = 1 if y > hi else (-1 if y < lo else 0)
        out_jump[j] = maxjump
        out_occ[j] = occ
        out_min[j] = ymin
        cnt = 0
        for i in range(nvis):
            if visited[i] and (lo + i) < -ms_q:
                cnt += 1
        out_ms[j] = cnt
