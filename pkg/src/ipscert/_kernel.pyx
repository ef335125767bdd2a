# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gillespie loop; same arithmetic and uniform consumption as _kernel_py."""

from libc.math cimport log

DEF ST_STOP = 0
DEF ST_ABSORBED = 1
DEF ST_VIOLATION = 2
DEF ST_NEED_UNIFORMS = 3


cdef inline long long pair_code(long long[::1] vals, int K, long long n, long long R,
                                long long x, long long y) nogil:
    cdef long long code = 0
    cdef int layer
    for layer in range(K):
        code = code * R + vals[layer * n + x]
        code = code * R + vals[layer * n + y]
    return code


cdef inline void tree_set(double[::1] tree, long long S, long long i, double v) nogil:
    cdef long long node = S + i
    tree[node] = v
    node //= 2
    while node >= 1:
        tree[node] = tree[2 * node] + tree[2 * node + 1]
        node //= 2


def init_tree(long long[::1] vals, int K, long long n, long long R,
              long long[::1] px, long long[::1] py, double[::1] wm, double[::1] wd,
              double[::1] Rm, double[::1] Rd, double[::1] tree, long long S):
    cdef long long i, code, node
    cdef long long P = px.shape[0]
    for i in range(2 * S):
        tree[i] = 0.0
    for i in range(P):
        code = pair_code(vals, K, n, R, px[i], py[i])
        tree[S + i] = wm[i] * Rm[code] + wd[i] * Rd[code]
    node = S - 1
    while node >= 1:
        tree[node] = tree[2 * node] + tree[2 * node + 1]
        node -= 1


def run(long long[::1] vals, int K, long long n, long long R,
        long long[::1] px, long long[::1] py, double[::1] wm, double[::1] wd,
        double[::1] Rm, double[::1] Rd,
        long long[::1] tstart, double[::1] trate, long long[::1] tdeath, long long[::1] tnew,
        long long[::1] site_ptr, long long[::1] site_pairs,
        double[::1] tree, long long S,
        double[::1] uniforms, long long pos,
        double t, double t_stop, long long events, long long ev_stop, int check_order):
    """Advance until t_stop, ev_stop, absorption, an order violation or the end of the uniforms.

    Returns (status, t, events, pos, last_pair, last_transition).
    """
    cdef long long nu = uniforms.shape[0]
    cdef long long last_pair = -1, last_trans = -1
    cdef double total, dt, r, w, acc, rate
    cdef long long node, i, code, tr, tr_end, chosen, x, y, s, j, q, c2
    cdef int layer, status = ST_STOP
    cdef int width = 2 * K
    with nogil:
        while True:
            if events >= ev_stop:
                status = ST_STOP
                break
            total = tree[1]
            if total <= 0.0:
                status = ST_ABSORBED
                break
            if pos + 3 > nu:
                status = ST_NEED_UNIFORMS
                break
            dt = -log(1.0 - uniforms[pos]) / total
            if t + dt > t_stop:
                t = t_stop
                pos += 3
                status = ST_STOP
                break
            t += dt
            # pair by descent of the sum tree
            r = uniforms[pos + 1] * total
            node = 1
            while node < S:
                if tree[2 * node + 1] <= 0.0 or (r < tree[2 * node] and tree[2 * node] > 0.0):
                    node = 2 * node
                else:
                    r -= tree[2 * node]
                    node = 2 * node + 1
            i = node - S
            x = px[i]
            y = py[i]
            code = pair_code(vals, K, n, R, x, y)
            # transition within the pair
            r = uniforms[pos + 2] * tree[node]
            pos += 3
            acc = 0.0
            chosen = -1
            tr_end = tstart[code + 1]
            for tr in range(tstart[code], tr_end):
                w = wd[i] if tdeath[tr] else wm[i]
                rate = trate[tr] * w
                if rate > 0.0:
                    chosen = tr
                    acc += rate
                    if r < acc:
                        break
            if chosen < 0:
                status = ST_ABSORBED
                break
            for layer in range(K):
                vals[layer * n + x] = tnew[chosen * width + 2 * layer]
                vals[layer * n + y] = tnew[chosen * width + 2 * layer + 1]
            events += 1
            last_pair = i
            last_trans = chosen
            # refresh every pair touching x or y
            for s in range(2):
                q = x if s == 0 else y
                for j in range(site_ptr[q], site_ptr[q + 1]):
                    c2 = pair_code(vals, K, n, R, px[site_pairs[j]], py[site_pairs[j]])
                    tree_set(tree, S, site_pairs[j], wm[site_pairs[j]] * Rm[c2] + wd[site_pairs[j]] * Rd[c2])
            if check_order and K == 2:
                if vals[x] > vals[n + x] or vals[y] > vals[n + y]:
                    status = ST_VIOLATION
                    break
    return status, t, events, pos, last_pair, last_trans
