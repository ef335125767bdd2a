"""Pure-Python Gillespie loop; mirrors _kernel.pyx step for step."""

from math import log

ST_STOP, ST_ABSORBED, ST_VIOLATION, ST_NEED_UNIFORMS = 0, 1, 2, 3


def _code(vals, K, n, R, x, y):
    code = 0
    for layer in range(K):
        code = code * R + vals[layer * n + x]
        code = code * R + vals[layer * n + y]
    return code


def init_tree(vals, K, n, R, px, py, wm, wd, Rm, Rd, tree, S):
    tree[:] = 0.0
    v = vals.tolist()
    for i in range(len(px)):
        code = _code(v, K, n, R, int(px[i]), int(py[i]))
        tree[S + i] = wm[i] * Rm[code] + wd[i] * Rd[code]
    for node in range(S - 1, 0, -1):
        tree[node] = tree[2 * node] + tree[2 * node + 1]


def run(vals, K, n, R, px, py, wm, wd, Rm, Rd, tstart, trate, tdeath, tnew,
        site_ptr, site_pairs, tree, S, uniforms, pos, t, t_stop, events, ev_stop, check_order):
    # work on lists, write the mutable state back at the end
    v = vals.tolist()
    tr_ = tree.tolist()
    px_, py_ = px.tolist(), py.tolist()
    wm_, wd_ = wm.tolist(), wd.tolist()
    Rm_, Rd_ = Rm.tolist(), Rd.tolist()
    ts_, rate_, death_, new_ = tstart.tolist(), trate.tolist(), tdeath.tolist(), tnew.tolist()
    sp_, spairs_ = site_ptr.tolist(), site_pairs.tolist()
    u = uniforms
    nu = len(u)
    width = 2 * K
    last_pair = last_trans = -1
    status = ST_STOP
    while True:
        if events >= ev_stop:
            status = ST_STOP
            break
        total = tr_[1]
        if total <= 0.0:
            status = ST_ABSORBED
            break
        if pos + 3 > nu:
            status = ST_NEED_UNIFORMS
            break
        dt = -log(1.0 - float(u[pos])) / total
        if t + dt > t_stop:
            t = t_stop
            pos += 3
            status = ST_STOP
            break
        t += dt
        r = float(u[pos + 1]) * total
        node = 1
        while node < S:
            left = tr_[2 * node]
            if tr_[2 * node + 1] <= 0.0 or (r < left and left > 0.0):
                node = 2 * node
            else:
                r -= left
                node = 2 * node + 1
        i = node - S
        x, y = px_[i], py_[i]
        code = _code(v, K, n, R, x, y)
        r = float(u[pos + 2]) * tr_[node]
        pos += 3
        acc = 0.0
        chosen = -1
        for tr in range(ts_[code], ts_[code + 1]):
            rate = rate_[tr] * (wd_[i] if death_[tr] else wm_[i])
            if rate > 0.0:
                chosen = tr
                acc += rate
                if r < acc:
                    break
        if chosen < 0:
            status = ST_ABSORBED
            break
        for layer in range(K):
            v[layer * n + x] = new_[chosen * width + 2 * layer]
            v[layer * n + y] = new_[chosen * width + 2 * layer + 1]
        events += 1
        last_pair, last_trans = i, chosen
        for q in (x, y):
            for j in range(sp_[q], sp_[q + 1]):
                p = spairs_[j]
                c2 = _code(v, K, n, R, px_[p], py_[p])
                leaf = S + p
                tr_[leaf] = wm_[p] * Rm_[c2] + wd_[p] * Rd_[c2]
                leaf //= 2
                while leaf >= 1:
                    tr_[leaf] = tr_[2 * leaf] + tr_[2 * leaf + 1]
                    leaf //= 2
        if check_order and K == 2:
            if v[x] > v[n + x] or v[y] > v[n + y]:
                status = ST_VIOLATION
                break
    vals[:] = v
    tree[:] = tr_
    return status, t, events, pos, last_pair, last_trans
