"""Exact event-driven simulation of single and coupled systems on a torus.

Every ordered site pair (x, y) with a nonzero kernel weight carries the
transitions of the two-site system: jumps x -> y, additions on y and
removals from x.  The local state of a pair is radix-encoded (one digit per
site and per layer; a coupled run has a lower and an upper layer) and each
code owns a list of transitions with float rates.  Pair totals live in a
binary sum tree, so one event costs O(log #pairs).

The hot loop lives in the compiled ``_kernel`` module; ``_kernel_py`` is a
line-by-line Python twin used when the extension is missing or when
IPS_PURE_PYTHON=1.  Uniforms are drawn in numpy batches outside the loop,
so both backends consume the same stream and produce the same trajectory.
"""

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import sqrt

import numpy as np

from . import _kernel_py
from .coupling import Change, apply_term, build_coupling_table
from .errors import BadParams, ExplodingRate, OrderBroken
from .ergodicity import metric_F, weights as rho_weights
from .rates import System, canonicalize

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

if os.environ.get("IPS_PURE_PYTHON") == "1" or _compiled is None:
    _core = _kernel_py
    BACKEND = "python"
else:
    _core = _compiled
    BACKEND = "cython"

ST_STOP, ST_ABSORBED, ST_VIOLATION, ST_NEED_UNIFORMS = 0, 1, 2, 3
BATCH = 3 * 2**15
SAMPLES = 20
RATE_CAP = 1e12


def backend(name=None):
    """The kernel module for "cython", "python" or the import-time default."""
    if name is None:
        return _core
    if name == "python":
        return _kernel_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("the compiled kernel is not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


# ---------------------------------------------------------------------------
# model compilation

@dataclass
class _Compiled:
    K: int
    R: int
    n: int
    px: np.ndarray
    py: np.ndarray
    wm: np.ndarray
    wd: np.ndarray
    Rm: np.ndarray
    Rd: np.ndarray
    tstart: np.ndarray
    trate: np.ndarray
    tdeath: np.ndarray
    tnew: np.ndarray
    site_ptr: np.ndarray
    site_pairs: np.ndarray
    S: int
    labels: list  # per transition: (lower change, upper change) or change


def _pair_arrays(kernel, lattice, direction):
    w = kernel.site_weights(lattice)
    pairs = {xy for xy, v in w.items() if v > 0}
    if direction == "forward":
        pairs |= {(y, x) for (x, y), v in w.items() if v > 0}
    pairs = sorted((x, y) for x, y in pairs if x != y)
    zero = Fraction(0)
    px = np.array([x for x, _ in pairs], dtype=np.int64)
    py = np.array([y for _, y in pairs], dtype=np.int64)
    wm = np.array([float(w.get((x, y), zero)) for x, y in pairs], dtype=np.float64)
    if direction == "forward":
        wd = np.array([float(w.get((y, x), zero)) for x, y in pairs], dtype=np.float64)
    else:
        wd = wm.copy()
    n = lattice.n_sites
    touching = [[] for _ in range(n)]
    for i, (x, y) in enumerate(pairs):
        touching[x].append(i)
        touching[y].append(i)
    site_ptr = np.zeros(n + 1, dtype=np.int64)
    site_ptr[1:] = np.cumsum([len(t) for t in touching])
    site_pairs = np.array([i for t in touching for i in t], dtype=np.int64)
    return px, py, wm, wd, site_ptr, site_pairs


def _pack(trans_by_code, K):
    """trans_by_code: list (per code) of lists of (rate, is_death, new_values, label)."""
    tstart = np.zeros(len(trans_by_code) + 1, dtype=np.int64)
    rates, deaths, news, labels = [], [], [], []
    Rm = np.zeros(len(trans_by_code))
    Rd = np.zeros(len(trans_by_code))
    for code, trans in enumerate(trans_by_code):
        for rate, is_death, new, label in trans:
            rates.append(rate)
            deaths.append(1 if is_death else 0)
            news.extend(new)
            labels.append(label)
            if is_death:
                Rd[code] += rate
            else:
                Rm[code] += rate
        tstart[code + 1] = len(rates)
    return (Rm, Rd, tstart, np.array(rates, dtype=np.float64), np.array(deaths, dtype=np.int64),
            np.array(news, dtype=np.int64).reshape(-1) if news else np.zeros(0, dtype=np.int64), labels)


def _single_transitions(spec):
    M = spec.state_max
    R = M + 1
    out = [[] for _ in range(R * R)]
    for a in range(R):
        for b in range(R):
            trans = out[a * R + b]
            for k in range(1, spec.k_max + 1):
                g, pb, pd = spec.gamma(k, a, b), spec.pi_birth(k, a, b), spec.pi_death(k, a, b)
                if g:
                    trans.append((float(g), False, (a - k, b + k), Change("jump", k)))
                if pb:
                    trans.append((float(pb), False, (a, b + k), Change("birth", k)))
                if pd:
                    trans.append((float(pd), True, (a - k, b), Change("death", k)))
    return R, out


@lru_cache(maxsize=16)
def coupled_tables(lower, upper):
    """Coupling tables at p = 1 for every ordered quadruple, memoized per (lower, upper)."""
    out = {}
    for a in lower.values:
        for b in lower.values:
            for c in range(a, upper.state_max + 1):
                for d in range(b, upper.state_max + 1):
                    out[(a, b, c, d)] = build_coupling_table(lower, upper, (a, b, c, d), 1, with_remainders=False)
    return out


def _coupled_transitions(lower, upper):
    R = max(lower.state_max, upper.state_max) + 1
    out = [[] for _ in range(R ** 4)]
    Ms = (lower.state_max, upper.state_max)
    for (a, b, c, d), table in coupled_tables(lower, upper).items():
        code = ((a * R + b) * R + c) * R + d
        for term in table.terms:
            if term.rate <= 0:
                continue
            new = apply_term((a, b, c, d), term, Ms)
            out[code].append((float(term.rate), False, new, (term.lower, term.upper)))
    return R, out


def _label(label):
    """"jump(1)" for a single system, "jump(1)|none" (lower|upper) for a coupled one."""
    if isinstance(label, Change):
        return str(label)
    return "|".join(str(c) for c in label)


def _compile(kernel, lattice, direction, R, trans_by_code, K):
    px, py, wm, wd, site_ptr, site_pairs = _pair_arrays(kernel, lattice, direction)
    Rm, Rd, tstart, trate, tdeath, tnew, labels = _pack(trans_by_code, K)
    S = 1
    while S < max(len(px), 1):
        S *= 2
    return _Compiled(K, R, lattice.n_sites, px, py, wm, wd, Rm, Rd, tstart, trate, tdeath, tnew,
                     site_ptr, site_pairs, S, labels)


# ---------------------------------------------------------------------------
# results

@dataclass
class SimResult:
    final: np.ndarray
    events: int
    time: float
    order_violations: int
    rho_trace: list
    trace: list  # rows (time, rho, lower_density, upper_density, events)
    seed: object
    status: str
    violation: dict = None
    event_log: list = field(default_factory=list)
    backend: str = BACKEND

    def summary(self):
        return {
            "status": self.status,
            "events": self.events,
            "time": self.time,
            "order_violations": self.order_violations,
            "rho_initial": self.rho_trace[0][1] if self.rho_trace else None,
            "rho_final": self.rho_trace[-1][1] if self.rho_trace else None,
            "seed": self.seed if isinstance(self.seed, int) else str(self.seed),
            "backend": self.backend,
            "violation": self.violation,
        }


def write_csv(result, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "rho", "lower_density", "upper_density", "events"])
        for row in result.trace:
            writer.writerow(["" if v is None else v for v in row])


# ---------------------------------------------------------------------------
# driver

def _init_config(init, n, M, name):
    if np.isscalar(init):
        arr = np.full(n, int(init), dtype=np.int64)
    else:
        arr = np.asarray(init, dtype=np.int64).reshape(-1).copy()
    if arr.shape[0] != n:
        raise BadParams(f"{name} has {arr.shape[0]} sites, lattice has {n}")
    if arr.min(initial=0) < 0 or arr.max(initial=0) > M:
        raise BadParams(f"{name} has values outside 0..{M}")
    return arr


def _sample_targets(t_max, events):
    if t_max is None and events is None:
        raise BadParams("give t_max or events")
    budget = np.iinfo(np.int64).max if events is None else int(events)
    if t_max is not None:
        return "time", [(float(t_max) * i / (SAMPLES - 1), budget) for i in range(1, SAMPLES)]
    return "events", [(float("inf"), int(round(budget * i / (SAMPLES - 1)))) for i in range(1, SAMPLES)]


def _run(model, vals, seed, t_max, events, check_order, rho_fn, log_events, kernel_mod):
    core = backend(kernel_mod)
    tree = np.zeros(2 * model.S, dtype=np.float64)
    args = (model.K, model.n, model.R, model.px, model.py, model.wm, model.wd, model.Rm, model.Rd)
    core.init_tree(vals, *args, tree, model.S)
    if tree[1] > RATE_CAP:
        raise ExplodingRate(f"total rate {tree[1]:.3g} exceeds {RATE_CAP:.0e}")
    rng = np.random.default_rng(seed)
    uniforms = rng.random(BATCH)
    pos = 0
    t, ev = 0.0, 0
    mode, targets = _sample_targets(t_max, events)

    def densities():
        v = vals.reshape(model.K, model.n)
        lo = float(v[0].mean())
        up = float(v[1].mean()) if model.K == 2 else None
        return lo, up

    def record():
        rho = rho_fn(vals) if rho_fn else None
        lo, up = densities()
        trace.append((t, rho, lo, up, ev))

    trace = []
    record()
    status_name = "done"
    violation = None
    log = []
    for t_stop, ev_stop in targets:
        while True:
            stop_ev = min(ev + 1, ev_stop) if log_events else ev_stop
            before = ev
            status, t, ev, pos, lp, lt = core.run(
                vals, *args, model.tstart, model.trate, model.tdeath, model.tnew,
                model.site_ptr, model.site_pairs, tree, model.S,
                uniforms, pos, t, t_stop, ev, stop_ev, int(check_order))
            if status == ST_NEED_UNIFORMS:
                uniforms = rng.random(BATCH)
                pos = 0
                continue
            if log_events and ev > before:
                log.append((t, ev, int(model.px[lp]), int(model.py[lp]), _label(model.labels[lt])))
            if log_events and status == ST_STOP and ev < ev_stop and t < t_stop:
                continue
            break
        if status == ST_VIOLATION:
            x, y = int(model.px[lp]), int(model.py[lp])
            violation = {"time": t, "event": ev, "pair": [x, y],
                         "change": [str(c) for c in model.labels[lt]]}
            status_name = "violation"
            record()
            break
        if status == ST_ABSORBED:
            status_name = "absorbed"
            if mode == "time":
                t = float(t_max)
            record()
            break
        record()
        if mode == "time" and ev >= ev_stop and t < t_stop:
            status_name = "budget"
            break
    return t, ev, trace, status_name, violation, log


def simulate_single(spec, kernel=None, lattice=None, init=0, t_max=None, events=None, seed=0,
                    direction=None, log_events=False, kernel_backend=None):
    """One trajectory of a single system; returns a SimResult (rho entries are None)."""
    if isinstance(spec, System):
        kernel = kernel or spec.kernel
        direction = direction or spec.death_kernel_direction
        spec = spec.rates
    direction = direction or "reverse"
    spec = canonicalize(spec)
    R, trans = _single_transitions(spec)
    model = _compile(kernel, lattice, direction, R, trans, 1)
    vals = _init_config(init, lattice.n_sites, spec.state_max, "init")
    t, ev, trace, status, _, log = _run(model, vals, seed, t_max, events, False, None, log_events, kernel_backend)
    return SimResult(vals.reshape(1, -1).copy(), ev, t, 0, [], trace, seed, status, None, log,
                     kernel_backend or BACKEND)


def _rho_function(lattice, useq, n, M):
    w = np.array([float(x) for x in rho_weights(lattice)])
    u = useq if useq is not None else [Fraction(1)] * (M + 1)
    F = np.array([[float(metric_F(a, b, u)) for b in range(M + 1)] for a in range(M + 1)])

    def rho(vals):
        v = vals.reshape(2, n)
        return float((F[v[0], v[1]] * w).sum())

    return rho


def simulate_coupled(lower, upper, kernel=None, lattice=None, init=(0, 0), t_max=None, events=None,
                     seed=0, direction=None, useq=None, strict=False, log_events=False, kernel_backend=None):
    """One trajectory of the coupled pair (lower, upper) started from init = (xi, eta).

    The sitewise order is checked after every event.  A violation stops the
    run; with strict=True it raises OrderBroken instead.
    """
    if isinstance(lower, System):
        kernel = kernel or lower.kernel
        direction = direction or lower.death_kernel_direction
        lower = lower.rates
    if isinstance(upper, System):
        upper = upper.rates
    direction = direction or "reverse"
    if direction == "forward" and not kernel.is_symmetric():
        raise BadParams("coupled runs need the reverse death direction or a symmetric kernel")
    lower, upper = canonicalize(lower), canonicalize(upper)
    n = lattice.n_sites
    xi = _init_config(init[0], n, lower.state_max, "lower init")
    eta = _init_config(init[1], n, upper.state_max, "upper init")
    if np.any(xi > eta):
        raise BadParams("initial lower configuration is not below the upper one")
    R, trans = _coupled_transitions(lower, upper)
    model = _compile(kernel, lattice, direction, R, trans, 2)
    vals = np.concatenate([xi, eta])
    rho = _rho_function(lattice, useq, n, max(lower.state_max, upper.state_max))
    t, ev, trace, status, violation, log = _run(model, vals, seed, t_max, events, True, rho, log_events,
                                                kernel_backend)
    if violation is not None:
        v = vals.reshape(2, n)
        x, y = violation["pair"]
        violation["state_after"] = [int(v[0, x]), int(v[0, y]), int(v[1, x]), int(v[1, y])]
        if strict:
            raise OrderBroken(f"order broken at event {violation['event']} on pair ({x},{y})",
                              event=violation, quadruple=violation["state_after"])
    rho_trace = [(row[0], row[1]) for row in trace]
    return SimResult(vals.reshape(2, -1).copy(), ev, t, int(violation is not None), rho_trace, trace,
                     seed, status, violation, log, kernel_backend or BACKEND)


# ---------------------------------------------------------------------------
# replicas

def density(config):
    return float(np.mean(config))


def origin_occupied(config):
    return float(config[0] >= 1)


FUNCTIONALS = {"density": density, "site": origin_occupied}


def _mean_stderr(values):
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    mean = float(values.mean()) if n else 0.0
    if n < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / sqrt(n))


def _one_single(args):
    spec, kernel, lattice, init, t_max, seed, direction, f = args
    res = simulate_single(spec, kernel, lattice, init, t_max=t_max, seed=seed, direction=direction)
    return FUNCTIONALS[f](res.final[0]) if isinstance(f, str) else f(res.final[0])


def _one_coupled(args):
    lower, upper, kernel, lattice, init, t_max, seed, direction, f = args
    res = simulate_coupled(lower, upper, kernel, lattice, init, t_max=t_max, seed=seed, direction=direction)
    fn = FUNCTIONALS[f] if isinstance(f, str) else f
    return fn(res.final[0]), fn(res.final[1]), res.order_violations


def _map(fn, jobs_args, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, jobs_args))
    return [fn(a) for a in jobs_args]


def estimate_monotone(spec, kernel, lattice, init, f="density", replicas=100, seed=0, t_max=1.0,
                      direction=None, jobs=1):
    """Monte Carlo mean and standard error of f(eta_t) over independent replicas."""
    seeds = np.random.SeedSequence(seed).spawn(replicas)
    args = [(spec, kernel, lattice, init, t_max, s, direction, f) for s in seeds]
    return dict(zip(("mean", "stderr"), _mean_stderr(_map(_one_single, args, jobs))))


def estimate_coupled(lower, upper, kernel, lattice, init, f="density", replicas=100, seed=0, t_max=1.0,
                     direction=None, jobs=1):
    """Replica means of f on both marginals of the coupled process, plus the total violation count."""
    seeds = np.random.SeedSequence(seed).spawn(replicas)
    args = [(lower, upper, kernel, lattice, init, t_max, s, direction, f) for s in seeds]
    rows = _map(_one_coupled, args, jobs)
    lo_mean, lo_se = _mean_stderr([r[0] for r in rows])
    up_mean, up_se = _mean_stderr([r[1] for r in rows])
    return {"lower": {"mean": lo_mean, "stderr": lo_se}, "upper": {"mean": up_mean, "stderr": up_se},
            "order_violations": int(sum(r[2] for r in rows))}
