"""Command-line front end.

JSON goes to stdout, messages to stderr.  Exit codes: 0 certified or
successful, 1 a negative verdict (not ordered, not ergodic, order
violations), 2 usage or validation errors.  Every option can also be set
through an environment variable IPS_<OPTION>, e.g. IPS_SEED=7 or
IPS_LATTICE=1,50; explicit flags win.

Model arguments are paths to model files or built-ins written as
``builtin:NAME`` or ``builtin:NAME:key=value,key=value``.
"""

import argparse
import hashlib
import json
import os
import sys
from fractions import Fraction

from . import models
from .coupling import all_tables, build_coupling_table, verify_increasing, verify_marginals
from .ergodicity import EpidemicParams, MODES, classify_ergodic, find_epsilon, threshold
from .errors import IpsError
from .lattice import Lattice
from .modelfile import export_model, load_model, save_model
from .oracle import oracle_increasing_sets
from .order_checker import GeneralSystem, certify_attractiveness, certify_general, certify_stochastic_order
from .rates import StateSpace, fraction_str, localize, to_fraction, validate

SCHEMA_VERSION = "1"

DEFAULTS = {
    "epidemic": {"lam": "3/10", "beta": "3/10", "gamma": "1/10", "phi": "1/2", "M": "2", "d": "1"},
    "tuberculosis": {"lam": "1", "phi": "1", "M": "2", "d": "1"},
    "two_type_contact": {"lam1": "1", "lam2": "1", "labeling": "0,1,2", "d": "1"},
    "metapop_allee": {"M": "4", "M_A": "2", "N": "2", "lam": "1", "phi": "1", "phi_A": "1", "d": "1"},
    "conservative": {"M": "2", "rate": "1", "k_max": "1", "d": "1"},
}
INT_PARAMS = {"M", "M_A", "N", "d", "k_max"}


class UsageError(Exception):
    pass


def builtin_model(name, overrides=None):
    if name not in models.MODELS:
        raise UsageError(f"unknown built-in model {name!r}; choose from {sorted(models.MODELS)}")
    params = dict(DEFAULTS[name])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise UsageError(f"model {name} has no parameter {key!r}; known: {sorted(params)}")
        params[key] = value
    kwargs = {}
    for key, value in params.items():
        if key in INT_PARAMS:
            kwargs[key] = int(value)
        elif key == "labeling":
            kwargs[key] = tuple(int(v) for v in value.split(","))
        else:
            kwargs[key] = to_fraction(value)
    return models.MODELS[name](**kwargs).system()


def load_system(ref):
    if ref is None:
        raise UsageError("a model is required")
    if ref.startswith("builtin:"):
        parts = ref.split(":", 2)
        overrides = {}
        if len(parts) == 3 and parts[2]:
            # labeling carries commas itself, so split on commas that start a new key=value
            items, current = [], ""
            for chunk in parts[2].split(","):
                if "=" in chunk or not current:
                    if current:
                        items.append(current)
                    current = chunk
                else:
                    current += "," + chunk
            if current:
                items.append(current)
            for item in items:
                if "=" not in item:
                    raise UsageError(f"expected key=value in {ref!r}, got {item!r}")
                key, value = item.split("=", 1)
                overrides[key.strip()] = value.strip()
        return builtin_model(parts[1], overrides)
    return load_model(ref)


def _emit(doc, out=None):
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _doc(command, **fields):
    return {"schema_version": SCHEMA_VERSION, "command": command, **fields}


def _checked(system, role):
    report = validate(system.rates, StateSpace(system.state_max), system.kernel,
                      direction=system.death_kernel_direction)
    if not report.ok:
        raise _ValidationFailed(role, report)
    for issue in report.warnings:
        print(f"warning ({role}): {issue.message}", file=sys.stderr)
    return system


class _ValidationFailed(Exception):
    def __init__(self, role, report):
        super().__init__(role)
        self.role = role
        self.report = report


def _seed(args, *parts):
    if args.seed is not None:
        return int(args.seed)
    h = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    seed = int.from_bytes(h[:8], "little")
    print(f"no --seed given; derived seed {seed}", file=sys.stderr)
    return seed


def _lattice(args, system):
    if args.lattice:
        return Lattice.parse(args.lattice)
    d = system.kernel.d
    return Lattice(d, 50 if d == 1 else 10)


# ---------------------------------------------------------------------------
# commands

def cmd_validate(args):
    system = load_system(args.model)
    report = validate(system.rates, StateSpace(system.state_max), system.kernel,
                      direction=system.death_kernel_direction)
    if args.out and report.ok:
        save_model(system, args.out)
    _emit(_doc("validate", **report.to_dict()))
    return 0 if report.ok else 2


def cmd_certify_order(args):
    lower = _checked(load_system(args.lower), "lower")
    upper = _checked(load_system(args.upper), "upper")
    if lower.kernel != upper.kernel or args.general:
        lat = _lattice(args, upper)
        cert = certify_general(GeneralSystem.from_system(lower, lat), GeneralSystem.from_system(upper, lat))
    else:
        cert = certify_stochastic_order(lower, upper)
    _emit(_doc("certify-order", **cert.to_dict()), args.out)
    return 0 if cert.ordered else 1


def cmd_certify_attractive(args):
    system = _checked(load_system(args.model), "model")
    cert = certify_attractiveness(system)
    _emit(_doc("certify-attractive", **cert.to_dict()), args.out)
    return 0 if cert.ordered else 1


def _pair_systems(args):
    if args.model:
        s = _checked(load_system(args.model), "model")
        return s, s
    return _checked(load_system(args.lower), "lower"), _checked(load_system(args.upper), "upper")


def cmd_couple(args):
    lower, upper = _pair_systems(args)
    p = to_fraction(args.p) if args.p else max(upper.kernel.distinct_weights(), default=Fraction(1))
    if args.quadruple:
        q = tuple(int(v) for v in args.quadruple.split(","))
        if len(q) != 4 or q[0] > q[2] or q[1] > q[3]:
            raise UsageError("--quadruple needs a,b,c,d with a <= c and b <= d")
        tables = {q: build_coupling_table(lower.rates, upper.rates, q, p, with_remainders=False)}
    else:
        tables = all_tables(lower.rates, upper.rates, p)
    out, ok = [], True
    for q, table in tables.items():
        marg = verify_marginals(table, lower.rates, upper.rates)
        order = verify_increasing(table)
        ok = ok and marg.ok and order.ok
        doc = table.to_dict()
        doc["marginal_mismatches"] = [str(m) for m in marg.mismatches]
        doc["order_breaking_terms"] = [t.term.to_dict() for t in order.broken]
        out.append(doc)
    _emit(_doc("couple", tables=out, ok=ok), args.out)
    return 0 if ok else 1


def _epidemic_params(args):
    values = {}
    if args.model:
        system = load_system(args.model)
        values.update(dict(system.params))
    for key in ("lam", "beta", "gamma", "phi", "M", "d"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    missing = [k for k in ("lam", "beta", "gamma", "phi", "M") if k not in values]
    if missing:
        raise UsageError(f"missing epidemic parameters: {', '.join(missing)}")
    return EpidemicParams(to_fraction(values["lam"]), to_fraction(values["beta"]), to_fraction(values["gamma"]),
                          to_fraction(values["phi"]), int(values["M"]), int(values.get("d", 1)))


def cmd_ergodic(args):
    params = _epidemic_params(args)
    mode = args.mode or "proof_supported"
    cls = classify_ergodic(params, mode)
    found = find_epsilon(params)
    doc = _doc(
        "ergodic",
        threshold=fraction_str(threshold(params)),
        epsilon_found=None if found is None else fraction_str(found[0]),
        u=None if found is None else found[1].to_list(),
        ergodic=cls.ergodic,
        reason=cls.reason,
        mode=mode,
    )
    _emit(doc, None)
    return 0 if cls.ergodic else 1


def cmd_simulate(args):
    from . import simulator
    if args.t_max is None and args.events is None:
        raise UsageError("give --events or --t-max")
    t_max = None if args.t_max is None else float(args.t_max)
    events = None if args.events is None else int(args.events)
    if args.model:
        system = _checked(load_system(args.model), "model")
        lat = _lattice(args, system)
        seed = _seed(args, "simulate", args.model, args.lattice, events, t_max)
        init = int(args.init_upper if args.init_upper is not None else 0)
        if args.replicas:
            est = simulator.estimate_monotone(system, system.kernel, lat, init, replicas=int(args.replicas),
                                              seed=seed, t_max=t_max or 1.0, jobs=_jobs(args))
            _emit(_doc("simulate", mode="replicas", seed=seed, **est))
            return 0
        res = simulator.simulate_single(system, lattice=lat, init=init, t_max=t_max, events=events, seed=seed,
                                        log_events=args.log_events)
    else:
        lower = _checked(load_system(args.lower), "lower")
        upper = _checked(load_system(args.upper), "upper")
        lat = _lattice(args, upper)
        seed = _seed(args, "simulate", args.lower, args.upper, args.lattice, events, t_max)
        init = (int(args.init_lower or 0), int(args.init_upper if args.init_upper is not None else upper.state_max))
        if args.replicas:
            est = simulator.estimate_coupled(lower, upper, lower.kernel, lat, init, replicas=int(args.replicas),
                                             seed=seed, t_max=t_max or 1.0, jobs=_jobs(args))
            _emit(_doc("simulate", mode="replicas", seed=seed, **est))
            return 0 if est["order_violations"] == 0 else 1
        res = simulator.simulate_coupled(lower, upper, lattice=lat, init=init, t_max=t_max, events=events,
                                         seed=seed, strict=args.strict, log_events=args.log_events)
    if args.out:
        simulator.write_csv(res, args.out)
    doc = _doc("simulate", **res.summary())
    if args.log_events:
        doc["event_log"] = [list(e) for e in res.event_log]
    _emit(doc)
    return 0 if res.order_violations == 0 else 1


def cmd_oracle(args):
    lower, upper = _pair_systems(args)
    if args.pair:
        lat = _lattice(args, upper)
        x, y = (int(v) for v in args.pair.split(","))
        res = oracle_increasing_sets(localize(lower.rates, upper.rates, upper.kernel, (x, y), lat))
    else:
        res = oracle_increasing_sets(lower.rates, upper.rates)
    _emit(_doc("oracle", **res.to_dict()), args.out)
    return 0 if res.ordered else 1


def cmd_export(args):
    system = load_system(args.model)
    text = export_model(system)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _jobs(args):
    if args.jobs is None:
        return os.cpu_count() or 1
    return int(args.jobs)


# ---------------------------------------------------------------------------
# parser

def _env(name):
    return os.environ.get("IPS_" + name.upper())


def build_parser():
    parser = argparse.ArgumentParser(prog="ipscert", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(p, flag, **kw):
        dest = flag.lstrip("-").replace("-", "_")
        kw.setdefault("default", _env(dest))
        p.add_argument(flag, dest=dest, **kw)

    def common(p, *flags):
        for flag in flags:
            add(p, flag)
        add(p, "--out", help="also write the output to this path")
        add(p, "--jobs", help="worker processes for replica runs (default: all cores)")

    p = sub.add_parser("validate", help="check a model file and report every problem")
    common(p, "--model")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("certify-order", help="decide whether --lower is dominated by --upper")
    common(p, "--lower", "--upper", "--lattice")
    p.add_argument("--general", action="store_true", help="kernel-weighted check per site pair")
    p.set_defaults(fn=cmd_certify_order)

    p = sub.add_parser("certify-attractive", help="decide attractiveness of one model")
    common(p, "--model")
    p.set_defaults(fn=cmd_certify_attractive)

    p = sub.add_parser("couple", help="dump coupling tables with marginal and order checks")
    common(p, "--model", "--lower", "--upper", "--quadruple", "--p")
    p.set_defaults(fn=cmd_couple)

    p = sub.add_parser("ergodic", help="u-criterion for the epidemic model")
    common(p, "--model", "--lam", "--beta", "--gamma", "--phi", "--M", "--d")
    add(p, "--mode", choices=MODES)
    p.set_defaults(fn=cmd_ergodic)

    p = sub.add_parser("simulate", help="simulate one model (--model) or a coupled pair (--lower/--upper)")
    common(p, "--model", "--lower", "--upper", "--lattice", "--seed", "--events", "--t-max",
           "--init-lower", "--init-upper", "--replicas")
    p.add_argument("--strict", action="store_true", help="raise on the first order violation")
    p.add_argument("--log-events", action="store_true", help="include every event in the output")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("oracle", help="brute-force up-set check on the two-site system")
    common(p, "--model", "--lower", "--upper", "--pair", "--lattice")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("export", help="print a model (file or built-in) in canonical model-file form")
    common(p, "--model")
    p.set_defaults(fn=cmd_export)
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("couple", "oracle") and not args.model and not (args.lower and args.upper):
            raise UsageError("give --model or both --lower and --upper")
        if args.command == "simulate" and not args.model and not (args.lower and args.upper):
            raise UsageError("give --model or both --lower and --upper")
        return args.fn(args)
    except _ValidationFailed as exc:
        print(f"error: {exc.role} model failed validation", file=sys.stderr)
        _emit(_doc(args.command, role=exc.role, **exc.report.to_dict()))
        return 2
    except (UsageError, IpsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        _emit(_doc(args.command, error={"type": type(exc).__name__, "message": str(exc)}))
        return 1 if type(exc).__name__ == "OrderBroken" else 2


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
