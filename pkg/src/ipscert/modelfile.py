"""Read and write the TOML model file format.

Example::

    name = "epidemic"
    state_max = 2
    death_kernel_direction = "reverse"

    [kernel]
    type = "nearest_neighbor"
    d = 1

    [[rates]]
    kind = "birth_pair"
    k = 1
    alpha = 1
    beta = 0
    value = "3/5"

Values are strings "num/den" (plain integers are accepted on input).
Entries that are not listed are zero.
"""

import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ModelFileError
from .rates import KINDS, PAIR_KINDS, DIRECTIONS, Kernel, RateSpec, System, fraction_str, to_fraction


def _value(raw, where):
    if isinstance(raw, bool) or not isinstance(raw, (str, int)):
        raise ModelFileError(f"{where}: value must be a string 'num/den' or an integer, got {raw!r}")
    try:
        return to_fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelFileError(f"{where}: cannot parse {raw!r} as a rational ({exc})") from None


def _int(raw, where):
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ModelFileError(f"{where}: expected an integer, got {raw!r}")
    return raw


def _kernel(doc):
    kt = doc.get("kernel")
    if not isinstance(kt, dict):
        raise ModelFileError("missing [kernel] table")
    ktype = kt.get("type")
    d = _int(kt.get("d", 1), "kernel.d")
    if d < 1:
        raise ModelFileError("kernel.d must be >= 1")
    if ktype == "nearest_neighbor":
        return Kernel.nearest_neighbor(d)
    if ktype == "stencil":
        entries = kt.get("offsets")
        if not isinstance(entries, list):
            raise ModelFileError("stencil kernel needs an 'offsets' list")
        table = {}
        for i, e in enumerate(entries):
            where = f"kernel.offsets[{i}]"
            if not isinstance(e, dict) or "offset" not in e or "value" not in e:
                raise ModelFileError(f"{where}: expected {{offset = [...], value = \"num/den\"}}")
            off = tuple(_int(c, where) for c in e["offset"])
            table[off] = _value(e["value"], where)
        return Kernel.from_stencil(d, table)
    if ktype == "pairs":
        entries = kt.get("pairs")
        if not isinstance(entries, list):
            raise ModelFileError("pairs kernel needs a 'pairs' list")
        table = {}
        for i, e in enumerate(entries):
            where = f"kernel.pairs[{i}]"
            if not isinstance(e, dict) or not {"x", "y", "value"} <= set(e):
                raise ModelFileError(f"{where}: expected {{x = .., y = .., value = \"num/den\"}}")
            key = (_int(e["x"], where), _int(e["y"], where))
            if key in table:
                raise ModelFileError(f"{where}: duplicate pair {key}")
            table[key] = _value(e["value"], where)
        return Kernel.from_pairs(table, d=d)
    raise ModelFileError(f"kernel.type must be nearest_neighbor, stencil or pairs, got {ktype!r}")


def parse_model(text):
    """Parse model-file text into a ``System`` (rates kept as written, not canonicalized)."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ModelFileError(f"not valid TOML: {exc}") from None
    if "state_max" not in doc:
        raise ModelFileError("missing 'state_max'")
    M = _int(doc["state_max"], "state_max")
    if M < 0:
        raise ModelFileError("state_max must be >= 0")
    direction = doc.get("death_kernel_direction", "reverse")
    if direction not in DIRECTIONS:
        raise ModelFileError(f"death_kernel_direction must be one of {DIRECTIONS}, got {direction!r}")
    kernel = _kernel(doc)
    tables = {kind: {} for kind in KINDS}
    for i, e in enumerate(doc.get("rates", [])):
        where = f"rates[{i}]"
        if not isinstance(e, dict):
            raise ModelFileError(f"{where}: expected a table")
        kind = e.get("kind")
        if kind not in KINDS:
            raise ModelFileError(f"{where}: kind must be one of {KINDS}, got {kind!r}")
        if "k" not in e or "value" not in e:
            raise ModelFileError(f"{where}: 'k' and 'value' are required")
        k = _int(e["k"], where + ".k")
        if kind in PAIR_KINDS:
            if "alpha" not in e or "beta" not in e:
                raise ModelFileError(f"{where}: {kind} needs both 'alpha' and 'beta'")
            key = (k, _int(e["alpha"], where + ".alpha"), _int(e["beta"], where + ".beta"))
        elif kind == "birth_site":
            if "beta" not in e:
                raise ModelFileError(f"{where}: birth_site needs 'beta'")
            key = (k, _int(e["beta"], where + ".beta"))
        else:
            if "alpha" not in e:
                raise ModelFileError(f"{where}: death_site needs 'alpha'")
            key = (k, _int(e["alpha"], where + ".alpha"))
        if key in tables[kind]:
            raise ModelFileError(f"{where}: duplicate entry {kind}{list(key)}")
        tables[kind][key] = _value(e["value"], where)
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ModelFileError("[params] must be a table")
    return System(
        rates=RateSpec.build(M, **tables),
        kernel=kernel,
        death_kernel_direction=direction,
        name=str(doc.get("name", "")),
        params=tuple((str(k), str(v)) for k, v in params.items()),
    )


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc.strerror}") from None
    return parse_model(text)


def _q(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_model(system):
    """Deterministic text; export(parse(export(s))) == export(s)."""
    lines = []
    if system.name:
        lines.append(f"name = {_q(system.name)}")
    lines.append(f"state_max = {system.rates.state_max}")
    lines.append(f"death_kernel_direction = {_q(system.death_kernel_direction)}")
    if system.params:
        lines += ["", "[params]"]
        for key, value in system.params:
            lines.append(f"{key} = {_q(value)}")
    k = system.kernel
    lines += ["", "[kernel]"]
    if k.kind == "nearest_neighbor":
        lines += ['type = "nearest_neighbor"', f"d = {k.d}"]
    elif k.kind == "stencil":
        lines += ['type = "stencil"', f"d = {k.d}", "offsets = ["]
        for off, w in k.stencil:
            lines.append(f"  {{ offset = [{', '.join(str(c) for c in off)}], value = {_q(fraction_str(w))} }},")
        lines.append("]")
    else:
        lines += ['type = "pairs"', f"d = {k.d}", "pairs = ["]
        for (x, y), w in k.pairs:
            lines.append(f"  {{ x = {x}, y = {y}, value = {_q(fraction_str(w))} }},")
        lines.append("]")
    for kind, key, value in system.rates.entries():
        lines += ["", "[[rates]]", f"kind = {_q(kind)}", f"k = {key[0]}"]
        if kind in PAIR_KINDS:
            lines += [f"alpha = {key[1]}", f"beta = {key[2]}"]
        elif kind == "birth_site":
            lines.append(f"beta = {key[1]}")
        else:
            lines.append(f"alpha = {key[1]}")
        lines.append(f"value = {_q(fraction_str(value))}")
    return "\n".join(lines) + "\n"


def save_model(system, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(export_model(system))


__all__ = ["parse_model", "load_model", "export_model", "save_model"]
