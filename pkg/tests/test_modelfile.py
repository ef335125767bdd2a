from fractions import Fraction as F

import pytest

from ipscert.errors import ModelFileError
from ipscert.models import MODELS, Conservative, Epidemic, MetapopAllee, Tuberculosis, TwoTypeContact
from ipscert.modelfile import export_model, load_model, parse_model, save_model
from ipscert.rates import Kernel, RateSpec, System

EXAMPLE = """\
name = "demo"
state_max = 2

[kernel]
type = "nearest_neighbor"
d = 1

[[rates]]
kind = "birth_pair"
k = 1
alpha = 1
beta = 0
value = "3/5"

[[rates]]
kind = "death_site"
k = 1
alpha = 2
value = 2
"""

BUILTINS = [
    Epidemic(F(3, 10), F(3, 10), F(1, 10), F(1, 2), 2),
    Tuberculosis(1, 1, 2),
    TwoTypeContact(1, 1, (1, 0, 2)),
    MetapopAllee(4, 2, 2, 1, 1, 1),
    Conservative(2),
]


def test_parse_example():
    system = parse_model(EXAMPLE)
    assert system.name == "demo"
    assert system.rates.pi_birth(1, 1, 0) == F(3, 5)
    assert system.rates.pi_death(1, 2, 0) == 2
    assert system.kernel == Kernel.nearest_neighbor(1)
    assert system.death_kernel_direction == "reverse"


@pytest.mark.parametrize("model", BUILTINS, ids=lambda m: m.name)
def test_round_trip_is_byte_identical(model):
    text = export_model(model.system())
    again = parse_model(text)
    assert export_model(again) == text
    assert again.rates == model.build().spec


def test_stencil_and_pairs_kernels_round_trip():
    for kernel in (Kernel.from_stencil(2, {(1, 0): F(1, 2), (0, -1): F(1, 2)}),
                   Kernel.from_pairs({(0, 1): 1, (1, 0): 1})):
        system = System(RateSpec.build(1, jump={(1, 1, 0): F(1, 3)}), kernel, "forward", "k")
        text = export_model(system)
        assert parse_model(text) == system
        assert export_model(parse_model(text)) == text


def test_save_and_load(tmp_path):
    path = tmp_path / "m.toml"
    system = Epidemic(1, 1, 0, F(1, 2), 3).system()
    save_model(system, path)
    assert export_model(load_model(path)) == export_model(system)


@pytest.mark.parametrize("text, fragment", [
    ("state_max = 2\n", "missing [kernel]"),
    ('[kernel]\ntype = "nearest_neighbor"\n', "missing 'state_max'"),
    ("state_max = = 2", "not valid TOML"),
    ('state_max = 2\n[kernel]\ntype = "hex"\n', "kernel.type"),
    ('state_max = 2\n[kernel]\ntype = "nearest_neighbor"\n[[rates]]\nkind = "teleport"\nk = 1\nvalue = 1\n',
     "kind must be"),
    ('state_max = 2\n[kernel]\ntype = "nearest_neighbor"\n[[rates]]\nkind = "jump"\nk = 1\nalpha = 1\nvalue = 1\n',
     "needs both"),
    ('state_max = 2\n[kernel]\ntype = "nearest_neighbor"\n[[rates]]\nkind = "birth_site"\nk = 1\nbeta = 0\n'
     'value = "1/0"\n', "cannot parse"),
    ('state_max = 2\n[kernel]\ntype = "nearest_neighbor"\n[[rates]]\nkind = "birth_site"\nk = 1\nbeta = 0\n'
     'value = 1.5\n', "must be a string"),
    ('state_max = 2\ndeath_kernel_direction = "up"\n[kernel]\ntype = "nearest_neighbor"\n', "death_kernel_direction"),
])
def test_malformed_files_raise_model_file_error(text, fragment):
    with pytest.raises(ModelFileError, match=None) as info:
        parse_model(text)
    assert fragment in str(info.value)


def test_duplicate_entry_rejected():
    text = EXAMPLE + '\n[[rates]]\nkind = "death_site"\nk = 1\nalpha = 2\nvalue = 1\n'
    with pytest.raises(ModelFileError, match="duplicate"):
        parse_model(text)


def test_missing_file():
    with pytest.raises(ModelFileError, match="cannot read"):
        load_model("/nonexistent/model.toml")


def test_every_registered_model_is_covered():
    assert {m.name for m in BUILTINS} == set(MODELS)
