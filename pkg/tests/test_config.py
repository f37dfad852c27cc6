import pytest

from ptdqd.config import SCHEMA, ConfigError, load_config, parse_config
from ptdqd.params import GAMMA_B_CALIBRATED


def test_defaults():
    cfg = parse_config("")
    assert cfg.params.lam == 0.010 and cfg.params.gamma_b == GAMMA_B_CALIBRATED
    assert cfg["evolve"]["method"] == "eigenbasis"
    assert set(cfg.sections) == set(SCHEMA) - {"params"}


def test_typed_values_and_alias():
    cfg = parse_config("""
[params]
lambda = 0.004   # coupling
lamb_shift = off
[evolve]
alpha1 = 1+0.5j
at_ep = yes
[steady]
models = eom, lindblad_phen
""")
    assert cfg.params.lam == 0.004 and cfg.params.lamb_shift is False
    assert cfg["evolve"]["alpha1"] == 1 + 0.5j and cfg["evolve"]["at_ep"] is True
    assert cfg["steady"]["models"] == ("eom", "lindblad_phen")


def test_dependent_cutoffs():
    cfg = parse_config("[params]\nomega_c = 5\nomega0 = 6\n")
    assert cfg.params.omega_max == 50 and cfg.params.omega_cut == 600
    cfg = parse_config("[params]\nomega_c = 5\nomega_max = 70\n")
    assert cfg.params.omega_max == 70


@pytest.mark.parametrize("text, where", [
    ("[params]\nlam = 0.1\n", "line 2"),
    ("\n[evolve]\nt_max = 10\ntmax = 3\n", "line 4"),
    ("[plots]\nx = 1\n", "line 1"),
    ("[evolve]\nmethod = euler\n", "line 2"),
    ("[params]\nkappa2 = nan\n", "line 2"),
])
def test_errors_point_at_line(text, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(text)


def test_physical_constraints_revalidated():
    with pytest.raises(ConfigError, match="invalid parameters"):
        parse_config("[params]\nGamma = -1\n")


def test_grid_counts():
    with pytest.raises(ConfigError, match="axis_n"):
        parse_config("[steady]\naxis_n = 1\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("[params]\nlambda = 1\nlambda = 2\n")


def test_overrides_win():
    cfg = parse_config("[params]\ngamma_b = 0.2\n", {"gamma_b": 0.0})
    assert cfg.params.gamma_b == 0.0


def test_echo_is_complete_and_stable():
    a = parse_config("[params]\nlambda = 0.004\n").echo()
    b = parse_config("[params]\nlambda=0.004\n").echo()
    assert a == b
    assert "[params] lambda = 0.004" in a
    assert len(a) == sum(len(v) for v in SCHEMA.values())


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")
