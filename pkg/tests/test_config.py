import json

import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from resonet.config import parse_config, serialize_config
from resonet.exceptions import ConfigError
from resonet.cli import read_config_text, fixture_names

SCHEDULE = """
mode: evolve-rwa
network:
  pst: {n: 4, c0_hz: 52, sites: [2, 4, 6, 8]}
launch: 2
schedule:
  - c0_hz: 52
  - c0_hz: 30
"""


def errors_of(text, mode=None):
    with pytest.raises(ConfigError) as info:
        parse_config(text, mode=mode)
    return info.value.errors


def test_minimal_synth_shorthand():
    cfg = parse_config("mode: synth\nn: 8\nc0_hz: 30\n")
    assert cfg.mode == "synth"
    assert cfg.data["network"]["pst"] == {"n": 8, "c0_hz": 30.0, "sites": list(range(1, 9))}
    assert cfg.network.chain() == tuple(range(1, 9))


def test_mode_from_command_line():
    assert parse_config("n: 8\nc0_hz: 30\n", mode="synth").mode == "synth"
    assert any("does not match" in e for e in errors_of("mode: parity\nn: 4\nc0_hz: 30\n", mode="synth"))
    assert any("mode" in e for e in errors_of("n: 4\nc0_hz: 30\n"))


def test_launch_outside_chain_named():
    errs = errors_of("mode: evolve-rwa\nn: 8\nc0_hz: 30\nlaunch: 9\n")
    assert len(errs) == 1 and "9" in errs[0] and errs[0].startswith("line 4:")


def test_unknown_key_with_line_number():
    errs = errors_of("mode: synth\nn: 8\nc0_hz: 30\ncolour: blue\n")
    assert errs == [errs[0]] and errs[0].startswith("line 4:") and "colour" in errs[0]


def test_nested_unknown_and_missing_fields():
    text = "mode: spectrum\nnetwork:\n  pst:\n    n: 4\n    sitez: [1, 2, 3, 4]\n"
    errs = errors_of(text)
    assert any("sitez" in e and e.startswith("line 5:") for e in errs)
    assert any("network.pst.c0_hz" in e for e in errs)


def test_type_and_range_errors():
    errs = errors_of("mode: evolve-rwa\nn: 8\nc0_hz: -30\nsample_dt_s: fast\n")
    assert any("c0_hz" in e and "> 0" in e for e in errs)
    assert any("sample_dt_s" in e for e in errs)


def test_all_problems_reported_together():
    errs = errors_of("mode: evolve-rwa\nn: 8\nc0_hz: 30\nfoo: 1\nbar: 2\n")
    assert len(errs) == 2


def test_syntax_error_has_line():
    errs = errors_of("mode: synth\nn: [8\n")
    assert errs[0].startswith("line")


def test_duplicate_key_rejected():
    assert any("duplicate key" in e for e in errors_of("mode: synth\nn: 8\nn: 9\nc0_hz: 1\n"))


def test_network_validation_surfaces():
    text = """
mode: spectrum
network:
  couplings:
    - {a: 1, b: 2, strength_hz: 5}
    - {a: 1, b: 2, strength_hz: 5}
"""
    assert any("duplicate coupling" in e for e in errors_of(text))


def test_sites_outside_fixture_need_resonators():
    assert any("resonators" in e for e in errors_of("mode: synth\nn: 9\nc0_hz: 30\n"))
    text = """
mode: synth
network:
  pst: {n: 2, c0_hz: 30, sites: [11, 12]}
  resonators:
    - {index: 11, freq_hz: 1.0e6}
    - {index: 12, freq_hz: 1.1e6}
"""
    assert parse_config(text).network.chain() == (11, 12)


def test_exponent_without_dot_is_a_number():
    cfg = parse_config("mode: evolve-rwa\nn: 4\nc0_hz: 30\nsample_dt_s: 1e-4\n")
    assert cfg.data["sample_dt_s"] == 1e-4


def test_sections_for_other_modes_rejected():
    assert any("not used" in e for e in errors_of("mode: synth\nn: 4\nc0_hz: 30\nfull: {scale: 8}\n"))


def test_schedule_round_trip_is_canonical():
    cfg = parse_config(SCHEDULE)
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert serialize_config(again) == text
    assert cfg.schedule.total_duration == pytest.approx(1 / 52 + 1 / 30, rel=1e-14)


def test_json_input_accepted():
    cfg = parse_config(json.dumps(yaml.safe_load(SCHEDULE)))
    assert cfg == parse_config(SCHEDULE)


@pytest.mark.parametrize("name", fixture_names())
def test_shipped_fixtures_round_trip(name):
    cfg = parse_config(read_config_text(f"fixture:{name}"))
    assert parse_config(serialize_config(cfg)) == cfg


@given(
    n=st.integers(2, 8),
    c0=st.floats(1.0, 200.0, allow_nan=False),
    dt=st.floats(1e-6, 1e-2),
    gamma=st.floats(0.0, 20.0),
    data=st.data(),
)
def test_round_trip_property(n, c0, dt, gamma, data):
    launch = data.draw(st.integers(1, n))
    text = yaml.safe_dump(
        {"mode": "evolve-rwa", "network": {"pst": {"n": n, "c0_hz": c0}}, "launch": launch,
         "sample_dt_s": dt, "gamma_hz": gamma}
    )
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg


def test_digest_is_stable():
    assert parse_config(SCHEDULE).digest() == parse_config(SCHEDULE).digest()
