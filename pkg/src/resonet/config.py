"""Experiment configuration files.

Configs are YAML (JSON is accepted too, being a subset). Parsing is strict:
unknown keys and missing required fields are reported with line numbers,
and every problem found is reported at once. All frequencies in files are
ordinary Hz; conversion to rad/s happens when the config is turned into
domain objects.
"""

from __future__ import annotations

import copy
import hashlib
import re
from dataclasses import dataclass
from typing import Any, Optional

import yaml

from .exceptions import ConfigError
from .model import (
    FIXTURE_FREQS_HZ,
    FIXTURE_GAMMA_HZ,
    CouplingSpec,
    Network,
    ResonatorSpec,
    Schedule,
    Segment,
    fixture_resonators,
    validate_network,
)
from .synthesis import pst_couplings, pst_segment, transfer_period

MODES = ("synth", "evolve-rwa", "evolve-full", "spectrum", "parity", "calibrate")
FORMATS = ("csv", "json")


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 only treats "1.0e-4" as a float; accept the common "1e-4" spelling as well
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+][0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def _to_python(node, path, lines, loader):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, value_node in node.value:
            key = key_node.value
            if key in out:
                raise ConfigError([f"line {key_node.start_mark.line + 1}: duplicate key '{key}'"])
            out[key] = _to_python(value_node, path + (key,), lines, loader)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, path + (i,), lines, loader) for i, v in enumerate(node.value)]
    return loader.construct_object(node, deep=True)


# -- schema ------------------------------------------------------------------

_NUM = (int, float)


class _Field:
    def __init__(self, kind, required=False, default=None, positive=False, nonneg=False, choices=None):
        self.kind = kind
        self.required = required
        self.default = default
        self.positive = positive
        self.nonneg = nonneg
        self.choices = choices


PST = {
    "n": _Field(int, required=True),
    "c0_hz": _Field(_NUM, required=True, positive=True),
    "sites": _Field(list),
}
RESONATOR = {
    "index": _Field(int, required=True),
    "freq_hz": _Field(_NUM, required=True, positive=True),
    "gamma_hz": _Field(_NUM, default=FIXTURE_GAMMA_HZ, nonneg=True),
    "mass": _Field(_NUM, default=1.0, positive=True),
}
COUPLING = {
    "a": _Field(int, required=True),
    "b": _Field(int, required=True),
    "strength_hz": _Field(_NUM, required=True, nonneg=True),
}
NETWORK = {
    "pst": _Field(dict),
    "resonators": _Field(list),
    "couplings": _Field(list),
    "chain": _Field(list),
}
SEGMENT = {
    "c0_hz": _Field(_NUM, positive=True),
    "couplings": _Field(list),
    "duration_s": _Field(_NUM, positive=True),
}
FULL = {
    "scale": _Field(_NUM, default=64.0, positive=True),
    "pulse_amplitude": _Field(_NUM, default=1.0, positive=True),
    "pulse_duration_s": _Field(_NUM, default=2e-3, positive=True),
    "steps_per_period": _Field(int, default=50, positive=True),
    "time_constant_s": _Field(_NUM, default=1.0 / (2 * 3.141592653589793 * 300.0), positive=True),
    "output_dt_s": _Field(_NUM, default=1e-4, positive=True),
    "include_diagonal": _Field(bool, default=True),
}
SPECTRUM = {
    "drive": _Field(int),
    "probe": _Field(int),
    "gamma_hz": _Field(_NUM, default=FIXTURE_GAMMA_HZ, positive=True),
    "start_hz": _Field(_NUM),
    "stop_hz": _Field(_NUM),
    "step_hz": _Field(_NUM, positive=True),
}
CAL_POINT = {
    "v_dc": _Field(_NUM, required=True, nonneg=True),
    "v_ac": _Field(_NUM, required=True, nonneg=True),
    "coupling_hz": _Field(_NUM, required=True, nonneg=True),
}
CALIBRATION = {
    "alpha_hz_per_v2": _Field(_NUM, positive=True),
    "points": _Field(list),
    "v_dc": _Field(_NUM, positive=True),
}
OUTPUT = {
    "dir": _Field(str),
    "format": _Field(str, default="csv", choices=FORMATS),
}
TOP = {
    "mode": _Field(str, choices=MODES),
    "n": _Field(int),
    "c0_hz": _Field(_NUM, positive=True),
    "sites": _Field(list),
    "network": _Field(dict),
    "launch": _Field((int, list)),
    "sample_dt_s": _Field(_NUM, positive=True),
    "duration_s": _Field(_NUM, positive=True),
    "gamma_hz": _Field(_NUM, nonneg=True),
    "schedule": _Field(list),
    "full": _Field(dict),
    "spectrum": _Field(dict),
    "calibration": _Field(dict),
    "output": _Field(dict),
}


def _where(lines, path):
    while path and path not in lines:
        path = path[:-1]
    line = lines.get(path)
    return f"line {line}: " if line else ""


def _dotted(path):
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _check_type(value, field):
    kinds = field.kind if isinstance(field.kind, tuple) else (field.kind,)
    if isinstance(value, bool) and bool not in kinds:
        return False
    if field.kind is _NUM or (isinstance(field.kind, tuple) and float in kinds):
        return isinstance(value, kinds) and not isinstance(value, bool)
    return isinstance(value, kinds)


def _check_mapping(data, schema, path, lines, errors, fill_defaults=True):
    if not isinstance(data, dict):
        errors.append(f"{_where(lines, path)}{_dotted(path) or 'config'} must be a mapping")
        return {}
    out = {}
    for key in data:
        if key not in schema:
            errors.append(
                f"{_where(lines, path + (key,))}unknown key '{_dotted(path + (key,))}' "
                f"(allowed: {', '.join(sorted(schema))})"
            )
    for key, field in schema.items():
        full = path + (key,)
        if key not in data or data[key] is None:
            if field.required:
                errors.append(f"{_where(lines, path)}missing required field '{_dotted(full)}'")
            elif fill_defaults and field.default is not None:
                out[key] = field.default
            continue
        value = data[key]
        if not _check_type(value, field):
            kinds = field.kind if isinstance(field.kind, tuple) else (field.kind,)
            names = "/".join(sorted({k.__name__ for k in kinds}))
            errors.append(f"{_where(lines, full)}'{_dotted(full)}' must be {names}, got {value!r}")
            continue
        if isinstance(value, int) and not isinstance(value, bool) and float in (
            field.kind if isinstance(field.kind, tuple) else (field.kind,)
        ):
            value = float(value)
        if field.positive and isinstance(value, (int, float)) and not value > 0:
            errors.append(f"{_where(lines, full)}'{_dotted(full)}' must be > 0, got {value}")
            continue
        if field.nonneg and isinstance(value, (int, float)) and not value >= 0:
            errors.append(f"{_where(lines, full)}'{_dotted(full)}' must be >= 0, got {value}")
            continue
        if field.choices and value not in field.choices:
            errors.append(f"{_where(lines, full)}'{_dotted(full)}' must be one of {', '.join(field.choices)}, got {value!r}")
            continue
        out[key] = value
    return out


def _check_list(items, schema, path, lines, errors):
    return [_check_mapping(item, schema, path + (i,), lines, errors) for i, item in enumerate(items)]


def _check_int_list(items, path, lines, errors):
    out = []
    for i, v in enumerate(items):
        if isinstance(v, bool) or not isinstance(v, int):
            errors.append(f"{_where(lines, path + (i,))}'{_dotted(path + (i,))}' must be an integer, got {v!r}")
        else:
            out.append(v)
    return out


# -- config object -------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, canonical experiment description.

    ``data`` is the canonical dictionary (defaults filled in, shorthand
    expanded); the typed objects are derived from it.
    """

    data: dict
    network: Optional[Network]
    schedule: Optional[Schedule]

    @property
    def mode(self):
        return self.data["mode"]

    def get(self, key, default=None):
        return self.data.get(key, default)

    @property
    def launches(self):
        launch = self.data.get("launch")
        return list(launch) if isinstance(launch, list) else [launch]

    def digest(self):
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.data == other.data

    __hash__ = None


def parse_config(text, mode=None) -> ExperimentConfig:
    """Parse and validate config text; ``mode`` fills in (or must match) the file's mode."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = {}
    try:
        node = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError([f"{where}syntax error: {getattr(exc, 'problem', exc)}"]) from None
    if node is None:
        raise ConfigError(["config is empty"])
    raw = _to_python(node, (), lines, _Loader(""))

    errors = []
    top = _check_mapping(raw, TOP, (), lines, errors, fill_defaults=False)
    if mode is not None:
        if mode not in MODES:
            errors.append(f"unknown mode {mode!r}")
        elif "mode" in top and top["mode"] != mode:
            errors.append(f"{_where(lines, ('mode',))}config mode '{top['mode']}' does not match requested '{mode}'")
        top["mode"] = mode
    if "mode" not in top:
        if "mode" not in raw:
            errors.append("missing required field 'mode'")
        raise ConfigError(errors)

    data = {"mode": top["mode"]}
    shorthand = {k: top[k] for k in ("n", "c0_hz", "sites") if k in top}
    if shorthand:
        if "network" in top:
            errors.append(f"{_where(lines, ('n',))}give either top-level n/c0_hz/sites or a network section, not both")
        else:
            top["network"] = {"pst": shorthand}
            lines.setdefault(("network",), lines.get(("n",)) or lines.get(("c0_hz",)))

    network = None
    if top["mode"] != "calibrate" or "network" in top:
        if "network" not in top:
            errors.append("missing required field 'network'")
        else:
            data["network"], network = _parse_network(top["network"], ("network",), lines, errors)

    schedule = None
    if "schedule" in top:
        data["schedule"], schedule = _parse_schedule(top["schedule"], data.get("network"), lines, errors)

    chain = network.chain() if network is not None and not errors else None
    needs_pst = top["mode"] in ("synth", "parity")
    if needs_pst and "network" in data and "pst" not in data["network"]:
        errors.append(f"{_where(lines, ('network',))}mode {top['mode']} needs a network.pst section")
    mode_ = top["mode"]
    if mode_ in ("evolve-rwa", "evolve-full", "parity"):
        launch = top.get("launch", chain[0] if chain else None)
        launches = launch if isinstance(launch, list) else [launch]
        if mode_ != "parity" and isinstance(launch, list):
            errors.append(f"{_where(lines, ('launch',))}'launch' must be a single site in mode {mode_}")
        if chain is not None:
            for site in launches:
                if isinstance(site, bool) or not isinstance(site, int) or site not in chain:
                    errors.append(
                        f"{_where(lines, ('launch',))}launch site {site!r} is not on the chain "
                        f"{list(chain)} ({len(chain)} sites)"
                    )
        data["launch"] = launch
    if mode_ == "evolve-rwa":
        data["sample_dt_s"] = top.get("sample_dt_s", 1e-4)
        data["gamma_hz"] = top.get("gamma_hz", 0.0)
        if "duration_s" in top:
            data["duration_s"] = top["duration_s"]
    elif mode_ == "parity":
        data["sample_dt_s"] = top.get("sample_dt_s", 1e-4)
    if mode_ == "evolve-full":
        data["full"] = _check_mapping(top.get("full", {}), FULL, ("full",), lines, errors)
        if "duration_s" in top:
            data["duration_s"] = top["duration_s"]
    if mode_ == "spectrum":
        spec = _check_mapping(top.get("spectrum", {}), SPECTRUM, ("spectrum",), lines, errors)
        if chain is not None:
            for key in ("drive", "probe"):
                site = spec.setdefault(key, chain[len(chain) // 2])
                if site not in chain:
                    errors.append(f"{_where(lines, ('spectrum', key))}{key} site {site} is not on the chain {list(chain)}")
            c_max = max((c.strength for c in network.couplings), default=0.0) / (2 * 3.141592653589793)
            g = spec["gamma_hz"]
            half = round(1.5 * c_max * max(len(chain) - 1, 1) / 2 + 6 * g, 6)
            spec.setdefault("start_hz", -half)
            spec.setdefault("stop_hz", half)
            spec.setdefault("step_hz", round(g / 20, 9))
            if spec["stop_hz"] <= spec["start_hz"]:
                errors.append(f"{_where(lines, ('spectrum',))}spectrum.stop_hz must exceed start_hz")
        data["spectrum"] = spec
    if mode_ in ("calibrate", "synth") and ("calibration" in top or mode_ == "calibrate"):
        data["calibration"] = _parse_calibration(top.get("calibration"), mode_, lines, errors)
    if "output" in top:
        data["output"] = _check_mapping(top["output"], OUTPUT, ("output",), lines, errors)

    stray = [k for k in ("full", "spectrum", "schedule", "calibration") if k in top and k not in data]
    for k in stray:
        errors.append(f"{_where(lines, (k,))}section '{k}' is not used by mode {mode_}")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(data, network, schedule)


def _parse_network(raw, path, lines, errors):
    net = _check_mapping(raw, NETWORK, path, lines, errors)
    canon = {}
    chain = None
    couplings = []
    if "pst" in net and "couplings" in net:
        errors.append(f"{_where(lines, path)}network needs either 'pst' or 'couplings', not both")
        return canon, None
    if "pst" in net:
        pst = _check_mapping(net["pst"], PST, path + ("pst",), lines, errors)
        if "n" in pst and "c0_hz" in pst:
            n = pst["n"]
            if n < 2:
                errors.append(f"{_where(lines, path + ('pst', 'n'))}'network.pst.n' must be >= 2, got {n}")
                return canon, None
            sites = _check_int_list(pst.get("sites", list(range(1, n + 1))), path + ("pst", "sites"), lines, errors)
            if len(sites) != n:
                errors.append(f"{_where(lines, path + ('pst', 'sites'))}pst.sites lists {len(sites)} sites but n = {n}")
                return canon, None
            pst["sites"] = sites
            canon["pst"] = pst
            chain = tuple(sites)
            profile = pst_couplings(n, 2 * 3.141592653589793 * pst["c0_hz"])
            couplings = list(profile.edges(sites))
    elif "couplings" in net:
        items = _check_list(net["couplings"], COUPLING, path + ("couplings",), lines, errors)
        canon["couplings"] = items
        couplings = [CouplingSpec.from_hz(c["a"], c["b"], c["strength_hz"]) for c in items if len(c) == 3]
    else:
        errors.append(f"{_where(lines, path)}network needs a 'pst' or 'couplings' section")
        return canon, None
    if "chain" in net:
        chain = tuple(_check_int_list(net["chain"], path + ("chain",), lines, errors))
        canon["chain"] = list(chain)

    if "resonators" in net:
        items = _check_list(net["resonators"], RESONATOR, path + ("resonators",), lines, errors)
        canon["resonators"] = items
        resonators = [
            ResonatorSpec.from_hz(r["index"], r["freq_hz"], r["gamma_hz"], r["mass"]) for r in items if "index" in r and "freq_hz" in r
        ]
    else:
        labels = sorted(set(chain or ()) | {i for c in couplings for i in (c.a, c.b)})
        bad = [i for i in labels if not 1 <= i <= len(FIXTURE_FREQS_HZ)]
        if bad:
            errors.append(
                f"{_where(lines, path)}sites {bad} are outside the built-in R1..R{len(FIXTURE_FREQS_HZ)} "
                "fixture; list 'resonators' explicitly"
            )
            return canon, None
        resonators = list(fixture_resonators(labels))
    if errors:
        return canon, None
    network = Network(tuple(resonators), tuple(couplings), chain)
    for problem in validate_network(network):
        errors.append(f"{_where(lines, path)}network: {problem}")
    return canon, network


def _parse_schedule(raw, network_canon, lines, errors):
    canon, segments = [], []
    pst = (network_canon or {}).get("pst")
    for i, item in enumerate(raw):
        seg = _check_mapping(item, SEGMENT, ("schedule", i), lines, errors)
        if ("c0_hz" in seg) == ("couplings" in seg):
            errors.append(f"{_where(lines, ('schedule', i))}schedule[{i}] needs exactly one of 'c0_hz' or 'couplings'")
            continue
        if "c0_hz" in seg:
            if pst is None:
                errors.append(f"{_where(lines, ('schedule', i))}schedule[{i}].c0_hz needs a network.pst chain")
                continue
            c0 = 2 * 3.141592653589793 * seg["c0_hz"]
            seg.setdefault("duration_s", transfer_period(c0))
            segments.append(pst_segment(pst["n"], c0, pst["sites"], seg["duration_s"]))
        else:
            items = _check_list(seg["couplings"], COUPLING, ("schedule", i, "couplings"), lines, errors)
            seg["couplings"] = items
            if "duration_s" not in seg:
                errors.append(f"{_where(lines, ('schedule', i))}missing required field 'schedule[{i}].duration_s'")
                continue
            segments.append(
                Segment(tuple(CouplingSpec.from_hz(c["a"], c["b"], c["strength_hz"]) for c in items if len(c) == 3), seg["duration_s"])
            )
        canon.append(seg)
    if not raw:
        errors.append(f"{_where(lines, ('schedule',))}schedule must contain at least one segment")
    return canon, (Schedule(tuple(segments)) if segments and len(segments) == len(raw) else None)


def _parse_calibration(raw, mode, lines, errors):
    if raw is None:
        errors.append("missing required field 'calibration'")
        return {}
    cal = _check_mapping(raw, CALIBRATION, ("calibration",), lines, errors)
    if "points" in cal:
        cal["points"] = _check_list(cal["points"], CAL_POINT, ("calibration", "points"), lines, errors)
    if mode == "calibrate" and not cal.get("points"):
        errors.append(f"{_where(lines, ('calibration',))}calibrate mode needs calibration.points")
    if mode == "synth":
        if "points" not in cal and "alpha_hz_per_v2" not in cal:
            errors.append(f"{_where(lines, ('calibration',))}calibration needs 'points' or 'alpha_hz_per_v2'")
        if "v_dc" not in cal:
            errors.append(f"{_where(lines, ('calibration',))}missing required field 'calibration.v_dc'")
    return cal


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical YAML text; ``parse_config(serialize_config(c)) == c``."""
    return yaml.safe_dump(copy.deepcopy(cfg.data), sort_keys=True, default_flow_style=False)


def load_config(path, mode=None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), mode=mode)
