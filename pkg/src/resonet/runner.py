"""Run a parsed experiment config and write its results.

Every mode produces a :class:`ResultBundle`: named tables whose columns all
carry a unit, summary scalars that can be recomputed from those tables,
and metadata (config digest, version, wall time).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import metadata as _metadata

import numpy as np

from .calibration import VoltageCalibration
from .config import ExperimentConfig, serialize_config
from .exceptions import ConfigError, InvalidArgument, NumericalFailure, ResonetError
from .full import chain_c0, compare_to_rwa, default_dt, round_trip_samples, run_full_pst
from .model import TWO_PI, Schedule, Segment
from .rwa import (
    _matrix_on_chain,
    apply_damping_envelope,
    basis_state,
    evolve_schedule,
    wrap_phase,
)
from .spectrum import detuning_grid, eigenvalues, frequency_response, peak_positions
from .synthesis import is_strong_coupling, mirror_index, parity_phase, pst_couplings, transfer_period

THREADS_ENV = "RESONET_THREADS"


def tool_version():
    try:
        return _metadata.version("resonet")
    except _metadata.PackageNotFoundError:
        return "0+unknown"


def thread_count():
    """Worker threads for internal sweeps: ``$RESONET_THREADS`` or the CPU count."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgument(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InvalidArgument(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


@dataclass(frozen=True)
class Table:
    """Column-major numeric table; ``columns`` is a tuple of ``(name, unit)``."""

    columns: tuple
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float).reshape(-1, len(self.columns))
        object.__setattr__(self, "data", data)
        for name, unit in self.columns:
            if not unit:
                raise ValueError(f"column {name} has no unit")

    @property
    def names(self):
        return [name for name, _ in self.columns]

    def column(self, name):
        return self.data[:, self.names.index(name)]

    def __len__(self):
        return self.data.shape[0]


@dataclass
class ResultBundle:
    mode: str
    metadata: dict
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _site_columns(labels, prefix="site"):
    cols = [("time_s", "s")]
    for label in labels:
        cols += [(f"{prefix}_{label}_re", "arb"), (f"{prefix}_{label}_im", "arb")]
    return tuple(cols)


def _complex_rows(times, amplitudes):
    amplitudes = np.asarray(amplitudes, dtype=complex).reshape(len(times), -1)
    out = np.empty((len(times), 1 + 2 * amplitudes.shape[1]))
    out[:, 0] = times
    out[:, 1::2] = amplitudes.real
    out[:, 2::2] = amplitudes.imag
    return out


def complex_columns(table: Table, label, prefix="site"):
    """Complex series of one site from a table built by the runner."""
    return table.column(f"{prefix}_{label}_re") + 1j * table.column(f"{prefix}_{label}_im")


def centred_phase(phi):
    """Phase mapped into [-pi/2, 3pi/2), so round-trip values 0 and pi sit mid-range."""
    return (float(phi) + 0.5 * math.pi) % TWO_PI - 0.5 * math.pi


# -- modes --------------------------------------------------------------------------


def _run_synth(cfg: ExperimentConfig, bundle):
    pst = cfg.data["network"]["pst"]
    n, c0_hz, sites = pst["n"], pst["c0_hz"], pst["sites"]
    profile = pst_couplings(n, TWO_PI * c0_hz)
    cols = [("edge", "1"), ("site_a", "1"), ("site_b", "1"), ("coupling_hz", "Hz"), ("coupling_rad_s", "rad/s")]
    rows = [[j + 1, a, b, c / TWO_PI, c] for j, (a, b, c) in enumerate(zip(sites, sites[1:], profile.couplings))]
    cal_cfg = cfg.data.get("calibration")
    if cal_cfg:
        cal = _calibration(cal_cfg)
        v_dc = cal_cfg["v_dc"]
        cols.append(("v_ac_v", "V"))
        for row in rows:
            row.append(cal.voltage_for(v_dc, row[4]))
        bundle.summary["alpha_hz_per_v2"] = cal.coefficient
        bundle.summary["v_dc_v"] = v_dc
    bundle.tables["couplings"] = Table(tuple(cols), np.array(rows))
    gammas = [cfg.network.resonator(s).gamma for s in sites]
    c = profile.couplings
    bundle.summary.update(
        n=n,
        c0_hz=c0_hz,
        c0_rad_s=TWO_PI * c0_hz,
        period_s=profile.period,
        max_coupling_hz=float(np.max(c)) / TWO_PI,
        mirror_symmetric=bool(np.array_equal(c, c[::-1])),
        parity_phase_rad=parity_phase(n),
        all_strong=bool(all(is_strong_coupling(x, max(gammas)) for x in c)),
    )


def _calibration(cal_cfg):
    if cal_cfg.get("points"):
        pts = cal_cfg["points"]
        x = np.array([[p["v_dc"], p["v_ac"]] for p in pts], dtype=float)
        y = TWO_PI * np.array([p["coupling_hz"] for p in pts], dtype=float)
        return VoltageCalibration().fit(x, y)
    return VoltageCalibration(alpha=cal_cfg["alpha_hz_per_v2"])


def _run_calibrate(cfg: ExperimentConfig, bundle):
    cal_cfg = cfg.data["calibration"]
    cal = _calibration(cal_cfg)
    pts = cal_cfg["points"]
    x = np.array([[p["v_dc"], p["v_ac"]] for p in pts], dtype=float)
    fitted = cal.predict(x) / TWO_PI
    rows = [[p["v_dc"], p["v_ac"], p["coupling_hz"], f] for p, f in zip(pts, fitted)]
    bundle.tables["calibration"] = Table(
        (("v_dc_v", "V"), ("v_ac_v", "V"), ("coupling_hz", "Hz"), ("fitted_hz", "Hz")), np.array(rows)
    )
    bundle.summary.update(alpha_hz_per_v2=cal.coefficient, residual_hz=cal.residual_, n_points=len(pts))
    if "v_dc" in cal_cfg:
        bundle.summary["v_ac_for_1hz_v"] = cal.voltage_for(cal_cfg["v_dc"], TWO_PI)


def _pst_period(cfg):
    pst = cfg.data["network"].get("pst")
    return transfer_period(TWO_PI * pst["c0_hz"]) if pst else None


def _run_evolve_rwa(cfg: ExperimentConfig, bundle):
    network = cfg.network
    chain = network.chain()
    launch = cfg.data["launch"]
    period = _pst_period(cfg)
    if cfg.schedule is not None:
        schedule = cfg.schedule
    else:
        duration = cfg.data.get("duration_s", period)
        if duration is None:
            raise InvalidArgument("duration_s is required when the network is not a pst chain")
        schedule = Schedule((Segment(network.couplings, duration),))
    x0 = basis_state(len(chain), chain.index(launch) + 1)
    traj = evolve_schedule(schedule, x0, cfg.data["sample_dt_s"], chain)
    gamma = TWO_PI * cfg.data["gamma_hz"]
    if gamma > 0:
        traj = apply_damping_envelope(traj, gamma)
    bundle.tables["trajectory"] = Table(_site_columns(chain), _complex_rows(traj.times, traj.amplitudes))

    # exact states at t = 0 and every segment end, so summaries do not depend on sample_dt
    events = [float(t) for t in schedule.boundaries()]
    states = np.array([traj.state_at(t).amplitudes for t in events])
    bundle.tables["events"] = Table(_site_columns(chain), _complex_rows(events, states))

    pops = np.abs(states) ** 2
    frac = pops / pops.sum(axis=1, keepdims=True)
    target = chain[mirror_index(chain.index(launch) + 1, len(chain)) - 1]
    bundle.summary.update(
        launch=launch,
        target=target,
        t_transfer_s=events[1],
        fidelity_target=float(frac[1, chain.index(target)]),
        fidelity_launch_final=float(frac[-1, chain.index(launch)]),
        event_times_s=[float(t) for t in events],
        event_peak_sites=[int(chain[k]) for k in np.argmax(frac, axis=1)],
        event_peak_fidelity=[float(v) for v in np.max(frac, axis=1)],
        gamma_hz=cfg.data["gamma_hz"],
    )
    if period is not None:
        bundle.summary["period_s"] = period


def _parity_one(chain, couplings, launch, period, sample_dt):
    seg = Segment(couplings, 2.0 * period)
    x0 = basis_state(len(chain), chain.index(launch) + 1)
    traj = evolve_schedule(seg, x0, sample_dt, chain)
    k = chain.index(launch)
    series = traj.amplitudes[:, k]
    events = np.array([traj.state_at(t).amplitudes[k] for t in (0.0, period, 2.0 * period)])
    return series, traj.times, events


def _run_parity(cfg: ExperimentConfig, bundle):
    network = cfg.network
    chain = network.chain()
    period = _pst_period(cfg)
    if period is None:
        raise InvalidArgument("parity mode needs a pst chain")
    launches = cfg.launches
    with ThreadPoolExecutor(max_workers=min(thread_count(), len(launches))) as pool:
        results = list(
            pool.map(lambda l: _parity_one(chain, network.couplings, l, period, cfg.data["sample_dt_s"]), launches)
        )
    times = results[0][1]
    cols = [("time_s", "s")]
    data = [times]
    ev_cols = [("time_s", "s")]
    ev_data = [np.array([0.0, period, 2.0 * period])]
    for launch, (series, _, events) in zip(launches, results):
        cols += [(f"amplitude_{launch}", "arb"), (f"phase_{launch}", "rad")]
        amp = np.abs(series)
        rel = np.angle(series * np.conj(series[0]))
        rel[amp <= 1e-6 * amp[0]] = np.nan
        data += [amp, rel]
        ev_cols += [(f"launch_{launch}_re", "arb"), (f"launch_{launch}_im", "arb")]
        ev_data += [events.real, events.imag]
    bundle.tables["phase"] = Table(tuple(cols), np.column_stack(data))
    bundle.tables["events"] = Table(tuple(ev_cols), np.column_stack(ev_data))

    n = len(chain)
    bundle.summary.update(n=n, period_s=period, expected_phase_rad=parity_phase(n), launches=list(launches))
    for i, (launch, (_, _, events)) in enumerate(zip(launches, results)):
        phi = centred_phase(wrap_phase(np.angle(events[2]) - np.angle(events[0])))
        if i == 0:
            bundle.summary["phase_shift_2T"] = phi
        bundle.summary[f"phase_shift_2T_R{launch}"] = phi
        bundle.summary[f"return_fidelity_R{launch}"] = float(abs(events[2]) ** 2 / abs(events[0]) ** 2)


def _run_spectrum(cfg: ExperimentConfig, bundle):
    network = cfg.network
    chain = network.chain()
    sp = cfg.data["spectrum"]
    h = _matrix_on_chain(chain, network.couplings)
    grid_hz = detuning_grid(sp["start_hz"], sp["stop_hz"], sp["step_hz"])
    curve = frequency_response(
        h, TWO_PI * sp["gamma_hz"], chain.index(sp["drive"]) + 1, chain.index(sp["probe"]) + 1, TWO_PI * grid_hz
    )
    bundle.tables["response"] = Table((("detuning_hz", "Hz"), ("magnitude", "arb")), np.column_stack([grid_hz, curve.magnitudes]))
    lam = eigenvalues(h) / TWO_PI
    bundle.tables["eigenvalues"] = Table((("eigenvalue_hz", "Hz"), ("peak_expected_hz", "Hz")), np.column_stack([lam, lam / 2]))
    peaks = peak_positions(curve) / TWO_PI
    spacing = np.diff(peaks)
    bundle.summary.update(
        n=len(chain),
        drive=sp["drive"],
        probe=sp["probe"],
        gamma_hz=sp["gamma_hz"],
        n_peaks=int(peaks.size),
        peaks_hz=[float(p) for p in peaks],
        mean_spacing_hz=float(np.mean(spacing)) if spacing.size else float("nan"),
        spacing_std_over_mean=float(np.std(spacing) / np.mean(spacing)) if spacing.size > 1 else 0.0,
        expected_spacing_hz=float(np.mean(np.diff(lam)) / 2) if lam.size > 1 else 0.0,
    )


def _run_evolve_full(cfg: ExperimentConfig, bundle):
    network = cfg.network
    chain = network.chain()
    fc = cfg.data["full"]
    launch = cfg.data["launch"]
    scale = fc["scale"]
    scaled = [replace(network.resonator(i), omega=network.resonator(i).omega / scale) for i in chain]
    dt = default_dt(scaled, fc["steps_per_period"])
    tau = fc["time_constant_s"]
    duration = cfg.data.get("duration_s")
    if duration is None:
        duration = fc["pulse_duration_s"] + 2 * TWO_PI / chain_c0(network) + 5 * tau + 2e-3
    traj = run_full_pst(
        network,
        launch,
        scale=scale,
        pulse_amplitude=fc["pulse_amplitude"],
        pulse_duration=fc["pulse_duration_s"],
        duration=duration,
        dt=dt,
        include_diagonal=fc["include_diagonal"],
    )
    cmp = compare_to_rwa(traj, network, tau)
    period = traj.meta["period"]
    stride = max(1, int(round(fc["output_dt_s"] / traj.dt)))
    idx = np.arange(0, traj.times.size, stride)
    bundle.tables["envelope"] = Table(_site_columns(chain), _complex_rows(traj.times[idx], cmp.measured[idx]))
    bundle.tables["prediction"] = Table(_site_columns(chain), _complex_rows(traj.times[idx], cmp.predicted[idx]))

    # exact-sample events: reference point after the filter settles, then +T and +2T
    ev_idx = round_trip_samples(traj, cmp)
    ev_times = traj.times[ev_idx]
    bundle.tables["events"] = Table(_site_columns(chain), _complex_rows(ev_times, cmp.measured[ev_idx]))
    bundle.tables["events_prediction"] = Table(_site_columns(chain), _complex_rows(ev_times, cmp.predicted[ev_idx]))

    reliable = traj.times[idx] >= cmp.transient_until
    meas, pred = cmp.measured[idx][reliable], cmp.predicted[idx][reliable]
    peak = float(np.max(np.abs(pred)))
    k = chain.index(launch)
    target = chain[mirror_index(k + 1, len(chain)) - 1]
    ev = cmp.measured[ev_idx]
    pops = np.abs(ev) ** 2
    bundle.summary.update(
        launch=launch,
        target=target,
        scale=scale,
        dt_s=traj.dt,
        steps=int(traj.times.size - 1),
        period_s=period,
        transient_until_s=cmp.transient_until,
        max_error_fraction=float(np.max(np.abs(np.abs(meas) - np.abs(pred))) / peak),
        phase_shift_2T=centred_phase(wrap_phase(np.angle(ev[2, k]) - np.angle(ev[0, k]))),
        fidelity_target_T=float(pops[1, chain.index(target)] / pops[1].sum()),
        omega_hz_scaled=[r.omega / TWO_PI for r in scaled],
    )


_DISPATCH = {
    "synth": _run_synth,
    "calibrate": _run_calibrate,
    "evolve-rwa": _run_evolve_rwa,
    "parity": _run_parity,
    "spectrum": _run_spectrum,
    "evolve-full": _run_evolve_full,
}


def _with_context(exc, context):
    msg = f"{context}: {exc.args[0] if exc.args else exc}"
    if isinstance(exc, ConfigError):
        return ConfigError([f"{context}: {e}" for e in exc.errors])
    if isinstance(exc, NumericalFailure):
        new = type(exc)(msg)
        new.diagnostics = dict(exc.diagnostics)
        return new
    try:
        return type(exc)(msg)
    except TypeError:
        return exc


def run_experiment(cfg: ExperimentConfig) -> ResultBundle:
    """Execute ``cfg``; deterministic apart from the reported wall time."""
    start = time.perf_counter()
    bundle = ResultBundle(
        cfg.mode,
        {
            "mode": cfg.mode,
            "config_sha256": cfg.digest(),
            "tool_version": tool_version(),
            "config": cfg.data,
        },
    )
    pst = (cfg.data.get("network") or {}).get("pst")
    if pst:
        bundle.metadata["c0_hz"] = pst["c0_hz"]
        bundle.metadata["c0_rad_s"] = TWO_PI * pst["c0_hz"]
    try:
        _DISPATCH[cfg.mode](cfg, bundle)
    except ResonetError as exc:
        raise _with_context(exc, f"{cfg.mode} experiment") from exc
    bundle.metadata["wall_time_s"] = time.perf_counter() - start
    return bundle


# -- output -------------------------------------------------------------------------


def _fmt(value):
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if not math.isfinite(value) else value
    return value


def table_to_csv(table: Table) -> str:
    lines = [",".join(table.names)]
    lines += [",".join(_fmt(v) for v in row) for row in table.data]
    return "\n".join(lines) + "\n"


def bundle_to_json(bundle: ResultBundle) -> str:
    doc = {
        "metadata": bundle.metadata,
        "summary": bundle.summary,
        "tables": {
            name: {
                "columns": [{"name": n, "unit": u} for n, u in t.columns],
                "rows": t.data.tolist(),
            }
            for name, t in bundle.tables.items()
        },
    }
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def emit_results(bundle: ResultBundle, out_dir, fmt="csv"):
    """Write ``bundle`` under ``out_dir``; returns the list of files written.

    ``csv`` writes one ``<table>.csv`` per table plus ``summary.json``;
    ``json`` writes everything to ``result.json``.
    """
    if fmt not in ("csv", "json"):
        raise InvalidArgument(f"unknown format {fmt!r}")
    written = []
    if fmt == "json":
        path = os.path.join(out_dir, "result.json")
        _atomic_write(path, bundle_to_json(bundle))
        return [path]
    for name, table in bundle.tables.items():
        path = os.path.join(out_dir, f"{name}.csv")
        _atomic_write(path, table_to_csv(table))
        written.append(path)
    path = os.path.join(out_dir, "summary.json")
    doc = {"metadata": bundle.metadata, "summary": bundle.summary}
    _atomic_write(path, json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n")
    written.append(path)
    return written


def read_csv_table(path) -> tuple:
    """Read a table written by :func:`emit_results`; returns ``(names, data)``."""
    with open(path, encoding="utf-8") as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return names, data.reshape(-1, len(names))


__all__ = [
    "ResultBundle",
    "Table",
    "run_experiment",
    "emit_results",
    "serialize_config",
    "thread_count",
]
