"""Command-line experiment harness.

Usage::

    artifact <experiment> --config FILE [--seed N] [--out DIR]

Each run writes ``<experiment>.csv`` (data), ``<experiment>_summary.json``
and ``<experiment>_manifest.json`` into the output directory. Data files
depend only on the configuration, so reruns are byte-identical; the
manifest also records the wall time and is therefore not.

Exit codes: 0 success, 2 configuration error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from . import __version__
from . import channels, dynamics, grape, measures, qcore, sequences, tomography

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config schema


@dataclass(frozen=True)
class Key:
    default: Any
    kind: type
    doc: str


COMMON_KEYS: Dict[str, Key] = {
    "seed": Key(None, int, "RNG seed (mandatory here or via --seed)"),
    "out_dir": Key("out", str, "output directory (overridden by --out)"),
    "experiment": Key(None, str, "optional; must match the experiment on the command line"),
}

EXPERIMENT_KEYS: Dict[str, Dict[str, Key]] = {
    "discord_freeze": {
        "c1": Key(1.0, float, "initial Bell-diagonal coefficient c1"),
        "c2": Key(0.68, float, "initial c2"),
        "c3": Key(-0.68, float, "initial c3"),
        "gamma_sum": Key(7.21, float, "gamma1 + gamma2 of the free dephasing model (1/s)"),
        "floor_fraction": Key(0.22, float, "share of gamma_sum that is Markovian (not refocusable)"),
        "schemes": Key(["CPMG", "XY4S", "XY8S", "XY16S", "KDD"], list, "DD schemes to simulate"),
        "tau": Key(5e-4, float, "pulse slot length for CPMG/XY schemes and tau_k for KDD (s)"),
        "t_max": Key(0.4, float, "end of the simulated window (s)"),
        "dt_sample": Key(0.002, float, "sampling step for free decay (s)"),
        "n_nodes": Key(48, int, "Gauss-Hermite nodes per qubit for the static detuning ensemble"),
        "flip_angle_error": Key(0.0, float, "relative pi-pulse flip-angle error"),
    },
    "tripartite_decay": {
        "t1": Key([5.42, 5.65, 4.36], list, "T1 per qubit (s)"),
        "t2": Key([0.53, 0.55, 0.52], list, "T2 per qubit (s)"),
        "t_max": Key(0.8, float, "end of the time grid (s)"),
        "n_times": Key(161, int, "number of grid points including t = 0"),
        "fit_window": Key(0.4, float, "exponential fits use t <= fit_window"),
        "integrator_dt": Key(1e-4, float, "RK4 step (s)"),
    },
    "tomo_compare": {
        "state": Key("00+01", str, "true state: '+'-joined basis labels or a standard state name"),
        "sigma": Key(0.05, float, "noise scale of each Pauli expectation"),
        "n_trials": Key(1000, int, "number of noisy records"),
        "max_iter": Key(500, int, "MLE iteration cap"),
    },
    "udd_scaling": {
        "n_values": Key([1, 2, 3, 4], list, "UDD pulse counts"),
        "t_min": Key(1e-3, float, "shortest total time"),
        "t_max": Key(1e-1, float, "longest total time"),
        "n_t": Key(5, int, "number of log-spaced times"),
        "bath_seed": Key(7, int, "seed of the toy bath Hamiltonian"),
        "bath_dim": Key(4, int, "bath dimension"),
        "compare_t": Key(1e-2, float, "time for the super-Zeno vs equal-spacing comparison"),
        "dps": Key(50, int, "decimal digits for the high-precision leakage"),
    },
    "grape": {
        "preset": Key("cnot", str, "'not' or 'cnot'"),
        "n_steps": Key(0, int, "time steps (0 = preset default: 20 for NOT, 100 for CNOT)"),
        "j_hz": Key(50.0, float, "CNOT: Ising coupling J (Hz)"),
        "k": Key(2, int, "CNOT: total time k / (2 J)"),
        "max_iter": Key(500, int, "iteration cap"),
        "tol": Key(0.0, float, "stop at fidelity >= 1 - tol (0 = preset default: 1e-4 NOT, 1e-3 CNOT)"),
        "omega_max": Key(0.0, float, "amplitude scale for the random start (0 = preset default)"),
        "bound": Key(0.0, float, "box bound |u| <= bound (0 = unbounded)"),
    },
}


def _coerce(name: str, key: Key, value: Any) -> Any:
    if key.kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if key.kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if key.kind is str and isinstance(value, str):
        return value
    if key.kind is list and isinstance(value, list):
        return value
    raise ConfigError(f"key {name!r} expects {key.kind.__name__}, got {value!r}")


def load_config(experiment: str, text: str, seed: Optional[int] = None, out: Optional[str] = None) -> Dict[str, Any]:
    """Parse a flat TOML document and fill in defaults for ``experiment``."""
    if experiment not in EXPERIMENT_KEYS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    schema = {**COMMON_KEYS, **EXPERIMENT_KEYS[experiment]}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys for {experiment}: {', '.join(unknown)}")
    cfg: Dict[str, Any] = {}
    for name, key in schema.items():
        cfg[name] = _coerce(name, key, raw[name]) if name in raw else key.default
    if cfg["experiment"] not in (None, experiment):
        raise ConfigError(f"config is for {cfg['experiment']!r}, not {experiment!r}")
    cfg.pop("experiment")
    if seed is not None:
        cfg["seed"] = seed
    if cfg["seed"] is None:
        raise ConfigError("seed is mandatory (config key 'seed' or --seed)")
    if out is not None:
        cfg["out_dir"] = out
    return cfg


# ---------------------------------------------------------------------------
# output helpers


def format_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def format_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


@dataclass
class RunOutput:
    header: List[str]
    rows: List[List[Any]]
    summary: Dict[str, Any]
    converged: bool = True
    extra_files: Optional[Dict[str, str]] = None


# ---------------------------------------------------------------------------
# experiments


def _dd_schedule(name: str, tau: float) -> sequences.PulseSchedule:
    key = name.upper()
    if key == "CPMG":
        return sequences.cpmg_schedule(2, tau)
    if key in ("XY4S", "XY8S", "XY16S"):
        return sequences.xy_schedule(key, tau)
    if key == "KDD":
        return sequences.kdd_schedule(tau)
    raise ConfigError(f"unknown DD scheme {name!r}")


def _apply_local_pair(m1: np.ndarray, m2: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Apply single-qubit superoperators m1 (qubit 1) and m2 (qubit 2) to a two-qubit state."""
    r = rho.reshape(2, 2, 2, 2)  # [a, i, b, j]
    s1 = m1.reshape(2, 2, 2, 2)  # [a, b, a', b']
    s2 = m2.reshape(2, 2, 2, 2)
    out = np.einsum("abcd,ijkl,ckdl->aibj", s1, s2, r)
    return out.reshape(4, 4)


def detuning_width(c0: Tuple[float, float, float], gamma_sum: float, floor_fraction: float) -> float:
    """Per-qubit detuning spread s that keeps the free-decay transition time of the pure PD model.

    With a Markovian floor f * gamma_sum and static Gaussian detunings of
    width s on both qubits, c1(t) = c1(0) exp(-f gamma_sum t - s^2 t^2).
    Requiring c1 to reach |c3| at ln|c1/c3| / gamma_sum fixes s.
    """
    t_bar = measures.discord_transition_time(c0, gamma_sum)
    if not (t_bar > 0 and math.isfinite(t_bar)):
        raise ConfigError("the initial state has no finite discord transition time")
    return math.sqrt((1.0 - floor_fraction) * math.log(abs(c0[0] / c0[2]))) / t_bar


def _transition_from_curve(times: np.ndarray, coeffs: np.ndarray) -> float:
    gap = np.max(np.abs(coeffs[:, :2]), axis=1) - np.abs(coeffs[:, 2])
    return dynamics.first_zero_crossing(times, gap, floor=0.0)


def run_discord_freeze(cfg: Dict[str, Any]) -> RunOutput:
    c0 = (cfg["c1"], cfg["c2"], cfg["c3"])
    try:
        channels.BDCoefficients(*c0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not 0.0 < cfg["floor_fraction"] <= 1.0:
        raise ConfigError("floor_fraction must be in (0, 1]")
    floor_rate = cfg["floor_fraction"] * cfg["gamma_sum"]
    s = detuning_width(c0, cfg["gamma_sum"], cfg["floor_fraction"])
    nodes, weights = np.polynomial.hermite_e.hermegauss(cfg["n_nodes"])
    weights = weights / weights.sum()
    rho0 = qcore.bell_diagonal(*c0).matrix
    eps = cfg["flip_angle_error"]

    def member_noise(delta: float) -> dynamics.LindbladModel:
        # per-qubit share of the floor; the dephasing jump sqrt(k) sigma_z decays coherences at 2k
        return dynamics.LindbladModel(delta * qcore.SZ / 2, [(qcore.SZ, floor_rate / 4)])

    def averaged_curves(schedule: sequences.PulseSchedule, n_cycles: int) -> List[np.ndarray]:
        """Ensemble-averaged single-qubit maps after 0..n_cycles cycles."""
        acc = [np.zeros((4, 4), dtype=complex) for _ in range(n_cycles + 1)]
        for x, w in zip(nodes, weights):
            cyc = sequences.cycle_superoperator(schedule, member_noise(s * x), 2, eps)
            p = np.eye(4, dtype=complex)
            acc[0] += w * p
            for n in range(1, n_cycles + 1):
                p = cyc @ p
                acc[n] += w * p
        return acc

    def rows_for(name: str, period: float) -> Tuple[List[List[Any]], float]:
        n_cycles = int(math.floor(cfg["t_max"] / period + 1e-9))
        sched = sequences.free_schedule(period, 2) if name == "free" else _dd_schedule(name, cfg["tau"])
        maps = averaged_curves(sched, n_cycles)
        times, coeffs, rows = [], [], []
        for n, m in enumerate(maps):
            rho = _apply_local_pair(m, m, rho0)
            rho = 0.5 * (rho + rho.conj().T)
            c = np.array(channels.bd_extract(rho))
            corr = measures.bd_correlations(tuple(np.clip(c, -1, 1)))
            t = n * period
            times.append(t)
            coeffs.append(c)
            rows.append([name, t, corr.total, corr.classical, corr.discord])
        return rows, _transition_from_curve(np.array(times), np.array(coeffs))

    rows: List[List[Any]] = []
    t_bar: Dict[str, float] = {}
    # closed-form Markovian model (no DD) for reference
    model_t = np.arange(0.0, cfg["t_max"] + 1e-12, cfg["dt_sample"])
    for t in model_t:
        c = channels.bd_evolve_closed_form(channels.BDCoefficients(*c0), cfg["gamma_sum"] / 2, cfg["gamma_sum"] / 2, float(t))
        corr = measures.bd_correlations(c)
        rows.append(["model", float(t), corr.total, corr.classical, corr.discord])
    t_bar["model"] = measures.discord_transition_time(c0, cfg["gamma_sum"])
    r, t_bar["free"] = rows_for("free", cfg["dt_sample"])
    rows += r
    for name in cfg["schemes"]:
        sched = _dd_schedule(name, cfg["tau"])
        r, t_bar[name.upper()] = rows_for(name.upper(), sched.cycle_duration)
        rows += r
    summary = {
        "t_bar_s": t_bar,
        "extension_factor": {k: v / t_bar["free"] for k, v in t_bar.items() if k not in ("model", "free")},
        "detuning_width_rad_s": s,
        "floor_rate_per_s": floor_rate,
        "initial_correlations": vars(measures.bd_correlations(c0)),
    }
    return RunOutput(["scheme", "t_s", "total_bits", "classical_bits", "discord_bits"], rows, summary)


def run_tripartite_decay(cfg: Dict[str, Any]) -> RunOutput:
    try:
        params = dynamics.RelaxationParams(tuple(cfg["t1"]), tuple(cfg["t2"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if params.n_qubits != 3:
        raise ConfigError("t1 and t2 need three entries")
    times = np.linspace(0.0, cfg["t_max"], cfg["n_times"])
    analytic = {
        "ghz": lambda t: dynamics.ghz_analytic(params, t),
        "w": lambda t: dynamics.w_analytic(params, t),
        "wwbar": lambda t: dynamics.wwbar_analytic(params, t),
    }
    model = dynamics.nmr_noise_model(params)
    series: Dict[str, np.ndarray] = {}
    max_dev = 0.0
    for name, fn in analytic.items():
        exact = [fn(float(t)).matrix for t in times]
        numeric = dynamics.lindblad_trajectory(model, exact[0], times, dt=cfg["integrator_dt"])
        max_dev = max(max_dev, max(float(np.max(np.abs(a - b.matrix))) for a, b in zip(exact, numeric)))
        series[name] = np.array([measures.tripartite_negativity(m) for m in exact])
        series[name + "_rk4"] = np.array([measures.tripartite_negativity(m.matrix) for m in numeric])
    window = times <= cfg["fit_window"] + 1e-12
    rates, rates_log, crossings = {}, {}, {}
    for name in analytic:
        y = series[name]
        pts = [(float(t), float(v)) for t, v in zip(times[window], y[window]) if v > 0]
        rates[name] = dynamics.fit_exponential_decay(pts, method="linear")[1]
        rates_log[name] = dynamics.fit_exponential_decay(pts, method="log")[1]
        crossings[name] = dynamics.first_zero_crossing(times, y)
    header = ["t_s", "N3_ghz", "N3_w", "N3_wwbar", "N3_ghz_rk4", "N3_w_rk4", "N3_wwbar_rk4"]
    cols = ["ghz", "w", "wwbar", "ghz_rk4", "w_rk4", "wwbar_rk4"]
    rows = [[float(t)] + [float(series[c][i]) for c in cols] for i, t in enumerate(times)]
    summary = {
        "fitted_rate_per_s": rates,
        "fitted_rate_log_per_s": rates_log,
        "zero_crossing_s": crossings,
        "max_abs_dev_analytic_vs_rk4": max_dev,
    }
    return RunOutput(header, rows, summary)


def _true_state(name: str) -> np.ndarray:
    if "+" in name or set(name) <= {"0", "1"}:
        labels = [p.strip() for p in name.split("+")]
        return qcore.ket(*labels).projector().matrix
    try:
        st = qcore.standard_state(name)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"unknown state {name!r}") from exc
    return st.projector().matrix if isinstance(st, qcore.PureState) else st.matrix


def run_tomo_compare(cfg: Dict[str, Any]) -> RunOutput:
    truth = _true_state(cfg["state"])
    if cfg["sigma"] < 0 or cfg["n_trials"] < 1:
        raise ConfigError("need sigma >= 0 and n_trials >= 1")
    rows = []
    stats = {"qst": [], "mle": []}
    not_converged = 0
    for k in range(cfg["n_trials"]):
        # one independent stream per trial, derived from (seed, trial)
        rng = np.random.default_rng([cfg["seed"], k])
        rec = tomography.simulate_expectations(truth, cfg["sigma"], rng=rng)
        qst = tomography.qst_linear_inversion(rec).matrix
        res = tomography.mle_reconstruct(rec, max_iter=cfg["max_iter"])
        not_converged += not res.converged
        mle = res.rho.matrix
        row = [k]
        for name, est in (("qst", qst), ("mle", mle)):
            lmin = float(np.linalg.eigvalsh(est).min())
            f1 = qcore.fidelity_overlap(truth, est)
            # the Uhlmann form needs a PSD argument; for indefinite QST it is taken on the clipped state
            f2 = qcore.fidelity_uhlmann(truth, est if lmin >= -qcore.PSD_TOL else tomography.clipped_qst(rec).matrix)
            stats[name].append((lmin, f1, f2))
            row += [lmin, f1, f2]
        rows.append(row)
    summary = {"n_trials": cfg["n_trials"], "sigma": cfg["sigma"], "mle_not_converged": not_converged}
    for name, vals in stats.items():
        arr = np.array(vals)
        summary[name] = {
            "fraction_negative": float(np.mean(arr[:, 0] < -qcore.PSD_TOL if name == "mle" else arr[:, 0] < 0)),
            "min_eigenvalue": float(arr[:, 0].min()),
            "mean_F1": float(arr[:, 1].mean()),
            "mean_F2": float(arr[:, 2].mean()),
            "median_F2": float(np.median(arr[:, 2])),
        }
    header = ["trial", "qst_lambda_min", "qst_F1", "qst_F2", "mle_lambda_min", "mle_F1", "mle_F2"]
    return RunOutput(header, rows, summary)


def run_udd_scaling(cfg: Dict[str, Any]) -> RunOutput:
    h = sequences.toy_dephasing_hamiltonian(seed=cfg["bath_seed"], bath_dim=cfg["bath_dim"])
    env = cfg["bath_dim"]
    ts = np.logspace(math.log10(cfg["t_min"]), math.log10(cfg["t_max"]), cfg["n_t"])
    sub = sequences.SubspaceSpec(1, (sequences.PLUS,))
    x_pi = qcore.rotation_pulse(math.pi, 0.0)
    rows, slopes, eq_slopes = [], {}, {}

    def leak(sched):
        return sequences.subspace_leakage_highprec(h, sched, [sequences.PLUS], env, dps=cfg["dps"])

    for n in cfg["n_values"]:
        if not isinstance(n, int) or n < 1:
            raise ConfigError("n_values must be positive integers")
        udd = [leak(sequences.udd_schedule(n, float(t))) for t in ts]
        eq = [leak(sequences.equal_spacing_schedule(n, float(t), x_pi, "X")) for t in ts]
        slopes[str(n)] = sequences.loglog_slope(ts, udd)
        eq_slopes[str(n)] = sequences.loglog_slope(ts, eq)
        for t, a, b in zip(ts, udd, eq):
            rows.append([n, float(t), float(a), float(b)])
    tc = cfg["compare_t"]
    sz = leak(sequences.super_zeno_schedule(sub, tc))
    es = leak(sequences.equal_spacing_schedule(4, tc, sequences.build_J(sub)))
    summary = {
        "udd_slope": slopes,
        "udd_expected_slope": {str(n): 2 * n + 2 for n in cfg["n_values"]},
        "equal_spacing_slope": eq_slopes,
        "super_zeno_leakage": sz,
        "equal_spacing_J_leakage": es,
        "compare_t": tc,
    }
    return RunOutput(["n_pulses", "T", "leakage_udd", "leakage_equal"], rows, summary)


def run_grape(cfg: Dict[str, Any]) -> RunOutput:
    preset = cfg["preset"].lower()
    if preset == "not":
        problem = grape.not_problem(n_steps=cfg["n_steps"] or 20)
        omega, tol = grape.NOT_OMEGA_MAX, 1e-4
    elif preset == "cnot":
        problem = grape.cnot_problem(j_hz=cfg["j_hz"], k=cfg["k"], n_steps=cfg["n_steps"] or 100)
        omega, tol = grape.CNOT_OMEGA_MAX, 1e-3
    else:
        raise ConfigError(f"unknown GRAPE preset {cfg['preset']!r}")
    opts = grape.GrapeOptions(
        max_iter=cfg["max_iter"], tol=cfg["tol"] or tol, bounds=cfg["bound"] or None
    )
    res = grape.grape_optimize(problem, options=opts, seed=cfg["seed"], omega_max=cfg["omega_max"] or omega)
    rows = [[i, f] for i, f in enumerate(res.trace)]
    summary = {
        "preset": preset,
        "final_fidelity": res.fidelity,
        "iterations": res.iterations,
        "converged": res.converged,
        "n_steps": problem.n_steps,
        "dt_s": problem.dt,
    }
    return RunOutput(["iteration", "fidelity"], rows, summary, res.converged, {"grape_field.csv": res.field.to_csv()})


RUNNERS: Dict[str, Callable[[Dict[str, Any]], RunOutput]] = {
    "discord_freeze": run_discord_freeze,
    "tripartite_decay": run_tripartite_decay,
    "tomo_compare": run_tomo_compare,
    "udd_scaling": run_udd_scaling,
    "grape": run_grape,
}


def _versions() -> Dict[str, str]:
    import mpmath
    import scipy

    return {
        "artifact": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
        "python": platform.python_version(),
    }


def run_experiment(experiment: str, cfg: Dict[str, Any]) -> Tuple[RunOutput, Dict[str, str]]:
    """Run and write all files; returns the result and a map of written paths."""
    start = time.perf_counter()
    out = RUNNERS[experiment](cfg)
    wall = time.perf_counter() - start
    os.makedirs(cfg["out_dir"], exist_ok=True)
    files = {
        f"{experiment}.csv": format_csv(out.header, out.rows),
        f"{experiment}_summary.json": format_json(out.summary),
    }
    files.update(out.extra_files or {})
    paths = {}
    for name, text in files.items():
        path = os.path.join(cfg["out_dir"], name)
        _write(path, text)
        paths[name] = path
    manifest = {
        "experiment": experiment,
        "config": cfg,
        "seed": cfg["seed"],
        "versions": _versions(),
        "wall_time_s": wall,
        "files": sorted(files),
        "converged": out.converged,
    }
    path = os.path.join(cfg["out_dir"], f"{experiment}_manifest.json")
    _write(path, format_json(manifest))
    paths["manifest"] = path
    return out, paths


def _keys_help() -> str:
    lines = ["config keys (flat TOML):", "  common:"]
    for name, key in COMMON_KEYS.items():
        lines.append(f"    {name} = {key.default!r}  # {key.doc}")
    for exp, keys in EXPERIMENT_KEYS.items():
        lines.append(f"  {exp}:")
        for name, key in keys.items():
            lines.append(f"    {name} = {key.default!r}  # {key.doc}")
    lines.append("exit codes: 0 success, 2 configuration error, 3 non-convergence")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="artifact",
        description="Run a simulation experiment and write CSV/JSON data files.",
        epilog=_keys_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("experiment", choices=sorted(RUNNERS))
    p.add_argument("--config", required=True, help="flat TOML config file")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default=None, help="output directory (overrides out_dir)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the config-error code
        return int(exc.code or 0)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.experiment, text, seed=args.seed, out=args.out)
        out, paths = run_experiment(args.experiment, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name in sorted(paths):
        print(paths[name])
    if not out.converged:
        print("warning: optimization did not converge", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
