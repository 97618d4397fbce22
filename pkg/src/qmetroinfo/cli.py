"""Batch front door: config ingestion, subcommand dispatch, result emission.

Subcommands: ``mi-eval``, ``optimize``, ``qcp``, ``bridge``, ``scaling``.
Options come from flags, optionally seeded by a JSON config file (flags
override file keys; unknown keys are rejected).  Results are written as a
JSON envelope (tool version, resolved config, payload) plus CSV tables where
the payload is tabular.  Output bytes depend only on (config, seed, version);
wall time goes to stderr.  Angles are radians, information is in nats.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import channel as channel_mod
from . import infomeasure, optimal_extraction, qcp_strategy, variance_bridge
from . import qcore
from .exceptions import ValidationError


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending key."""


_SUBCOMMAND_KEYS = {
    "mi-eval": {"channel", "prior", "n_probes", "strategy", "out"},
    "optimize": {"channel", "prior", "n_probes", "m_outcomes", "restarts", "seed",
                 "tol", "max_iters", "out", "threads"},
    "qcp": {"L", "W", "prior", "mode", "shots", "seed", "phi_grid", "out"},
    "bridge": {"strategy", "L", "W", "s", "r", "trials", "prior_window", "seed",
               "alpha", "persist_samples", "out"},
    "scaling": {"L_range", "mode", "s", "trials", "seed", "out"},
}


# --------------------------------------------------------------------------
# spec parsing
# --------------------------------------------------------------------------

def _parse_channel(spec: str):
    if spec == "qubit-phase":
        return channel_mod.qubit_phase()
    if spec.startswith("equal-ladder:"):
        try:
            d = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"channel: bad dimension in {spec!r}") from None
        return channel_mod.equal_ladder(d)
    if spec == "identity" or spec.startswith("identity:"):
        d = 2
        if ":" in spec:
            try:
                d = int(spec.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"channel: bad dimension in {spec!r}") from None
        return channel_mod.identity_channel(d)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"channel: unknown preset or missing file {spec!r}")
    try:
        data = json.loads(path.read_text())
        gens = []
        for g in data["generators"]:
            gens.append(np.asarray(g["real"], dtype=float) + 1j * np.asarray(g["imag"], dtype=float))
        return channel_mod.ParamChannel(np.stack(gens))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"channel: malformed channel file {spec!r} ({exc})") from None
    except ValidationError as exc:
        raise ConfigError(f"channel: {exc}") from None


def _parse_prior(spec: str):
    if spec.startswith("uniform:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"prior: expected uniform:lo:hi, got {spec!r}")
        try:
            lo, hi = float(parts[1]), float(parts[2])
        except ValueError:
            raise ConfigError(f"prior: non-numeric bound in {spec!r}") from None
        if hi <= lo:
            raise ConfigError(f"prior: upper bound {hi} is not above lower bound {lo}")
        return infomeasure.UniformPrior(lo, hi)
    if spec.startswith("discrete:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"prior: expected discrete:points:masses, got {spec!r}")
        try:
            points = np.array([float(x) for x in parts[1].split(",")])
            masses = np.array([float(x) for x in parts[2].split(",")])
        except ValueError:
            raise ConfigError(f"prior: non-numeric entry in {spec!r}") from None
        try:
            return infomeasure.DiscretePrior(points, masses)
        except ValidationError as exc:
            raise ConfigError(f"prior: {exc}") from None
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"prior: unknown form or missing file {spec!r}")
    try:
        data = json.loads(path.read_text())
        kind = data["type"]
        if kind == "uniform":
            return infomeasure.UniformPrior(*map(float, data["bounds"]))
        if kind == "tabulated":
            return infomeasure.TabulatedPrior(np.asarray(data["nodes"]), np.asarray(data["values"]))
        if kind == "discrete":
            return infomeasure.DiscretePrior(np.asarray(data["points"]), np.asarray(data["masses"]))
        raise ConfigError(f"prior: unknown type {kind!r}")
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"prior: malformed prior file {spec!r} ({exc})") from None
    except ValidationError as exc:
        raise ConfigError(f"prior: {exc}") from None


def _ramsey_strategy(ch, n_probes: int) -> infomeasure.Strategy:
    """GHZ state of the extreme energy levels plus a per-probe symmetric readout."""
    d = ch.probe_dim
    levels, basis = channel_mod.parallel_phase_basis(ch, 1)
    order = np.argsort(levels[0] if levels.shape[0] == 1 else levels.sum(axis=0))
    eye = np.eye(d, dtype=complex)
    vec = (lambda k: basis[:, k]) if basis is not None else (lambda k: eye[:, k])
    ground, top = vec(order[0]), vec(order[-1])
    cols = [(ground + top) / np.sqrt(2.0), (ground - top) / np.sqrt(2.0)]
    cols.extend(vec(k) for k in order[1:-1])
    single = np.stack(cols, axis=1)
    full = single
    gt, tt = ground, top
    for _ in range(n_probes - 1):
        full = np.kron(full, single)
        gt, tt = np.kron(gt, ground), np.kron(tt, top)
    init = (gt + tt) / np.sqrt(2.0)
    return infomeasure.Strategy(initial=init, povm=qcore.Povm.projective(full))


def _parse_strategy(spec: str, ch, n_probes: int) -> infomeasure.Strategy:
    if spec == "ramsey":
        return _ramsey_strategy(ch, n_probes)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"strategy: unknown form or missing file {spec!r}")
    try:
        data = json.loads(path.read_text())
        init = np.asarray(data["initial"]["real"], dtype=float) + 1j * np.asarray(
            data["initial"]["imag"], dtype=float
        )
        vecs = np.asarray(data["povm"]["real"], dtype=float) + 1j * np.asarray(
            data["povm"]["imag"], dtype=float
        )
        return infomeasure.Strategy(initial=init, povm=qcore.Povm.from_vectors(vecs))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"strategy: malformed strategy file {spec!r} ({exc})") from None
    except ValidationError as exc:
        raise ConfigError(f"strategy: {exc}") from None


def _parse_window(spec: str) -> tuple[float, float]:
    parts = spec.split(":")
    if len(parts) != 2:
        raise ConfigError(f"prior_window: expected lo:hi, got {spec!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"prior_window: non-numeric bound in {spec!r}") from None
    if hi <= lo:
        raise ConfigError(f"prior_window: upper bound {hi} is not above lower bound {lo}")
    return lo, hi


def _parse_l_range(spec: str) -> list[int]:
    parts = spec.split(":")
    if len(parts) != 2:
        raise ConfigError(f"L_range: expected lo:hi, got {spec!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"L_range: non-integer bound in {spec!r}") from None
    if not (1 <= lo <= hi):
        raise ConfigError(f"L_range: need 1 <= lo <= hi, got {spec!r}")
    return list(range(lo, hi + 1))


# --------------------------------------------------------------------------
# emission
# --------------------------------------------------------------------------

def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)}")


def emit(out_dir: Path, name: str, config: dict, payload: dict, tables: dict | None = None) -> dict:
    """Write the result envelope and CSV tables; returns the envelope.

    Bytes depend only on (config, payload, version): runs with identical
    inputs produce identical files.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    envelope = {"tool_version": __version__, "config": config, "payload": payload}
    text = json.dumps(envelope, sort_keys=True, indent=2, default=_json_default)
    (out_dir / f"{name}_result.json").write_text(text + "\n")
    for table_name, (header, rows) in (tables or {}).items():
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)
                                  for x in row))
        (out_dir / f"{name}_{table_name}.csv").write_text("\n".join(lines) + "\n")
    return envelope


def read_result(path) -> dict:
    """Parse a result envelope back (lossless round trip of the payload)."""
    return json.loads(Path(path).read_text())


# --------------------------------------------------------------------------
# subcommand runners
# --------------------------------------------------------------------------

def _cmd_mi_eval(cfg: dict) -> tuple[dict, dict]:
    ch = _parse_channel(cfg["channel"])
    prior = _parse_prior(cfg["prior"])
    n = int(cfg["n_probes"])
    strategy = _parse_strategy(cfg["strategy"], ch, n)
    width = channel_mod.spectrum_width(ch.generators[0]) if ch.n_params == 1 else 1.0
    scale = max((n + 1) * max(width, 1e-12), 1.0)
    quad = infomeasure.build_quadrature(prior, oscillation_scale=scale)
    mi = infomeasure.mutual_information(strategy, ch, prior, quad, n)
    payload = {
        "mi_nats": mi,
        "n_outcomes": strategy.povm.outcome_count,
        "quadrature_nodes": quad.node_count,
    }
    return payload, {}


def _cmd_optimize(cfg: dict) -> tuple[dict, dict]:
    ch = _parse_channel(cfg["channel"])
    prior = _parse_prior(cfg["prior"])
    n = int(cfg["n_probes"])
    m = int(cfg["m_outcomes"])
    opts = optimal_extraction.OptimizeOptions(
        restarts=int(cfg.get("restarts", 16)),
        max_iters=int(cfg.get("max_iters", 2000)),
        residual_tol=float(cfg.get("tol", 1e-7)),
        seed=int(cfg["seed"]),
    )
    width = channel_mod.spectrum_width(ch.generators[0]) if ch.n_params == 1 else 1.0
    scale = max((n + 1) * max(width, 1e-12), 1.0)
    quad = infomeasure.build_quadrature(prior, oscillation_scale=scale)
    report = optimal_extraction.optimize_strategy(
        ch, prior, quad, n, m, opts, threads=int(cfg.get("threads", 1))
    )
    w = report.strategy.povm.rank_one_vectors()
    payload = {
        "mi_nats": report.mi,
        "povm_residual": report.povm_residual,
        "state_residual": report.state_residual,
        "orthogonality_defect": report.orthogonality_defect,
        "iterations": report.iterations,
        "converged": report.converged,
        "restarts": report.restarts,
        "best_seed": report.best_seed,
        "povm_linearly_independent": report.povm_linearly_independent,
        "m_outcomes": m,
        "probe_space_dim": report.strategy.dim,
        "initial_real": np.real(report.strategy.initial),
        "initial_imag": np.imag(report.strategy.initial),
        "povm_vectors_real": np.real(w),
        "povm_vectors_imag": np.imag(w),
    }
    return payload, {}


def _cmd_qcp(cfg: dict) -> tuple[dict, dict]:
    prior = _parse_prior(cfg["prior"])
    qcfg = qcp_strategy.QcpConfig(L=int(cfg["L"]), W=float(cfg.get("W", 1.0)), prior=prior)
    mode = cfg.get("mode", "closed")
    if mode not in ("closed", "adaptive", "sample"):
        raise ConfigError(f"mode: expected closed, adaptive or sample, got {mode!r}")
    n = qcfg.n_probes
    payload = {
        "L": qcfg.L,
        "W": qcfg.W,
        "n_probes": n,
        "mode": mode,
    }
    tables: dict = {}
    if mode == "sample":
        if "seed" not in cfg or cfg["seed"] is None:
            raise ConfigError("seed: required for sampling runs")
        shots = int(cfg.get("shots", 10000))
        if hasattr(prior, "lo"):
            phi0 = (prior.lo + prior.hi) / 2.0
        else:
            phi0 = float(np.atleast_1d(prior.points)[0])
        counts = qcp_strategy.qcp_sample(qcfg, phi0, shots, int(cfg["seed"]))
        closed = qcp_strategy.qcp_dist_closed(qcfg, phi0)
        tv = 0.5 * float(np.abs(counts / shots - closed).sum())
        payload.update({"phi_rad": phi0, "shots": shots, "tv_to_closed": tv,
                        "seed": int(cfg["seed"])})
        tables["counts"] = (
            ["m", "count", "closed_prob"],
            [(int(m), int(c), float(p)) for m, c, p in zip(range(n + 1), counts, closed)],
        )
    else:
        mi = qcp_strategy.qcp_mutual_information(qcfg)
        gap = float(np.log(n) - mi)
        payload.update({
            "mi_nats": mi,
            "ln_n": float(np.log(n)),
            "ln_n_minus_mi_nats": gap,
            "ln_n_minus_mi_bits": gap / float(np.log(2.0)),
        })
        grid_n = int(cfg.get("phi_grid", 33))
        lo = getattr(prior, "lo", 0.0)
        hi = getattr(prior, "hi", 2 * np.pi)
        grid = np.linspace(lo, hi, grid_n)
        dist_fn = qcp_strategy.qcp_dist_closed if mode == "closed" else qcp_strategy.qcp_dist_adaptive
        dist = dist_fn(qcfg, grid)
        header = ["phi_rad"] + [f"p_m{m}" for m in range(n + 1)]
        rows = [[float(g)] + [float(x) for x in dist[i]] for i, g in enumerate(grid)]
        tables["dist"] = (header, rows)
    return payload, tables


def _cmd_bridge(cfg: dict) -> tuple[dict, dict]:
    if cfg.get("strategy", "qcp") != "qcp":
        raise ConfigError("strategy: only the built-in qcp strategy is available here")
    if "seed" not in cfg or cfg["seed"] is None:
        raise ConfigError("seed: required for sampling runs")
    lo, hi = _parse_window(cfg["prior_window"])
    w_width = float(cfg.get("W", 1.0))
    qcfg = qcp_strategy.QcpConfig(L=int(cfg["L"]), W=w_width,
                                  prior=infomeasure.UniformPrior(lo, hi))
    if hi - lo > np.pi / w_width:
        raise ConfigError(
            f"prior_window: width {hi - lo} exceeds the wrap-safe limit {np.pi / w_width}"
        )
    s = int(cfg.get("s", 32))
    r = int(cfg.get("r", 32))
    trials = int(cfg.get("trials", 200))
    seed = int(cfg["seed"])
    alpha = float(cfg.get("alpha", 1.0))
    rng = np.random.default_rng(seed)
    phis = rng.uniform(lo, hi, trials)
    center = (lo + hi) / 2.0
    means = np.empty(trials)
    sample_rows = []
    for t in range(trials):
        run = variance_bridge.simulate_estimates(
            qcfg, phis[t], s, r, np.random.default_rng((seed, t)),
            window_center=center, prior_width=hi - lo,
        )
        means[t] = run.mean
        if cfg.get("persist_samples"):
            for j, e in enumerate(run.estimates):
                sample_rows.append((t, j, float(phis[t]), float(e)))
    report = variance_bridge.bound_check(
        phis, means, qcfg.prior, s=s, w_width=w_width, n_probes=qcfg.n_probes,
        alpha=alpha, r=r,
    )
    payload = {
        "L": qcfg.L, "W": w_width, "n_probes": qcfg.n_probes,
        "s": s, "r": r, "trials": trials, "seed": seed, "alpha": alpha,
        "empirical_mi_nats": report.lhs, "bound_nats": report.rhs,
        "satisfied": report.satisfied, "slack_nats": report.slack,
        "margin_nats": report.margin,
    }
    tables: dict = {}
    if cfg.get("persist_samples"):
        tables["samples"] = (["trial", "repetition", "phi_true_rad", "phi_est_rad"], sample_rows)
    return payload, tables


def _cmd_scaling(cfg: dict) -> tuple[dict, dict]:
    l_values = _parse_l_range(cfg["L_range"])
    mode = cfg.get("mode", "mi")
    if mode not in ("mi", "variance"):
        raise ConfigError(f"mode: expected mi or variance, got {mode!r}")
    rows = []
    if mode == "mi":
        n_values, y = [], []
        for L in l_values:
            qcfg = qcp_strategy.QcpConfig(L=L)
            mi = qcp_strategy.qcp_mutual_information(qcfg)
            n_values.append(qcfg.n_probes)
            y.append(mi)
        fit = variance_bridge.fit_scaling(n_values, y, model="information")
        for n, mi, resid in zip(n_values, y, fit.residuals):
            rows.append((n, float(mi), float(np.log(n)), float(resid)))
        payload = {"mode": mode, "alpha": fit.alpha, "constant": fit.constant}
        return payload, {"table": (["N", "MI_nats", "lnN", "residual"], rows)}
    if "seed" not in cfg or cfg["seed"] is None:
        raise ConfigError("seed: required for sampling runs")
    s = int(cfg.get("s", 32))
    trials = int(cfg.get("trials", 64))
    seed = int(cfg["seed"])
    n_values, y = [], []
    for L in l_values:
        qcfg = qcp_strategy.QcpConfig(L=L)
        period = 2 * np.pi / (qcfg.n_probes + 1)
        phi0 = 0.37 * period  # generic point away from the comb lattice
        run = variance_bridge.simulate_estimates(
            qcfg, phi0, s, trials, np.random.default_rng((seed, L)), window_center=phi0,
        )
        n_values.append(qcfg.n_probes)
        y.append(max(run.delta, 1e-12))
        rows.append((qcfg.n_probes, float(run.delta), float(np.log(qcfg.n_probes)), 0.0))
    fit = variance_bridge.fit_scaling(n_values, y, model="variance")
    rows = [
        (n, d, ln, float(resid))
        for (n, d, ln, _), resid in zip(rows, fit.residuals)
    ]
    payload = {"mode": mode, "alpha": fit.alpha, "constant": fit.constant,
               "s": s, "trials": trials, "seed": seed}
    return payload, {"table": (["N", "delta_rad", "lnN", "residual"], rows)}


_RUNNERS = {
    "mi-eval": _cmd_mi_eval,
    "optimize": _cmd_optimize,
    "qcp": _cmd_qcp,
    "bridge": _cmd_bridge,
    "scaling": _cmd_scaling,
}


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmetroinfo",
        description="Information analysis of quantum parameter estimation "
                    "(angles in radians, information in nats)",
    )
    parser.add_argument("--config", help="JSON config file; flags override its keys")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker pool size")
    sub = parser.add_subparsers(dest="subcommand")

    p = sub.add_parser("mi-eval", help="evaluate the information of a fixed strategy")
    p.add_argument("--channel")
    p.add_argument("--prior")
    p.add_argument("-N", "--n-probes", type=int, dest="n_probes")
    p.add_argument("--strategy", default="ramsey")

    p = sub.add_parser("optimize", help="search for a maximum-information strategy")
    p.add_argument("--channel")
    p.add_argument("--prior")
    p.add_argument("-N", "--n-probes", type=int, dest="n_probes")
    p.add_argument("-M", "--m-outcomes", type=int, dest="m_outcomes")
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", type=int, dest="max_iters")

    p = sub.add_parser("qcp", help="grouped adaptive parity strategy")
    p.add_argument("--L", type=int)
    p.add_argument("--W", type=float)
    p.add_argument("--prior")
    p.add_argument("--mode", choices=["closed", "adaptive", "sample"])
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--phi-grid", type=int, dest="phi_grid")

    p = sub.add_parser("bridge", help="repeated estimation vs the information ceiling")
    p.add_argument("--strategy", default="qcp")
    p.add_argument("--L", type=int)
    p.add_argument("--W", type=float)
    p.add_argument("--s", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--prior-window", dest="prior_window")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--persist-samples", action="store_true", dest="persist_samples")

    p = sub.add_parser("scaling", help="information or spread scaling with probe number")
    p.add_argument("--L-range", dest="L_range")
    p.add_argument("--mode", choices=["mi", "variance"])
    p.add_argument("--s", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)

    return parser


_REQUIRED = {
    "mi-eval": ["channel", "prior", "n_probes"],
    "optimize": ["channel", "prior", "n_probes", "m_outcomes", "seed"],
    "qcp": ["L", "prior"],
    "bridge": ["L", "prior_window", "seed"],
    "scaling": ["L_range"],
}


def _resolve_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config: file {args.config!r} not found")
        try:
            file_cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})")
        if not isinstance(file_cfg, dict):
            raise ConfigError("config: top level must be a mapping")
        cfg.update(file_cfg)
    sub = args.subcommand or cfg.get("subcommand")
    if sub not in _RUNNERS:
        raise ConfigError(f"subcommand: expected one of {sorted(_RUNNERS)}, got {sub!r}")
    cfg.pop("subcommand", None)
    for key, value in vars(args).items():
        if key in ("config", "subcommand"):
            continue
        if value is not None and value is not False:
            cfg[key] = value
    cfg.setdefault("out", "results")
    cfg.setdefault("threads", 1)
    allowed = _SUBCOMMAND_KEYS[sub] | {"threads"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key for subcommand {sub}")
    missing = [k for k in _REQUIRED[sub] if k not in cfg]
    if missing:
        raise ConfigError(f"{missing[0]}: required for subcommand {sub}")
    cfg["subcommand"] = sub
    return cfg


def run(argv) -> int:
    """Entry point; returns the process exit code.

    0: success with results written.  2: configuration error (message names
    the offending key).  1: runtime numeric failure.
    """
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    sub = cfg.pop("subcommand")
    out_dir = Path(cfg.pop("out"))
    started = time.perf_counter()
    try:
        payload, tables = _RUNNERS[sub](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numeric or resource failure during the run
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    config_echo = dict(cfg)
    config_echo["subcommand"] = sub
    emit(out_dir, sub.replace("-", "_"), config_echo, payload, tables)
    elapsed = time.perf_counter() - started
    print(f"{sub}: wrote {out_dir} in {elapsed:.3f} s", file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))
