"""Configuration loading, experiment orchestration and CSV output.

The JSON config format and the CSV column set are documented in the
project README.  Rates are written in nats/s/Hz unless --bits is given
(conversion happens at output only).  Output tables are byte-identical
across runs for a fixed (config, seed); the optional --timing column is
the one deliberate exception.
"""

import argparse
import csv
import json
import math
import sys
import time

import numpy as np

from .detequiv import mi_det, sinr_det, sumrate_det
from .errors import ConfigError, NonConvergenceError
from .fixedpoint import solve_fundamental
from .model import ChannelSpec, UserLink, fold_spec, make_g_correlation, validate
from .montecarlo import (
    ergodic,
    exact_mi,
    exact_sinr,
    exact_sumrate,
    kronecker_conditional_oracle,
    sample_channel,
)
from .powalloc import iterative_waterfilling

MODES = ("mi", "sinr", "sumrate", "waterfill", "oracle")
LN2 = math.log(2.0)


class ExperimentConfig:
    """Sweep settings: SNR grid (dB), trial count, seed, modes, output path."""

    def __init__(self, snr_db, trials, master_seed, modes, output=None,
                 bits=False, timing=False):
        snr_db = np.asarray(snr_db, dtype=float)
        if snr_db.size == 0:
            raise ConfigError("SNR grid is empty", field="experiment.snr_db")
        self.snr_db = snr_db
        if trials < 0:
            raise ConfigError("trials must be >= 0", field="experiment.trials")
        self.trials = int(trials)
        self.master_seed = int(master_seed)
        modes = tuple(modes)
        for m in modes:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r}, expected one of {MODES}",
                                  field="experiment.modes")
        self.modes = modes
        self.output = output
        self.bits = bool(bits)
        self.timing = bool(timing)


def _expect(obj, key, types, path, default=KeyError):
    if key not in obj:
        if default is KeyError:
            raise ConfigError("missing required entry", field=f"{path}.{key}")
        return default
    val = obj[key]
    if not isinstance(val, types):
        tname = types.__name__ if isinstance(types, type) \
            else "/".join(t.__name__ for t in types)
        raise ConfigError(f"expected {tname}, got {type(val).__name__}",
                          field=f"{path}.{key}")
    return val


def _build_matrix(mspec, size, path, P=None):
    if not isinstance(mspec, dict):
        raise ConfigError("matrix entry must be an object", field=path)
    kind = _expect(mspec, "kind", str, path)
    if kind == "identity":
        return np.eye(size, dtype=complex)
    if kind == "scaled_identity":
        scale = float(_expect(mspec, "scale", (int, float), path))
        if scale < 0:
            raise ConfigError("scale must be >= 0", field=f"{path}.scale")
        return scale * np.eye(size, dtype=complex)
    if kind == "uniform":
        if P is None:
            raise ConfigError("uniform covariance needs a declared budget P",
                              field=path)
        return float(P) * np.eye(size, dtype=complex)
    if kind == "diag":
        vals = np.asarray(_expect(mspec, "values", list, path), dtype=float)
        if vals.size != size:
            raise ConfigError(f"need {size} values, got {vals.size}",
                              field=f"{path}.values")
        return np.diag(vals).astype(complex)
    if kind == "dense":
        re = np.asarray(_expect(mspec, "re", list, path), dtype=float)
        im_list = mspec.get("im")
        im = np.zeros_like(re) if im_list is None \
            else np.asarray(im_list, dtype=float)
        if re.shape != (size, size) or im.shape != (size, size):
            raise ConfigError(
                f"need {size}x{size} re/im arrays, got {re.shape}/{im.shape}",
                field=path)
        return re + 1j * im
    if kind == "g":
        phi = float(_expect(mspec, "phi", (int, float), path))
        d = float(_expect(mspec, "d", (int, float), path))
        if not phi > 0:
            raise ConfigError("angular spread phi must be > 0",
                              field=f"{path}.phi")
        if d < 0:
            raise ConfigError("spacing d must be >= 0", field=f"{path}.d")
        return make_g_correlation(phi, d, size)
    raise ConfigError(f"unknown matrix kind {kind!r}", field=f"{path}.kind")


def _build_user(uspec, N, k):
    path = f"channel.users[{k}]"
    n = _expect(uspec, "n", int, path)
    Ns = _expect(uspec, "Ns", int, path)
    if n < 1 or Ns < 1:
        raise ConfigError("dimensions n and Ns must be >= 1", field=path)
    P = uspec.get("P")
    if P is not None:
        P = float(P)
        if not P > 0:
            raise ConfigError("budget P must be > 0", field=f"{path}.P")
    R = _build_matrix(_expect(uspec, "R", dict, path), N, f"{path}.R")
    S = _build_matrix(_expect(uspec, "S", dict, path), Ns, f"{path}.S")
    T = _build_matrix(_expect(uspec, "T", dict, path), n, f"{path}.T")
    qspec = uspec.get("Q", {"kind": "uniform"} if P is not None
                      else {"kind": "identity"})
    Q = _build_matrix(qspec, n, f"{path}.Q", P=P)
    return UserLink(R=R, S=S, T=T, Q=Q, P=P)


def _build_grid(gspec):
    path = "experiment.snr_db"
    if isinstance(gspec, list):
        if not gspec:
            raise ConfigError("SNR grid is empty", field=path)
        return np.asarray(gspec, dtype=float)
    if isinstance(gspec, dict):
        start = float(_expect(gspec, "start", (int, float), path))
        stop = float(_expect(gspec, "stop", (int, float), path))
        step = float(_expect(gspec, "step", (int, float), path))
        if not step > 0:
            raise ConfigError("step must be > 0", field=f"{path}.step")
        if stop < start:
            raise ConfigError("stop must be >= start", field=path)
        return np.arange(start, stop + step / 2, step)
    raise ConfigError("snr_db must be a list or {start, stop, step}",
                      field=path)


def load_config(path):
    """Load and validate a JSON experiment configuration.

    Returns `(spec, experiment)` where `experiment` is None when the file
    declares no experiment section.  Raises `ConfigError` with a dotted
    field path on any schema or validation problem.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")

    if "channel_file" in doc:
        try:
            with open(doc["channel_file"], encoding="utf-8") as fh:
                channel = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read channel file: {exc}",
                              field="channel_file") from exc
    else:
        channel = _expect(doc, "channel", dict, "<root>")

    N = _expect(channel, "N", int, "channel")
    if N < 1:
        raise ConfigError("N must be >= 1", field="channel.N")
    rho = float(channel.get("rho", 1.0))
    if not rho > 0:
        raise ConfigError("rho must be > 0", field="channel.rho")
    users_spec = _expect(channel, "users", list, "channel")
    if not users_spec:
        raise ConfigError("need at least one user", field="channel.users")
    users = [_build_user(u, N, k) for k, u in enumerate(users_spec)]
    try:
        spec = ChannelSpec(users, rho)
    except ValueError as exc:
        raise ConfigError(str(exc), field="channel") from exc

    report = validate(spec)
    if not report.ok:
        raise ConfigError("channel fails validation:\n  "
                          + "\n  ".join(report.violations), field="channel")

    experiment = None
    if "experiment" in doc:
        e = _expect(doc, "experiment", dict, "<root>")
        experiment = ExperimentConfig(
            snr_db=_build_grid(_expect(e, "snr_db", (dict, list), "experiment")),
            trials=_expect(e, "trials", int, "experiment", default=0),
            master_seed=_expect(e, "master_seed", int, "experiment", default=0),
            modes=_expect(e, "modes", list, "experiment", default=["mi"]),
            output=e.get("output"))
    return spec, experiment


# ---------------------------------------------------------------------------
# experiment sweep
# ---------------------------------------------------------------------------

def _sinr_estimates(spec, rho, trials, master_seed):
    """Per-stream Monte Carlo SINR means and standard errors."""
    sums = [np.zeros(u.n) for u in spec.users]
    sqs = [np.zeros(u.n) for u in spec.users]
    for i in range(trials):
        real = sample_channel(spec, (master_seed, i))
        for k, gam in enumerate(exact_sinr(real, rho)):
            sums[k] += gam
            sqs[k] += gam ** 2
    means = [s / trials for s in sums]
    errs = [np.sqrt(np.maximum(q / trials - m ** 2, 0.0) * trials
                    / (trials - 1)) / math.sqrt(trials)
            for q, m in zip(sqs, means)]
    return means, errs


def run_experiment(spec, config):
    """Run the configured SNR sweep and return (columns, rows).

    One row per grid point, in grid order; rho = 10^(-snr_db/10).  Solver
    errors are re-raised with the offending SNR point identified.
    """
    modes = config.modes
    if "waterfill" in modes:
        for k, u in enumerate(spec.users):
            if u.P is None:
                raise ConfigError("waterfill mode needs a power budget",
                                  field=f"channel.users[{k}].P")
    need_fold = any(m in modes for m in ("sinr", "sumrate"))
    folded = fold_spec(spec)[0] if need_fold else None
    mc = config.trials >= 2

    columns = ["snr_db", "rho", "mi_det"]
    if mc:
        columns += ["mi_mc_mean", "mi_mc_stderr"]
    if "sumrate" in modes:
        columns += ["sumrate_det"]
        if mc:
            columns += ["sumrate_mc_mean", "sumrate_mc_stderr"]
    if "sinr" in modes:
        for k, u in enumerate(spec.users):
            columns += [f"sinr_det_u{k}s{j}" for j in range(u.n)]
        if mc:
            for k, u in enumerate(spec.users):
                columns += [f"sinr_mc_mean_u{k}s{j}" for j in range(u.n)]
                columns += [f"sinr_mc_stderr_u{k}s{j}" for j in range(u.n)]
    if "waterfill" in modes:
        columns += ["mi_det_uniform", "mi_det_waterfill"]
        for k, u in enumerate(spec.users):
            columns += [f"wf_mu_u{k}"] + [f"wf_p_u{k}s{j}" for j in range(u.n)]
    if "oracle" in modes:
        columns += ["kron_gap_e_max", "kron_gap_ebar_max"]
    columns += ["fp_iterations"]
    if config.timing:
        columns += ["wall_time_s"]

    rate_cols = {c for c in columns if c.startswith(("mi_", "sumrate_"))}
    rows = []
    for snr_db in config.snr_db:
        t0 = time.perf_counter()
        rho = 10.0 ** (-snr_db / 10.0)
        try:
            row = _experiment_point(spec, folded, config, snr_db, rho, modes, mc)
        except NonConvergenceError as exc:
            raise NonConvergenceError(
                f"at snr_db={snr_db:g}: {exc}", last=exc.last,
                trace=exc.trace) from exc
        row["wall_time_s"] = time.perf_counter() - t0
        scale = LN2 if config.bits else 1.0
        rows.append([row[c] / scale if c in rate_cols else row[c]
                     for c in columns])
    return columns, rows


def _experiment_point(spec, folded, config, snr_db, rho, modes, mc):
    base = (folded if folded is not None else spec).with_rho(rho)
    sol = solve_fundamental(base)
    row = {"snr_db": snr_db, "rho": rho, "mi_det": mi_det(base, sol),
           "fp_iterations": sol.iterations}
    if mc:
        Qs = [u.Q for u in base.users]
        est = ergodic(base, lambda r: exact_mi(r, Qs, rho),
                      config.trials, config.master_seed)
        row["mi_mc_mean"] = est.mean
        row["mi_mc_stderr"] = est.stderr
    if "sumrate" in modes:
        row["sumrate_det"] = sumrate_det(base, sol)
        if mc:
            est = ergodic(base, lambda r: exact_sumrate(r, rho),
                          config.trials, config.master_seed)
            row["sumrate_mc_mean"] = est.mean
            row["sumrate_mc_stderr"] = est.stderr
    if "sinr" in modes:
        for k, gam in enumerate(sinr_det(base, sol)):
            for j, v in enumerate(gam):
                row[f"sinr_det_u{k}s{j}"] = v
        if mc:
            means, errs = _sinr_estimates(base, rho, config.trials,
                                          config.master_seed)
            for k in range(base.K):
                for j in range(base.users[k].n):
                    row[f"sinr_mc_mean_u{k}s{j}"] = means[k][j]
                    row[f"sinr_mc_stderr_u{k}s{j}"] = errs[k][j]
    if "waterfill" in modes:
        point = spec.with_rho(rho)
        row["mi_det_uniform"] = mi_det(point, solve_fundamental(point))
        allocs, _ = iterative_waterfilling(point)
        opt_users = [u.with_covariance(a.Q)
                     for u, a in zip(point.users, allocs)]
        opt = ChannelSpec(opt_users, rho)
        row["mi_det_waterfill"] = mi_det(opt, solve_fundamental(opt))
        for k, a in enumerate(allocs):
            row[f"wf_mu_u{k}"] = a.mu
            for j, pj in enumerate(a.p):
                row[f"wf_p_u{k}s{j}"] = pj
    if "oracle" in modes:
        cmp = kronecker_conditional_oracle(spec.with_rho(rho),
                                           config.master_seed)
        row["kron_gap_e_max"] = float(np.max(cmp.gap_e))
        row["kron_gap_ebar_max"] = float(np.max(cmp.gap_ebar))
    return row


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, columns, rows):
    """RFC 4180 CSV with a header row; floats carry 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# command-line front end
# ---------------------------------------------------------------------------

def _point_spec(args):
    spec, experiment = load_config(args.config)
    if getattr(args, "snr_db", None) is not None:
        spec = spec.with_rho(10.0 ** (-args.snr_db / 10.0))
    return spec, experiment


def _cmd_solve(args):
    spec, _ = _point_spec(args)
    sol = solve_fundamental(spec)
    print(f"rho = {spec.rho:.6g}  iterations = {sol.iterations}  "
          f"residual = {sol.residual:.3e}")
    print(f"{'user':>4} {'gbar':>22} {'g':>22} {'delta':>22}")
    for k in range(spec.K):
        print(f"{k:>4} {sol.gbar[k]:>22.15e} {sol.g[k]:>22.15e} "
              f"{sol.delta[k]:>22.15e}")
    return 0


def _cmd_mi(args):
    spec, _ = _point_spec(args)
    sol = solve_fundamental(spec)
    scale = LN2 if args.bits else 1.0
    unit = "bits" if args.bits else "nats"
    print(f"mi_det = {mi_det(spec, sol) / scale:.12g} {unit}/s/Hz")
    if args.trials:
        Qs = [u.Q for u in spec.users]
        est = ergodic(spec, lambda r: exact_mi(r, Qs, spec.rho),
                      args.trials, args.seed)
        print(f"mi_mc  = {est.mean / scale:.12g} +/- {est.stderr / scale:.3g} "
              f"{unit}/s/Hz  ({est.trials} trials, seed {est.master_seed})")
    return 0


def _cmd_sinr(args):
    spec, _ = _point_spec(args)
    folded, _bases = fold_spec(spec)
    sol = solve_fundamental(folded)
    for k, gam in enumerate(sinr_det(folded, sol)):
        streams = "  ".join(f"{v:.9g}" for v in gam)
        print(f"user {k}: sinr_det = {streams}")
    return 0


def _cmd_sumrate(args):
    spec, _ = _point_spec(args)
    folded, _bases = fold_spec(spec)
    sol = solve_fundamental(folded)
    scale = LN2 if args.bits else 1.0
    unit = "bits" if args.bits else "nats"
    print(f"sumrate_det = {sumrate_det(folded, sol) / scale:.12g} {unit}/s/Hz")
    if args.trials:
        est = ergodic(folded, lambda r: exact_sumrate(r, folded.rho),
                      args.trials, args.seed)
        print(f"sumrate_mc  = {est.mean / scale:.12g} +/- "
              f"{est.stderr / scale:.3g} {unit}/s/Hz")
    return 0


def _cmd_waterfill(args):
    spec, _ = _point_spec(args)
    sol_u = solve_fundamental(spec)
    allocs, _sol = iterative_waterfilling(spec)
    opt_users = [u.with_covariance(a.Q) for u, a in zip(spec.users, allocs)]
    opt = ChannelSpec(opt_users, spec.rho)
    scale = LN2 if args.bits else 1.0
    unit = "bits" if args.bits else "nats"
    for k, a in enumerate(allocs):
        powers = "  ".join(f"{p:.9g}" for p in a.p)
        print(f"user {k}: mu = {a.mu:.9g}  p = {powers}")
    print(f"mi_det uniform   = {mi_det(spec, sol_u) / scale:.12g} {unit}/s/Hz")
    print(f"mi_det waterfill = "
          f"{mi_det(opt, solve_fundamental(opt)) / scale:.12g} {unit}/s/Hz")
    return 0


def _cmd_oracle(args):
    spec, _ = _point_spec(args)
    cmp = kronecker_conditional_oracle(spec, args.seed)
    print(f"{'user':>4} {'e':>18} {'g':>18} {'|e-g|':>12} "
          f"{'ebar':>18} {'gbar':>18} {'|ebar-gbar|':>12}")
    for k in range(spec.K):
        print(f"{k:>4} {cmp.e[k]:>18.9e} {cmp.g[k]:>18.9e} "
              f"{cmp.gap_e[k]:>12.3e} {cmp.ebar[k]:>18.9e} "
              f"{cmp.gbar[k]:>18.9e} {cmp.gap_ebar[k]:>12.3e}")
    print(f"max|e - g| = {np.max(cmp.gap_e):.6e}   "
          f"max|ebar - gbar| = {np.max(cmp.gap_ebar):.6e}")
    return 0


def _cmd_experiment(args):
    spec, experiment = load_config(args.config)
    if experiment is None:
        raise ConfigError("config declares no experiment section",
                          field="experiment")
    if args.trials is not None:
        experiment.trials = args.trials
    if args.seed is not None:
        experiment.master_seed = args.seed
    experiment.bits = args.bits
    experiment.timing = args.timing
    out = args.out or experiment.output
    if out is None:
        raise ConfigError("no output path (give --out or experiment.output)")
    columns, rows = run_experiment(spec, experiment)
    write_csv(out, columns, rows)
    print(f"wrote {len(rows)} rows x {len(columns)} columns to {out}")
    return 0


def _add_common(p, trials_default=0):
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--snr-db", type=float, default=None,
                   help="override the operating point (rho = 10^(-snr/10))")
    p.add_argument("--trials", type=int, default=trials_default,
                   help="Monte Carlo trials (0 disables)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--bits", action="store_true",
                   help="report rates in bits instead of nats")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dsmimo",
        description="Deterministic large-system analysis of double-"
                    "scattering MIMO multiple-access channels")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, hlp in (
            ("solve", _cmd_solve, "solve the fundamental equations"),
            ("mi", _cmd_mi, "deterministic (and Monte Carlo) mutual information"),
            ("sinr", _cmd_sinr, "deterministic per-stream MMSE SINR"),
            ("sumrate", _cmd_sumrate, "deterministic (and Monte Carlo) MMSE sum-rate"),
            ("waterfill", _cmd_waterfill, "optimal power allocation"),
            ("oracle", _cmd_oracle, "conditional-model concentration check")):
        p = sub.add_parser(name, help=hlp)
        _add_common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("experiment", help="full SNR sweep to CSV")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", default=None, help="output CSV path")
    p.add_argument("--trials", type=int, default=None,
                   help="override experiment.trials")
    p.add_argument("--seed", type=int, default=None,
                   help="override experiment.master_seed")
    p.add_argument("--bits", action="store_true",
                   help="report rates in bits instead of nats")
    p.add_argument("--timing", action="store_true",
                   help="append a wall_time_s column (not reproducible)")
    p.set_defaults(fn=_cmd_experiment)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
