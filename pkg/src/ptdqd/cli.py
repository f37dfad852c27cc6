"""Command-line entry point: ptdqd <command> --config FILE --out FILE."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import warnings

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .dynamics import DriveSpec, MethodError, SingularDriveError, evolve_correlations, lindblad_evolve
from .hamiltonian import PreconditionError, build_heff, build_heff_lindblad, is_balanced, lambda_ep
from .inout import closed_form_transmission, folded_phase, peak_report, steady_state_photons, sweep_transmission, transmission
from .params import ellipse_point
from .ness import NoiseKernelSpec, NumericalError, balance_rhs, balance_scan, kernel_spec, nearest_balance, solve_ness, tune_balance

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v) + 0.0  # no negative zero
        if math.isnan(v):
            return "nan"
        return f"{v:.11e}"
    return str(v)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def render_csv(meta, columns, rows):
    out = [f"# {m}" for m in meta]
    out.append(",".join(columns))
    for r in rows:
        out.append(",".join(fmt(v) for v in r))
    return "\n".join(out) + "\n"


def sibling(path, suffix):
    root, _ = os.path.splitext(path)
    return root + suffix


def _meta(cmd, cfg, p, ss, extra=()):
    m = [f"ptdqd {__version__}", f"command: {cmd}"]
    m += cfg.echo()
    m += [f"resolved eps = {p.eps!r}", f"resolved tc = {p.tc!r}", f"resolved lambda = {p.lam!r}"]
    if ss is not None:
        m += [f"dqd n1 = {ss.n1!r}", f"dqd n2 = {ss.n2!r}", f"dqd dn = {ss.dn!r}", f"dqd delta = {ss.delta!r}"]
    m += list(extra)
    return m


def _setup(cfg):
    p = cfg.params
    if cfg["dqd"]["tune"] == "nearest":
        p = nearest_balance(p, n_theta=cfg["balance"]["n_theta"], margin=cfg["balance"]["margin"])
    return p, solve_ness(p)


def _map(fn, items, threads):
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------- commands

def cmd_tune_balance(cfg, out, threads=1):
    p = cfg.params
    b = cfg["balance"]
    thetas, lhs = balance_scan(p, b["n_theta"], b["margin"])
    roots = tune_balance(p, b["n_theta"], b["margin"], b["eps_resolution"], scan=(thetas, lhs))
    rhs = balance_rhs(p)
    rows = [(t, *ellipse_point(t, p.omega0), v, rhs, False) for t, v in zip(thetas, lhs)]
    rows += [(r.theta, r.eps, r.tc, r.dn * math.sin(r.theta) ** 2, rhs, True) for r in roots]
    rows.sort(key=lambda r: (r[0], r[5]))

    def sens(gb):
        rs = tune_balance(p.with_(gamma_b=gb), b["n_theta"], b["margin"], b["eps_resolution"])
        return {"gamma_b": gb, "roots": [{"eps": r.eps, "tc": r.tc, "dn": r.dn} for r in rs]}

    summary = {
        "version": __version__,
        "gamma_b": p.gamma_b,
        "rhs": rhs,
        "roots": [{"eps": r.eps, "tc": r.tc, "dn": r.dn, "theta": r.theta} for r in roots],
        "gamma_b_sensitivity": _map(sens, list(b["sensitivity_gamma_b"]), threads),
    }
    warn = []
    if not roots:
        warn.append("no balance point: the required inversion exceeds what the DQD provides")
    csv = render_csv(_meta("tune-balance", cfg, p, None, [f"rhs = {rhs!r}"]),
                     ["theta", "eps", "tc", "lhs", "rhs", "is_root"], rows)
    _atomic_write(sibling(out, ".roots.json"), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _atomic_write(out, csv)
    return warn


def run_evolve(cfg, method=None, threads=1, drive=None):
    """(params, dqd state, Trajectory) for an [evolve] block."""
    p, ss = _setup(cfg)
    e = cfg["evolve"]
    if e["at_ep"]:
        p = p.with_(lam=lambda_ep(p, ss, balanced=False))
    H = build_heff(p, ss)
    spec = kernel_spec(p, ss) if e["noise"] else NoiseKernelSpec(0.0, p.Gamma, p.omega0)
    times = np.linspace(0.0, e["t_max"], e["n_times"])
    if drive is None:
        drive = DriveSpec(e0=e["e0"], omega_d=p.omega0 + e["detuning"])
    tr = evolve_correlations(H, spec, (e["alpha1"], e["alpha2"]), times, method or e["method"],
                             drive=drive, photon_bound=e["photon_bound"], threads=threads)
    return p, ss, tr


def cmd_evolve(cfg, out, threads=1, method=None):
    e = cfg["evolve"]
    p, ss, tr = run_evolve(cfg, method, threads)
    fl = tr.fluct
    rows = [(t, q[0].real, q[0].imag, q[1].real, q[1].imag, a, b, f[0], f[1], c, v)
            for t, q, a, b, f, c, v in zip(tr.times, tr.quad, tr.n1, tr.n2, fl, tr.current, tr.valid)]
    cols = ["t", "re_b1", "im_b1", "re_b2", "im_b2", "n1", "n2", "fluct1", "fluct2", "current", "validity_flag"]
    warn = []
    if tr.validity_index is not None:
        warn.append(f"photon number exceeds {e['photon_bound']} at t = {tr.times[tr.validity_index]:.6g} ns")
    _atomic_write(out, render_csv(_meta("evolve", cfg, p, ss, [f"method = {method or e['method']}"]), cols, rows))
    return warn


def cmd_transmission(cfg, out, threads=1):
    p, ss = _setup(cfg)
    s = cfg["transmission"]
    grid = np.linspace(s["axis_min"], s["axis_max"], s["axis_n"])
    wd = p.omega0 + np.linspace(s["detuning_min"], s["detuning_max"], s["detuning_n"])
    key = "lam" if s["axis"] == "lambda" else "kappa2"

    def one(v):
        q = p.with_(**{key: float(v)})
        rows = sweep_transmission(q, ss, s["axis"], [v], wd)
        out_rows = []
        for r in rows:
            if r["error"]:
                out_rows.append((r["axis"], r["omega_d"], *[math.nan] * 7, r["re_lp"], r["re_lm"], math.nan, "nondissipative"))
                continue
            tp = transmission(q, ss, r["omega_d"])
            cf = closed_form_transmission(q, ss, r["omega_d"])
            scale = max(abs(tp.t1), abs(tp.t2), 1e-300)
            err = max(abs(tp.t1 - cf["t1"]), abs(tp.t2 - cf["t2"])) / scale
            out_rows.append((r["axis"], r["omega_d"], tp.amp1, tp.phase1, r["amp2"], r["phase2"],
                             r["phase2_unwrapped"], folded_phase(tp.t2), tp.t2.imag, r["re_lp"], r["re_lm"], err, "ok"))
        try:
            rep = peak_report(q, ss, wd)
            peaks = [(v, k, x) for k in ("amp2_peaks", "det_minima", "re_lambda", "text_candidate") for x in rep[k]]
        except PreconditionError:
            peaks = []
        return out_rows, peaks

    res = _map(one, list(grid), threads)
    rows = [r for rr, _ in res for r in rr]
    peaks = [r for _, pk in res for r in pk]
    cols = ["axis", "omega_d", "amp1", "phase1", "amp2", "phase2", "phase2_unwrapped", "phase2_folded",
            "im_t2", "re_lambda_plus", "re_lambda_minus", "closed_form_err", "status"]
    meta = _meta("transmission", cfg, p, ss, [f"axis = {s['axis']}"])
    _atomic_write(sibling(out, ".peaks.csv"), render_csv(meta, ["axis", "kind", "omega_d"], peaks))
    _atomic_write(out, render_csv(meta, cols, rows))
    bad = sum(1 for r in rows if r[-1] != "ok")
    return [f"{bad} grid points are not dissipative"] if bad else []


def cmd_steady(cfg, out, threads=1):
    p, ss = _setup(cfg)
    s = cfg["steady"]
    grid = np.linspace(s["axis_min"], s["axis_max"], s["axis_n"])
    key = "lam" if s["axis"] == "lambda" else "kappa2"
    jobs = [(v, m) for v in grid for m in s["models"]]

    def one(job):
        v, m = job
        try:
            r = steady_state_photons(p.with_(**{key: float(v)}), ss, m)
            return (v, m, r.n1, r.n2, r.current, "ok")
        except PreconditionError:
            return (v, m, math.nan, math.nan, math.nan, "nondissipative")

    rows = _map(one, jobs, threads)
    meta = _meta("steady", cfg, p, ss, [f"axis = {s['axis']}"])
    _atomic_write(out, render_csv(meta, ["axis", "model", "n1", "n2", "current", "status"], rows))
    bad = sum(1 for r in rows if r[-1] != "ok")
    return [f"{bad} grid points are not dissipative"] if bad else []


def run_compare(cfg, method=None, threads=1):
    """EOM, microscopic and phenomenological trajectories for a [compare] block."""
    p, ss = _setup(cfg)
    c = cfg["compare"]
    times = np.linspace(0.0, c["t_max"], c["n_times"])
    init = (c["alpha1"], 0j)
    eom = evolve_correlations(build_heff(p, ss), kernel_spec(p, ss), init, times, method or c["method"], threads=threads)
    micro = lindblad_evolve(p, ss, "microscopic", DriveSpec(), init, times)
    phen = lindblad_evolve(p, ss, "phenomenological", DriveSpec(), init, times)
    return p, ss, eom, micro, phen


def cmd_compare_lindblad(cfg, out, threads=1, method=None):
    c = cfg["compare"]
    p, ss, eom, micro, phen = run_compare(cfg, method, threads)
    times = eom.times
    rows = [(t, abs(a[1]) ** 2, abs(b[1]) ** 2, f0, f1, f2)
            for t, a, b, f0, f1, f2 in zip(times, eom.quad, micro.quad, eom.fluct[:, 1], micro.fluct[:, 1], phen.fluct[:, 1])]
    cols = ["t", "b2sq_eom", "b2sq_lindblad", "fluct2_eom", "fluct2_micro", "fluct2_phen"]
    ecols = ["kappa2", "re_l1_eom", "im_l1_eom", "re_l2_eom", "im_l2_eom",
             "re_l1_lindblad", "im_l1_lindblad", "re_l2_lindblad", "im_l2_lindblad", "max_diff", "bound_2_delta_lambda"]
    erows = []
    q0 = p.with_(lam=c["lambda_sweep"])
    for k in np.linspace(c["kappa2_min"], c["kappa2_max"], c["kappa2_n"]):
        q = q0.with_(kappa2=float(k))
        a = np.sort_complex(np.linalg.eigvals(build_heff(q, ss)))
        b = np.sort_complex(np.linalg.eigvals(build_heff_lindblad(q, ss)))
        diff = min(np.max(np.abs(a - b)), np.max(np.abs(a - b[::-1])))
        erows.append((k, a[0].real, a[0].imag, a[1].real, a[1].imag, b[0].real, b[0].imag, b[1].real, b[1].imag,
                      diff, 2 * ss.delta * q.lam))
    meta = _meta("compare-lindblad", cfg, p, ss, [f"method = {method or c['method']}"])
    _atomic_write(sibling(out, ".eigs.csv"), render_csv(meta, ecols, erows))
    _atomic_write(out, render_csv(meta, cols, rows))
    return []


COMMANDS = {
    "tune-balance": cmd_tune_balance,
    "evolve": cmd_evolve,
    "transmission": cmd_transmission,
    "steady": cmd_steady,
    "compare-lindblad": cmd_compare_lindblad,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="ptdqd", description="Gain-loss cavity pair driven by a biased DQD.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--no-lamb-shift", action="store_true")
    ap.add_argument("--no-phonon", action="store_true")
    ap.add_argument("--method", choices=["quadrature", "eigenbasis"])
    ap.add_argument("--threads", type=int)
    ap.add_argument("--version", action="version", version=f"ptdqd {__version__}")
    return ap


def _threads(arg):
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("PTDQD_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise ConfigError(f"PTDQD_THREADS must be an integer, got {env!r}") from None


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.no_lamb_shift:
        overrides["lamb_shift"] = False
    if args.no_phonon:
        overrides["gamma_b"] = 0.0
    try:
        cfg = load_config(args.config, overrides)
        threads = _threads(args.threads)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    fn = COMMANDS[args.command]
    kw = {"threads": threads}
    if args.command in ("evolve", "compare-lindblad"):
        kw["method"] = args.method
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            msgs = fn(cfg, args.out, **kw)
    except (NumericalError, MethodError, PreconditionError, SingularDriveError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    for m in msgs:
        print(f"warning: {m}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
