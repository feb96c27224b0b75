"""Command-line pipelines that wire the library modules into
figure-reproduction runs and emit CSV/JSON artifacts with manifests.

Exit codes: 0 success, 2 invalid arguments, 3 numerical failure
(eigensolver/divergence), 4 cutoff-unreliable results (outputs written,
flagged in the manifest).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import keldysh, langevin, liouville, meanfield, scaling
from .core import FrequencyGrid, ModelParams, RegimeTag, classify_regime
from .runio import RunDirectory

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_CUTOFF = 4


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def _pool(workers: int | None) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers or os.cpu_count() or 1)


def _ed_occupation(g_abs: float, inv_u: float, gamma: float, nmax_override: int | None,
                   dim_cap: int):
    """(Un_ed, n_max, clipped) at one (|G|, 1/U) point via the direct
    steady-state solve."""
    params = ModelParams(U=1.0 / inv_u, G=complex(g_abs), gamma=gamma)
    if nmax_override is not None:
        n_max, clipped = nmax_override, False
    else:
        n_max, clipped = liouville.default_nmax(params, dim_cap)
    liou = liouville.build_liouvillian(params, n_max, max(dim_cap, (n_max + 1) ** 2))
    rho = liouville.steady_state_direct(liou)
    ops = liouville.build_hamiltonian(params, n_max)
    n_ed = liouville.observable_n(rho, ops)
    return params.U * n_ed, n_max, clipped


def cmd_mft_sweep(args) -> int:
    gs = np.linspace(args.g_min, args.g_max, args.g_points)
    inv_us = _parse_float_list(args.inv_u_list) if args.inv_u_list else []
    params = {
        "G_min": args.g_min,
        "G_max": args.g_max,
        "G_points": args.g_points,
        "gamma": args.gamma,
        "inv_U_list": inv_us,
        "nmax": args.nmax,
        "dim_cap": args.dim_cap,
    }
    run = RunDirectory(args.out, "mft_sweep", params, args.label)

    phi_mf = np.array(
        [meanfield.steady_order_parameter(ModelParams(G=complex(g), gamma=args.gamma)) for g in gs]
    )
    columns: dict[str, np.ndarray] = {"G": gs, "phi_mf": phi_mf}
    row_warnings = ["" for _ in gs]

    def one(job):
        i, g, inv_u = job
        return i, inv_u, _ed_occupation(g, inv_u, args.gamma, args.nmax, args.dim_cap)

    jobs = [(i, g, inv_u) for inv_u in inv_us for i, g in enumerate(gs)]
    any_clipped = False
    if jobs:
        with _pool(args.workers) as pool:
            results = list(pool.map(one, jobs))
        for inv_u in inv_us:
            columns[f"Un_ed_invU{inv_u:g}"] = np.full(len(gs), np.nan)
        for i, inv_u, (un_ed, n_max, clipped) in results:
            columns[f"Un_ed_invU{inv_u:g}"][i] = un_ed
            if clipped:
                any_clipped = True
                row_warnings[i] = (row_warnings[i] + f" clipped_invU{inv_u:g}").strip()
    columns["warnings"] = np.array(row_warnings, dtype=object)
    run.csv("data.csv", "mft_sweep/v1", columns)

    flow = meanfield.flow_field(
        (0.0, 1.2 * args.gamma), (0.0, args.g_max if args.g_max > 0 else 2.0), 121, args.gamma
    )
    run.matrix_csv("flow_field.csv", "flow_field/v1", flow.g_values, flow.phi_values,
                   flow.re_gamma_plus)
    run.json(
        "report.json",
        {
            "exceptional_line": {
                "G": [float(v) for v in flow.g_values],
                "phi": [float(v) for v in flow.exceptional_phi],
            },
            "stabilized_line": {
                "G": [float(v) for v in flow.g_values],
                "phi": [float(v) for v in flow.stabilized_phi],
            },
            "gamma": args.gamma,
            "phi_mf_max": float(phi_mf.max()),
        },
    )
    run.finalize(warnings_list=[w for w in row_warnings if w])
    print(run.path)
    return EXIT_CUTOFF if any_clipped else EXIT_OK


def _spectra_scalars(g_abs: float, gamma: float) -> tuple[float, float]:
    params = ModelParams(G=complex(g_abs), gamma=gamma, U=1e-3)
    if classify_regime(params) is RegimeTag.CRITICAL:
        return 0.0, 0.0
    return keldysh.fwhm(params), keldysh.peak_location(params)


def cmd_spectra(args) -> int:
    grid = FrequencyGrid(args.omega_min, args.omega_max, args.omega_points)
    params_dict = {
        "G": args.g,
        "gamma": args.gamma,
        "U": args.u,
        "omega_min": args.omega_min,
        "omega_max": args.omega_max,
        "omega_points": args.omega_points,
        "G_list": _parse_float_list(args.g_list) if args.g_list else [],
    }
    run = RunDirectory(args.out, "spectra", params_dict, args.label)
    params = ModelParams(G=complex(args.g), gamma=args.gamma, U=args.u)
    report: dict = {"G": args.g, "gamma": args.gamma}

    if classify_regime(params) is RegimeTag.CRITICAL:
        curve = keldysh.critical_spectral_function(args.gamma, grid)
        power = keldysh.near_critical_power_spectrum(args.gamma, 1e-3 * args.gamma, grid)
        h = np.full(grid.n_points, np.nan)
        report.update(
            {
                "regime": "critical",
                "delta": {"location": curve.delta_location, "weight": curve.delta_weight},
                "fwhm": 0.0,
                "peak_location": 0.0,
                "smooth_fwhm": 2.0 * args.gamma,
                "power_spectrum": "near-critical approximation at Delta_G = 1e-3 gamma",
            }
        )
        a_vals, s_vals = curve.values, power.values
    else:
        curve = keldysh.spectral_function(params, grid)
        power = keldysh.power_spectrum_inel(params, grid)
        hfun = keldysh.effective_distribution(params, grid)
        h = hfun.values
        report.update(
            {
                "regime": classify_regime(params).value,
                "fwhm": keldysh.fwhm(params),
                "peak_location": keldysh.peak_location(params),
                "sum_rule": keldysh.spectral_sum_rule(params),
                "masked_h_points": [int(i) for i in (hfun.masked if hfun.masked is not None else [])],
            }
        )
        if power.delta_weight is not None:
            report["elastic_line"] = {
                "location": power.delta_location,
                "weight": power.delta_weight,
            }
        a_vals, s_vals = curve.values, power.values

    run.csv(
        "data.csv",
        "spectra/v1",
        {"omega": grid.values(), "A": a_vals, "S_inel": s_vals, "h_tilde": h},
    )

    if args.g_list:
        g_list = sorted(_parse_float_list(args.g_list))
        with _pool(args.workers) as pool:
            scal = list(pool.map(lambda g: _spectra_scalars(g, args.gamma), g_list))
        run.csv(
            "scalars.csv",
            "spectra_scalars/v1",
            {
                "G": np.array(g_list),
                "fwhm": np.array([s[0] for s in scal]),
                "peak": np.array([s[1] for s in scal]),
            },
        )
    run.json("report.json", report)
    run.finalize()
    print(run.path)
    return EXIT_OK


def cmd_ed_report(args) -> int:
    inv_us = sorted(_parse_float_list(args.inv_u_list))
    params_dict = {
        "G": args.g,
        "gamma": args.gamma,
        "inv_U_list": inv_us,
        "nmax": args.nmax,
        "k_eigen": args.k_eigen,
        "wigner_inv_U": args.wigner_inv_u,
        "wigner_points": args.wigner_points,
        "dim_cap": args.dim_cap,
    }
    run = RunDirectory(args.out, "ed_report", params_dict, args.label)
    warn_messages: list[str] = []

    def one_point(inv_u: float):
        params = ModelParams(U=1.0 / inv_u, G=complex(args.g), gamma=args.gamma)
        if args.nmax is not None:
            n_max, clipped = args.nmax, False
        else:
            n_max, clipped = liouville.default_nmax(params, args.dim_cap)
        liou = liouville.build_liouvillian(params, n_max, max(args.dim_cap, (n_max + 1) ** 2))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", liouville.CutoffWarning)
            spectrum = liouville.diagonalize(liou)
            pair = liouville.steady_pair(spectrum)
        ops = liouville.build_hamiltonian(params, n_max)
        n_ed = liouville.observable_n(pair.sigma0, ops)
        msgs = [f"invU={inv_u:g}: {w.message}" for w in caught]
        if clipped:
            msgs.append(f"invU={inv_u:g}: cutoff rule clipped to n_max={n_max}")
        keep_pair = pair if (args.wigner_inv_u is not None and inv_u == args.wigner_inv_u) else None
        lead = spectrum.eigenvalues[: args.k_eigen + 1].copy()
        return inv_u, n_max, clipped, n_ed, spectrum.gap, lead, msgs, keep_pair

    with _pool(args.workers) as pool:
        rows = sorted(pool.map(one_point, inv_us), key=lambda r: r[0])

    cols: dict[str, np.ndarray] = {
        "inv_U": np.array([r[0] for r in rows]),
        "n_max": np.array([r[1] for r in rows]),
        "clipped": np.array([r[2] for r in rows]),
        "n_ed": np.array([r[3] for r in rows]),
        "phi_ed": np.array([r[3] / r[0] for r in rows]),
        "phi_mf": np.full(
            len(rows),
            meanfield.steady_order_parameter(ModelParams(G=complex(args.g), gamma=args.gamma)),
        ),
        "gap": np.array([r[4] for r in rows]),
    }
    for k in range(1, args.k_eigen + 1):
        cols[f"re_lambda_{k}"] = np.array(
            [r[5][k].real if len(r[5]) > k else np.nan for r in rows]
        )
    run.csv("data.csv", "ed_report/v1", cols)
    for _, _, _, _, _, _, msgs, _ in rows:
        warn_messages.extend(msgs)

    report: dict = {"G": args.g, "gamma": args.gamma, "regime": classify_regime(
        ModelParams(G=complex(args.g), gamma=args.gamma)).value}
    u_vals = 1.0 / cols["inv_U"]
    phi_dev = np.abs(cols["phi_ed"] - cols["phi_mf"])
    if len(rows) >= 3:
        try:
            fit = scaling.fit_power_law(u_vals, phi_dev)
            report["phi_dev_fit"] = {
                "kind": fit.kind,
                "exponent": fit.exponent,
                "prefactor": fit.prefactor,
                "r_squared": fit.r_squared,
            }
        except ValueError:
            pass
        regime = classify_regime(ModelParams(G=complex(args.g), gamma=args.gamma))
        if regime is RegimeTag.CRITICAL:
            fit = scaling.fit_power_law(u_vals, cols["gap"])
            report["gap_fit"] = {
                "kind": fit.kind,
                "exponent": fit.exponent,
                "prefactor": fit.prefactor,
                "r_squared": fit.r_squared,
            }
            x = cols["inv_U"] ** (2.0 / 3.0)
            a = np.column_stack([x, np.ones_like(x)])
            coeffs, _, _, _ = np.linalg.lstsq(a, cols["n_ed"], rcond=None)
            pred = a @ coeffs
            ss_res = float(np.sum((cols["n_ed"] - pred) ** 2))
            ss_tot = float(np.sum((cols["n_ed"] - cols["n_ed"].mean()) ** 2))
            report["n_linearity"] = {
                "slope": float(coeffs[0]),
                "intercept": float(coeffs[1]),
                "r_squared": 1.0 - ss_res / ss_tot if ss_tot else 1.0,
            }
        elif regime is RegimeTag.ABOVE:
            lam1 = np.abs(cols["re_lambda_1"])
            fit = scaling.fit_exponential(cols["inv_U"], lam1)
            report["lambda1_fit"] = {
                "kind": fit.kind,
                "exponent": fit.exponent,
                "prefactor": fit.prefactor,
                "r_squared": fit.r_squared,
            }

    pair = next((r[7] for r in rows if r[7] is not None), None)
    if pair is not None:
        for name, sigma in (("sigma0", pair.sigma0), ("sigma1", pair.sigma1)):
            grid = liouville.wigner(sigma, n_points=args.wigner_points)
            run.matrix_csv(f"wigner_{name}.csv", "wigner/v1", grid.p, grid.x, grid.values)
        report["wigner_inv_U"] = args.wigner_inv_u
    run.json("report.json", report)
    run.finalize(warnings_list=warn_messages)
    print(run.path)
    return EXIT_CUTOFF if warn_messages else EXIT_OK


def cmd_langevin(args) -> int:
    drift = {"linear": langevin.Drift.LINEAR, "quintic": langevin.Drift.QUINTIC,
             "full": langevin.Drift.FULL_COUPLED}[args.drift]
    config = langevin.default_config(
        drift, g=args.g, U=args.u, gamma=args.gamma, seed=args.seed,
        n_trajectories=args.trajectories,
    )
    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.steps is not None:
        overrides["n_steps"] = args.steps
    if args.burn_in is not None:
        overrides["burn_in"] = args.burn_in
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)

    params_dict = {
        "G": args.g,
        "U": args.u,
        "gamma": args.gamma,
        "drift": args.drift,
        "dt": config.dt,
        "steps": config.n_steps,
        "burn_in": config.burn_in,
        "trajectories": config.n_trajectories,
        "seed": config.seed,
    }
    run = RunDirectory(args.out, "langevin", params_dict, args.label)
    try:
        stats = langevin.simulate(config, args.gamma)
    except langevin.DivergenceError as exc:
        run.json("report.json", {"error": str(exc), "failed_step": exc.step})
        run.finalize(seeds=[config.seed])
        print(run.path)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    run.csv(
        "data.csv",
        "langevin_stats/v1",
        {
            "mean_x2": np.array([stats.mean_x2]),
            "stderr_x2": np.array([stats.stderr_x2]),
            "mean_x4": np.array([stats.mean_x4]),
            "stderr_x4": np.array([stats.stderr_x4]),
            "mean_p2": np.array([np.nan if stats.mean_p2 is None else stats.mean_p2]),
            "stderr_p2": np.array([np.nan if stats.stderr_p2 is None else stats.stderr_p2]),
            "rate": np.array([stats.fit.rate if stats.fit else np.nan]),
            "rate_ci_lo": np.array([stats.fit.ci[0] if stats.fit else np.nan]),
            "rate_ci_hi": np.array([stats.fit.ci[1] if stats.fit else np.nan]),
        },
    )
    run.csv(
        "autocorr.csv",
        "langevin_autocorr/v1",
        {"lag": stats.lags, "C": stats.autocorr},
    )
    report: dict = {
        "drift": args.drift,
        "g": args.g,
        "gamma": args.gamma,
        "mean_x2": stats.mean_x2,
        "stderr_x2": stats.stderr_x2,
        "measured_rate": stats.fit.rate if stats.fit else None,
        "exponents_predicted": dict(
            zip(("nu_n", "nu_t", "eta_n", "eta_t"), langevin.predicted_exponents())
        ),
        "relation_check": scaling.exponent_relation(*langevin.predicted_exponents(), tol=1e-12)[0],
    }
    if drift is not langevin.Drift.LINEAR:
        fe = langevin.FreeEnergy.for_x(args.g, args.u, args.gamma)
        x2_quad = langevin.stationary_moment(fe, 2)
        report["x2_quadrature"] = x2_quad
        report["kappa_predicted_quadrature_x2"] = langevin.predicted_kappa(
            args.u, args.gamma, x2_quad
        )
        x2_printed = (
            langevin.X2_PREFACTOR_PRINTED * (args.gamma / args.u) ** (2.0 / 3.0)
        )
        report["kappa_predicted_printed_x2"] = langevin.predicted_kappa(
            args.u, args.gamma, x2_printed
        )
        report["x2_printed_prefactor"] = x2_printed
    else:
        report["x2_exact"] = args.gamma / (args.gamma - args.g) if args.g < args.gamma else None
        report["p2_exact"] = args.gamma / (args.gamma + args.g)
    run.json("report.json", report)
    run.finalize(seeds=[config.seed])
    print(run.path)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    """Full figure-reproduction pipeline: order parameter + flow field,
    ED reports below/at/above threshold, spectra, and Langevin runs."""
    ns = argparse.Namespace
    rc = 0
    inv_us_ed = args.inv_u_list or "10,20,30,40"
    ed_values = sorted(_parse_float_list(inv_us_ed))
    base = dict(out=args.out, workers=args.workers, gamma=args.gamma, label=None)
    rc = max(rc, cmd_mft_sweep(ns(**base, g_min=0.0, g_max=1.25, g_points=args.g_points,
                                  inv_u_list="10,20", nmax=args.nmax, dim_cap=args.dim_cap)))
    wig_at = ed_values[-1]
    wig_above = min(ed_values, key=lambda v: abs(v - 30.0))
    for g, wig in ((0.8, None), (1.0, wig_at), (1.2, wig_above)):
        rc = max(rc, cmd_ed_report(ns(**base, g=g, inv_u_list=inv_us_ed, nmax=args.nmax,
                                      dim_cap=args.dim_cap, k_eigen=6, wigner_inv_u=wig,
                                      wigner_points=121)))
    g_list = ",".join(f"{v:g}" for v in np.linspace(0.0, 0.995, 21))
    rc = max(rc, cmd_spectra(ns(**base, g=1.2, u=1e-3, omega_min=-3.0, omega_max=3.0,
                                omega_points=601, g_list=g_list)))
    rc = max(rc, cmd_spectra(ns(**base, g=0.999, u=1e-3, omega_min=-3.0, omega_max=3.0,
                                omega_points=601, g_list=None)))
    rc = max(rc, cmd_spectra(ns(**base, g=1.0, u=1e-3, omega_min=-3.0, omega_max=3.0,
                                omega_points=601, g_list=None)))
    rc = max(rc, cmd_langevin(ns(**base, g=0.9, u=0.0, drift="linear", dt=None, steps=None,
                                 burn_in=None, trajectories=args.trajectories, seed=args.seed)))
    rc = max(rc, cmd_langevin(ns(**base, g=args.gamma, u=0.05, drift="quintic", dt=None,
                                 steps=None, burn_in=None, trajectories=args.trajectories,
                                 seed=args.seed)))
    return rc


def _load_config_defaults(path: str) -> dict:
    defaults = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {line!r}")
        key, value = line.split("=", 1)
        defaults[key.strip().replace("-", "_")] = value.strip()
    return defaults


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="kerrosc",
        description="Driven-dissipative Kerr oscillator toolkit",
    )
    parser.add_argument("--config", help="key=value file with flag defaults (flags win)")
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def common(p):
        p.add_argument("--gamma", type=float, default=1.0)
        p.add_argument("--out", default=".", help="parent directory for the run folder")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--label", default=None, help="run-folder label (default: timestamp)")

    p = registry["mft-sweep"] = sub.add_parser(
        "mft-sweep", help="order parameter vs drive, MF and ED")
    common(p)
    p.add_argument("--G-min", dest="g_min", type=float, default=0.0)
    p.add_argument("--G-max", dest="g_max", type=float, default=2.0)
    p.add_argument("--G-points", dest="g_points", type=int, default=41)
    p.add_argument("--inv-U-list", dest="inv_u_list", default=None)
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--dim-cap", dest="dim_cap", type=int, default=liouville.DEFAULT_DIM_CAP)
    p.set_defaults(func=cmd_mft_sweep)

    p = registry["spectra"] = sub.add_parser(
        "spectra", help="spectral function, power spectrum, h(omega)")
    common(p)
    p.add_argument("--G", dest="g", type=float, required=True)
    p.add_argument("--U", dest="u", type=float, default=1e-3)
    p.add_argument("--omega-min", type=float, default=-3.0)
    p.add_argument("--omega-max", type=float, default=3.0)
    p.add_argument("--omega-points", type=int, default=601)
    p.add_argument("--G-list", dest="g_list", default=None,
                   help="comma list for the FWHM/peak scalar sweep")
    p.set_defaults(func=cmd_spectra)

    p = registry["ed-report"] = sub.add_parser(
        "ed-report", help="finite-size eigenvalue sweep + Wigner")
    common(p)
    p.add_argument("--G", dest="g", type=float, required=True)
    p.add_argument("--inv-U-list", dest="inv_u_list", required=True)
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--dim-cap", dest="dim_cap", type=int, default=liouville.DEFAULT_DIM_CAP)
    p.add_argument("--k-eigen", type=int, default=6)
    p.add_argument("--wigner-inv-U", dest="wigner_inv_u", type=float, default=None)
    p.add_argument("--wigner-points", type=int, default=201)
    p.set_defaults(func=cmd_ed_report)

    p = registry["langevin"] = sub.add_parser(
        "langevin", help="quadrature Langevin sampling")
    common(p)
    p.add_argument("--G", dest="g", type=float, required=True, help="drive g in gamma units")
    p.add_argument("--U", dest="u", type=float, default=0.0)
    p.add_argument("--drift", choices=("linear", "quintic", "full"), default="linear")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    p.add_argument("--trajectories", type=int, default=64)
    p.add_argument("--seed", type=int, default=20240)
    p.set_defaults(func=cmd_langevin)

    p = registry["reproduce"] = sub.add_parser(
        "reproduce", help="run every figure pipeline")
    common(p)
    p.add_argument("--inv-U-list", dest="inv_u_list", default=None)
    p.add_argument("--G-points", dest="g_points", type=int, default=21)
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--dim-cap", dest="dim_cap", type=int, default=liouville.DEFAULT_DIM_CAP)
    p.add_argument("--trajectories", type=int, default=64)
    p.add_argument("--seed", type=int, default=20240)
    p.set_defaults(func=cmd_reproduce)
    return parser, registry


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            defaults = _load_config_defaults(argv[idx + 1])
        except (OSError, IndexError, ValueError) as exc:
            print(f"error: bad config file: {exc}", file=sys.stderr)
            return EXIT_USAGE
        for sub_parser in registry.values():
            converted = {}
            for action in sub_parser._actions:  # noqa: SLF001
                if action.dest in defaults:
                    raw = defaults[action.dest]
                    converted[action.dest] = action.type(raw) if action.type else raw
            sub_parser.set_defaults(**converted)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, liouville.DimensionCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
