"""Figure bundles rendered from kerrosc run artifacts.

Each figure id mirrors one of the paper-style layouts: f1b order parameter,
f2 order-parameter deviations, f3 stability flow field, f4 eigenvalue
scalings, f5 Wigner panels, f6 spectra, f7 near-critical spectra + Wigner.
Rendering is a pure function of the input files; only display transforms
(log axes, color normalization) happen here.
"""

from __future__ import annotations

import html
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schemas import RunInfo, SchemaError, discover_runs

FIGURE_IDS = ("f1b", "f2", "f3", "f4", "f5", "f6", "f7")

#: deterministic rendering: fixed hash salt, text as paths, no timestamps
matplotlib.rcParams.update(
    {
        "svg.hashsalt": "plotkit",
        "svg.fonttype": "path",
        "figure.dpi": 100,
        "savefig.dpi": 100,
    }
)


@dataclass
class FigureSpec:
    figure_id: str
    inputs: dict[str, RunInfo]
    scales: dict[str, str] = field(default_factory=dict)

    @property
    def digests(self) -> str:
        return ";".join(
            f"{name}={run.digest[:16]}" for name, run in sorted(self.inputs.items())
        )


def _runs_by_command(runs: list[RunInfo]) -> dict[str, list[RunInfo]]:
    grouped: dict[str, list[RunInfo]] = {}
    for run in runs:
        grouped.setdefault(run.command, []).append(run)
    return grouped


def _ed_by_drive(runs: list[RunInfo]) -> dict[float, RunInfo]:
    return {float(r.params.get("G", np.nan)): r for r in runs}


def build_specs(runs: list[RunInfo]) -> list[FigureSpec]:
    """Figure specs constructible from the available runs."""
    grouped = _runs_by_command(runs)
    specs: list[FigureSpec] = []

    for mft in grouped.get("mft_sweep", [])[:1]:
        specs.append(FigureSpec("f1b", {"mft": mft}))
        if mft.has("flow_field.csv"):
            specs.append(FigureSpec("f3", {"mft": mft}))

    ed_runs = grouped.get("ed_report", [])
    if ed_runs:
        by_g = _ed_by_drive(ed_runs)
        inputs = {f"ed_{g:g}": run for g, run in sorted(by_g.items())}
        specs.append(FigureSpec("f2", inputs, scales={"b": "log-log", "d": "linear"}))
        specs.append(FigureSpec("f4", inputs, scales={"b": "log-log", "c": "semi-log"}))
        wigner_runs = {
            name: run for name, run in inputs.items() if run.has("wigner_sigma0.csv")
        }
        above = {n: r for n, r in wigner_runs.items()
                 if float(r.params.get("G", 0)) > float(r.params.get("gamma", 1))}
        if above:
            specs.append(FigureSpec("f5", dict(list(above.items())[:1])))

    spectra = grouped.get("spectra", [])
    if spectra:
        scalars = [r for r in spectra if r.has("scalars.csv")]
        curve = scalars[0] if scalars else spectra[0]
        specs.append(FigureSpec("f6", {"spectra": curve}))
        near = [
            r for r in spectra
            if abs(float(r.params.get("G", 0)) - float(r.params.get("gamma", 1))) <= 0.05
        ]
        if near:
            inputs = {f"spectra_{float(r.params['G']):g}": r for r in near[:2]}
            ed_crit = [
                r for r in grouped.get("ed_report", [])
                if abs(float(r.params.get("G", 0)) - 1.0) < 1e-9 and r.has("wigner_sigma0.csv")
            ]
            if ed_crit:
                inputs["ed_critical"] = ed_crit[0]
            specs.append(FigureSpec("f7", inputs))
    return specs


def _placeholder(ax, label: str) -> None:
    ax.text(0.5, 0.5, f"no data\n({label})", ha="center", va="center",
            transform=ax.transAxes, color="0.4")
    ax.set_xticks([])
    ax.set_yticks([])


def _render_f1b(spec: FigureSpec, fig) -> None:
    table = spec.inputs["mft"].table("data.csv")
    ax = fig.subplots()
    g = table.col("G")
    ax.plot(g, table.col("phi_mf"), "k-", label="mean field")
    for name in table.columns:
        if name.startswith("Un_ed_invU"):
            ax.plot(g, table.columns[name], "--", label=f"ED 1/U={name.removeprefix('Un_ed_invU')}")
    ax.set_xlabel("|G|")
    ax.set_ylabel("U n")
    ax.legend(loc="upper left")


def _render_f2(spec: FigureSpec, fig) -> None:
    axes = fig.subplots(2, 2).ravel()
    panels = [("ed_0.8", "linear"), ("ed_1", "log-log"), ("ed_1.2", "linear")]
    for ax, (key, scale) in zip(axes[:3], panels):
        run = spec.inputs.get(key)
        if run is None:
            _placeholder(ax, key)
            continue
        table = run.table("data.csv")
        u = 1.0 / table.col("inv_U")
        dev = np.abs(table.col("phi_ed") - table.col("phi_mf"))
        ax.plot(u, dev, "o-")
        if scale == "log-log":
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel("U")
        ax.set_ylabel("|phi_ED - phi_MF|")
        ax.set_title(f"G = {run.params.get('G')}", fontsize=9)
    run = spec.inputs.get("ed_1")
    if run is None:
        _placeholder(axes[3], "ed_1")
    else:
        table = run.table("data.csv")
        axes[3].plot(table.col("inv_U") ** (2.0 / 3.0), table.col("n_ed"), "s-")
        axes[3].set_xlabel("U^(-2/3)")
        axes[3].set_ylabel("n")
        axes[3].set_title("critical linearity", fontsize=9)


def _render_f3(spec: FigureSpec, fig) -> None:
    run = spec.inputs["mft"]
    flow = run.matrix("flow_field.csv")
    ax = fig.subplots()
    mesh = ax.pcolormesh(flow.cols, flow.rows, flow.values, shading="nearest",
                         cmap="RdBu_r", vmin=-np.max(np.abs(flow.values)),
                         vmax=np.max(np.abs(flow.values)))
    fig.colorbar(mesh, ax=ax, label="Re Gamma_+")
    report = run.report()
    for key, style in (("stabilized_line", "k--"), ("exceptional_line", "k:")):
        line = report.get(key)
        if isinstance(line, dict) and "G" in line and "phi" in line:
            ax.plot(line["phi"], line["G"], style, lw=1.2, label=key.replace("_", " "))
    ax.set_xlim(flow.cols[0], flow.cols[-1])
    ax.set_ylim(flow.rows[0], flow.rows[-1])
    ax.set_xlabel("phi")
    ax.set_ylabel("|G|")
    ax.legend(loc="upper right", fontsize=8)


def _render_f4(spec: FigureSpec, fig) -> None:
    axes = fig.subplots(2, 2).ravel()
    panels = [("ed_0.8", "linear"), ("ed_1", "log-log"), ("ed_1.2", "semi-log")]
    for ax, (key, scale) in zip(axes[:3], panels):
        run = spec.inputs.get(key)
        if run is None:
            _placeholder(ax, key)
            continue
        table = run.table("data.csv")
        inv_u = table.col("inv_U")
        k = 1
        while f"re_lambda_{k}" in table.columns:
            lam = np.abs(table.columns[f"re_lambda_{k}"])
            ax.plot(inv_u, lam, "o-", ms=3, label=f"|Re lambda_{k}|")
            k += 1
        if scale == "log-log":
            ax.set_xscale("log")
            ax.set_yscale("log")
        elif scale == "semi-log":
            ax.set_yscale("log")
        ax.set_xlabel("1/U")
        ax.set_title(f"G = {run.params.get('G')}", fontsize=9)
        if key == "ed_0.8":
            ax.legend(fontsize=6)
    run = spec.inputs.get("ed_1")
    if run is None:
        _placeholder(axes[3], "ed_1")
    else:
        table = run.table("data.csv")
        u = 1.0 / table.col("inv_U")
        axes[3].loglog(u, table.col("gap"), "s-")
        fit = run.report().get("gap_fit")
        if fit:
            axes[3].set_title(f"gap ~ U^{fit['exponent']:.3f}", fontsize=9)
        axes[3].set_xlabel("U")
        axes[3].set_ylabel("gap")


def _render_f5(spec: FigureSpec, fig) -> None:
    (name, run), = spec.inputs.items()
    axes = fig.subplots(1, 2)
    for ax, which in zip(axes, ("sigma0", "sigma1")):
        w = run.matrix(f"wigner_{which}.csv")
        extreme = np.max(np.abs(w.values))
        cmap = "viridis" if which == "sigma0" else "RdBu_r"
        vmin = 0.0 if which == "sigma0" else -extreme
        mesh = ax.pcolormesh(w.cols, w.rows, w.values, shading="nearest", cmap=cmap,
                             vmin=vmin if which == "sigma1" else None,
                             vmax=extreme if which == "sigma1" else None)
        fig.colorbar(mesh, ax=ax, shrink=0.8)
        ax.set_xlabel("x")
        ax.set_ylabel("p")
        ax.set_title(f"W[{which}], {name}", fontsize=9)
        ax.set_aspect("equal")


def _render_f6(spec: FigureSpec, fig) -> None:
    run = spec.inputs["spectra"]
    axes = fig.subplots(2, 2).ravel()
    if run.has("scalars.csv"):
        scalars = run.table("scalars.csv")
        axes[0].plot(scalars.col("G"), scalars.col("fwhm"), "o-")
        axes[0].set_xlabel("|G|")
        axes[0].set_ylabel("FWHM")
        axes[2].plot(scalars.col("G"), scalars.col("peak"), "o-")
        axes[2].set_xlabel("|G|")
        axes[2].set_ylabel("peak of A")
    else:
        _placeholder(axes[0], "scalars.csv")
        _placeholder(axes[2], "scalars.csv")
    curve = run.table("data.csv")
    axes[1].plot(curve.col("omega"), curve.col("A"))
    axes[1].set_xlabel("omega")
    axes[1].set_ylabel("A(omega)")
    axes[1].set_title(f"G = {run.params.get('G')}", fontsize=9)
    axes[3].plot(curve.col("omega"), curve.col("S_inel"))
    axes[3].set_xlabel("omega")
    axes[3].set_ylabel("S_inel(omega)")


def _render_f7(spec: FigureSpec, fig) -> None:
    axes = fig.subplots(1, 2)
    drawn = False
    for name, run in sorted(spec.inputs.items()):
        if not name.startswith("spectra_"):
            continue
        curve = run.table("data.csv")
        label = f"G = {run.params.get('G')}"
        axes[0].plot(curve.col("omega"), curve.col("A"), label=label)
        report = run.report()
        delta = report.get("delta")
        if delta:
            axes[0].axvline(delta["location"], color="k", ls=":", lw=1)
            axes[0].annotate(
                f"delta weight {delta['weight']:g}",
                (delta["location"], 0.0), textcoords="offset points", xytext=(4, 4),
                fontsize=7,
            )
        drawn = True
    if not drawn:
        _placeholder(axes[0], "near-critical spectra")
    else:
        axes[0].set_xlabel("omega")
        axes[0].set_ylabel("A(omega)")
        axes[0].legend(fontsize=7)
    run = spec.inputs.get("ed_critical")
    if run is None:
        _placeholder(axes[1], "critical Wigner")
    else:
        w = run.matrix("wigner_sigma0.csv")
        mesh = axes[1].pcolormesh(w.cols, w.rows, w.values, shading="nearest",
                                  cmap="viridis")
        fig.colorbar(mesh, ax=axes[1], shrink=0.8)
        axes[1].set_xlabel("x")
        axes[1].set_ylabel("p")
        axes[1].set_aspect("equal")
        axes[1].set_title("W[sigma0] at G = 1", fontsize=9)


_RENDERERS = {
    "f1b": _render_f1b,
    "f2": _render_f2,
    "f3": _render_f3,
    "f4": _render_f4,
    "f5": _render_f5,
    "f6": _render_f6,
    "f7": _render_f7,
}

_SIZES = {
    "f1b": (5.0, 3.4),
    "f2": (7.0, 5.4),
    "f3": (5.4, 4.2),
    "f4": (7.0, 5.4),
    "f5": (7.4, 3.4),
    "f6": (7.0, 5.4),
    "f7": (7.4, 3.4),
}


def render(spec: FigureSpec, out_dir: Path, formats: tuple[str, ...] = ("png", "svg")) -> list[Path]:
    """Render one figure bundle; returns the written image paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    fig = plt.figure(figsize=_SIZES[spec.figure_id])
    try:
        _RENDERERS[spec.figure_id](spec, fig)
        fig.suptitle(spec.figure_id, fontsize=10)
        fig.tight_layout()
        written = []
        meta_desc = f"sources: {spec.digests}"
        for fmt in formats:
            path = out_dir / f"{spec.figure_id}.{fmt}"
            if fmt == "svg":
                fig.savefig(path, format="svg",
                            metadata={"Date": None, "Description": meta_desc})
            else:
                fig.savefig(path, format=fmt, metadata={"Description": meta_desc})
            written.append(path)
        return written
    finally:
        plt.close(fig)


def render_all(
    run_root: Path, out_dir: Path | None = None, formats: tuple[str, ...] = ("png", "svg")
) -> dict[str, dict]:
    """Render every figure recognizable from the runs under run_root and
    write an index page; partial failures are reported, not fatal."""
    run_root = Path(run_root)
    out_dir = Path(out_dir) if out_dir is not None else run_root / "figures"
    runs = discover_runs(run_root)
    specs = build_specs(runs)
    status: dict[str, dict] = {}
    for spec in sorted(specs, key=lambda s: s.figure_id):
        entry: dict = {"inputs": {n: str(r.path) for n, r in spec.inputs.items()},
                       "digests": spec.digests}
        try:
            paths = render(spec, out_dir, formats)
            entry["status"] = "ok"
            entry["images"] = [p.name for p in paths]
        except SchemaError as exc:
            entry["status"] = "schema-error"
            entry["error"] = str(exc)
        except Exception as exc:  # pragma: no cover - defensive
            entry["status"] = "error"
            entry["error"] = f"{type(exc).__name__}: {exc}"
        status[spec.figure_id] = entry
    _write_index(out_dir, status)
    return status


def _write_index(out_dir: Path, status: dict[str, dict]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for fid in sorted(status):
        entry = status[fid]
        images = " ".join(
            f'<a href="{html.escape(name)}">{html.escape(name)}</a>'
            for name in entry.get("images", [])
        )
        rows.append(
            "<tr>"
            f"<td>{fid}</td><td>{html.escape(entry['status'])}</td><td>{images}</td>"
            f"<td><code>{html.escape(entry.get('digests', ''))}</code></td>"
            f"<td>{html.escape(entry.get('error', ''))}</td>"
            "</tr>"
        )
    page = (
        "<!DOCTYPE html>\n<html><head><meta charset='utf-8'>"
        "<title>plotkit figures</title></head><body>\n"
        "<h1>Figure bundles</h1>\n"
        "<table border='1' cellpadding='4'>\n"
        "<tr><th>figure</th><th>status</th><th>images</th>"
        "<th>source digests</th><th>error</th></tr>\n"
        + "\n".join(rows)
        + "\n</table></body></html>\n"
    )
    (out_dir / "index.html").write_text(page)
