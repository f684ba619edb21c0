"""Figure rendering for the report path.

Renders PNGs alongside the delimited output: a residual overview across
cases, flow convergence curves, and constructed profile curves.  The CSV
and JSON files remain the canonical, byte-deterministic record; figures
are a convenience layer.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .suite import Report  # noqa: E402

RESIDUAL_KEYS = (
    "max_norm_G", "max_vertical", "max_compatibility", "max_torsion",
    "max_residual", "max_coarse_residual", "max_identity_gap",
    "max_relative_gap", "max_final_residual", "max_condition",
    "ode_residual", "integral",
)


def _first_residual(metrics: dict) -> float | None:
    for key in RESIDUAL_KEYS:
        if key in metrics and isinstance(metrics[key], (int, float)):
            return abs(float(metrics[key]))
    return None


def render_report_figures(report: Report, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    labels, values, colors = [], [], []
    for c in report.cases:
        r = _first_residual(c.metrics)
        if r is None:
            continue
        labels.append(c.case_id)
        values.append(max(r, 1e-18))
        colors.append("#2a7e43" if c.passed else "#b03030")
    if labels:
        fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(labels)), 4.2))
        ax.bar(range(len(labels)), values, color=colors)
        ax.set_yscale("log")
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel("worst residual")
        ax.set_title(f"suite residuals (seed {report.seed})")
        ax.grid(axis="y", alpha=0.3)
        fig.tight_layout()
        path = out_dir / "residuals.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)

    for c in report.cases:
        if "history" in c.artifacts:
            fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
            for name, energies, residuals in c.artifacts["history"]:
                ax1.plot(energies, label=name, lw=1)
                ax2.semilogy([max(r, 1e-18) for r in residuals], label=name, lw=1)
            ax1.set_xlabel("iteration")
            ax1.set_ylabel("energy")
            ax2.set_xlabel("iteration")
            ax2.set_ylabel("unit-section residual")
            ax2.legend(fontsize=7)
            fig.suptitle(c.case_id)
            fig.tight_layout()
            path = out_dir / f"{c.case_id}_flow.png"
            fig.savefig(path, dpi=130)
            plt.close(fig)
            written.append(path)
        if "profile_table" in c.artifacts:
            table = c.artifacts["profile_table"]
            fig, ax = plt.subplots(figsize=(5.2, 3.6))
            ts = [row[0] for row in table]
            ax.plot(ts, [row[1] for row in table], label="B(t)")
            ax.plot(ts, [row[2] for row in table], label="B'(t)", ls="--")
            ax.axhline(0.0, color="k", lw=0.5)
            ax.set_xlabel("t")
            ax.legend()
            ax.set_title(c.case_id)
            fig.tight_layout()
            path = out_dir / f"{c.case_id}_profile.png"
            fig.savefig(path, dpi=130)
            plt.close(fig)
            written.append(path)

    return written
