"""Figure construction: parameter-convergence curves and the L1 value-error curve.

Output is deterministic for a fixed spec: fixed figure geometry, no
timestamps in metadata, and a fixed SVG hash salt.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import load_params, load_value_error

__all__ = ["PlotSpec", "build_figures", "render"]

matplotlib.rcParams["svg.hashsalt"] = "mfcq-plots"

_GROUP_LABELS = {"theta": r"$\theta$", "psi": r"$\psi$", "phi": r"$\phi$"}
_REFERENCE_KEYS = {"theta": "theta_star", "psi": "psi_star", "phi": "phi_star"}


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input CSVs, optional reference values, output formats."""

    params_csv: Optional[str] = None
    value_error_csv: Optional[str] = None
    reference_json: Optional[str] = None
    formats: Tuple[str, ...] = ("png", "svg")
    title_prefix: str = ""

    @staticmethod
    def from_file(path) -> "PlotSpec":
        data = json.loads(Path(path).read_text())
        return PlotSpec(
            params_csv=data.get("params_csv"),
            value_error_csv=data.get("value_error_csv"),
            reference_json=data.get("reference_json"),
            formats=tuple(data.get("formats", ["png", "svg"])),
            title_prefix=data.get("title_prefix", ""),
        )


def _load_reference(spec: PlotSpec) -> Dict[str, List[float]]:
    if spec.reference_json is None:
        return {}
    return json.loads(Path(spec.reference_json).read_text())


def _param_figure(name: str, n, values, reference, title_prefix: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=110)
    label = _GROUP_LABELS.get(name, name)
    for i in range(values.shape[1]):
        ax.plot(n, values[:, i], lw=1.2, label=f"{label}$_{{{i + 1}}}$")
    if reference is not None:
        for i, ref in enumerate(reference[: values.shape[1]]):
            ax.axhline(ref, ls="--", lw=0.8, color=f"C{i}", alpha=0.7)
    ax.set_xlabel("episode")
    ax.set_ylabel(label)
    ax.set_title(f"{title_prefix}convergence of {label}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return fig


def _error_figure(table, title_prefix: str):
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=110)
    ax.errorbar(table.n, table.l1_error, yerr=table.stderr, lw=1.2, capsize=2.0)
    ax.set_xlabel("episode")
    ax.set_ylabel(r"$L^1$ error")
    ax.set_yscale("log")
    ax.set_title(f"{title_prefix}value-function error")
    fig.tight_layout()
    return fig


def build_figures(spec: PlotSpec) -> List[Tuple[str, "matplotlib.figure.Figure"]]:
    """One figure per parameter group plus the error curve, unsaved."""
    figures: List[Tuple[str, matplotlib.figure.Figure]] = []
    reference = _load_reference(spec)
    if spec.params_csv is not None:
        table = load_params(spec.params_csv)
        for group in ("theta", "psi", "phi"):
            if group not in table.groups:
                continue
            ref = reference.get(_REFERENCE_KEYS[group])
            figures.append((group, _param_figure(group, table.n, table.groups[group],
                                                 ref, spec.title_prefix)))
    if spec.value_error_csv is not None:
        table = load_value_error(spec.value_error_csv)
        if table is None:
            warnings.warn("value_error.csv has no rows; skipping the error figure")
        else:
            figures.append(("l1_error", _error_figure(table, spec.title_prefix)))
    return figures


def render(spec: PlotSpec, out_dir) -> List[Path]:
    """Write every figure in every requested format; returns the file list."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for name, fig in build_figures(spec):
        for fmt in spec.formats:
            path = out / f"{name}.{fmt}"
            metadata = {"Date": None} if fmt == "svg" else {}
            fig.savefig(path, format=fmt, metadata=metadata)
            written.append(path)
        plt.close(fig)
    return written
