"""Figure rendering from simulation output files.

The functions return a small summary dict (curve counts, marker counts)
so callers and tests can confirm the rendered content matches the input
file without parsing the image back.
"""

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import read_kernel, read_scan_csv

# Stable ids/hashes inside SVG output so re-runs are byte-identical.
matplotlib.rcParams["svg.hashsalt"] = "oam-figures"


@dataclass
class FigureSpec:
    """Layout choices for a scan figure."""

    input_path: str
    output_path: str
    group_column: str = "l"
    x_column: str = "zs_ratio"
    y_column: str = None          # auto: abs_chi_tilde for m=0, else abs_chi_over_s
    xlabel: str = r"$z_S / z_R$"
    ylabel: str = None
    title: str = None


def _save(fig, path):
    # Drop embedded creation dates so identical inputs give identical bytes.
    fig.savefig(path, metadata={"Date": None} if path.endswith(".svg") else None)
    plt.close(fig)


def plot_chi_scan(spec):
    """Render one curve per mode index from an overlap-scan CSV.

    For conversion scans (m != 0) the per-curve maxima flagged in the CSV's
    ``is_peak`` column are marked. Empty data produces an empty axes and is
    not an error.
    """
    table = read_scan_csv(spec.input_path)
    if spec.group_column not in table.columns and table.n_rows:
        from .io import SchemaError
        raise SchemaError(f"{spec.input_path}: no column {spec.group_column!r}")

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    curves = 0
    markers = 0
    y_column = spec.y_column
    if y_column is None and table.n_rows:
        all_storage = bool(np.all(table.columns["m"] == 0))
        y_column = "abs_chi_tilde" if all_storage else "abs_chi_over_s"

    for g in table.group_values(spec.group_column):
        sub = table.rows_where(spec.group_column, g)
        ax.plot(sub[spec.x_column], sub[y_column],
                label=f"{spec.group_column} = {g}")
        curves += 1
        if np.any(sub["m"] != 0):
            peak = sub["is_peak"] == 1
            if np.any(peak):
                ax.plot(sub[spec.x_column][peak], sub[y_column][peak],
                        "o", color=ax.lines[-1].get_color())
                markers += int(np.count_nonzero(peak))

    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel or (y_column or "overlap"))
    if spec.title:
        ax.set_title(spec.title)
    if curves:
        ax.legend(loc="best", fontsize="small")
    _save(fig, spec.output_path)
    return {"curves": curves, "markers": markers, "rows": table.n_rows,
            "y_column": y_column}


def plot_kernel(path_base, output_path, overlay_leading=True):
    """Render |K(t, t')| as a heatmap from a binary kernel dump.

    With ``overlay_leading`` the leading left singular vector of the loaded
    matrix is drawn on a secondary axis to expose the low-rank structure.
    """
    data = read_kernel(path_base)
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    mesh = ax.pcolormesh(data.axis2, data.axis1, np.abs(data.values),
                         shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=r"$|K(\tilde t, \tilde t\,')|$")
    ax.set_xlabel(r"$\tilde t\,'$")
    ax.set_ylabel(r"$\tilde t$")

    sigma1 = None
    if overlay_leading and data.values.size:
        u, s, _ = np.linalg.svd(data.values)
        sigma1 = float(s[0])
        mode = np.abs(u[:, 0])
        twin = ax.twiny()
        twin.plot(mode, data.axis1, color="white", lw=1.2)
        twin.set_xticks([])
        twin.set_xlim(0.0, 4.0 * max(mode.max(), 1e-30))

    label = ", ".join(f"{k} = {data.meta[k]}" for k in ("r", "L_tilde", "T_W")
                      if k in data.meta)
    if label:
        ax.set_title(label, fontsize="small")
    _save(fig, output_path)
    return {"shape": list(data.values.shape), "sigma1": sigma1}
