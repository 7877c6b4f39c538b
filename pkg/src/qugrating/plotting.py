"""Figure rendering for swept spectra, written straight to image files."""
from __future__ import annotations

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .sweep import SpectrumGrid

_CONTROL_LABELS = {
    "power-dbm": "Control power (dBm)",
    "rabi-mhz": "Control Rabi frequency (MHz)",
}


def save_grid_figure(grid: SpectrumGrid, path, dpi: int = 150) -> None:
    """Render a grid as a colormap (or a line plot for a single row)."""
    fig = Figure(figsize=(7.0, 5.0))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    backend = grid.meta.get("backend", "?")
    scheme = grid.meta.get("scheme", "?")
    if grid.control.size == 1:
        ax.plot(grid.delta_mhz, grid.values[0], lw=1.2)
        ax.set_ylabel("Normalized signal")
        ax.set_title(f"{backend} / {scheme}, control = {grid.control[0]:g}")
        ax.grid(True, alpha=0.3)
    else:
        mesh = ax.pcolormesh(
            grid.delta_mhz, grid.control, grid.values, shading="nearest", cmap="viridis"
        )
        fig.colorbar(mesh, ax=ax, label="Normalized signal")
        ax.set_ylabel(_CONTROL_LABELS.get(grid.control_kind, grid.control_kind))
        ax.set_title(f"{backend} / {scheme}")
    ax.set_xlabel("Probe detuning (MHz)")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
