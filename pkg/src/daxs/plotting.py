"""Matplotlib rendering of spectral maps, fit overlays and comparison charts.

All functions render to files or byte buffers with the Agg backend; nothing
here opens a window.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .image import SpectralImage  # noqa: E402


def _extent(img: SpectralImage) -> tuple[float, float, float, float]:
    x, y = img.x_axis, img.y_axis
    return (x.start - x.step / 2, x.start + x.step * (x.count - 0.5),
            y.start - y.step / 2, y.start + y.step * (y.count - 0.5))


def _axis_label(axis) -> str:
    return f"{axis.name} ({axis.unit})"


def heatmap_figure(img: SpectralImage, title: str | None = None,
                   overlays: list[dict] | None = None):
    """Figure with the image as a heatmap and optional polyline overlays.

    Each overlay is {"x": array, "y": array, "label": str (optional)}.
    """
    fig, ax = plt.subplots(figsize=(7, 5), constrained_layout=True)
    data = np.where(img.valid_mask(), img.data, np.nan)
    im = ax.imshow(data, origin="lower", aspect="auto", extent=_extent(img),
                   cmap="viridis", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="intensity")
    ax.set_xlabel(_axis_label(img.x_axis))
    ax.set_ylabel(_axis_label(img.y_axis))
    if title:
        ax.set_title(title)
    if overlays:
        for ov in overlays:
            ax.plot(ov["x"], ov["y"], lw=1.2, label=ov.get("label"))
        if any(ov.get("label") for ov in overlays):
            ax.legend(loc="upper right", fontsize=7, ncol=2)
        ax.set_xlim(_extent(img)[:2])
        ax.set_ylim(_extent(img)[2:])
    return fig


def save_heatmap(img: SpectralImage, path, title: str | None = None,
                 overlays: list[dict] | None = None, dpi: int = 150) -> None:
    fig = heatmap_figure(img, title=title, overlays=overlays)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def heatmap_png_bytes(img: SpectralImage, title: str | None = None,
                      dpi: int = 150) -> bytes:
    fig = heatmap_figure(img, title=title)
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=dpi)
    plt.close(fig)
    return buf.getvalue()


def raster_png_bytes(img: SpectralImage) -> bytes:
    """Bare colormapped raster, one PNG pixel per data pixel, no decorations.

    Row 0 of the data is the bottom PNG row, so a client drawing the PNG
    top-down must flip its y mapping. Intended for UIs that overlay data
    coordinates on the image.
    """
    buf = io.BytesIO()
    plt.imsave(buf, img.data, format="png", cmap="viridis", origin="lower")
    return buf.getvalue()


def save_sign_compare_chart(percent_diff: dict[str, float], path,
                            dpi: int = 150) -> None:
    """Bar chart of per-coupling percent differences between sign classes."""
    fig, ax = plt.subplots(figsize=(5, 3.5), constrained_layout=True)
    names = list(percent_diff)
    ax.bar(names, [percent_diff[n] for n in names], color="tab:blue")
    ax.set_ylabel("sign-class difference (%)")
    ax.set_xlabel("tunnel coupling")
    ax.axhline(5.0, color="gray", lw=0.8, ls="--")
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
