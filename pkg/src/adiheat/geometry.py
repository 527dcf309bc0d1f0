"""Stepped multilayer cylinder and its shifted (cell-centred) grid.

The domain is an L-shaped slice through the axis: the core (layer 0)
extends over ``0 <= z < core_length``, the outer layers only over
``0 <= z < outer_length``.  Unknowns sit at cell centres, so every
layer interface falls on a cell face.

Arrays over the grid use the layout ``(nz, nr)``: row ``j`` is a radial
line, column ``i`` an axial line.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Invalid domain or grid description."""


@dataclass(frozen=True)
class DomainSpec:
    layer_radii: tuple[float, ...]
    core_length: float
    outer_length: float
    layer_materials: tuple[str, ...]
    source_layer: int

    def __post_init__(self):
        radii = tuple(float(r) for r in self.layer_radii)
        object.__setattr__(self, "layer_radii", radii)
        object.__setattr__(self, "layer_materials", tuple(self.layer_materials))
        if len(radii) < 1:
            raise GridError("layer_radii must not be empty")
        if radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise GridError(f"layer_radii must be positive and strictly increasing, got {radii}")
        if not (0 < self.outer_length <= self.core_length):
            raise GridError(
                f"need 0 < outer_length <= core_length, got {self.outer_length}, {self.core_length}"
            )
        if len(self.layer_materials) != len(radii):
            raise GridError(
                f"{len(self.layer_materials)} layer materials given for {len(radii)} layers"
            )
        if not 0 <= self.source_layer < len(radii):
            raise GridError(f"source_layer {self.source_layer} does not index a layer")

    @property
    def n_layers(self) -> int:
        return len(self.layer_radii)

    @property
    def r_max(self) -> float:
        return self.layer_radii[-1]

    def layer_bounds(self, m: int) -> tuple[float, float]:
        lo = 0.0 if m == 0 else self.layer_radii[m - 1]
        return lo, self.layer_radii[m]


@dataclass(frozen=True)
class GridSpec:
    radial_divisions: tuple[int, ...]
    axial_divisions_core: int
    axial_divisions_outer: int

    def __post_init__(self):
        object.__setattr__(self, "radial_divisions", tuple(int(n) for n in self.radial_divisions))
        counts = (*self.radial_divisions, self.axial_divisions_core, self.axial_divisions_outer)
        if any(n < 1 for n in counts):
            raise GridError(f"all division counts must be >= 1, got {counts}")


@dataclass(frozen=True, eq=False)
class Grid:
    """Shifted grid plus the metric arrays used by the flux operators.

    ``h``/``eta`` are the cell widths.  ``dr``/``dz`` (length n+1) are the
    distances between consecutive centres, with mirror ghosts beyond both
    ends, so ``dr[k] = r_k - r_{k-1}``.  ``hbar``/``etabar`` are the
    control-volume extents ``(dr[k] + dr[k+1]) / 2`` and ``r_half[k]`` is
    ``r_{k-1/2}``, which is exactly 0 on the axis and ``r_max`` at the
    outer surface.
    """

    domain: DomainSpec
    spec: GridSpec
    r_centers: np.ndarray
    h: np.ndarray
    z_centers: np.ndarray
    eta: np.ndarray
    dr: np.ndarray
    dz: np.ndarray
    hbar: np.ndarray
    etabar: np.ndarray
    r_half: np.ndarray
    z_half: np.ndarray
    layer_of_col: np.ndarray
    nr_core: int
    nz_outer: int
    mask: np.ndarray = field(repr=False)
    layer_of: np.ndarray = field(repr=False)
    row_length: np.ndarray = field(repr=False)
    col_length: np.ndarray = field(repr=False)

    @property
    def nr(self) -> int:
        return self.r_centers.size

    @property
    def nz(self) -> int:
        return self.z_centers.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nz, self.nr)

    def volume_weights(self) -> np.ndarray:
        """``r_i * hbar_i * etabar_j`` on masked cells, zero elsewhere."""
        w = np.outer(self.etabar, self.r_centers * self.hbar)
        return np.where(self.mask, w, 0.0)


def _mirror_spacings(centers: np.ndarray, lo: float, hi: float) -> np.ndarray:
    ghost_lo = 2.0 * lo - centers[0]
    ghost_hi = 2.0 * hi - centers[-1]
    ext = np.concatenate(([ghost_lo], centers, [ghost_hi]))
    return np.diff(ext)


def _layered_cells(bounds: list[tuple[float, float]], counts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    centers, widths, owner = [], [], []
    for m, ((lo, hi), n) in enumerate(zip(bounds, counts)):
        w = (hi - lo) / n
        k = np.arange(n)
        c = lo + (k + 0.5) * w
        widths.append(np.full(n, w))
        centers.append(c)
        owner.append(np.full(n, m, dtype=np.int32))
    return np.concatenate(centers), np.concatenate(widths), np.concatenate(owner)


def build_grid(domain: DomainSpec, spec: GridSpec) -> Grid:
    if len(spec.radial_divisions) != domain.n_layers:
        raise GridError(
            f"{len(spec.radial_divisions)} radial division counts for {domain.n_layers} layers"
        )
    n_ext = spec.axial_divisions_core - spec.axial_divisions_outer
    extended = domain.core_length > domain.outer_length
    if extended and n_ext < 1:
        raise GridError("axial_divisions_core must exceed axial_divisions_outer when core_length > outer_length")
    if not extended and n_ext != 0:
        raise GridError("axial_divisions_core must equal axial_divisions_outer when core_length == outer_length")

    r_bounds = [domain.layer_bounds(m) for m in range(domain.n_layers)]
    r, h, layer_of_col = _layered_cells(r_bounds, spec.radial_divisions)

    z_bounds = [(0.0, domain.outer_length)]
    z_counts = [spec.axial_divisions_outer]
    if extended:
        z_bounds.append((domain.outer_length, domain.core_length))
        z_counts.append(n_ext)
    z, eta, _ = _layered_cells(z_bounds, z_counts)

    dr = _mirror_spacings(r, 0.0, domain.r_max)
    dz = _mirror_spacings(z, 0.0, domain.core_length)
    hbar = 0.5 * (dr[:-1] + dr[1:])
    etabar = 0.5 * (dz[:-1] + dz[1:])
    r_ext = np.concatenate(([-r[0]], r, [2.0 * domain.r_max - r[-1]]))
    r_half = 0.5 * (r_ext[:-1] + r_ext[1:])
    r_half[0] = 0.0
    r_half[-1] = domain.r_max
    z_ext = np.concatenate(([-z[0]], z, [2.0 * domain.core_length - z[-1]]))
    z_half = 0.5 * (z_ext[:-1] + z_ext[1:])
    z_half[0] = 0.0
    z_half[-1] = domain.core_length

    nr_core = spec.radial_divisions[0]
    nz_outer = spec.axial_divisions_outer
    nr, nz = r.size, z.size
    mask = np.zeros((nz, nr), dtype=bool)
    mask[:, :nr_core] = True
    mask[:nz_outer, :] = True
    layer_of = np.where(mask, layer_of_col[None, :], -1).astype(np.int32)
    row_length = np.where(np.arange(nz) < nz_outer, nr, nr_core).astype(np.int32)
    col_length = np.where(np.arange(nr) < nr_core, nz, nz_outer).astype(np.int32)

    for arr in (r, h, z, eta, dr, dz, hbar, etabar, r_half, z_half, layer_of_col,
                mask, layer_of, row_length, col_length):
        arr.setflags(write=False)
    return Grid(
        domain=domain, spec=spec, r_centers=r, h=h, z_centers=z, eta=eta, dr=dr, dz=dz,
        hbar=hbar, etabar=etabar, r_half=r_half, z_half=z_half, layer_of_col=layer_of_col,
        nr_core=nr_core, nz_outer=nz_outer, mask=mask, layer_of=layer_of,
        row_length=row_length, col_length=col_length,
    )


def _check_cell(grid: Grid, i: int, j: int) -> None:
    if not (0 <= j < grid.nz and 0 <= i < grid.nr) or not grid.mask[j, i]:
        raise IndexError(f"cell (i={i}, j={j}) is outside the domain")


def cell_metrics(grid: Grid, i: int, j: int) -> tuple[float, float, float, float, float]:
    """Return ``(r_i, hbar_i, etabar_j, r_{i-1/2}, r_{i+1/2})`` for a masked cell."""
    _check_cell(grid, i, j)
    return (
        float(grid.r_centers[i]),
        float(grid.hbar[i]),
        float(grid.etabar[j]),
        float(grid.r_half[i]),
        float(grid.r_half[i + 1]),
    )


def layer_index(grid: Grid, i: int, j: int) -> int:
    _check_cell(grid, i, j)
    return int(grid.layer_of_col[i])


def nearest_cell(grid: Grid, r: float, z: float) -> tuple[int, int]:
    """Masked cell whose centre is nearest to ``(r, z)``."""
    d = grid.domain
    inside_core = 0 <= r <= d.layer_radii[0] and 0 <= z <= d.core_length
    inside_outer = 0 <= r <= d.r_max and 0 <= z <= d.outer_length
    if not (inside_core or inside_outer):
        raise ValueError(f"point (r={r}, z={z}) is outside the domain")
    rr, zz = np.meshgrid(grid.r_centers, grid.z_centers)
    dist = np.where(grid.mask, (rr - r) ** 2 + (zz - z) ** 2, np.inf)
    j, i = np.unravel_index(np.argmin(dist), dist.shape)
    return int(i), int(j)
