"""Generators for the rasterized test-domain families.

All generators return GridDomain values with origin 0.  The pathological
families (dumbbells, filaments, necks) are the shapes that exercise the
surgery and pipeline machinery; blobs give generic star-shaped domains.
"""

from __future__ import annotations

import numpy as np

from .grid import GridDomain

__all__ = [
    "block",
    "node_square",
    "disk",
    "two_blocks",
    "dumbbell",
    "filament_domain",
    "plus_domain",
    "l_shape",
    "random_blob",
    "standard_corpus",
]


def block(shape, h: float = 1.0) -> GridDomain:
    """Full rectangular block of cells, e.g. block((64, 64), 1/64)."""
    return GridDomain.from_mask(np.ones(tuple(int(s) for s in shape), dtype=bool), h)


def node_square(n: int) -> GridDomain:
    """Interior-node rasterization of the open unit square at spacing 1/n.

    (n-1)x(n-1) cells at h = 1/n: the stencil's implied Dirichlet boundary
    (first exterior cell centers) is exactly the unit square, so discrete
    eigenvalues converge to pi^2 (p^2 + q^2) without a boundary-offset bias.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    return block((n - 1, n - 1), 1.0 / n)


def disk(radius_cells: float, h: float = 1.0, n_dim: int = 2) -> GridDomain:
    """Ball raster: cells whose centers lie within the given radius (in cells)."""
    r = float(radius_cells)
    n = int(np.ceil(2 * r)) + 3
    c = (n - 1) / 2.0
    axes = np.indices((n,) * n_dim)
    dist2 = sum((ax - c) ** 2 for ax in axes)
    return GridDomain.from_mask(dist2 <= r * r, h)


def two_blocks(shape, gap_cells: int, h: float = 1.0) -> GridDomain:
    """Two equal blocks separated along axis 1 by a gap of empty columns."""
    nx, ny = int(shape[0]), int(shape[1])
    g = int(gap_cells)
    mask = np.zeros((2 * nx + g, ny), dtype=bool)
    mask[:nx] = True
    mask[nx + g:] = True
    return GridDomain.from_mask(mask, h)


def dumbbell(lobe: int, neck_len: int, neck_w: int, h: float = 1.0) -> GridDomain:
    """Two square lobes joined by a thin centered neck along axis 1."""
    lobe, neck_len, neck_w = int(lobe), int(neck_len), int(neck_w)
    ny = lobe
    nx = 2 * lobe + neck_len
    mask = np.zeros((nx, ny), dtype=bool)
    mask[:lobe] = True
    mask[lobe + neck_len:] = True
    y0 = (ny - neck_w) // 2
    mask[lobe:lobe + neck_len, y0:y0 + neck_w] = True
    return GridDomain.from_mask(mask, h)


def filament_domain(side: int, fil_len: int, fil_w: int, h: float = 1.0) -> GridDomain:
    """Square with a long thin filament extending to the left (the low-mass tail)."""
    side, fil_len, fil_w = int(side), int(fil_len), int(fil_w)
    mask = np.zeros((fil_len + side, side), dtype=bool)
    mask[fil_len:] = True
    y0 = (side - fil_w) // 2
    mask[:fil_len, y0:y0 + fil_w] = True
    return GridDomain.from_mask(mask, h)


def plus_domain(core: int, arm_len: int, arm_w: int, h: float = 1.0) -> GridDomain:
    """Plus sign: a core square with four thin arms."""
    core, arm_len, arm_w = int(core), int(arm_len), int(arm_w)
    n = core + 2 * arm_len
    mask = np.zeros((n, n), dtype=bool)
    a = arm_len
    mask[a:a + core, a:a + core] = True
    c0 = a + (core - arm_w) // 2
    mask[:, c0:c0 + arm_w] = True
    mask[c0:c0 + arm_w, :] = True
    return GridDomain.from_mask(mask, h)


def l_shape(n: int, h: float = 1.0) -> GridDomain:
    """L-shaped domain: a 2n x 2n square with one n x n quadrant removed."""
    n = int(n)
    mask = np.ones((2 * n, 2 * n), dtype=bool)
    mask[n:, n:] = False
    return GridDomain.from_mask(mask, h)


def random_blob(rng: np.random.Generator, base_radius: float, roughness: float = 0.25,
                modes: int = 5, h: float = 1.0) -> GridDomain:
    """Star-shaped blob: radius modulated by a random low-order Fourier series."""
    r0 = float(base_radius)
    amps = roughness * r0 * rng.uniform(0.2, 1.0, size=modes) / np.arange(1, modes + 1)
    phases = rng.uniform(0, 2 * np.pi, size=modes)
    n = int(np.ceil(2 * r0 * (1 + roughness))) + 5
    c = (n - 1) / 2.0
    X, Y = np.indices((n, n))
    theta = np.arctan2(Y - c, X - c)
    radius = r0 + sum(a * np.cos((j + 1) * theta + p)
                      for j, (a, p) in enumerate(zip(amps, phases)))
    dist = np.hypot(X - c, Y - c)
    return GridDomain.from_mask(dist <= radius, h)


def standard_corpus(seed: int, blobs: int = 8) -> list[tuple[str, GridDomain]]:
    """Named mix of the generator families, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    out = [
        ("square_48", block((48, 48), 1.0)),
        ("rect_96x24", block((96, 24), 1.0)),
        ("disk_32", disk(32)),
        ("two_blocks_32_gap12", two_blocks((32, 32), 12)),
        ("dumbbell_36_18_3", dumbbell(36, 18, 3)),
        ("filament_44_160_2", filament_domain(44, 160, 2)),
        ("plus_30_40_4", plus_domain(30, 40, 4)),
        ("l_shape_28", l_shape(28)),
    ]
    for i in range(blobs):
        out.append((f"blob_{i:02d}", random_blob(rng, rng.uniform(18, 30))))
    return out
