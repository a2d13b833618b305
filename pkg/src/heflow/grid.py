"""Discretized base domains: flat torus and punctured square with exhaustion.

Geometry conventions (shared by the whole package):

* lattice index (i, j) maps to the point (i*spacing, j*spacing), axis 0 = x,
  axis 1 = y, z = x + i y;
* the metric is conformally flat, omega_g = lambda(x,y) * (i/2) dz dz~, so
  quadrature weights are lambda * spacing^2 and the Laplace-Beltrami
  operator is the 5-point stencil divided by lambda;
* first derivatives are centered differences, D_z = (Dx - i Dy)/2 and
  D_z~ = (Dx + i Dy)/2, second order on smooth fields.

All shifts use periodic rolls.  On bounded (Dirichlet) domains the wrapped
reads only ever land on pinned boundary values, which the flow keeps equal
to the (constant) background metric, so interior stencils stay consistent;
see flow.py.

GridDomain and ExhaustionSequence are immutable after construction and safe
for concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridDomain",
    "ExhaustionSequence",
    "build_flat_torus",
    "build_square",
    "build_punctured_square",
    "laplacian",
    "integrate",
    "dx",
    "dy",
    "dz",
    "dzbar",
]

MIN_POINTS = 8


@dataclass
class GridDomain:
    """A discretized base domain.

    interior and boundary masks are disjoint; their union is the active set
    over which fields live and integrals run.  quad_weights is zero outside
    the active set so integrate() is a plain weighted sum.
    """

    n: int
    side_length: float
    spacing: float
    periodic: bool
    conformal_factor: np.ndarray
    interior_mask: np.ndarray
    boundary_mask: np.ndarray
    quad_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n < MIN_POINTS:
            raise ValueError(f"need at least {MIN_POINTS} lattice points per side, got {self.n}")
        if self.side_length <= 0:
            raise ValueError("side_length must be positive")
        if np.any(self.interior_mask & self.boundary_mask):
            raise ValueError("interior and boundary masks must be disjoint")
        active = self.interior_mask | self.boundary_mask
        if np.any(self.conformal_factor[active] <= 0):
            raise ValueError("conformal factor must be positive on active nodes")
        w = self.conformal_factor * self.spacing**2
        self.quad_weights = np.where(active, w, 0.0)

    @property
    def active_mask(self) -> np.ndarray:
        return self.interior_mask | self.boundary_mask

    @property
    def volume(self) -> float:
        return float(self.quad_weights.sum())

    @property
    def lambda_min(self) -> float:
        return float(self.conformal_factor[self.active_mask].min())

    def coordinates(self):
        """Meshgrid (x, y) arrays of node positions."""
        axis = np.arange(self.n) * self.spacing
        return np.meshgrid(axis, axis, indexing="ij")

    def with_masks(self, interior, boundary) -> "GridDomain":
        """Same lattice and metric, different active region (exhaustion stages)."""
        return GridDomain(
            n=self.n,
            side_length=self.side_length,
            spacing=self.spacing,
            periodic=self.periodic,
            conformal_factor=self.conformal_factor,
            interior_mask=interior,
            boundary_mask=boundary,
        )


@dataclass
class ExhaustionSequence:
    """Nested subdomains M_j exhausting a punctured base as radii shrink.

    stages[j] is the GridDomain for mask j; active sets are strictly nested,
    active(j) contained in active(j') for j < j'.
    """

    base: GridDomain
    excision_center: tuple
    radii: tuple
    stages: tuple

    def __post_init__(self):
        prev = None
        for j, stage in enumerate(self.stages):
            act = stage.active_mask
            if prev is not None:
                if np.any(prev & ~act):
                    raise ValueError(f"exhaustion masks not nested at stage {j}")
                if not np.any(act & ~prev):
                    raise ValueError(f"stage {j} adds no nodes over stage {j - 1}")
            prev = act

    def __len__(self):
        return len(self.stages)

    def masks(self, j) -> GridDomain:
        return self.stages[j]


def build_flat_torus(n: int, side_length: float) -> GridDomain:
    """Doubly periodic flat lattice: lambda = 1, no boundary nodes."""
    shape = (n, n) if n >= 1 else (0, 0)
    return GridDomain(
        n=n,
        side_length=float(side_length),
        spacing=float(side_length) / n if n else 0.0,
        periodic=True,
        conformal_factor=np.ones(shape),
        interior_mask=np.ones(shape, dtype=bool),
        boundary_mask=np.zeros(shape, dtype=bool),
    )


def build_square(n: int, side_length: float) -> GridDomain:
    """Bounded square lattice; the outermost ring is Dirichlet boundary."""
    interior = np.zeros((n, n), dtype=bool)
    interior[1:-1, 1:-1] = True
    boundary = ~interior
    return GridDomain(
        n=n,
        side_length=float(side_length),
        spacing=float(side_length) / n,
        periodic=False,
        conformal_factor=np.ones((n, n)),
        interior_mask=interior,
        boundary_mask=boundary,
    )


def _adjacent_to(mask):
    out = np.zeros_like(mask)
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def build_punctured_square(n: int, side_length: float, radii) -> ExhaustionSequence:
    """Square with one excised disk per stage, shrinking down the radii list.

    Boundary nodes of each stage are exactly the active nodes adjacent to
    excised nodes, plus the outer rim of the square.
    """
    radii = tuple(float(r) for r in radii)
    if not radii:
        raise ValueError("need at least one excision radius")
    if any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ValueError(f"radii must be strictly decreasing, got {radii}")
    base = build_square(n, side_length)
    h = base.spacing
    if any(r >= side_length / 4 for r in radii):
        raise ValueError("excision radii must stay below side_length/4")
    if radii[-1] < 2 * h:
        raise ValueError(
            f"smallest radius {radii[-1]} under-resolves the lattice (needs >= {2 * h})"
        )
    if any(r1 - r2 < h for r1, r2 in zip(radii, radii[1:])):
        raise ValueError("consecutive radii must differ by at least one lattice ring")

    ci = cj = n // 2
    x, y = base.coordinates()
    dist = np.hypot(x - ci * h, y - cj * h)

    stages = []
    for r in radii:
        excised = dist < r
        active = base.active_mask & ~excised
        rim = base.boundary_mask & active
        near_hole = _adjacent_to(excised) & active
        boundary = rim | near_hole
        interior = active & ~boundary
        if not interior.any():
            raise ValueError(f"radius {r} leaves no interior nodes")
        stages.append(base.with_masks(interior, boundary))
    return ExhaustionSequence(
        base=base, excision_center=(ci, cj), radii=radii, stages=tuple(stages)
    )


def _roll(f, shift, axis):
    return np.roll(f, shift, axis=axis)


def dx(dom: GridDomain, f):
    """Centered x-derivative, second order."""
    return (_roll(f, -1, 0) - _roll(f, 1, 0)) / (2.0 * dom.spacing)


def dy(dom: GridDomain, f):
    """Centered y-derivative, second order."""
    return (_roll(f, -1, 1) - _roll(f, 1, 1)) / (2.0 * dom.spacing)


def dz(dom: GridDomain, f):
    """D_z = (Dx - i Dy)/2 on scalar or matrix fields."""
    return 0.5 * (dx(dom, f) - 1j * dy(dom, f))


def dzbar(dom: GridDomain, f):
    """D_z~ = (Dx + i Dy)/2 on scalar or matrix fields."""
    return 0.5 * (dx(dom, f) + 1j * dy(dom, f))


def laplacian(dom: GridDomain, f):
    """Laplace-Beltrami operator: 5-point stencil over the conformal factor.

    Valid at interior nodes only; the returned array is zeroed elsewhere.
    Acts entrywise on matrix fields.
    """
    stencil = (
        _roll(f, -1, 0) + _roll(f, 1, 0) + _roll(f, -1, 1) + _roll(f, 1, 1) - 4.0 * f
    ) / dom.spacing**2
    lam = dom.conformal_factor
    mask = dom.interior_mask
    if f.ndim > 2:
        lam = lam[(...,) + (None,) * (f.ndim - 2)]
        mask = mask[(...,) + (None,) * (f.ndim - 2)]
    return np.where(mask, stencil / lam, 0.0)


def integrate(dom: GridDomain, f):
    """Quadrature over active nodes: sum of f * quad_weights.

    Complex fields integrate to complex values; callers take .real where the
    integrand is known real.
    """
    return (f * dom.quad_weights).sum()
