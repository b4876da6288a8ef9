"""Uniform 2D Cartesian mesh with face connectivity and boundary classification.

Cells are axis-aligned rectangles indexed by (i, j) with 0 <= i < nx,
0 <= j < ny; the flat cell id is j*nx + i.  Faces are enumerated
deterministically: all vertical faces first (x = const, swept over
i = 0..nx, j = 0..ny-1), then all horizontal faces (j = 0..ny, i = 0..nx-1).
Interior face normals point in +x / +y from the inside cell to the outside
cell; boundary normals point out of the domain.
"""

from dataclasses import dataclass

import numpy as np

INTERIOR = 0
DIRICHLET = 1
NEUMANN = 2

SIDE_NONE = -1
SIDE_LEFT = 0
SIDE_RIGHT = 1
SIDE_BOTTOM = 2
SIDE_TOP = 3

_SIDE_NAMES = {"left": SIDE_LEFT, "right": SIDE_RIGHT,
               "bottom": SIDE_BOTTOM, "top": SIDE_TOP}


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Face:
    """Single face view, mainly for inspection and tests."""
    index: int
    kind: int
    side: int
    cell_in: int        # E- (always present)
    cell_out: int       # E+ (-1 on boundary faces)
    normal: np.ndarray  # unit, E- -> E+ (outward on boundary)
    length: float
    midpoint: np.ndarray
    axis: int           # 0: normal along x (vertical face), 1: along y


class CartesianMesh:
    """Structured nx-by-ny grid on origin + [0, extent_x] x [0, extent_y]."""

    def __init__(self, nx, ny, origin=(0.0, 0.0), extent=(1.0, 1.0)):
        nx, ny = int(nx), int(ny)
        if nx < 1 or ny < 1:
            raise MeshError(f"cell counts must be >= 1, got {nx}x{ny}")
        ex, ey = float(extent[0]), float(extent[1])
        if ex <= 0.0 or ey <= 0.0:
            raise MeshError(f"extent must be positive, got {extent}")
        self.nx, self.ny = nx, ny
        self.origin = np.array([float(origin[0]), float(origin[1])])
        self.extent = np.array([ex, ey])
        self.hx = ex / nx
        self.hy = ey / ny
        self.ncells = nx * ny
        self.cell_area = self.hx * self.hy
        self._build_faces()

    # -- construction -------------------------------------------------

    def _build_faces(self):
        nx, ny = self.nx, self.ny
        nvert = (nx + 1) * ny
        nhorz = nx * (ny + 1)
        nf = nvert + nhorz
        self.nfaces = nf

        cin = np.empty(nf, dtype=np.int64)
        cout = np.empty(nf, dtype=np.int64)
        normal = np.zeros((nf, 2))
        length = np.empty(nf)
        mid = np.empty((nf, 2))
        side = np.full(nf, SIDE_NONE, dtype=np.int8)
        axis = np.empty(nf, dtype=np.int8)

        x0, y0 = self.origin
        f = 0
        # vertical faces: between (i-1,j) and (i,j) at x = x0 + i*hx
        for j in range(ny):
            for i in range(nx + 1):
                axis[f] = 0
                length[f] = self.hy
                mid[f] = (x0 + i * self.hx, y0 + (j + 0.5) * self.hy)
                if i == 0:
                    cin[f] = self.cell_id(0, j)
                    cout[f] = -1
                    normal[f] = (-1.0, 0.0)
                    side[f] = SIDE_LEFT
                elif i == nx:
                    cin[f] = self.cell_id(nx - 1, j)
                    cout[f] = -1
                    normal[f] = (1.0, 0.0)
                    side[f] = SIDE_RIGHT
                else:
                    cin[f] = self.cell_id(i - 1, j)
                    cout[f] = self.cell_id(i, j)
                    normal[f] = (1.0, 0.0)
                f += 1
        # horizontal faces: between (i,j-1) and (i,j) at y = y0 + j*hy
        for j in range(ny + 1):
            for i in range(nx):
                axis[f] = 1
                length[f] = self.hx
                mid[f] = (x0 + (i + 0.5) * self.hx, y0 + j * self.hy)
                if j == 0:
                    cin[f] = self.cell_id(i, 0)
                    cout[f] = -1
                    normal[f] = (0.0, -1.0)
                    side[f] = SIDE_BOTTOM
                elif j == ny:
                    cin[f] = self.cell_id(i, ny - 1)
                    cout[f] = -1
                    normal[f] = (0.0, 1.0)
                    side[f] = SIDE_TOP
                else:
                    cin[f] = self.cell_id(i, j - 1)
                    cout[f] = self.cell_id(i, j)
                    normal[f] = (0.0, 1.0)
                f += 1

        self.face_cell_in = cin
        self.face_cell_out = cout
        self.face_normal = normal
        self.face_length = length
        self.face_mid = mid
        self.face_side = side
        self.face_axis = axis
        self.interior_mask = cout >= 0
        self.boundary_mask = ~self.interior_mask
        # default classification: all boundary faces Dirichlet
        kind = np.where(self.interior_mask, INTERIOR, DIRICHLET).astype(np.int8)
        self.face_kind = kind

    # -- indexing helpers ---------------------------------------------

    def cell_id(self, i, j):
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise MeshError(f"cell ({i},{j}) out of range {self.nx}x{self.ny}")
        return j * self.nx + i

    def cell_ij(self, c):
        return c % self.nx, c // self.nx

    def cell_center(self, c):
        i, j = self.cell_ij(c)
        return self.origin + ((i + 0.5) * self.hx, (j + 0.5) * self.hy)

    def cell_centers(self):
        c = np.arange(self.ncells)
        i, j = c % self.nx, c // self.nx
        return self.origin + np.stack([(i + 0.5) * self.hx,
                                       (j + 0.5) * self.hy], axis=1)

    def cell_bounds(self, c):
        """(xlo, ylo, xhi, yhi) of cell c."""
        i, j = self.cell_ij(c)
        x0 = self.origin[0] + i * self.hx
        y0 = self.origin[1] + j * self.hy
        return x0, y0, x0 + self.hx, y0 + self.hy

    def face(self, f):
        return Face(index=f, kind=int(self.face_kind[f]),
                    side=int(self.face_side[f]),
                    cell_in=int(self.face_cell_in[f]),
                    cell_out=int(self.face_cell_out[f]),
                    normal=self.face_normal[f].copy(),
                    length=float(self.face_length[f]),
                    midpoint=self.face_mid[f].copy(),
                    axis=int(self.face_axis[f]))

    @property
    def interior_faces(self):
        return np.flatnonzero(self.interior_mask)

    @property
    def boundary_faces(self):
        return np.flatnonzero(self.boundary_mask)


def build_mesh(nx, ny, origin=(0.0, 0.0), extent=(1.0, 1.0)):
    """Build a uniform Cartesian mesh; raises MeshError on bad counts/extents."""
    return CartesianMesh(nx, ny, origin, extent)


def classify_boundary(mesh, side_tags):
    """Per-face kind array from per-side tags.

    side_tags maps 'left'/'right'/'bottom'/'top' to 'dirichlet' or 'neumann'.
    Returns an int8 array aligned with the mesh face enumeration; interior
    faces keep kind INTERIOR.  The mesh itself is not modified.
    """
    tag_of_side = {}
    for name, tag in side_tags.items():
        if name not in _SIDE_NAMES:
            raise MeshError(f"unknown side {name!r}")
        tag = tag.lower()
        if tag in ("dirichlet", "noslip"):
            tag_of_side[_SIDE_NAMES[name]] = DIRICHLET
        elif tag in ("neumann", "freeslip"):
            tag_of_side[_SIDE_NAMES[name]] = NEUMANN
        else:
            raise MeshError(f"unknown boundary tag {tag!r}")
    missing = set(_SIDE_NAMES.values()) - set(tag_of_side)
    if missing:
        raise MeshError("all four sides need a tag")
    kind = np.where(mesh.interior_mask, INTERIOR, DIRICHLET).astype(np.int8)
    for s, k in tag_of_side.items():
        kind[mesh.face_side == s] = k
    return kind
