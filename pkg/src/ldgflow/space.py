"""Broken polynomial spaces with per-cell orthonormal bases.

The scalar basis on each cell is the total-degree set {P_i(xi) P_j(eta),
i + j <= k} of Legendre products on the reference square [-1,1]^2,
normalized to be L2-orthonormal on the *physical* cell.  Because the mesh
is uniform the same reference arrays serve every cell, and the local mass
matrix is the identity by construction.

Vector-valued spaces (d = 2) stack the two scalar coefficient blocks:
flat dof = comp * (ncells*m) + cell * m + mode.
"""

import numpy as np


def legendre_table(x, deg):
    """Values and derivatives of P_0..P_deg at points x (exact recurrences)."""
    x = np.asarray(x, dtype=float)
    V = np.empty(x.shape + (deg + 1,))
    D = np.zeros_like(V)
    V[..., 0] = 1.0
    if deg >= 1:
        V[..., 1] = x
        D[..., 1] = 1.0
    for n in range(1, deg):
        V[..., n + 1] = ((2 * n + 1) * x * V[..., n] - n * V[..., n - 1]) / (n + 1)
        # P'_{n+1} = P'_{n-1} + (2n+1) P_n
        D[..., n + 1] = D[..., n - 1] + (2 * n + 1) * V[..., n]
    return V, D


def gauss_rule(order):
    """1D Gauss-Legendre rule on [-1,1] exact for polynomials of degree <= order."""
    n = order // 2 + 1
    return np.polynomial.legendre.leggauss(n)


def total_degree_modes(k):
    """Graded list of (ix, iy) exponent pairs with ix + iy <= k; (0,0) first."""
    return [(d - iy, iy) for d in range(k + 1) for iy in range(d + 1)]


class Quadrature:
    """Reference points and positive weights, exact to the declared order."""

    def __init__(self, points, weights, order):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.order = order
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @classmethod
    def tensor_square(cls, order):
        x, w = gauss_rule(order)
        XI, ETA = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        pts = np.stack([XI.ravel(), ETA.ravel()], axis=1)
        return cls(pts, W.ravel(), order)

    @classmethod
    def line(cls, order):
        x, w = gauss_rule(order)
        return cls(x, w, order)


class DgSpace:
    """Discontinuous space of per-cell polynomials of total degree <= k."""

    def __init__(self, mesh, k, d=1):
        if k < 0:
            raise ValueError("degree must be >= 0")
        if d not in (1, 2):
            raise ValueError("component count must be 1 or 2")
        self.mesh = mesh
        self.k = k
        self.d = d
        self.modes = total_degree_modes(k)
        self.m = len(self.modes)                      # (k+1)(k+2)/2
        self.nscalar = mesh.ncells * self.m
        self.dim = self.nscalar * d
        self.scale = 2.0 / np.sqrt(mesh.hx * mesh.hy)  # ref-to-physical normalization

        order = 2 * k + 3
        self.vol_quad = Quadrature.tensor_square(order)
        self.face_quad = Quadrature.line(order)
        self._tabulate()

    def _tabulate(self):
        mesh = self.mesh
        pts = self.vol_quad.points
        self.phi_vol = self.eval_ref(pts)                       # (m, nq)
        self.dphi_vol = self.grad_ref(pts)                      # (2, m, nq)
        self.wq_vol = self.vol_quad.weights * (mesh.hx * mesh.hy / 4.0)

        s = self.face_quad.points
        one = np.ones_like(s)
        # side order matches mesh.SIDE_*: left, right, bottom, top
        side_pts = [np.stack([-one, s], axis=1), np.stack([one, s], axis=1),
                    np.stack([s, -one], axis=1), np.stack([s, one], axis=1)]
        self.phi_face = np.stack([self.eval_ref(p) for p in side_pts])   # (4, m, nq1)
        self.dphi_face = np.stack([self.grad_ref(p) for p in side_pts])  # (4, 2, m, nq1)

    # -- reference-basis evaluation -------------------------------------

    def eval_ref(self, pts):
        """Basis values at reference points; shape (m, npts)."""
        pts = np.atleast_2d(pts)
        Vx, _ = legendre_table(pts[:, 0], self.k)
        Vy, _ = legendre_table(pts[:, 1], self.k)
        out = np.empty((self.m, len(pts)))
        for a, (ix, iy) in enumerate(self.modes):
            norm = np.sqrt((2 * ix + 1) * (2 * iy + 1)) / 2.0
            out[a] = Vx[:, ix] * Vy[:, iy] * norm
        return out * self.scale

    def grad_ref(self, pts):
        """Physical gradients of the basis at reference points; (2, m, npts)."""
        pts = np.atleast_2d(pts)
        Vx, Dx = legendre_table(pts[:, 0], self.k)
        Vy, Dy = legendre_table(pts[:, 1], self.k)
        out = np.empty((2, self.m, len(pts)))
        for a, (ix, iy) in enumerate(self.modes):
            norm = np.sqrt((2 * ix + 1) * (2 * iy + 1)) / 2.0
            out[0, a] = Dx[:, ix] * Vy[:, iy] * norm * (2.0 / self.mesh.hx)
            out[1, a] = Vx[:, ix] * Dy[:, iy] * norm * (2.0 / self.mesh.hy)
        return out * self.scale

    # -- coordinate maps -------------------------------------------------

    def ref_coords(self, cell, xy):
        """Map physical points (n,2) in a cell to reference coordinates."""
        c = self.mesh.cell_center(cell)
        xy = np.atleast_2d(xy)
        return np.stack([(xy[:, 0] - c[0]) * 2.0 / self.mesh.hx,
                         (xy[:, 1] - c[1]) * 2.0 / self.mesh.hy], axis=1)

    def phys_coords(self, cells, ref_pts):
        centers = self.mesh.cell_centers()[cells]
        return centers[:, None, :] + ref_pts[None, :, :] * (
            np.array([self.mesh.hx, self.mesh.hy]) / 2.0)

    # -- function construction -------------------------------------------

    def zeros(self):
        return DgFunction(self, np.zeros(self.dim))

    def function(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.dim,):
            raise ValueError(f"expected coefficient vector of length {self.dim}")
        return DgFunction(self, coeffs)

    def project(self, f):
        """L2 projection of a callable f(x, y) -> scalar or (d,) values."""
        xy = self.phys_coords(np.arange(self.mesh.ncells), self.vol_quad.points)
        vals = np.asarray(f(xy[..., 0], xy[..., 1]), dtype=float)
        coeffs = np.empty((self.d, self.mesh.ncells, self.m))
        if self.d == 1:
            if vals.ndim == 0:
                vals = np.full(xy.shape[:2], float(vals))
            coeffs[0] = np.einsum("cq,q,aq->ca", vals, self.wq_vol, self.phi_vol)
        else:
            for comp in range(self.d):
                v = np.asarray(vals[comp], dtype=float)
                if v.ndim == 0:
                    v = np.full(xy.shape[:2], float(v))
                coeffs[comp] = np.einsum("cq,q,aq->ca", v, self.wq_vol, self.phi_vol)
        return DgFunction(self, coeffs.ravel())

    def mass_matrix(self):
        """Quadrature-assembled local mass matrix (orthonormality check)."""
        return np.einsum("aq,q,bq->ab", self.phi_vol, self.wq_vol, self.phi_vol)


class DgFunction:
    """Coefficient vector over a DgSpace."""

    def __init__(self, space, coeffs):
        self.space = space
        self.coeffs = np.asarray(coeffs, dtype=float)

    def component(self, comp):
        """View of component coefficients as (ncells, m)."""
        n = self.space.nscalar
        return self.coeffs[comp * n:(comp + 1) * n].reshape(
            self.space.mesh.ncells, self.space.m)

    def eval_cells(self, ref_pts, cells=None):
        """Values at the same reference points in each cell.

        Returns (ncells, npts) for scalar spaces, (d, ncells, npts) otherwise.
        """
        phi = self.space.eval_ref(ref_pts)
        out = []
        for comp in range(self.space.d):
            c = self.component(comp)
            if cells is not None:
                c = c[cells]
            out.append(c @ phi)
        return out[0] if self.space.d == 1 else np.stack(out)

    def eval_at(self, cell, pts_ref):
        """Values at reference points of one cell; (npts,) or (d, npts)."""
        if not (0 <= cell < self.space.mesh.ncells):
            raise IndexError(f"cell {cell} out of range")
        phi = self.space.eval_ref(np.atleast_2d(pts_ref))
        vals = [self.component(comp)[cell] @ phi for comp in range(self.space.d)]
        return vals[0] if self.space.d == 1 else np.stack(vals)

    def eval_physical(self, cell, xy):
        return self.eval_at(cell, self.space.ref_coords(cell, xy))

    def cell_averages(self):
        """Mean value per cell; (ncells,) or (d, ncells)."""
        # constant mode value is scale/2 = 1/sqrt(cell area)
        c0 = self.space.scale / 2.0
        out = [self.component(comp)[:, 0] * c0 for comp in range(self.space.d)]
        return out[0] if self.space.d == 1 else np.stack(out)

    def integral(self):
        """Integral over the domain of each component."""
        srt = np.sqrt(self.space.mesh.cell_area)
        out = [self.component(comp)[:, 0].sum() * srt
               for comp in range(self.space.d)]
        return out[0] if self.space.d == 1 else np.array(out)

    def norm_l2(self):
        return float(np.linalg.norm(self.coeffs))

    def inner(self, other):
        """Broken L2 inner product; exact for functions of the same space."""
        if other.space is not self.space:
            raise ValueError("inner product requires a common space")
        return float(self.coeffs @ other.coeffs)

    def copy(self):
        return DgFunction(self.space, self.coeffs.copy())

    def __add__(self, other):
        return DgFunction(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return DgFunction(self.space, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return DgFunction(self.space, self.coeffs * float(a))

    __rmul__ = __mul__


def build_space(mesh, k, d=1):
    return DgSpace(mesh, k, d)


def project_l2(f, space):
    return space.project(f)


def evaluate(fn, cell, point_ref):
    """Point evaluation of a DgFunction at a reference point of a cell."""
    return fn.eval_at(cell, point_ref)


def integrate(f, mesh, order):
    """Quadrature integral of a callable f(x, y) over the whole mesh."""
    quad = Quadrature.tensor_square(order)
    xq = quad.points
    w = quad.weights * (mesh.hx * mesh.hy / 4.0)
    centers = mesh.cell_centers()
    half = np.array([mesh.hx, mesh.hy]) / 2.0
    xy = centers[:, None, :] + xq[None, :, :] * half
    vals = np.asarray(f(xy[..., 0], xy[..., 1]), dtype=float)
    return float(np.einsum("cq,q->", vals, w))
