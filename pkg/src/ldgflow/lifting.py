"""Face jump/average operators and lifted DG derivatives.

The lifted gradient of a scalar field v of degree s is the elementwise
gradient minus a lifting of the face jumps into the degree-(s+1) vector
space; the lifted divergence of a vector field goes the other way, one
degree down.  Liftings are assembled once per (mesh, space pair, Dirichlet
face set) as sparse matrices, so applying a lifted derivative at solve
time involves no face integration.

With matching Dirichlet face sets the two operators are exact negative
transposes of each other, which is what makes the projection step of the
flow scheme exactly mass-free.
"""

import numpy as np
import scipy.sparse as sp

from .mesh import DIRICHLET, SIDE_LEFT, SIDE_RIGHT, SIDE_BOTTOM, SIDE_TOP
from .space import DgFunction, DgSpace

_SIDE_OF = {(0, -1): SIDE_LEFT, (0, +1): SIDE_RIGHT,
            (1, -1): SIDE_BOTTOM, (1, +1): SIDE_TOP}


def face_traces(space, side, s_params):
    """Trace of every basis function on one side of the reference cell.

    s_params are the 1D face parameters (eta on vertical sides, xi on
    horizontal ones, both ascending).  Returns (m, npts).
    """
    s = np.asarray(s_params)
    one = np.ones_like(s)
    if side == SIDE_LEFT:
        pts = np.stack([-one, s], axis=1)
    elif side == SIDE_RIGHT:
        pts = np.stack([one, s], axis=1)
    elif side == SIDE_BOTTOM:
        pts = np.stack([s, -one], axis=1)
    elif side == SIDE_TOP:
        pts = np.stack([s, one], axis=1)
    else:
        raise ValueError(f"bad side {side}")
    return space.eval_ref(pts)


def jump_average(fn, face_index, s_params=0.0):
    """Jump v- - v+ and average (v- + v+)/2 on an interior face.

    s_params are face parameters in [-1, 1] along the face (ascending x or
    y).  Raises on boundary faces, where jump/average are not defined.
    """
    mesh = fn.space.mesh
    cm = mesh.face_cell_in[face_index]
    cp = mesh.face_cell_out[face_index]
    if cp < 0:
        raise ValueError("jump/average undefined on boundary faces")
    axis = mesh.face_axis[face_index]
    side_m = _SIDE_OF[(axis, +1)]
    side_p = _SIDE_OF[(axis, -1)]
    s = np.atleast_1d(np.asarray(s_params, dtype=float))
    tm = face_traces(fn.space, side_m, s)
    tp = face_traces(fn.space, side_p, s)
    vals_m = np.stack([fn.component(c)[cm] @ tm for c in range(fn.space.d)])
    vals_p = np.stack([fn.component(c)[cp] @ tp for c in range(fn.space.d)])
    jump = vals_m - vals_p
    avg = 0.5 * (vals_m + vals_p)
    if fn.space.d == 1:
        jump, avg = jump[0], avg[0]
    if np.ndim(s_params) == 0:
        jump, avg = jump[..., 0], avg[..., 0]
    return jump, avg


class _PairTables:
    """Precomputed face mass matrices between source and target traces."""

    def __init__(self, src, tgt, mesh):
        # pairing integrand degree src.k + tgt.k; target rule is exact for it
        quad = tgt.face_quad
        self.s = quad.points
        self.w = quad.weights
        self.tr_src = {side: face_traces(src, side, self.s) for side in range(4)}
        self.tr_tgt = {side: face_traces(tgt, side, self.s) for side in range(4)}
        self.half_len = {0: mesh.hy / 2.0, 1: mesh.hx / 2.0}

    def mat(self, tgt_side, src_side, axis):
        """int_e phi_tgt(ts) phi_src(ss) over a face of the given axis."""
        return (self.tr_tgt[tgt_side] * self.w) @ self.tr_src[src_side].T \
            * self.half_len[axis]


def _coo_blocks(rows_cells, cols_cells, block, m_row, m_col, row_off=0):
    """COO triplets placing `block` at every (row cell, col cell) pair."""
    br = np.repeat(np.arange(block.shape[0]), block.shape[1])
    bc = np.tile(np.arange(block.shape[1]), block.shape[0])
    rows = (rows_cells[:, None] * m_row + br[None, :]).ravel() + row_off
    cols = (cols_cells[:, None] * m_col + bc[None, :]).ravel()
    vals = np.tile(block.ravel(), len(rows_cells))
    return rows, cols, vals


class LiftedGradientOp:
    """Sparse realization of v -> grad_h v - R(jumps of v), V_s -> V_{s+1}^2.

    `matrix` holds the linear part; Dirichlet data enters through
    `bc_vector`, so apply(v, a) = matrix @ v + bc_vector(a).
    """

    def __init__(self, src, tgt, mesh, dirichlet_mask, matrix):
        self.src = src
        self.tgt = tgt
        self.mesh = mesh
        self.dirichlet_mask = dirichlet_mask
        self.matrix = matrix

    def bc_vector(self, a):
        """Inhomogeneity from the Dirichlet datum a(x, y); zero for a = None."""
        vec = np.zeros(self.tgt.dim)
        if a is None:
            return vec
        mesh, tgt = self.mesh, self.tgt
        faces = np.flatnonzero(self.dirichlet_mask)
        tab = _PairTables(self.src, tgt, mesh)
        for f in faces:
            axis = int(mesh.face_axis[f])
            sgn = mesh.face_normal[f][axis]
            side = _SIDE_OF[(axis, int(np.sign(sgn)))]
            cell = mesh.face_cell_in[f]
            xy = _face_points(mesh, f, tab.s)
            avals = np.asarray(a(xy[:, 0], xy[:, 1]), dtype=float)
            if avals.ndim == 0:
                avals = np.full(len(tab.s), float(avals))
            contrib = sgn * tab.half_len[axis] * (
                tab.tr_tgt[side] @ (tab.w * avals))
            n = tgt.nscalar
            vec[axis * n + cell * tgt.m:axis * n + (cell + 1) * tgt.m] += contrib
        return vec

    def apply(self, v, a=None):
        out = self.matrix @ v.coeffs
        if a is not None:
            out = out + self.bc_vector(a)
        return DgFunction(self.tgt, out)


class LiftedDivergenceOp:
    """Sparse realization of v -> div_h v - M(jumps of v), V_{s+1}^2 -> V_s."""

    def __init__(self, src, tgt, mesh, dirichlet_mask, matrix):
        self.src = src
        self.tgt = tgt
        self.mesh = mesh
        self.dirichlet_mask = dirichlet_mask
        self.matrix = matrix

    def bc_vector(self, b):
        """Inhomogeneity from the vector Dirichlet datum b; zero for None."""
        vec = np.zeros(self.tgt.nscalar)
        if b is None:
            return vec
        mesh, tgt = self.mesh, self.tgt
        faces = np.flatnonzero(self.dirichlet_mask)
        tab = _PairTables(self.src, tgt, mesh)
        for f in faces:
            axis = int(mesh.face_axis[f])
            sgn = mesh.face_normal[f][axis]
            side = _SIDE_OF[(axis, int(np.sign(sgn)))]
            cell = mesh.face_cell_in[f]
            xy = _face_points(mesh, f, tab.s)
            bvals = np.asarray(b(xy[:, 0], xy[:, 1]), dtype=float)[axis]
            if bvals.ndim == 0:
                bvals = np.full(len(tab.s), float(bvals))
            contrib = sgn * tab.half_len[axis] * (
                tab.tr_tgt[side] @ (tab.w * bvals))
            vec[cell * tgt.m:(cell + 1) * tgt.m] += contrib
        return vec

    def apply(self, v, b=None):
        out = self.matrix @ v.coeffs
        if b is not None:
            out = out + self.bc_vector(b)
        return DgFunction(self.tgt, out)


def _face_points(mesh, f, s_params):
    mid = mesh.face_mid[f]
    axis = mesh.face_axis[f]
    half = mesh.face_length[f] / 2.0
    xy = np.tile(mid, (len(s_params), 1))
    xy[:, 1 - axis] += s_params * half
    return xy


def _broken_derivative_blocks(src, tgt):
    """Per-cell blocks of int_E d(phi_src)/dx_a phi_tgt for a = 0, 1."""
    pts = tgt.vol_quad.points
    w = tgt.vol_quad.weights * (src.mesh.hx * src.mesh.hy / 4.0)
    dsrc = src.grad_ref(pts)        # (2, m_s, nq)
    ttgt = tgt.eval_ref(pts)        # (m_t, nq)
    bx = np.einsum("sq,q,tq->ts", dsrc[0], w, ttgt)
    by = np.einsum("sq,q,tq->ts", dsrc[1], w, ttgt)
    return bx, by


def build_gradient_op(src, tgt, mesh, dirichlet_mask=None):
    """Assemble the lifted gradient V_s -> V_{s+1}^2.

    dirichlet_mask selects the boundary faces whose Dirichlet terms enter
    the lifting; None means interior jumps only (the plain lifted gradient).
    """
    if tgt.k != src.k + 1 or tgt.d != 2 or src.d != 1:
        raise ValueError("gradient target must be the vector space one degree up")
    if dirichlet_mask is None:
        dirichlet_mask = np.zeros(mesh.nfaces, dtype=bool)
    dirichlet_mask = np.asarray(dirichlet_mask, dtype=bool)

    bx, by = _broken_derivative_blocks(src, tgt)
    eye = sp.eye(mesh.ncells, format="csr")
    B = sp.vstack([sp.kron(eye, bx), sp.kron(eye, by)], format="csr")

    tab = _PairTables(src, tgt, mesh)
    rows, cols, vals = [], [], []
    n_t = tgt.nscalar

    for axis in (0, 1):
        sel = (mesh.face_axis == axis) & mesh.interior_mask
        cm = mesh.face_cell_in[sel]
        cp = mesh.face_cell_out[sel]
        side_m = _SIDE_OF[(axis, +1)]   # trace side of E- (right/top)
        side_p = _SIDE_OF[(axis, -1)]
        if len(cm) == 0:
            continue
        # target average (factor 1/2 each side), source jump (+E-, -E+)
        for tc, ts, tf in ((cm, side_m, 0.5), (cp, side_p, 0.5)):
            for scv, ss, sf in ((cm, side_m, 1.0), (cp, side_p, -1.0)):
                blk = tf * sf * tab.mat(ts, ss, axis)
                r, c, v = _coo_blocks(tc, scv, blk, tgt.m, src.m,
                                      row_off=axis * n_t)
                rows.append(r), cols.append(c), vals.append(v)

    # Dirichlet boundary faces: one-sided trace, full weight, sign of n
    for f in np.flatnonzero(dirichlet_mask & mesh.boundary_mask):
        axis = int(mesh.face_axis[f])
        sgn = mesh.face_normal[f][axis]
        side = _SIDE_OF[(axis, int(np.sign(sgn)))]
        cell = np.array([mesh.face_cell_in[f]])
        blk = sgn * tab.mat(side, side, axis)
        r, c, v = _coo_blocks(cell, cell, blk, tgt.m, src.m, row_off=axis * n_t)
        rows.append(r), cols.append(c), vals.append(v)

    L = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(tgt.dim, src.nscalar)).tocsr()
    return LiftedGradientOp(src, tgt, mesh, dirichlet_mask, (B - L).tocsr())


def build_divergence_op(src, tgt, mesh, dirichlet_mask=None):
    """Assemble the lifted divergence V_{s+1}^2 -> V_s."""
    if src.k != tgt.k + 1 or src.d != 2 or tgt.d != 1:
        raise ValueError("divergence source must be the vector space one degree up")
    if dirichlet_mask is None:
        dirichlet_mask = np.zeros(mesh.nfaces, dtype=bool)
    dirichlet_mask = np.asarray(dirichlet_mask, dtype=bool)

    bx, by = _broken_derivative_blocks(src, tgt)
    eye = sp.eye(mesh.ncells, format="csr")
    B = sp.hstack([sp.kron(eye, bx), sp.kron(eye, by)], format="csr")

    tab = _PairTables(src, tgt, mesh)
    rows, cols, vals = [], [], []
    n_s = src.nscalar

    for axis in (0, 1):
        sel = (mesh.face_axis == axis) & mesh.interior_mask
        cm = mesh.face_cell_in[sel]
        cp = mesh.face_cell_out[sel]
        side_m = _SIDE_OF[(axis, +1)]
        side_p = _SIDE_OF[(axis, -1)]
        if len(cm) == 0:
            continue
        for tc, ts, tf in ((cm, side_m, 0.5), (cp, side_p, 0.5)):
            for scv, ss, sf in ((cm, side_m, 1.0), (cp, side_p, -1.0)):
                blk = tf * sf * tab.mat(ts, ss, axis)
                r, c, v = _coo_blocks(tc, scv, blk, tgt.m, src.m)
                rows.append(r), cols.append(c + axis * n_s), vals.append(v)

    for f in np.flatnonzero(dirichlet_mask & mesh.boundary_mask):
        axis = int(mesh.face_axis[f])
        sgn = mesh.face_normal[f][axis]
        side = _SIDE_OF[(axis, int(np.sign(sgn)))]
        cell = np.array([mesh.face_cell_in[f]])
        blk = sgn * tab.mat(side, side, axis)
        r, c, v = _coo_blocks(cell, cell, blk, tgt.m, src.m)
        rows.append(r), cols.append(c + axis * n_s), vals.append(v)

    L = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(tgt.nscalar, src.dim)).tocsr()
    return LiftedDivergenceOp(src, tgt, mesh, dirichlet_mask, (B - L).tocsr())


def lifted_gradient(v, bc=None, dirichlet_mask=None):
    """Lifted gradient of a scalar DgFunction.

    bc = None gives the interior-jump operator; otherwise Dirichlet terms
    are included on `dirichlet_mask` faces (default: all boundary faces)
    with datum bc (a callable, or 0 for homogeneous data).
    """
    mesh = v.space.mesh
    tgt = DgSpace(mesh, v.space.k + 1, d=2)
    if bc is None:
        op = build_gradient_op(v.space, tgt, mesh, None)
        return op.apply(v)
    if dirichlet_mask is None:
        dirichlet_mask = mesh.boundary_mask.copy()
    op = build_gradient_op(v.space, tgt, mesh, dirichlet_mask)
    datum = None if _is_zero(bc) else bc
    return op.apply(v, datum)


def lifted_divergence(v, bc=None, dirichlet_mask=None):
    """Lifted divergence of a vector DgFunction (see lifted_gradient)."""
    mesh = v.space.mesh
    tgt = DgSpace(mesh, v.space.k - 1, d=1)
    if bc is None:
        op = build_divergence_op(v.space, tgt, mesh, None)
        return op.apply(v)
    if dirichlet_mask is None:
        dirichlet_mask = mesh.boundary_mask.copy()
    op = build_divergence_op(v.space, tgt, mesh, dirichlet_mask)
    datum = None if _is_zero(bc) else bc
    return op.apply(v, datum)


def _is_zero(bc):
    return isinstance(bc, (int, float)) and bc == 0


def assemble_lifting_matrices(scalar_space, vector_space, mesh,
                              dirichlet_mask=None):
    """All four lifting-based operators for a space pair.

    Returns a dict with the interior-only and Dirichlet-augmented gradient
    (V_s -> V_{s+1}^2) and divergence (V_{s+1}^2 -> V_s) operators; data
    inhomogeneities come from each op's bc_vector.
    """
    if dirichlet_mask is None:
        dirichlet_mask = mesh.boundary_mask.copy()
    return {
        "grad": build_gradient_op(scalar_space, vector_space, mesh, None),
        "grad0": build_gradient_op(scalar_space, vector_space, mesh,
                                   dirichlet_mask),
        "div": build_divergence_op(vector_space, scalar_space, mesh, None),
        "div0": build_divergence_op(vector_space, scalar_space, mesh,
                                    dirichlet_mask),
    }
