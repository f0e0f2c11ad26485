"""Uniform P1 triangulation of a rectangle and FEM assembly.

Each rectangle cell is split along its lower-left to upper-right diagonal,
so piecewise-constant matrix coefficients align exactly with elements.
Homogeneous Dirichlet data is enforced by eliminating boundary vertices.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import FieldSizeMismatch, InvalidDimensions
from .symmat import SymMat2, constant_field

__all__ = [
    "Mesh2D",
    "build_mesh",
    "assemble_stiffness",
    "assemble_mass",
    "element_gradients",
    "full_vector",
    "write_vertices_csv",
    "write_elements_csv",
    "write_nodal_field_csv",
    "write_element_field_csv",
    "read_element_field_csv",
]


@dataclass(frozen=True)
class Mesh2D:
    """Structured P1 triangulation of [x_min, x_max] x [y_min, y_max].

    vertices : (nv, 2) coordinates, row-major over the grid
    triangles : (nt, 3) vertex indices, positively oriented
    interior : indices of non-boundary vertices
    vertex_to_interior : (nv,) map into interior dofs, -1 on the boundary
    element_area : (nt,) positive areas
    grads : (nt, 3, 2) gradients of the three hat functions per element
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    vertices: np.ndarray
    triangles: np.ndarray
    interior: np.ndarray
    vertex_to_interior: np.ndarray
    element_area: np.ndarray
    grads: np.ndarray = field(repr=False)
    centroids: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elements(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_interior(self) -> int:
        return self.interior.size

    @property
    def domain_area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def check_element_field(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.n_elements:
            raise FieldSizeMismatch(
                f"field has {values.shape[0]} entries, mesh has {self.n_elements} elements"
            )
        return values

    def constant_coefficient(self, a: SymMat2) -> np.ndarray:
        return constant_field(a, self.n_elements)


def build_mesh(corners, nx: int, ny: int) -> Mesh2D:
    """Mesh the rectangle `corners` = (x_min, x_max, y_min, y_max) with nx*ny cells."""
    x_min, x_max, y_min, y_max = (float(c) for c in corners)
    if nx < 2 or ny < 2:
        raise InvalidDimensions(f"need nx, ny >= 2, got ({nx}, {ny})")
    if not (x_max > x_min and y_max > y_min):
        raise InvalidDimensions("degenerate rectangle")

    xs = np.linspace(x_min, x_max, nx + 1)
    ys = np.linspace(y_min, y_max, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    # cell (i, j): corners v00, v10, v01, v11; diagonal v00 -> v11
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    v00 = jj * (nx + 1) + ii
    v10 = v00 + 1
    v01 = v00 + (nx + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    gi, gj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="xy")
    on_boundary = (
        (gi.ravel() == 0) | (gi.ravel() == nx) | (gj.ravel() == 0) | (gj.ravel() == ny)
    )
    interior = np.flatnonzero(~on_boundary)
    vertex_to_interior = np.full(vertices.shape[0], -1, dtype=np.int64)
    vertex_to_interior[interior] = np.arange(interior.size)

    pts = vertices[triangles]
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * det
    if np.any(area <= 0):
        raise InvalidDimensions("non-positive element area")

    # barycentric gradients: rows of inv(B)^T with B = [e1 e2]
    grads = np.empty((triangles.shape[0], 3, 2))
    grads[:, 1, 0] = e2[:, 1] / det
    grads[:, 1, 1] = -e2[:, 0] / det
    grads[:, 2, 0] = -e1[:, 1] / det
    grads[:, 2, 1] = e1[:, 0] / det
    grads[:, 0] = -grads[:, 1] - grads[:, 2]

    centroids = pts.mean(axis=1)

    return Mesh2D(
        x_min,
        x_max,
        y_min,
        y_max,
        int(nx),
        int(ny),
        vertices,
        triangles,
        interior,
        vertex_to_interior,
        area,
        grads,
        centroids,
    )


def _assemble(mesh: Mesh2D, local: np.ndarray, dirichlet: bool) -> sp.csr_matrix:
    """Sum (nt, 3, 3) local matrices into CSR, optionally dropping boundary dofs."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    vals = local.ravel()
    if dirichlet:
        rows = mesh.vertex_to_interior[rows]
        cols = mesh.vertex_to_interior[cols]
        keep = (rows >= 0) & (cols >= 0)
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        n = mesh.n_interior
    else:
        n = mesh.n_vertices
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def assemble_stiffness(
    mesh: Mesh2D, a: np.ndarray, dirichlet: bool = True
) -> sp.csr_matrix:
    """Stiffness matrix for the per-element coefficient field `a` of shape (nt, 3).

    Exact for P1: local blocks are area * G A G^T with constant gradients G.
    """
    a = mesh.check_element_field(a)
    if a.ndim != 2 or a.shape[1] != 3:
        raise FieldSizeMismatch("coefficient field must have shape (n_elements, 3)")
    amat = np.empty((mesh.n_elements, 2, 2))
    amat[:, 0, 0] = a[:, 0]
    amat[:, 0, 1] = a[:, 1]
    amat[:, 1, 0] = a[:, 1]
    amat[:, 1, 1] = a[:, 2]
    ga = np.einsum("eid,edk->eik", mesh.grads, amat)
    local = np.einsum("eik,ejk->eij", ga, mesh.grads) * mesh.element_area[:, None, None]
    return _assemble(mesh, local, dirichlet)


_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble_mass(mesh: Mesh2D, dirichlet: bool = True) -> sp.csr_matrix:
    """Consistent P1 mass matrix (exact integration of hat-function products)."""
    local = _LOCAL_MASS[None, :, :] * mesh.element_area[:, None, None]
    return _assemble(mesh, local, dirichlet)


def element_gradients(mesh: Mesh2D, y: np.ndarray) -> np.ndarray:
    """(nt, 2) constant gradient of the P1 interpolant of nodal values `y`."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != mesh.n_vertices:
        raise FieldSizeMismatch(
            f"nodal vector has {y.shape[0]} entries, mesh has {mesh.n_vertices} vertices"
        )
    return np.einsum("eik,ei->ek", mesh.grads, y[mesh.triangles])


def full_vector(mesh: Mesh2D, y_interior: np.ndarray) -> np.ndarray:
    """Extend an interior-dof vector by homogeneous boundary values."""
    out = np.zeros(mesh.n_vertices)
    out[mesh.interior] = y_interior
    return out


# ---------------------------------------------------------------------------
# CSV export, fixed formats for reproducible byte-identical output


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_vertices_csv(mesh: Mesh2D, path) -> None:
    _write_rows(
        path,
        ["id", "x", "y"],
        (
            (i, f"{v[0]:.17g}", f"{v[1]:.17g}")
            for i, v in enumerate(mesh.vertices)
        ),
    )


def write_elements_csv(mesh: Mesh2D, path) -> None:
    _write_rows(
        path,
        ["id", "v0", "v1", "v2"],
        ((i, t[0], t[1], t[2]) for i, t in enumerate(mesh.triangles)),
    )


def write_nodal_field_csv(values: np.ndarray, path) -> None:
    _write_rows(
        path,
        ["vertex_id", "value"],
        ((i, f"{v:.17g}") for i, v in enumerate(np.asarray(values, dtype=float))),
    )


def write_element_field_csv(values: np.ndarray, path) -> None:
    """Matrix field (nt, 3) -> a11,a12,a22 columns; scalar field -> sigma column."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 2 and values.shape[1] == 3:
        _write_rows(
            path,
            ["element_id", "a11", "a12", "a22"],
            (
                (i, f"{r[0]:.17g}", f"{r[1]:.17g}", f"{r[2]:.17g}")
                for i, r in enumerate(values)
            ),
        )
    elif values.ndim == 1:
        _write_rows(
            path,
            ["element_id", "sigma"],
            ((i, f"{v:.17g}") for i, v in enumerate(values)),
        )
    else:
        raise FieldSizeMismatch("element field must be (n,) or (n, 3)")


def read_element_field_csv(path) -> np.ndarray:
    """Inverse of write_element_field_csv; rows must be sorted by element id."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(c) for c in row[1:]] for row in reader]
    arr = np.asarray(data, dtype=float)
    if len(header) == 2:
        return arr.ravel()
    return arr
