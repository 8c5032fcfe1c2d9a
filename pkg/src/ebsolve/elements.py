"""Batched P1 element matrices.

All local quantities are computed for every element at once and stored in
3-index arrays of shape (n_b, n_b, n_e) with n_b = 3, the layout used by
the element-by-element residual kernel.  Slices are kept contiguous per
element (the arrays are transposes of C-ordered (n_e, 3, 3) blocks) so the
kernel streams one element at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .mesh import IndexArrays, Mesh, build_index_arrays

EPS_AREA = 1e-14

# exact P1 mass pattern: M_e = area/12 * (ones + eye)
_MASS_PATTERN = (np.ones((3, 3)) + np.eye(3)) / 12.0


@dataclass(frozen=True)
class ElementBatch:
    """Everything the matrix-free operator needs, batched over elements.

    A_e = K_e + nu*M_e combines stiffness and mass; b_e holds the local
    load vectors (one column per element) prior to assembly.
    """

    K_e: npt.NDArray[np.float64]
    M_e: npt.NDArray[np.float64]
    A_e: npt.NDArray[np.float64]
    b_e: npt.NDArray[np.float64]
    nu: float
    index: IndexArrays

    def __post_init__(self):
        n_e = self.index.indt.shape[1]
        for name in ("K_e", "M_e", "A_e"):
            arr = getattr(self, name)
            if arr.shape != (3, 3, n_e):
                raise ValueError(f"{name} must have shape (3, 3, {n_e}), got {arr.shape}")
        if self.b_e.shape != (3, n_e):
            raise ValueError(f"b_e must have shape (3, {n_e}), got {self.b_e.shape}")
        if self.nu < 0:
            raise ValueError(f"nu must be nonnegative, got {self.nu}")

    @property
    def n_elements(self) -> int:
        return self.index.indt.shape[1]


def _triangle_geometry(m: Mesh):
    """Per-element corner coordinates, areas and basis gradients.

    Returns (areas, grads) with grads of shape (n_e, 2, 3): column j is the
    constant gradient of the P1 basis function attached to local node j.
    """
    p = m.nodes[m.elements]  # (n_e, 3, 2)
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]  # = 2*area for ccw triangles
    areas = 0.5 * det
    if np.any(areas <= EPS_AREA):
        worst = int(np.argmin(areas))
        raise ValueError(
            f"degenerate element {worst}: area {areas[worst]:.3e} <= {EPS_AREA}"
        )
    x, y = p[..., 0], p[..., 1]
    grads = np.empty((m.n_elements, 2, 3))
    for j in range(3):
        jn, jp = (j + 1) % 3, (j + 2) % 3
        grads[:, 0, j] = (y[:, jn] - y[:, jp]) / det
        grads[:, 1, j] = (x[:, jp] - x[:, jn]) / det
    return areas, grads


def local_stiffness_batch(m: Mesh) -> npt.NDArray[np.float64]:
    """K_e slices: area * G^T G with G the 2x3 gradient matrix (exact for P1)."""
    areas, grads = _triangle_geometry(m)
    k = np.einsum("eki,ekj->eij", grads, grads)
    k *= areas[:, None, None]
    return k.transpose(1, 2, 0)


def local_mass_batch(m: Mesh) -> npt.NDArray[np.float64]:
    """M_e slices: area/12 * [[2,1,1],[1,2,1],[1,1,2]] (exact for P1)."""
    areas, _ = _triangle_geometry(m)
    me = areas[:, None, None] * _MASS_PATTERN
    return me.transpose(1, 2, 0)


def local_load_batch(m: Mesh, f) -> npt.NDArray[np.float64]:
    """Local loads by one-point centroid quadrature: b_e[j] = f(centroid)*area/3.

    ``f(x, y)`` is evaluated on coordinate arrays; a scalar return value is
    broadcast.  Exact whenever f is constant.
    """
    p = m.nodes[m.elements]
    areas = 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    )
    centroids = p.mean(axis=1)
    vals = np.asarray(f(centroids[:, 0], centroids[:, 1]), dtype=np.float64)
    vals = np.broadcast_to(vals, (m.n_elements,))
    if not np.all(np.isfinite(vals)):
        raise ValueError("source function returned non-finite values")
    return np.ascontiguousarray(np.broadcast_to(vals * areas / 3.0, (3, m.n_elements)))


def combine_system(K_e: np.ndarray, M_e: np.ndarray, nu: float) -> npt.NDArray[np.float64]:
    """A_e = K_e + nu*M_e, elementwise over the whole batch."""
    if K_e.shape != M_e.shape:
        raise ValueError(f"shape mismatch: K_e {K_e.shape} vs M_e {M_e.shape}")
    if nu < 0:
        raise ValueError(f"nu must be nonnegative, got {nu}")
    return K_e + nu * M_e


def build_element_batch(m: Mesh, nu: float = 0.0, f=None) -> ElementBatch:
    """Assemble the full batch for a mesh (default source f = 1)."""
    if f is None:
        f = lambda x, y: np.ones_like(x)
    K_e = local_stiffness_batch(m)
    M_e = local_mass_batch(m)
    return ElementBatch(
        K_e=K_e,
        M_e=M_e,
        A_e=combine_system(K_e, M_e, nu),
        b_e=local_load_batch(m, f),
        nu=float(nu),
        index=build_index_arrays(m),
    )
