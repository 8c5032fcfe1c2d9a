"""Matrix-free residual evaluation and Dirichlet handling.

The global system matrix is never formed here.  A residual is computed
element by element,

    r = sum_e scatter( b_e - A_e * x[ind_e] ),

with the gather/scatter done through the mesh's index arrays; the scatter
accumulation is a single ``np.bincount`` over all local contributions.
Global vectors are plain 1-D float64 ndarrays of length n_n.

Dirichlet conditions are enforced by masking: residual entries at
constrained nodes are zeroed every iteration, so a conforming iterate never
moves off its prescribed boundary values.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .elements import ElementBatch
from .mesh import Mesh


@dataclass(frozen=True)
class DirichletData:
    """Constrained node indices (sorted, unique) and their prescribed values."""

    nd: npt.NDArray[np.int64]
    values: npt.NDArray[np.float64]

    def __post_init__(self):
        nd = np.asarray(self.nd, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if nd.ndim != 1 or values.shape != nd.shape:
            raise ValueError("nd and values must be 1-D arrays of equal length")
        if nd.size and np.any(np.diff(np.sort(nd)) == 0):
            raise ValueError("duplicate constrained node indices")
        order = np.argsort(nd)
        nd = nd[order]
        values = values[order]
        nd.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "nd", nd)
        object.__setattr__(self, "values", values)


def constant_dirichlet(m: Mesh, value: float = 1.0) -> DirichletData:
    """Constrain every boundary node of the mesh to a single value."""
    nd = m.boundary_nodes
    return DirichletData(nd, np.full(nd.shape, float(value)))


def assemble_rhs(b_e: np.ndarray, indt: np.ndarray) -> npt.NDArray[np.float64]:
    """Scatter-add local loads into the global right-hand side."""
    if b_e.shape != indt.shape:
        raise ValueError(f"shape mismatch: b_e {b_e.shape} vs indt {indt.shape}")
    n = int(indt.max()) + 1 if indt.size else 0
    return np.bincount(indt.ravel(), weights=b_e.ravel(), minlength=n)


def _local_residuals(batch: ElementBatch, x: np.ndarray, lo: int, hi: int):
    """b_e - A_e x[ind_e] for the element slice [lo, hi)."""
    gathered = x[batch.index.ind_e[:, 0, lo:hi]]
    return batch.b_e[:, lo:hi] - np.einsum("ije,je->ie", batch.A_e[:, :, lo:hi], gathered)


def residual(
    batch: ElementBatch,
    x: np.ndarray,
    threads: int = 1,
    deterministic: bool = True,
) -> npt.NDArray[np.float64]:
    """r = b - A x without forming A.

    With ``deterministic=True`` (the default) the result is bitwise
    independent of ``threads``: per-element contributions are computed in
    chunks (each element's arithmetic is self-contained) and accumulated by
    one sequential bincount in fixed order.  The fast mode instead reduces
    per-chunk partial sums, reproducible only up to floating-point
    reassociation.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"x must be a flat global vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite entries")
    n_n = x.shape[0]
    n_e = batch.n_elements
    indt = batch.index.indt

    if threads <= 1 or n_e < 2 * threads:
        rt = _local_residuals(batch, x, 0, n_e)
        return np.bincount(indt.ravel(), weights=rt.ravel(), minlength=n_n)

    bounds = np.linspace(0, n_e, threads + 1, dtype=int)
    spans = list(zip(bounds[:-1], bounds[1:]))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda s: _local_residuals(batch, x, *s), spans))

    if deterministic:
        rt = np.concatenate(parts, axis=1)
        return np.bincount(indt.ravel(), weights=rt.ravel(), minlength=n_n)
    out = np.zeros(n_n)
    for (lo, hi), part in zip(spans, parts):
        out += np.bincount(indt[:, lo:hi].ravel(), weights=part.ravel(), minlength=n_n)
    return out


def mask_dirichlet(r: np.ndarray, d: DirichletData) -> npt.NDArray[np.float64]:
    """Zero the residual at constrained nodes (returns a copy)."""
    out = np.array(r, dtype=np.float64, copy=True)
    out[d.nd] = 0.0
    return out


def apply_initial_guess(m: Mesh, d: DirichletData) -> npt.NDArray[np.float64]:
    """Conforming start vector: prescribed values on constrained nodes, 0 elsewhere."""
    x0 = np.zeros(m.n_nodes)
    x0[d.nd] = d.values
    return x0
