"""Shared builders for the test suite."""

import numpy as np

from ebsolve import (
    ElementBatch,
    IndexArrays,
    assemble_rhs,
    build_element_batch,
    build_unit_square_mesh,
    constant_dirichlet,
)


def make_problem(level, nu=0.0):
    """Mesh, element batch, boundary data and assembled rhs for one level."""
    m = build_unit_square_mesh(level)
    batch = build_element_batch(m, nu=nu)
    d = constant_dirichlet(m, 1.0)
    b = assemble_rhs(batch.b_e, batch.index.indt)
    return m, batch, d, b


def diagonal_batch(diag, load):
    """Synthetic 3-node, 1-element batch whose assembled matrix is diag(diag).

    Lets solver behavior be checked against hand-computable linear algebra
    without any mesh in the way.
    """
    A = np.diag(np.asarray(diag, dtype=np.float64)).reshape(3, 3, 1)
    indt = np.array([[0], [1], [2]], dtype=np.int64)
    return ElementBatch(
        K_e=A,
        M_e=np.zeros_like(A),
        A_e=A,
        b_e=np.asarray(load, dtype=np.float64).reshape(3, 1),
        nu=0.0,
        index=IndexArrays(indt.reshape(3, 1, 1), indt),
    )
