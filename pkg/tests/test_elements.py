import numpy as np
import numpy.testing as npt
import pytest

from ebsolve import (
    ElementBatch,
    Mesh,
    build_element_batch,
    build_index_arrays,
    build_unit_square_mesh,
    combine_system,
    local_load_batch,
    local_mass_batch,
    local_stiffness_batch,
)

# closed-form local stiffness of the right triangle with legs along the axes;
# it does not depend on the leg length
K_REF = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])


def right_triangle(h, shift=(0.0, 0.0)):
    sx, sy = shift
    nodes = np.array([[sx, sy], [sx + h, sy], [sx, sy + h]])
    return Mesh(nodes, np.array([[0, 1, 2]]), np.array([0, 1, 2]))


def test_stiffness_reference_triangle():
    for h in (1.0, 0.5, 0.25, 0.0625):
        K = local_stiffness_batch(right_triangle(h))
        npt.assert_array_equal(K[:, :, 0], K_REF)


def test_stiffness_translation_invariant():
    K0 = local_stiffness_batch(right_triangle(0.25))
    K1 = local_stiffness_batch(right_triangle(0.25, shift=(0.375, 0.5)))
    npt.assert_array_equal(K0, K1)


def test_stiffness_row_sums_exactly_zero():
    # constants lie in the P1 kernel; on dyadic grids this holds bitwise
    m = build_unit_square_mesh(3)
    K = local_stiffness_batch(m)
    assert np.all(K.sum(axis=1) == 0.0)
    assert np.all(K.sum(axis=0) == 0.0)


def test_stiffness_symmetric():
    m = build_unit_square_mesh(2)
    K = local_stiffness_batch(m)
    npt.assert_array_equal(K, K.transpose(1, 0, 2))


def test_mass_pattern():
    m = build_unit_square_mesh(2)
    area = 0.5 * 0.25**2
    M = local_mass_batch(m)
    expected = area / 12.0 * (np.ones((3, 3)) + np.eye(3))
    for e in range(m.n_elements):
        npt.assert_array_equal(M[:, :, e], expected)


def test_mass_eigenvalues():
    M = local_mass_batch(right_triangle(1.0))[:, :, 0]
    eigs = np.linalg.eigvalsh(M)
    npt.assert_allclose(eigs, [0.5 / 12, 0.5 / 12, 2.0 / 12], rtol=1e-13)


def test_mass_total_is_domain_area():
    for level in (1, 3, 4):
        M = local_mass_batch(build_unit_square_mesh(level))
        assert abs(M.sum() - 1.0) <= 1e-14


def test_mass_scales_with_area():
    M1 = local_mass_batch(right_triangle(0.25))
    M2 = local_mass_batch(right_triangle(0.5))
    npt.assert_array_equal(M2, 4.0 * M1)


def test_load_constant_source():
    m = build_unit_square_mesh(3)
    area = 0.5 * 0.25**3
    b = local_load_batch(m, lambda x, y: np.ones_like(x))
    npt.assert_allclose(b, np.full((3, m.n_elements), area / 3.0), rtol=1e-15)
    assert abs(b.sum() - 1.0) <= 1e-14

    assert np.all(local_load_batch(m, lambda x, y: np.zeros_like(x)) == 0.0)


def test_load_centroid_rule():
    # element 0 at level 1 has corners (0,0), (.5,0), (.5,.5)
    m = build_unit_square_mesh(1)
    b = local_load_batch(m, lambda x, y: x + y)
    centroid_val = (0.0 + 0.5 + 0.5) / 3 + (0.0 + 0.0 + 0.5) / 3
    npt.assert_allclose(b[:, 0], centroid_val * 0.125 / 3.0, rtol=1e-15)


def test_load_scalar_broadcast():
    m = build_unit_square_mesh(1)
    b = local_load_batch(m, lambda x, y: 2.0)
    npt.assert_allclose(b, 2.0 * local_load_batch(m, lambda x, y: np.ones_like(x)))


def test_load_rejects_nonfinite_source():
    m = build_unit_square_mesh(1)
    with pytest.raises(ValueError):
        local_load_batch(m, lambda x, y: np.full_like(x, np.nan))


def test_combine_system():
    m = build_unit_square_mesh(2)
    K = local_stiffness_batch(m)
    M = local_mass_batch(m)
    npt.assert_array_equal(combine_system(K, M, 0.0), K)
    A = combine_system(K, M, 1.0)
    npt.assert_array_equal(A, K + M)
    npt.assert_array_equal(A, A.transpose(1, 0, 2))
    with pytest.raises(ValueError):
        combine_system(K, M[:, :, :4], 1.0)
    with pytest.raises(ValueError):
        combine_system(K, M, -0.5)


def test_degenerate_triangle_rejected():
    # positive area, but below the degeneracy cutoff
    sliver = Mesh(
        nodes=np.array([[0.0, 0.0], [1e-7, 0.0], [0.0, 2e-7]]),
        elements=np.array([[0, 1, 2]]),
        boundary_nodes=np.array([0]),
    )
    with pytest.raises(ValueError, match="degenerate"):
        local_stiffness_batch(sliver)


def test_batch_validation():
    m = build_unit_square_mesh(1)
    K = local_stiffness_batch(m)
    M = local_mass_batch(m)
    idx = build_index_arrays(m)
    b = local_load_batch(m, lambda x, y: np.ones_like(x))
    with pytest.raises(ValueError):
        ElementBatch(K_e=K, M_e=M, A_e=K, b_e=b[:, :3], nu=0.0, index=idx)
    with pytest.raises(ValueError):
        ElementBatch(K_e=K, M_e=M, A_e=K, b_e=b, nu=-1.0, index=idx)


def test_build_element_batch_defaults():
    m = build_unit_square_mesh(2)
    batch = build_element_batch(m, nu=2.0)
    npt.assert_array_equal(batch.A_e, batch.K_e + 2.0 * batch.M_e)
    assert batch.nu == 2.0
    assert batch.n_elements == m.n_elements
    # default source is f = 1
    npt.assert_array_equal(batch.b_e,
                           local_load_batch(m, lambda x, y: np.ones_like(x)))
