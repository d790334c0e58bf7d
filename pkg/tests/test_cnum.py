import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cxbench.cnum import (I, J, Cplx, RealMat2, angle, as_real_matrix, cmul, commutes_with_rotations,
                          nearest_complex_scalar, rotation)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
cplx = st.builds(Cplx, finite, finite)
mats = st.builds(RealMat2, finite, finite, finite, finite)


def test_cmul_examples():
    assert cmul(Cplx(1, 2), Cplx(3, 4)) == Cplx(-5, 10)
    assert cmul(Cplx(0, 1), Cplx(1, 0)) == Cplx(0, 1)
    w = Cplx(0.3, -1.7)
    assert cmul(w, Cplx(1, 0)) == w


def test_cplx_rejects_nonfinite():
    with pytest.raises(ValueError):
        Cplx(float("nan"), 0.0)
    with pytest.raises(ValueError):
        Cplx(0.0, float("inf"))


@given(cplx, cplx)
def test_cmul_matches_python_complex(w, z):
    got = complex(cmul(w, z))
    ref = complex(w) * complex(z)
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


@given(cplx, cplx)
def test_modulus_multiplies(w, z):
    assert math.isclose(abs(cmul(w, z)), abs(w) * abs(z), rel_tol=1e-12, abs_tol=1e-12)


@given(cplx, cplx)
def test_arg_adds_mod_2pi(w, z):
    if abs(w) < 1e-6 or abs(z) < 1e-6:
        return
    d = cmul(w, z).arg - (w.arg + z.arg)
    assert abs(math.remainder(d, 2 * math.pi)) <= 1e-9


def test_arg_range_and_branch():
    assert Cplx(-1, 0).arg == pytest.approx(math.pi)
    assert Cplx(-1, -0.0).arg == pytest.approx(math.pi)
    assert angle(0) == 0
    th = angle(np.exp(1j * np.linspace(-4, 4, 101)))
    assert np.all(th > -np.pi) and np.all(th <= np.pi)


def test_real_matrix_examples():
    assert as_real_matrix(Cplx(1, 0)) == I
    assert as_real_matrix(Cplx(0, 1)) == RealMat2(0, -1, 1, 0) == J


@given(cplx, cplx)
def test_real_matrix_acts_like_cmul(w, z):
    v = as_real_matrix(w) @ z.vec()
    np.testing.assert_allclose(v, cmul(w, z).vec(), rtol=1e-12, atol=1e-9)


@given(cplx, cplx)
def test_ring_homomorphism(w1, w2):
    lhs = (as_real_matrix(w1) @ as_real_matrix(w2)).as_array()
    rhs = as_real_matrix(cmul(w1, w2)).as_array()
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-9)


def test_rotation_examples():
    assert rotation(0.0) == I
    np.testing.assert_allclose(rotation(math.pi / 2).as_array(), J.as_array(), atol=1e-15)
    np.testing.assert_allclose(rotation(math.pi / 4) @ np.array([1.0, 0.0]), [math.sqrt(2) / 2] * 2, atol=1e-15)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_rotation_group_law(a, b):
    np.testing.assert_allclose((rotation(a) @ rotation(b)).as_array(), rotation(a + b).as_array(), atol=1e-12)


def _commutes_on_grid(W: RealMat2, tol: float) -> bool:
    # independent oracle: W R_phi - R_phi W on 16 angles
    A = W.as_array()
    for phi in np.linspace(0, 2 * np.pi, 16, endpoint=False):
        c, s = np.cos(phi), np.sin(phi)
        R = np.array([[c, -s], [s, c]])
        if np.max(np.abs(A @ R - R @ A)) > tol:
            return False
    return True


def test_commutation_examples():
    assert commutes_with_rotations(I.scale(3) + J.scale(2), 1e-12)
    assert not commutes_with_rotations(RealMat2(1, 0, 0, 2), 1e-6)
    with pytest.raises(ValueError):
        commutes_with_rotations(I, 0.0)


@given(mats)
def test_projection_commutes(W):
    a, b = nearest_complex_scalar(W)
    P = I.scale(a) + J.scale(b)
    tol = 1e-9 * max(1.0, P.max_abs())
    assert commutes_with_rotations(P, tol)
    assert _commutes_on_grid(P, 4 * tol)


@given(mats)
def test_commuting_iff_near_complex_scalar(W):
    a, b = nearest_complex_scalar(W)
    dist = (W - (I.scale(a) + J.scale(b))).max_abs()
    tol = 1e-6
    if commutes_with_rotations(W, tol):
        # ||WJ - JW||_max = 2 * max(|p - s|, |q + r|) / ... bounds the distance
        assert dist <= tol
    # the grid oracle agrees with the generator test away from the boundary
    comm = (W @ J - J @ W).max_abs()
    if comm > 10 * tol:
        assert not _commutes_on_grid(W, tol)
