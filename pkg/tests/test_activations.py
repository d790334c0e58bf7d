import cmath
import warnings

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cxbench import activations as A
from cxbench.cnum import Cplx
from cxbench.wirtinger import FlaggedSampleError

coord = st.floats(-3, 3, allow_nan=False)
phi = st.floats(0, 2 * np.pi)


def test_crelu_and_zrelu_examples():
    assert A.apply("crelu", 1 - 2j) == 1
    assert A.apply("crelu", -1 + 2j) == 2j
    assert A.apply("zrelu", 1 + 2j) == 1 + 2j
    assert A.apply("zrelu", 1 - 2j) == 0
    # closed quadrant keeps the boundary
    assert A.apply("zrelu", 0 + 2j) == 2j


def test_modrelu_and_cardioid_examples():
    assert A.apply("modrelu", 3 + 4j, bias=-1.0) == pytest.approx((3 + 4j) * 4 / 5)
    assert A.apply("modrelu", 0.3 + 0.4j, bias=-1.0) == 0
    assert A.apply("cardioid", 2.0) == pytest.approx(2.0)
    assert A.apply("cardioid", -2.0) == pytest.approx(0.0)
    assert A.apply("cardioid", 2j) == pytest.approx(1j)


def test_siglog_and_ctanh_against_cmath():
    assert A.apply("siglog", 3 + 4j) == pytest.approx((3 + 4j) / 6)
    for z in (0.3 + 0.2j, -1.1 + 0.7j, 2 - 1.3j):
        assert A.apply("ctanh", z) == pytest.approx(cmath.tanh(z), rel=1e-12)


def test_apply_accepts_cplx_and_rejects_stray_bias():
    out = A.apply("crelu", Cplx(1.0, -1.0))
    assert isinstance(out, Cplx) and complex(out) == 1
    with pytest.raises(ValueError):
        A.apply("crelu", 1j, bias=0.5)
    with pytest.raises(ValueError):
        A.check_id("gelu")


def test_ctanh_clamps_near_pole():
    with pytest.warns(A.ClampWarning):
        out = A.jacobian("ctanh", np.array([0.0]), np.array([np.pi / 2]))
    assert np.all(np.isfinite(out[0]))


@pytest.mark.parametrize("act", A.COMPLEX_ACTIVATIONS)
@given(x=coord, y=coord)
def test_jacobian_matches_central_differences(act, x, y):
    b = -0.5 if act == "modrelu" else None
    z = complex(x, y)
    assume(A.kink_distance(act, z, b or 0.0) > 1e-2)
    h = 1e-6
    _, _, ux, uy, vx, vy, _, _ = A.jacobian(act, x, y, b)
    fx = (A.evaluate(act, z + h, b) - A.evaluate(act, z - h, b)) / (2 * h)
    fy = (A.evaluate(act, z + 1j * h, b) - A.evaluate(act, z - 1j * h, b)) / (2 * h)
    np.testing.assert_allclose([ux, vx, uy, vy], [fx.real, fx.imag, fy.real, fy.imag], atol=1e-5)


@given(x=coord, y=coord)
def test_modrelu_bias_partials(x, y):
    z = complex(x, y)
    b, h = -0.4, 1e-6
    assume(A.kink_distance("modrelu", z, b) > 1e-2)
    *_, ub, vb = A.jacobian("modrelu", x, y, b)
    fb = (A.evaluate("modrelu", z, b + h) - A.evaluate("modrelu", z, b - h)) / (2 * h)
    np.testing.assert_allclose([ub, vb], [fb.real, fb.imag], atol=1e-6)


def test_cr_residual_values():
    # ctanh is holomorphic; crelu off-axis is the identity or a projection
    assert A.cr_residual("ctanh", 0.4 + 0.3j) <= 1e-8
    assert A.cr_residual("crelu", 1 + 1j) <= 1e-8
    # Re(z) has d/dzbar = 1/2
    assert A.cr_residual("crelu", 1 - 1j) == pytest.approx(0.5, abs=1e-8)
    with pytest.raises(FlaggedSampleError):
        A.cr_residual("crelu", 1e-5 + 1j)
    arr = A.cr_residual("zrelu", np.array([1e-5 + 1j, 1 + 1j]))
    assert np.isnan(arr[0]) and arr[1] <= 1e-8


@pytest.mark.parametrize("act", sorted(A.PHASE_EQUIVARIANT))
@given(r=st.floats(0.01, 5), theta=phi, rot=phi)
def test_phase_equivariant_activations(act, r, theta, rot):
    bias = -0.3 if act == "modrelu" else None
    assert A.phase_equivariance_defect(act, r * cmath.exp(1j * theta), rot, bias) <= 1e-12


def test_crelu_is_not_phase_equivariant():
    assert A.phase_equivariance_defect("crelu", 1 + 0.5j, np.pi / 2) > 0.1


@given(x=st.floats(0.01, 3), y=st.floats(0.01, 3), sx=st.sampled_from([1, -1]), sy=st.sampled_from([1, -1]))
def test_zrelu_is_piecewise_holomorphic(x, y, sx, sy):
    # identity on the open first quadrant, constant 0 on the others
    assert A.cr_residual("zrelu", complex(sx * x, sy * y), guard=1e-3) <= 1e-8


def test_scan_grid_shape():
    g = A.scan_grid()
    assert g.shape == (121, 121)
    assert g[0, 0] == -3 - 3j and g[-1, -1] == 3 + 3j
    with pytest.raises(ValueError):
        A.trilemma_scan("crelu", A.scan_grid(step=0.5), init_seeds=())


def test_trilemma_pattern():
    reps = {a: A.trilemma_scan(a, init_seeds=()) for a in A.COMPLEX_ACTIVATIONS}
    assert reps["ctanh"].cr_median <= 1e-8 and not reps["ctanh"].bounded_on_grid
    assert reps["siglog"].bounded_on_grid and reps["siglog"].cr_median > 1e-3
    for act in ("crelu", "modrelu", "cardioid", "siglog"):
        assert reps[act].bounded_on_grid and reps[act].cr_median > 1e-3
    assert all(r.cr_median <= r.cr_p95 for r in reps.values())
    text = A.trilemma_csv(reps.values())
    assert text.splitlines()[0] == ",".join(A.TRILEMMA_FIELDS)
    assert len(text.splitlines()) == 1 + len(reps)


def test_init_grad_norms_reproducible():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", A.ClampWarning)
        a = A.init_grad_norms("crelu", (0, 1))
        b = A.init_grad_norms("crelu", (0, 1))
    assert a.tobytes() == b.tobytes() and np.all(a > 0)
