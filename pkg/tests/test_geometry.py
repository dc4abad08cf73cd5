"""Geometry kernel tests: oracles, frozen values, and invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scherklab.errors import InvalidForModel, NonFinite, StepCountTooSmall
from scherklab.geometry import (
    GroupPoint,
    ModelMatrix,
    christoffel_at,
    covariant_derivative_frame,
    exp_at,
    exp_batch,
    frame_connection,
    geodesic,
    group_multiply,
    integrate_geodesic,
    left_frame,
    metric_at,
    metric_coeffs,
    metric_coeffs_dz,
)
from scherklab.isometry import (
    HorizontalRotationParallelX,
    HorizontalRotationParallelY,
    LeftTranslation,
    VerticalRotation,
    apply_isometry,
    verify_isometry,
)

HEIS = ModelMatrix.heisenberg()
SOL = ModelMatrix.sol()
EUC = ModelMatrix.euclidean()

entries = st.floats(min_value=-1.5, max_value=1.5, allow_nan=False)
heights = st.floats(min_value=-1.5, max_value=1.5, allow_nan=False)


def series_exp(A, z, terms=40):
    """Plain truncated Taylor series, the independent oracle for exp_at."""
    M = z * np.asarray(A, dtype=float)
    out = np.eye(2)
    term = np.eye(2)
    for k in range(1, terms):
        term = term @ M / k
        out = out + term
    return out


# ---- exponential ----


def test_exp_identity_at_zero():
    for model in (HEIS, SOL, EUC, ModelMatrix(0.3, -0.2, 0.9, -1.1)):
        assert np.allclose(exp_at(model, 0.0).array, np.eye(2), atol=1e-15)


def test_exp_sol_frozen_value():
    E = exp_at(SOL, 1.0)
    assert E.a11 == pytest.approx(1.54308, abs=1e-5)
    assert E.a12 == pytest.approx(1.17520, abs=1e-5)
    assert E.a21 == pytest.approx(1.17520, abs=1e-5)
    assert E.a22 == pytest.approx(1.54308, abs=1e-5)


def test_exp_heisenberg_is_polynomial():
    E = exp_at(HEIS, 3.0)
    assert np.allclose(E.array, [[1.0, 3.0], [0.0, 1.0]], atol=1e-15)


def test_exp_matches_series_oracle():
    rng = np.random.default_rng(0)
    for _ in range(300):
        model = ModelMatrix(*rng.uniform(-1.5, 1.5, size=4))
        z = rng.uniform(-1.5, 1.5)
        assert np.abs(exp_at(model, z).array - series_exp(model.array, z)).max() < 1e-12


def test_exp_trig_case():
    model = ModelMatrix(0.0, 1.0, -1.0, 0.0)
    E = exp_at(model, 0.8)
    expected = [[math.cos(0.8), math.sin(0.8)], [-math.sin(0.8), math.cos(0.8)]]
    assert np.allclose(E.array, expected, atol=1e-14)
    assert np.abs(E.array - series_exp(model.array, 0.8)).max() < 1e-13


@given(b=entries, c=entries, z=heights)
@settings(max_examples=60, deadline=None)
def test_exp_cocycle_antidiagonal(b, c, z):
    model = ModelMatrix(0.0, b, c, 0.0)
    lhs = exp_at(model, z).array @ exp_at(model, 0.7).array
    rhs = exp_at(model, z + 0.7).array
    assert np.abs(lhs - rhs).max() < 1e-10


@given(a=entries, b=entries, c=entries, d=entries, z=heights)
@settings(max_examples=60, deadline=None)
def test_exp_determinant_identity(a, b, c, d, z):
    model = ModelMatrix(a, b, c, d)
    det = exp_at(model, z).det
    assert det == pytest.approx(math.exp(z * model.trace), rel=1e-10)


def test_exp_batch_matches_exp_at():
    rng = np.random.default_rng(7)
    zs = rng.uniform(-2.0, 2.0, size=64)
    for model in (HEIS, SOL, EUC, ModelMatrix(0.4, 1.2, -0.3, -0.4), ModelMatrix(1.0, 0.0, 0.0, 0.0)):
        batch = exp_batch(model, zs)
        for z, E in zip(zs, batch):
            assert np.abs(E - exp_at(model, float(z)).array).max() < 1e-12


def test_exp_rejects_non_finite():
    with pytest.raises(NonFinite):
        exp_at(HEIS, float("nan"))


# ---- group law ----


def test_group_identity():
    p = GroupPoint(0.3, -0.8, 1.1)
    e = GroupPoint(0.0, 0.0, 0.0)
    assert np.allclose(group_multiply(SOL, e, p).array, p.array, atol=1e-15)
    assert np.allclose(group_multiply(SOL, p, e).array, p.array, atol=1e-15)


def test_group_heisenberg_example():
    out = group_multiply(HEIS, (1.0, 0.0, 1.0), (0.0, 1.0, 0.0))
    assert np.allclose(out.array, [2.0, 1.0, 1.0], atol=1e-15)


@given(z1=heights, z2=heights, z3=heights, x=entries, y=entries)
@settings(max_examples=40, deadline=None)
def test_group_associativity(z1, z2, z3, x, y):
    g1 = (x, y, z1)
    g2 = (y, -x, z2)
    g3 = (0.4, 0.2, z3)
    for model in (HEIS, SOL):
        lhs = group_multiply(model, group_multiply(model, g1, g2), g3).array
        rhs = group_multiply(model, g1, group_multiply(model, g2, g3)).array
        assert np.abs(lhs - rhs).max() < 1e-12


# ---- metric and frame ----


def test_metric_euclidean_is_identity():
    g = metric_at(EUC, (0.4, -2.0, 3.7)).matrix
    assert np.allclose(g, np.eye(3), atol=1e-15)


def test_metric_heisenberg_frozen():
    g = metric_at(HEIS, (5.0, -3.0, 1.0)).matrix
    assert g[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert g[1, 1] == pytest.approx(2.0, abs=1e-12)
    assert g[0, 1] == pytest.approx(-1.0, abs=1e-12)
    assert g[2, 2] == pytest.approx(1.0, abs=1e-12)


def test_metric_sol_frozen():
    g = metric_at(SOL, (0.0, 0.0, 1.0)).matrix
    assert g[0, 0] == pytest.approx(math.cosh(2.0), abs=1e-5)
    assert g[1, 1] == pytest.approx(math.cosh(2.0), abs=1e-5)
    assert g[0, 1] == pytest.approx(-math.sinh(2.0), abs=1e-5)


def test_metric_depends_only_on_height():
    rng = np.random.default_rng(1)
    for _ in range(20):
        model = ModelMatrix(*rng.uniform(-1.0, 1.0, size=4))
        z = rng.uniform(-1.0, 1.0)
        g1 = metric_at(model, (rng.uniform(-5, 5), rng.uniform(-5, 5), z)).matrix
        g2 = metric_at(model, (rng.uniform(-5, 5), rng.uniform(-5, 5), z)).matrix
        assert np.abs(g1 - g2).max() < 1e-15


def test_frame_identity_at_origin():
    fr = left_frame(SOL, (0.0, 0.0, 0.0))
    assert np.allclose(fr.E1.components, [1, 0, 0], atol=1e-15)
    assert np.allclose(fr.E2.components, [0, 1, 0], atol=1e-15)
    assert np.allclose(fr.E3.components, [0, 0, 1], atol=1e-15)


def test_frame_heisenberg_frozen():
    fr = left_frame(HEIS, (0.0, 0.0, 2.0))
    assert np.allclose(fr.E2.components, [2.0, 1.0, 0.0], atol=1e-14)


@given(a=entries, b=entries, c=entries, d=entries, z=heights)
@settings(max_examples=60, deadline=None)
def test_frame_orthonormal(a, b, c, d, z):
    model = ModelMatrix(a, b, c, d)
    p = (0.3, -0.7, z)
    g = metric_at(model, p).matrix
    fr = left_frame(model, p)
    E = np.column_stack([fr.E1.components, fr.E2.components, fr.E3.components])
    gram = E.T @ g @ E
    assert np.abs(gram - np.eye(3)).max() < 1e-12


def test_frame_orthonormal_at_100_random_points():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        model = ModelMatrix(*rng.uniform(-1.5, 1.5, size=4))
        p = rng.uniform(-1.5, 1.5, size=3)
        g = metric_at(model, p).matrix
        fr = left_frame(model, p)
        E = np.column_stack([fr.E1.components, fr.E2.components, fr.E3.components])
        worst = max(worst, float(np.abs(E.T @ g @ E - np.eye(3)).max()))
    assert worst < 1e-12


# ---- connection ----


def fd_christoffel(model, p, step=1e-5):
    """Finite-difference Christoffels straight from metric_at, the oracle."""
    p = np.asarray(p, dtype=float)

    def g_at(q):
        return metric_at(model, q).matrix

    dg = np.zeros((3, 3, 3))
    for a in range(3):
        e = np.zeros(3)
        e[a] = step
        dg[a] = (g_at(p + e) - g_at(p - e)) / (2.0 * step)
    ginv = np.linalg.inv(g_at(p))
    gamma = np.zeros((3, 3, 3))
    for k in range(3):
        for i in range(3):
            for j in range(3):
                s = 0.0
                for l in range(3):
                    s += ginv[k, l] * (dg[i][j, l] + dg[j][i, l] - dg[l][i, j])
                gamma[k, i, j] = 0.5 * s
    return gamma


def test_christoffel_euclidean_zero():
    assert np.abs(christoffel_at(EUC, (1.0, 2.0, 3.0))).max() == 0.0


def test_christoffel_against_finite_differences():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(50):
        model = ModelMatrix(*rng.uniform(-1.5, 1.5, size=4))
        p = rng.uniform(-1.5, 1.5, size=3)
        diff = np.abs(christoffel_at(model, p) - fd_christoffel(model, p)).max()
        worst = max(worst, float(diff))
    assert worst < 1e-6


def test_christoffel_symmetric_lower_indices():
    gamma = christoffel_at(SOL, (0.0, 0.0, 0.9))
    assert np.abs(gamma - gamma.transpose(0, 2, 1)).max() < 1e-15


def test_connection_table_heisenberg_entry():
    # The derivative of E2 along E1 should be half of E3.
    got = covariant_derivative_frame(HEIS, (0.2, 0.4, 1.3))
    assert np.allclose(got[0, 1], [0.0, 0.0, 0.5], atol=1e-10)


def test_connection_table_all_entries_random_models():
    rng = np.random.default_rng(3)
    for _ in range(20):
        model = ModelMatrix(*rng.uniform(-1.5, 1.5, size=4))
        table = frame_connection(model)
        z = rng.uniform(-1.2, 1.2)
        got = covariant_derivative_frame(model, (rng.uniform(-2, 2), rng.uniform(-2, 2), z))
        assert np.abs(got - table).max() < 1e-10


def test_metric_coeffs_dz_matches_fd():
    rng = np.random.default_rng(4)
    for _ in range(20):
        model = ModelMatrix(*rng.uniform(-1.5, 1.5, size=4))
        z = rng.uniform(-1.2, 1.2)
        step = 1e-6
        fd = [
            (u - v) / (2 * step)
            for u, v in zip(metric_coeffs(model, z + step), metric_coeffs(model, z - step))
        ]
        an = metric_coeffs_dz(model, z)
        assert np.abs(np.array(an, dtype=float) - np.array(fd)).max() < 1e-7


# ---- geodesics ----


def test_vertical_line_is_geodesic():
    pts = geodesic(SOL, (0.5, -0.3, 0.0), (0.0, 0.0, 1.0), 2.0, 200)
    final = pts[-1]
    assert abs(final.x - 0.5) < 1e-12
    assert abs(final.y + 0.3) < 1e-12
    assert abs(final.z - 2.0) < 1e-12


def test_horizontal_axis_geodesic_antidiagonal():
    # With zero diagonal the x-axis direction stays straight in the z = 0 leaf.
    pts = geodesic(SOL, (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), 1.0, 500)
    arr = np.array([q.array for q in pts])
    assert np.abs(arr[:, 1]).max() < 1e-8
    assert np.abs(arr[:, 2]).max() < 1e-8
    assert abs(arr[-1, 0] - 1.0) < 1e-8


def test_geodesic_speed_conservation():
    rng = np.random.default_rng(5)
    p0 = rng.uniform(-1, 1, size=3)
    v0 = rng.normal(size=3)
    pos, vel = integrate_geodesic(SOL, p0, v0, 1.0, 1000)
    speeds = np.array(
        [math.sqrt(v @ metric_at(SOL, p).matrix @ v) for p, v in zip(pos, vel)]
    )
    drift = (speeds.max() - speeds.min()) / speeds[0]
    assert drift < 1e-8


def test_geodesic_step_count_guard():
    with pytest.raises(StepCountTooSmall):
        geodesic(SOL, (0, 0, 0), (1, 0, 0), 1.0, 1)


# ---- isometries ----


def test_vertical_rotation_formula():
    img, lin = apply_isometry(SOL, VerticalRotation(1.0, 2.0), (0.0, 0.0, 5.0))
    assert np.allclose(img.array, [2.0, 4.0, 5.0], atol=1e-15)
    assert np.allclose(lin, np.diag([-1.0, -1.0, 1.0]), atol=1e-15)


def test_horizontal_rotation_formula():
    img, _ = apply_isometry(SOL, HorizontalRotationParallelY(0.0), (1.0, 2.0, 3.0))
    assert np.allclose(img.array, [-1.0, 2.0, -3.0], atol=1e-15)
    img, _ = apply_isometry(SOL, HorizontalRotationParallelX(0.0), (1.0, 2.0, 3.0))
    assert np.allclose(img.array, [1.0, -2.0, -3.0], atol=1e-15)


def test_horizontal_rotation_rejected_for_diagonal_model():
    model = ModelMatrix(1.0, 0.0, 0.0, 0.0)
    with pytest.raises(InvalidForModel):
        apply_isometry(model, HorizontalRotationParallelY(0.0), (0, 0, 0))


def test_horizontal_rotation_raw_defect_negative_control():
    model = ModelMatrix(1.0, 0.0, 0.0, 0.0)
    defect = verify_isometry(model, HorizontalRotationParallelY(0.0), 100)
    assert defect > 0.1


def test_valid_isometries_have_tiny_defect():
    cases = [
        (SOL, VerticalRotation(0.3, -0.7)),
        (HEIS, VerticalRotation(0.0, 0.0)),
        (SOL, HorizontalRotationParallelY(0.5)),
        (SOL, HorizontalRotationParallelX(-0.25)),
        (HEIS, HorizontalRotationParallelX(0.0)),
        (ModelMatrix(0.7, 0.2, -0.4, -0.1), VerticalRotation(1.0, 1.0)),
        (SOL, LeftTranslation(GroupPoint(0.4, -0.2, 0.8))),
        (ModelMatrix(0.7, 0.2, -0.4, -0.1), LeftTranslation(GroupPoint(-1.0, 0.3, -0.6))),
    ]
    for model, iso in cases:
        assert verify_isometry(model, iso, 100) < 1e-10


def test_killing_translations_have_tiny_defect():
    # Horizontal left translations realize the flow of the Killing field.
    for t in (0.1, 0.5, 2.0):
        iso = LeftTranslation(GroupPoint(t * 1.0, t * 1.0, 0.0))
        assert verify_isometry(HEIS, iso, 60) < 1e-10


def test_left_translation_differential_matches_group_multiply():
    g = GroupPoint(0.3, 1.2, -0.7)
    p = (0.5, -0.4, 0.9)
    img, lin = apply_isometry(SOL, LeftTranslation(g), p)
    assert np.allclose(img.array, group_multiply(SOL, g, p).array, atol=1e-14)
    step = 1e-6
    for a in range(3):
        e = np.zeros(3)
        e[a] = step
        fd = (
            group_multiply(SOL, g, np.asarray(p) + e).array
            - group_multiply(SOL, g, np.asarray(p) - e).array
        ) / (2 * step)
        assert np.abs(fd - lin[:, a]).max() < 1e-8


def test_sol_family_parameter_guard():
    with pytest.raises(ValueError):
        ModelMatrix.sol_family(0.5)
    m = ModelMatrix.sol_family(2.0)
    assert m.b == 2.0 and m.c == 0.5 and m.antidiagonal
