"""Frame integration, surface validation and mesh export."""

import math
import os

import numpy as np
import pytest
from scipy import ndimage

from pssurf.catalog import ConstraintError, FamilyId, build
from pssurf.expr import Const, parse, simplify
from pssurf.frame import (FrameState, export_mesh, frame_ode_coefficients,
                          integrate_frame, validate_surface)
from pssurf.sff import closed_form
from pssurf.sff.core import DomainStrip, SecondFundamentalForm
from pssurf.solutions import SolutionGrid, sg_kink


@pytest.fixture(scope="module")
def sg():
    spec = build(FamilyId.SG_BASIC, {})
    return spec.triple, closed_form(FamilyId.SG_BASIC, {})


@pytest.fixture(scope="module")
def kink():
    return sg_kink(1.0)


def kink_grid(kink, x0, x1, h):
    n = int(round((x1 - x0) / h)) + 1
    return SolutionGrid.from_solution(kink, x0, x0, h, h, n, n)


# --------------------------------------------------------------- states


def test_identity_state_orthonormal():
    s = FrameState.identity()
    assert s.orthonormality_defect() < 1e-15
    assert np.allclose(np.cross(s.e1, s.e2), s.e3)


def test_non_orthonormal_seed_rejected(sg, kink):
    tr, sff = sg
    grid = kink_grid(kink, -0.5, 0.5, 0.25)
    bad = FrameState(X=np.zeros(3), e1=np.array([1.0, 0, 0]),
                     e2=np.array([0.5, 1.0, 0]), e3=np.array([0, 0, 1.0]))
    with pytest.raises(ValueError, match="orthonormal"):
        integrate_frame(tr, sff, grid, seed=bad)


# --------------------------------------- node coefficients and convention


def test_kink_center_coefficients(sg):
    tr, sff = sg
    Mx, Mt = frame_ode_coefficients(tr, sff, {"z0": math.pi, "z1": 1.0,
                                              "w1": 1.0})
    # omega1 = cos(u/2) dx: at u = pi the dx coefficient collapses
    assert abs(Mx[0, 1]) < 1e-12
    assert Mx[0, 2] == pytest.approx(1.0)   # omega2 dx coeff sin(pi/2)
    assert Mt[0, 2] == pytest.approx(-1.0)


@pytest.mark.parametrize("u", [0.7, 2.1, 4.0])
def test_sg_second_form_row(sg, u):
    # w31 = a*w1 + b*w2 reduces to sin(u/2)(dx + dt) for the basic table
    tr, sff = sg
    Mx, Mt = frame_ode_coefficients(tr, sff, {"z0": u, "z1": 0.3, "w1": 0.2})
    assert Mx[1, 3] == pytest.approx(math.sin(u / 2.0))
    assert Mt[1, 3] == pytest.approx(math.sin(u / 2.0))


def test_connection_block_structure(sg):
    tr, sff = sg
    Mx, Mt = frame_ode_coefficients(tr, sff, {"z0": 1.0, "z1": 0.5,
                                              "w1": -0.5})
    for M in (Mx, Mt):
        assert np.allclose(M[:, 0], 0.0)           # nothing feeds back into X
        assert np.allclose(M[1:, 1:], -M[1:, 1:].T)  # rotation generator


def test_rotation_coefficient_sign_convention(sg):
    # the e1' coefficient along e2 carries the third form with a plus sign
    tr, sff = sg
    u = 1.3
    Mx, Mt = frame_ode_coefficients(tr, sff, {"z0": u, "z1": 0.4, "w1": 0.7})
    assert Mx[1, 2] == pytest.approx(0.4 / 2.0)    # f31 = z1/2
    assert Mt[1, 2] == pytest.approx(-0.7 / 2.0)   # f32 = -w1/2
    assert Mx[2, 1] == pytest.approx(-0.4 / 2.0)


def test_degenerate_node_rejected(sg):
    tr, sff = sg
    with pytest.raises(ConstraintError, match="degenerate"):
        frame_ode_coefficients(tr, sff, {"z0": 0.0, "z1": 1.0, "w1": 1.0},
                               eps_deg=0.05)
    # without a threshold the caller gets the raw blocks
    frame_ode_coefficients(tr, sff, {"z0": 0.0, "z1": 1.0, "w1": 1.0})


# ----------------------------------------------------------- integration


def test_kink_masks_degenerate_band(sg, kink):
    tr, sff = sg
    grid = kink_grid(kink, -3.0, 3.0, 0.1)
    field = integrate_frame(tr, sff, grid)
    u = grid["u"]
    expected = np.abs(np.sin(u)) > 0.1 * np.abs(np.sin(u)).max()
    assert np.array_equal(field.mask, expected)
    # the u = pi band splits the window; only the seed side is integrated
    labels, n = ndimage.label(field.mask)
    assert n == 2
    assert np.array_equal(field.valid, labels == labels[field.seed_index])
    assert field.count_valid() < int(field.mask.sum())


def test_orthonormal_everywhere(sg, kink):
    tr, sff = sg
    grid = kink_grid(kink, -1.0, 1.0, 0.05)
    field = integrate_frame(tr, sff, grid)
    E = field.frames[field.valid]
    gram = np.einsum("nij,nkj->nik", E, E)
    assert np.abs(gram - np.eye(3)).max() < 1e-6
    assert np.abs(np.cross(E[:, 0], E[:, 1]) - E[:, 2]).max() < 1e-12


def test_drift_small_at_standard_step(sg, kink):
    tr, sff = sg
    grid = kink_grid(kink, -1.0, 1.0, 0.02)
    field = integrate_frame(tr, sff, grid)
    assert field.drift_max < 1e-8


def test_path_residual_second_order(sg, kink):
    tr, sff = sg
    res = {}
    for h in (0.1, 0.05):
        field = integrate_frame(tr, sff, kink_grid(kink, -1.5, 1.5, h))
        res[h] = float(np.nanmax(field.path_residual))
    rate = math.log2(res[0.1] / res[0.05])
    assert 1.7 <= rate <= 2.3


def test_seed_rotation_equivariance(sg, kink):
    tr, sff = sg
    grid = kink_grid(kink, -1.0, 1.0, 0.1)
    base = integrate_frame(tr, sff, grid)
    th = 0.7
    R = np.array([[math.cos(th), math.sin(th), 0.0],
                  [-math.sin(th), math.cos(th), 0.0],
                  [0.0, 0.0, 1.0]])
    shift = np.array([2.0, -1.0, 0.5])
    seed = FrameState(X=shift, e1=R[0], e2=R[1], e3=R[2])
    moved = integrate_frame(tr, sff, grid, seed=seed)
    v = base.valid
    assert np.array_equal(v, moved.valid)
    assert np.allclose(moved.X[v], base.X[v] @ R + shift, atol=1e-12)


def test_custom_seed_index(sg, kink):
    tr, sff = sg
    grid = kink_grid(kink, -1.0, 1.0, 0.1)
    field = integrate_frame(tr, sff, grid, seed_index=(3, 4))
    assert field.seed_index == (3, 4)
    assert np.allclose(field.X[3, 4], 0.0)
    with pytest.raises(ConstraintError, match="seed"):
        degenerate = np.argwhere(~field.mask)[0]
        integrate_frame(tr, sff, grid, seed_index=tuple(degenerate))


def test_strip_confines_mask(sg, kink):
    tr, sff = sg
    strip = DomainStrip(sign=1, p=Const(1.0), q=Const(0.0), l=4.0,
                        gamma_im=1.0)
    clipped = SecondFundamentalForm(sff.a, sff.b, sff.c, strip=strip,
                                    params={"l": 4.0, "gamma_im": 1.0})
    grid = kink_grid(kink, -1.0, 1.0, 0.05)
    field = integrate_frame(tr, sff, grid)
    confined = integrate_frame(tr, clipped, grid)
    xx, _ = grid.mesh()
    # positivity of the strip form pins x to (-0.659, 0.659) for l=4, gi=1
    assert confined.valid.any()
    assert np.abs(xx[confined.valid]).max() < 0.659
    assert field.count_valid() > confined.count_valid()


def test_zero_size_grid(sg):
    tr, sff = sg
    grid = SolutionGrid(x0=0.0, t0=0.0, hx=0.1, ht=0.1, nx=0, nt=0,
                        values={n: np.zeros((0, 0)) for n in
                                ("u", "u_x", "u_t", "u_xx", "u_xt", "u_tt")})
    field = integrate_frame(tr, sff, grid)
    assert field.count_valid() == 0
    assert not field.mask.any()


def test_fully_degenerate_grid_empty(sg):
    tr, sff = sg
    shape = (6, 6)
    vals = {n: np.zeros(shape) for n in
            ("u", "u_x", "u_t", "u_xx", "u_xt", "u_tt")}
    grid = SolutionGrid(x0=0.0, t0=0.0, hx=0.1, ht=0.1, nx=6, nt=6,
                        values=vals)
    field = integrate_frame(tr, sff, grid)   # sin(u) = 0 everywhere
    assert field.count_valid() == 0


def test_deterministic_output(sg, kink):
    tr, sff = sg
    grid = kink_grid(kink, -1.0, 1.0, 0.1)
    f1 = integrate_frame(tr, sff, grid)
    f2 = integrate_frame(tr, sff, grid)
    assert np.array_equal(f1.X, f2.X, equal_nan=True)
    assert np.array_equal(f1.path_residual, f2.path_residual, equal_nan=True)


# ------------------------------------------------------------ validation


def test_kink_surface_diagnostics(sg, kink):
    tr, sff = sg
    grid = kink_grid(kink, -1.0, 1.0, 0.02)
    field = integrate_frame(tr, sff, grid)
    diag = validate_surface(field, tr, sff)
    assert diag.mean_abs_k_plus_1 < 1e-2
    assert diag.max_abs_k_plus_1 < 5e-2
    assert diag.metric_max_rel < 1e-3
    assert diag.drift_max < 1e-8
    assert 0.0 < diag.mask_fraction <= 1.0
    assert len(diag.lines()) == 6


def test_gauss_map_matches_normal(sg, kink):
    # normalized FD cross product: conditioning needs a safe margin from
    # the degenerate band, hence the raised threshold
    tr, sff = sg
    grid = kink_grid(kink, -1.5, 1.5, 0.02)
    field = integrate_frame(tr, sff, grid, eps_deg=0.3)
    diag = validate_surface(field, tr, sff)
    assert diag.normal_max_err < 1e-3


def test_corrupting_b_breaks_compatibility(sg, kink):
    tr, sff = sg
    grid = kink_grid(kink, -1.0, 1.0, 0.05)
    base = integrate_frame(tr, sff, grid)
    bad = SecondFundamentalForm(sff.a, simplify(parse("0.1")), sff.c,
                                jet_order=sff.jet_order, label="corrupted")
    broken = integrate_frame(tr, bad, grid)
    r0 = float(np.nanmax(base.path_residual))
    r1 = float(np.nanmax(broken.path_residual))
    assert r1 >= 10.0 * r0


def test_flipped_rotation_sign_detected(sg, kink):
    # negating the third row flips the tangent rotation coefficient; the
    # connection stops being flat and the path residual jumps
    from pssurf.forms import PssTriple
    tr, sff = sg
    rows = [[tr.f(1, 1), tr.f(1, 2)],
            [tr.f(2, 1), tr.f(2, 2)],
            [simplify(parse("-(z1/2)")), simplify(parse("w1/2"))]]
    flipped = PssTriple.from_matrix(rows, ctx=tr.ctx, params=tr.params,
                                    ranges=tr.ranges, label="flipped")
    grid = kink_grid(kink, -1.0, 1.0, 0.05)
    base = integrate_frame(tr, sff, grid)
    wrong = integrate_frame(flipped, sff, grid)
    assert float(np.nanmax(wrong.path_residual)) >= \
        10.0 * float(np.nanmax(base.path_residual))


def test_flat_coefficients_flagged(sg, kink):
    tr, _ = sg
    zero = Const(0.0)
    flat = SecondFundamentalForm(zero, zero, zero, jet_order=0, label="flat")
    grid = kink_grid(kink, -1.0, 1.0, 0.05)
    field = integrate_frame(tr, flat, grid)
    diag = validate_surface(field, tr, flat)
    # the image is planar, so K sits near 0, far from -1
    assert diag.mean_abs_k_plus_1 > 0.5


# ---------------------------------------------------------------- export


def full_small_field(sg, kink, n=10):
    tr, sff = sg
    h = 0.01
    grid = SolutionGrid.from_solution(kink, 0.4, 0.4, h, h, n, n)
    return integrate_frame(tr, sff, grid)


def test_export_counts(sg, kink, tmp_path):
    field = full_small_field(sg, kink)
    assert field.count_valid() == 100
    path = export_mesh(field, tmp_path / "patch.obj")
    lines = open(path).read().splitlines()
    assert sum(1 for l in lines if l.startswith("v ")) == 100
    assert sum(1 for l in lines if l.startswith("f ")) == 162
    assert os.path.exists(str(tmp_path / "patch.diag.txt"))


def test_export_masked_faces_reference_valid_only(sg, kink, tmp_path):
    tr, sff = sg
    grid = SolutionGrid.from_solution(kink, -0.45, -0.45, 0.1, 0.1, 10, 10)
    field = integrate_frame(tr, sff, grid)
    assert 0 < field.count_valid() < 100
    path = export_mesh(field, tmp_path / "masked.obj")
    lines = open(path).read().splitlines()
    nv = sum(1 for l in lines if l.startswith("v "))
    assert nv == field.count_valid()
    for l in lines:
        if l.startswith("f "):
            idx = [int(tok) for tok in l.split()[1:]]
            assert all(1 <= k <= nv for k in idx)


def test_export_empty_field(sg, tmp_path):
    tr, sff = sg
    vals = {n: np.zeros((4, 4)) for n in
            ("u", "u_x", "u_t", "u_xx", "u_xt", "u_tt")}
    grid = SolutionGrid(x0=0.0, t0=0.0, hx=0.1, ht=0.1, nx=4, nt=4,
                        values=vals)
    field = integrate_frame(tr, sff, grid)
    path = export_mesh(field, tmp_path / "empty.obj")
    text = open(path).read()
    assert "warning: empty field" in text
    assert "\nv " not in text and "\nf " not in text


def test_export_deterministic(sg, kink, tmp_path):
    field = full_small_field(sg, kink, n=6)
    diag = None
    p1 = export_mesh(field, tmp_path / "a.obj", diag)
    p2 = export_mesh(field, tmp_path / "b.obj", diag)
    assert open(p1).read() == open(p2).read()


def test_sidecar_carries_diagnostics(sg, kink, tmp_path):
    tr, sff = sg
    field = full_small_field(sg, kink)
    diag = validate_surface(field, tr, sff)
    export_mesh(field, tmp_path / "d.obj", diag)
    text = open(tmp_path / "d.diag.txt").read()
    assert "curvature" in text and "metric" in text
    assert "path-independence" in text and "mask fraction" in text
