import pytest
import numpy as np

from utils.errors import DimensionMismatchError, EmptyInteriorError, ParameterError
from utils.lattice import InteriorMask, Truncation, build_basis, interior_mask
from utils.opalg import (AntilinearOp, LinearOp, PhaseAngle, adjoint, anti_adjoint, commutator, compose,
                         interior_residual)


def _random(rng, dim):
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


def test_phase_angle_wraps_turns():
    assert PhaseAngle(1.25).angle_turns == pytest.approx(0.25)
    assert PhaseAngle(0.25).value == pytest.approx(1j)


def test_phase_angle_fractional_power():
    lam = PhaseAngle(0.25)
    assert lam.power(0.5) == pytest.approx(np.exp(1j * np.pi / 4))
    assert lam.power(-1) == pytest.approx(-1j)


@pytest.mark.parametrize("turns", [float("nan"), float("inf")])
def test_phase_angle_rejects_non_finite(turns):
    with pytest.raises(ParameterError, match="Angle must be finite"):
        PhaseAngle(turns)


def test_linear_op_rejects_non_finite():
    with pytest.raises(ValueError):
        LinearOp(np.array([[np.nan]]))


def test_linear_op_rejects_non_square():
    with pytest.raises(DimensionMismatchError):
        LinearOp(np.zeros((2, 3)))


def test_antilinear_apply_conjugates():
    j = AntilinearOp(np.eye(2))
    assert np.allclose(j.apply(np.array([1j, 2.0])), [-1j, 2.0])


def test_compose_tracks_linearity():
    rng = np.random.default_rng(7)
    a = LinearOp(_random(rng, 3))
    j = AntilinearOp(_random(rng, 3))
    k = AntilinearOp(_random(rng, 3))
    v = rng.normal(size=3) + 1j * rng.normal(size=3)

    assert isinstance(compose(j, a), AntilinearOp)
    assert isinstance(compose(a, j), AntilinearOp)
    assert isinstance(compose(j, k), LinearOp)
    assert np.allclose(compose(j, a).apply(v), j.apply(a.apply(v)))
    assert np.allclose(compose(a, j).apply(v), a.apply(j.apply(v)))
    assert np.allclose(compose(j, k).apply(v), j.apply(k.apply(v)))


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        compose(LinearOp.identity(2), LinearOp.identity(3))


def test_anti_adjoint_inner_product_rule():
    rng = np.random.default_rng(11)
    j = AntilinearOp(_random(rng, 4))
    u = rng.normal(size=4) + 1j * rng.normal(size=4)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    # <J' u, v> = <J v, u>
    assert np.vdot(anti_adjoint(j).apply(u), v) == pytest.approx(np.vdot(j.apply(v), u))


def test_scaling_an_antilinear_op_acts_on_the_left():
    j = AntilinearOp(np.eye(1))
    assert j.scale(1j).apply(np.array([1.0])) == pytest.approx(1j)


def test_commutator_and_adjoint():
    a = LinearOp(np.array([[0, 1], [0, 0]], dtype=complex))
    assert np.allclose(adjoint(a).entries, [[0, 0], [1, 0]])
    assert np.allclose(commutator(a, adjoint(a)).entries, [[1, 0], [0, -1]])


def test_interior_residual_is_max_column_norm():
    basis = build_basis(Truncation(1))
    entries = np.zeros((basis.dim, basis.dim), dtype=complex)
    center = basis.index_of(0, 0, 1)
    edge = basis.index_of(1, 1, 1)
    entries[0, center] = 3.0
    entries[1, center] = 4.0
    entries[0, edge] = 100.0
    op = LinearOp(entries)
    assert interior_residual(op, interior_mask(basis, 1)) == pytest.approx(5.0)
    assert interior_residual(op, interior_mask(basis, 0)) == pytest.approx(100.0)


def test_interior_residual_empty_mask_raises():
    with pytest.raises(EmptyInteriorError):
        interior_residual(LinearOp.identity(2), InteriorMask(0, np.array([], dtype=int)))


def test_adjoint_reverses_products_and_is_an_involution():
    rng = np.random.default_rng(23)
    a = LinearOp(_random(rng, 5))
    b = LinearOp(_random(rng, 5))
    assert np.allclose(adjoint(compose(a, b)).entries, compose(adjoint(b), adjoint(a)).entries)
    assert np.allclose(adjoint(adjoint(a)).entries, a.entries)


def test_anti_adjoint_is_an_involution():
    rng = np.random.default_rng(29)
    j = AntilinearOp(_random(rng, 4))
    assert np.allclose(anti_adjoint(anti_adjoint(j)).m, j.m)


def test_operators_compare_by_identity():
    a = LinearOp.identity(3)
    j = AntilinearOp(np.eye(3))
    assert a == a
    assert a != LinearOp.identity(3)
    assert j != AntilinearOp(np.eye(3))
    assert len({a, LinearOp.identity(3)}) == 2
