import pytest
import numpy as np
from unittest.mock import patch

from services.classify_service import (RATIONAL_WARNING, ClassifyService, IntertwinerProblem, admissible_shifts,
                                       counterexample_report, integer_basis, intertwiner_verdict,
                                       is_rational_angle, table_real_structure, verdict_matrix)
from utils.errors import EmptyInteriorError, ParameterError
from utils.lattice import SpinStructure, interior_mask
from utils.opalg import LinearOp, PhaseAngle, commutator, compose, interior_residual


def test_generic_angle_is_not_rational(lam):
    assert not is_rational_angle(lam)
    assert is_rational_angle(PhaseAngle(0.5))
    assert is_rational_angle(PhaseAngle(3 / 7))


def test_identical_pair_admits_only_zero_shift(lam):
    problem = IntertwinerProblem(SpinStructure.parse("0,1/2"), SpinStructure.parse("0,1/2"), lam)
    shifts = admissible_shifts(problem)
    assert shifts.shifts == [(0, 0)]
    assert shifts.ratios[(0, 0)] == pytest.approx(1.0)
    assert not shifts.warnings


@pytest.mark.parametrize("source,target", [("0,0", "0,1/2"), ("0,0", "1/2,1/2"), ("1/2,0", "0,1/2")])
def test_distinct_pairs_have_no_admissible_shift(lam, source, target):
    problem = IntertwinerProblem(SpinStructure.parse(source), SpinStructure.parse(target), lam)
    assert len(admissible_shifts(problem)) == 0
    certificate = intertwiner_verdict(problem)
    assert not certificate.equivalent
    assert certificate.operator is None


def test_identical_pair_certificate_is_identity(lam):
    spin = SpinStructure.parse("1/2,1/2")
    certificate = intertwiner_verdict(IntertwinerProblem(spin, spin, lam))
    assert certificate.equivalent
    assert certificate.shift == (0, 0)
    assert certificate.identity_sign == 1
    assert certificate.intertwining_residual < 1e-12
    assert certificate.algebra_residual < 1e-12


def test_verdict_matrix_is_identity(lam):
    result = verdict_matrix(lam)
    assert result.matrix() == [[i == j for j in range(4)] for i in range(4)]
    assert result.warnings == []


def test_verdict_matrix_is_symmetric(lam):
    matrix = verdict_matrix(lam, shift_window=2).matrix()
    assert matrix == [list(row) for row in zip(*matrix)]


def test_classical_limit_admits_every_shift_but_stays_diagonal():
    lam = PhaseAngle(0.0)
    problem = IntertwinerProblem(SpinStructure.parse("0,0"), SpinStructure.parse("0,1/2"), lam, shift_window=1)
    shifts = admissible_shifts(problem)
    assert len(shifts) == 9
    assert RATIONAL_WARNING in shifts.warnings
    assert not intertwiner_verdict(problem).equivalent

    result = verdict_matrix(lam, shift_window=1)
    assert result.matrix() == [[i == j for j in range(4)] for i in range(4)]
    assert result.warnings == [RATIONAL_WARNING]


def test_rational_angle_warns():
    spin = SpinStructure()
    with patch('services.classify_service.logger') as mock_logger:
        shifts = admissible_shifts(IntertwinerProblem(spin, spin, PhaseAngle(0.5), shift_window=1))
        mock_logger.warning.assert_called_once()
        assert shifts.warnings == [RATIONAL_WARNING]


def test_shift_window_must_be_positive(lam):
    with pytest.raises(ParameterError):
        IntertwinerProblem(SpinStructure(), SpinStructure(), lam, shift_window=0)


def test_sample_window_must_be_positive(lam):
    with pytest.raises(EmptyInteriorError):
        IntertwinerProblem(SpinStructure(), SpinStructure(), lam, sample_window=0)


def test_verification_window_covers_shifts(lam):
    problem = IntertwinerProblem(SpinStructure(), SpinStructure(), lam, shift_window=3)
    assert problem.sample_window == 4
    assert problem.verification_n_max == 6


def test_table_real_structure_squares_to_minus_one(lam):
    basis = integer_basis(4)
    j = table_real_structure(basis, lam, SpinStructure.parse("1/2,1/2"))
    cols = interior_mask(basis, 2).indices
    square = compose(j, j).entries
    assert np.allclose(square[:, cols], -np.eye(basis.dim)[:, cols], atol=1e-13)


def test_counterexample_intertwines_but_breaks_grading_and_algebra(lam):
    report = counterexample_report(lam)
    assert report.intertwining_residual < 1e-12
    assert report.unitarity_residual < 1e-12
    assert report.grading_anticommutator < 1e-12
    assert report.grading_commutator == pytest.approx(2.0)
    assert report.commutator_v < 1e-12
    assert report.commutator_u == pytest.approx(abs(lam.power(0.5) - 1), rel=1e-9)
    assert report.commutator_u > 1.0


@pytest.mark.parametrize("turns", [None, 0.0])
def test_admissible_shifts_are_reversed_by_swapping_pair(lam, spins, turns):
    phase = lam if turns is None else PhaseAngle(turns)
    for source in spins:
        for target in spins:
            forward = admissible_shifts(IntertwinerProblem(source, target, phase, shift_window=2))
            backward = admissible_shifts(IntertwinerProblem(target, source, phase, shift_window=2))
            assert {(-k, -l) for k, l in forward.shifts} == set(backward.shifts)


def test_identical_pair_certificate_commutes_with_grading(lam, spins):
    for spin in spins:
        problem = IntertwinerProblem(spin, spin, lam, shift_window=1)
        certificate = intertwiner_verdict(problem)
        basis = integer_basis(problem.verification_n_max)
        gamma = LinearOp.diagonal(basis.s.astype(float))
        assert interior_residual(commutator(certificate.operator, gamma), interior_mask(basis, 0)) < 1e-12


def test_classify_service_uses_its_shift_window(lam):
    service = ClassifyService(shift_window=1)
    with patch('services.classify_service.verdict_matrix', wraps=verdict_matrix) as mock_matrix:
        result = service.classify(lam)
        mock_matrix.assert_called_once_with(lam, None, 1)
    assert result.matrix() == [[i == j for j in range(4)] for i in range(4)]


def test_classify_service_logs_rational_warning():
    with patch('services.classify_service.logger') as mock_logger:
        result = ClassifyService(shift_window=1).classify(PhaseAngle(0.5))
        assert result.warnings == [RATIONAL_WARNING]
        assert any(RATIONAL_WARNING in str(call) for call in mock_logger.warning.call_args_list)


def test_classify_service_counterexample(lam):
    report = ClassifyService().counterexample(lam)
    assert report.grading_commutator == pytest.approx(2.0)


def test_classify_service_logs_and_reraises(lam):
    with patch('services.classify_service.logger') as mock_logger:
        with pytest.raises(ParameterError, match="Shift window"):
            ClassifyService(shift_window=0).classify(lam)
        mock_logger.error.assert_called_once()
