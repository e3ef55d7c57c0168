import pytest
import numpy as np
from unittest.mock import patch

from services.spectrum_service import (GrowthVerdict, SpectrumService, aggregate_eigenvalues, classify_growth,
                                       dirac_spectrum_blocks, oracle_spectrum, resolvent_growth)
from services.triple_service import DiracParams, RealStructureParams


def test_block_spectrum_small_window(make_bundle):
    table = dirac_spectrum_blocks(make_bundle(n_max=2))
    assert table.multiplicity(0.0) == 2
    assert table.multiplicity(1.0) == 4
    assert table.multiplicity(np.sqrt(2)) == 4
    assert table.dim == 50


def test_half_offset_has_no_kernel(make_bundle):
    table = dirac_spectrum_blocks(make_bundle(n_max=3, spin="0,1/2"))
    assert table.kernel_dimension == 0
    assert table.distinct_abs(1) == [pytest.approx(0.5)]


def test_half_half_smallest_value(make_bundle):
    table = dirac_spectrum_blocks(make_bundle(n_max=2, spin="1/2,1/2"))
    assert table.distinct_abs(1)[0] == pytest.approx(np.sqrt(2) / 2)
    assert table.multiplicity(np.sqrt(2) / 2) == 4


def test_kernel_dimensions_by_spin(make_bundle, spins):
    kernels = [dirac_spectrum_blocks(make_bundle(n_max=4, spin=spin.label)).kernel_dimension for spin in spins]
    assert kernels == [2, 0, 0, 0]


def test_tables_are_sorted_and_symmetric(make_bundle, spins):
    for spin in spins:
        table = dirac_spectrum_blocks(make_bundle(n_max=3, spin=spin.label))
        values = [v for v, _ in table.entries]
        assert values == sorted(values)
        assert table.is_symmetric()
        assert table.dim == 2 * 7 * 7


def test_negative_zero_is_normalized():
    entries = aggregate_eigenvalues([-0.0, 0.0, 1.0])
    assert entries == ((0.0, 2), (1.0, 1))
    assert str(entries[0][0]) == "0.0"


@pytest.mark.parametrize("spin", ["0,0", "0,1/2", "1/2,0", "1/2,1/2"])
def test_oracle_matches_blocks(make_bundle, spin):
    bundle = make_bundle(n_max=4, spin=spin)
    blocks = dirac_spectrum_blocks(bundle).expanded()
    assert np.abs(oracle_spectrum(bundle).expanded() - blocks).max() < 1e-9
    assert np.abs(oracle_spectrum(bundle, method="lapack").expanded() - blocks).max() < 1e-9


def test_spectrum_separates_zero_zero_from_half_half(make_bundle):
    low = dirac_spectrum_blocks(make_bundle(spin="0,0")).in_range(-2, 2)
    high = dirac_spectrum_blocks(make_bundle(spin="1/2,1/2")).in_range(-2, 2)
    assert low != high


def test_mixed_structures_agree_under_tau_swap(make_bundle):
    swapped = DiracParams(tau1=1j, tau2=1 + 0j)
    a = dirac_spectrum_blocks(make_bundle(spin="0,1/2"))
    b = dirac_spectrum_blocks(make_bundle(spin="1/2,0", dparams=swapped))
    assert np.allclose(a.expanded(), b.expanded(), atol=1e-12)
    assert a.in_range(-2, 2) != dirac_spectrum_blocks(make_bundle(spin="0,0")).in_range(-2, 2)


@pytest.mark.parametrize("turns", [0.0, 0.25])
def test_spectrum_is_lambda_independent(make_bundle, turns):
    assert dirac_spectrum_blocks(make_bundle(lam_turns=turns)) == dirac_spectrum_blocks(make_bundle())


def test_resolvent_canonical_is_unbounded(canonical_bundle):
    report = resolvent_growth(canonical_bundle)
    assert report.verdict is GrowthVerdict.UNBOUNDED_OK
    assert [report.counts[n][1] for n in (4, 6, 8)] == [18, 18, 18]


def test_resolvent_spurious_is_bounded(spurious_bundle):
    report = resolvent_growth(spurious_bundle)
    assert report.verdict is GrowthVerdict.BOUNDED_BAD
    assert all(radius <= 2 + 1e-12 for radius in report.spectral_radii.values())


def test_resolvent_zero_dirac_is_bounded(make_bundle):
    bundle = make_bundle(rparams=RealStructureParams(1.0, 0.7), dparams=DiracParams(0j, 0j, 0j, 0j))
    assert resolvent_growth(bundle).verdict is GrowthVerdict.BOUNDED_BAD


def test_resolvent_mixed_case_is_inconclusive(make_bundle):
    bundle = make_bundle(rparams=RealStructureParams(0.0, 0.7), dparams=DiracParams(1 + 0j, 0j, 1 + 0j, -1 + 0j))
    assert resolvent_growth(bundle).verdict is GrowthVerdict.INCONCLUSIVE


def test_resolvent_lambda_independent(make_bundle):
    generic = resolvent_growth(make_bundle())
    classical = resolvent_growth(make_bundle(lam_turns=0.0))
    assert generic.counts == classical.counts


def test_classify_growth_unstable_counts():
    counts = {4: [2, 5], 6: [2, 6]}
    radii = {4: 5.0, 6: 8.0}
    assert classify_growth(counts, radii, (4, 6)) is GrowthVerdict.INCONCLUSIVE


def test_resolvent_table_layout(canonical_bundle):
    row = resolvent_growth(canonical_bundle, radii=(1.5,)).table()[0]
    assert list(row) == ["n_max", "dim", "spectral_radius", "counts"]
    assert row["counts"] == {"1.5": 18}
    assert row["dim"] == 162


def test_spectrum_service_reports_oracle_deviation(make_bundle):
    table, deviation = SpectrumService().spectrum(make_bundle(n_max=3))
    assert deviation < 1e-9
    assert table.kernel_dimension == 2


def test_spectrum_service_without_oracle(make_bundle):
    with patch('services.spectrum_service.eigensolver_oracle') as mock_oracle:
        table, deviation = SpectrumService(oracle_method=None).spectrum(make_bundle(n_max=2))
        mock_oracle.assert_not_called()
        assert deviation is None
        assert table.dim == 50
