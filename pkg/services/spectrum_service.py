import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import (BOUNDED_GROWTH_SLACK, DEDUP_TOLERANCE, DEFAULT_RADII, RESOLVENT_N_MAX_VALUES)
from services.triple_service import (DiracParams, RealStructureParams, SpectralTripleBundle, dirac_coefficients)
from utils.eigensolver import eigensolver_oracle
from utils.errors import NCTorusError
from utils.lattice import SpinStructure, Truncation, build_basis

logger = logging.getLogger(__name__)

# counting includes eigenvalues sitting on the radius
_RADIUS_SLACK = 1e-9


@dataclass(frozen=True)
class SpectrumTable:
    entries: Tuple[Tuple[float, int], ...]
    spin: SpinStructure
    n_max: int
    dparams: DiracParams = DiracParams()
    dedup_tolerance: float = DEDUP_TOLERANCE

    @property
    def dim(self) -> int:
        return sum(multiplicity for _, multiplicity in self.entries)

    @property
    def kernel_dimension(self) -> int:
        return sum(m for value, m in self.entries if abs(value) <= self.dedup_tolerance)

    @property
    def spectral_radius(self) -> float:
        return max((abs(value) for value, _ in self.entries), default=0.0)

    def multiplicity(self, value: float) -> int:
        return sum(m for v, m in self.entries if abs(v - value) <= self.dedup_tolerance)

    def expanded(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity, ascending"""
        return np.repeat([v for v, _ in self.entries], [m for _, m in self.entries]).astype(float)

    def counting(self, radius: float) -> int:
        return sum(m for v, m in self.entries if abs(v) <= radius + _RADIUS_SLACK)

    def distinct_abs(self, count: int = 10) -> List[float]:
        values: List[float] = []
        for v, _ in sorted(self.entries, key=lambda entry: abs(entry[0])):
            if not values or abs(abs(v) - values[-1]) > self.dedup_tolerance:
                values.append(abs(v))
            if len(values) == count:
                break
        return values

    def in_range(self, low: float, high: float) -> Tuple[Tuple[float, int], ...]:
        return tuple((v, m) for v, m in self.entries if low - _RADIUS_SLACK <= v <= high + _RADIUS_SLACK)

    def is_symmetric(self) -> bool:
        return all(self.multiplicity(-v) == m for v, m in self.entries)


def aggregate_eigenvalues(values: Sequence[float], tolerance: float = DEDUP_TOLERANCE) -> Tuple[Tuple[float, int], ...]:
    """Group sorted values closer than `tolerance` to the first of their group"""
    ordered = np.sort(np.asarray(values, dtype=float))
    entries: List[List] = []
    for value in ordered:
        if entries and value - entries[-1][0] <= tolerance:
            entries[-1][1] += 1
        else:
            # -0.0 + 0.0 == +0.0
            entries.append([float(value) + 0.0, 1])
    return tuple((value, count) for value, count in entries)


def _block_eigenvalues(d_plus: np.ndarray) -> np.ndarray:
    magnitudes = np.abs(d_plus)
    return np.concatenate([-magnitudes, magnitudes])


def dirac_spectrum_blocks(bundle: SpectralTripleBundle) -> SpectrumTable:
    """Each site contributes the 2x2 block [[0, conj(d+)], [d+, 0]], i.e. +-|d+|"""
    basis = bundle.map
    plus = np.flatnonzero(basis.s == 1)
    d_plus = bundle.dirac.entries[plus + basis.block_size, plus]
    table = SpectrumTable(aggregate_eigenvalues(_block_eigenvalues(d_plus)), bundle.spin,
                          basis.n_max, bundle.dparams)
    logger.debug(f"Block spectrum spin=({bundle.spin.label}) n_max={basis.n_max}: "
                 f"{len(table.entries)} distinct values, kernel={table.kernel_dimension}")
    return table


def oracle_spectrum(bundle: SpectralTripleBundle, method: str = "jacobi") -> SpectrumTable:
    values = eigensolver_oracle(bundle.dirac, method=method)
    return SpectrumTable(aggregate_eigenvalues(values), bundle.spin, bundle.map.n_max, bundle.dparams)


class GrowthVerdict(Enum):
    UNBOUNDED_OK = "UNBOUNDED_OK"
    BOUNDED_BAD = "BOUNDED_BAD"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class ResolventReport:
    spin: SpinStructure
    radii: Tuple[float, ...]
    n_max_values: Tuple[int, ...]
    counts: Dict[int, List[int]] = field(default_factory=dict)
    spectral_radii: Dict[int, float] = field(default_factory=dict)
    verdict: GrowthVerdict = GrowthVerdict.INCONCLUSIVE

    def table(self) -> List[Dict]:
        return [{"n_max": n, "dim": 2 * (2 * n + 1) ** 2, "spectral_radius": self.spectral_radii[n],
                 "counts": {format(r, "g"): c for r, c in zip(self.radii, self.counts[n])}}
                for n in self.n_max_values]


def classify_growth(counts: Dict[int, List[int]], spectral_radii: Dict[int, float],
                    n_max_values: Sequence[int]) -> GrowthVerdict:
    first, last = spectral_radii[n_max_values[0]], spectral_radii[n_max_values[-1]]
    if last <= (1.0 + BOUNDED_GROWTH_SLACK) * first:
        return GrowthVerdict.BOUNDED_BAD
    stable = all(counts[n] == counts[n_max_values[0]] for n in n_max_values)
    growing = all(spectral_radii[a] < spectral_radii[b] for a, b in zip(n_max_values, n_max_values[1:]))
    if stable and growing:
        return GrowthVerdict.UNBOUNDED_OK
    return GrowthVerdict.INCONCLUSIVE


def resolvent_growth(bundle: SpectralTripleBundle, radii: Sequence[float] = DEFAULT_RADII,
                     n_max_values: Sequence[int] = RESOLVENT_N_MAX_VALUES) -> ResolventReport:
    """Counting function N(R) of the bundle's Dirac family across growing windows"""
    return resolvent_growth_for(bundle.spin, bundle.dparams, bundle.rparams, radii, n_max_values)


def resolvent_growth_for(spin: SpinStructure, dparams: DiracParams, rparams: RealStructureParams,
                         radii: Sequence[float] = DEFAULT_RADII,
                         n_max_values: Sequence[int] = RESOLVENT_N_MAX_VALUES) -> ResolventReport:
    report = ResolventReport(spin=spin, radii=tuple(radii), n_max_values=tuple(n_max_values))
    for n_max in n_max_values:
        basis = build_basis(Truncation(n_max, spin))
        d_plus = dirac_coefficients(basis, dparams, rparams)[basis.s == 1]
        table = SpectrumTable(aggregate_eigenvalues(_block_eigenvalues(d_plus)), spin, n_max, dparams)
        report.counts[n_max] = [table.counting(r) for r in radii]
        report.spectral_radii[n_max] = table.spectral_radius
        logger.debug(f"n_max={n_max}: N(R)={report.counts[n_max]} max|e|={table.spectral_radius:.6g}")
    report.verdict = classify_growth(report.counts, report.spectral_radii, report.n_max_values)
    logger.info(f"Resolvent growth spin=({spin.label}): {report.verdict.value}")
    return report


class SpectrumService:
    """Block spectra with an optional oracle cross-check"""

    def __init__(self, oracle_method: Optional[str] = "jacobi"):
        logger.info("Initializing Spectrum Service")
        self.oracle_method = oracle_method

    def spectrum(self, bundle: SpectralTripleBundle) -> Tuple[SpectrumTable, Optional[float]]:
        """Returns the block table and the largest block/oracle deviation (None without an oracle)"""
        try:
            # Closed-form 2x2 blocks
            table = dirac_spectrum_blocks(bundle)
            if self.oracle_method is None:
                return table, None

            # Full-matrix cross-check
            oracle = eigensolver_oracle(bundle.dirac, method=self.oracle_method)
            deviation = float(np.abs(oracle - table.expanded()).max()) if oracle.size else 0.0
            logger.info(f"Spectrum spin=({bundle.spin.label}): kernel={table.kernel_dimension}, "
                        f"oracle deviation={deviation:.3e}")
            return table, deviation

        except NCTorusError as e:
            logger.error(f"Spectrum failed for spin=({bundle.spin.label}): {e}")
            raise
