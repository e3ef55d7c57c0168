"""Hochschild cycle images and the commutator scan used to exclude the phase-twisted classes."""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import DEGENERACY_TOLERANCE, HOCHSCHILD_DEPTH, HOCHSCHILD_TOLERANCE, SCAN_DEPTH
from services.triple_service import (DiracCase, DiracParams, SpectralTripleBundle, TorusPolynomial, opposite_from_j,
                                     rep_poly)
from utils.errors import NCTorusError, ParameterError
from utils.lattice import interior_mask, reflection_margin
from utils.opalg import LinearOp, PhaseAngle, commutator, compose, interior_residual

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HochschildTerm:
    a0: TorusPolynomial
    a0_opposite: TorusPolynomial
    a1: TorusPolynomial
    a2: TorusPolynomial


@dataclass(frozen=True)
class HochschildCycle:
    terms: Tuple[HochschildTerm, ...]


def hochschild_prefactor(dparams: DiracParams) -> complex:
    """1 / (conj(tau1) tau2 - tau1 conj(tau2)); refuses degenerate pairs"""
    denominator = np.conj(dparams.tau1) * dparams.tau2 - dparams.tau1 * np.conj(dparams.tau2)
    if abs(denominator) < DEGENERACY_TOLERANCE:
        raise ParameterError(f"Degenerate tau pair ({dparams.tau1}, {dparams.tau2}): "
                             f"conj(tau1) tau2 = tau1 conj(tau2), the Hochschild prefactor is undefined")
    return complex(1.0 / denominator)


def _u(power: int = 1) -> TorusPolynomial:
    return TorusPolynomial.monomial(power, 0)


def _v(power: int = 1) -> TorusPolynomial:
    return TorusPolynomial.monomial(0, power)


def canonical_cycle(dparams: DiracParams, lam: PhaseAngle) -> HochschildCycle:
    """pref * (V*U* (x) 1 (x) U (x) V) - pref * (U*V* (x) 1 (x) V (x) U)"""
    prefactor = hochschild_prefactor(dparams)
    one = TorusPolynomial.constant()
    v_star_u_star = _v(-1).multiply(_u(-1), lam)
    u_star_v_star = _u(-1).multiply(_v(-1), lam)
    return HochschildCycle((
        HochschildTerm(v_star_u_star.scale(prefactor), one, _u(), _v()),
        HochschildTerm(u_star_v_star.scale(-prefactor), one, _v(), _u()),
    ))


def spurious_cycle(lam: PhaseAngle) -> HochschildCycle:
    """c0 = U*V* (x) V (x) U - V*U* (x) U (x) V"""
    one = TorusPolynomial.constant()
    return HochschildCycle((
        HochschildTerm(_u(-1).multiply(_v(-1), lam), one, _v(), _u()),
        HochschildTerm(_v(-1).multiply(_u(-1), lam).scale(-1.0), one, _u(), _v()),
    ))


def hochschild_image(bundle: SpectralTripleBundle, cycle: HochschildCycle) -> LinearOp:
    """Sum of pi(a0) (J pi(a0')* J^-1) [D, pi(a1)] [D, pi(a2)]"""
    generators = (bundle.piU, bundle.piV)

    def rep(poly: TorusPolynomial) -> LinearOp:
        return rep_poly(poly, bundle.map, bundle.lam, generators)

    total = LinearOp.zeros(bundle.map.dim)
    for term in cycle.terms:
        total = total + compose(rep(term.a0),
                                opposite_from_j(bundle.j, rep(term.a0_opposite)),
                                commutator(bundle.dirac, rep(term.a1)),
                                commutator(bundle.dirac, rep(term.a2)))
    return total


@dataclass(frozen=True)
class ScanResult:
    a0: str
    a1: str
    a2: str
    multi_degree: Tuple[int, int]
    constant: complex
    constant_left: complex
    constant_right: complex
    fit_residual: float
    identity_component: complex


def _phase_factor(bundle: SpectralTripleBundle) -> np.ndarray:
    """Diagonal of the D' factor: exp(-2i phi mu - 2i psi nu)"""
    r = bundle.rparams
    return np.exp(-2j * (r.phi * bundle.map.mu + r.psi * bundle.map.nu))


def default_scan_samples(lam: PhaseAngle) -> List[Tuple[TorusPolynomial, TorusPolynomial, TorusPolynomial]]:
    one = TorusPolynomial.constant()
    return [
        (one, one, one),
        (_v(-1).multiply(_u(-1), lam), _u(), _v()),
        (_u(-1).multiply(_v(-1), lam), _v(), _u()),
        (one, _u(), _v()),
        (_v(-1), _u(), _v()),
    ]


def homogeneous_commutator_scan(bundle: SpectralTripleBundle,
                                samples: Optional[Sequence[Tuple[TorusPolynomial, TorusPolynomial,
                                                                 TorusPolynomial]]] = None,
                                depth: int = SCAN_DEPTH) -> List[ScanResult]:
    """Fit pi(a0)[D,pi(a1)][D,pi(a2)] on the + block to T (C + C' M + C'' conj(M)), T = pi(a0 a1 a2)"""
    basis = bundle.map
    mask = interior_mask(basis, depth, sign=1)
    cols = mask.indices
    generators = (bundle.piU, bundle.piV)
    phase = _phase_factor(bundle)
    trivial_phase = bundle.case is DiracCase.LINEAR
    results = []
    for a0, a1, a2 in samples or default_scan_samples(bundle.lam):
        pi = [rep_poly(a, basis, bundle.lam, generators) for a in (a0, a1, a2)]
        measured = compose(pi[0], commutator(bundle.dirac, pi[1]), commutator(bundle.dirac, pi[2])).entries
        product = a0.multiply(a1, bundle.lam).multiply(a2, bundle.lam)
        target = rep_poly(product, basis, bundle.lam, generators).entries
        design = [target] if trivial_phase else [target, target * phase[None, :], target * np.conj(phase)[None, :]]
        lhs = np.stack([d[:, cols].ravel() for d in design], axis=1)
        rhs = measured[:, cols].ravel()
        coeffs = np.linalg.lstsq(lhs, rhs, rcond=None)[0] if np.any(lhs) else np.zeros(lhs.shape[1], dtype=complex)
        coeffs = np.concatenate([coeffs, np.zeros(3 - coeffs.shape[0], dtype=complex)])
        fitted = sum(c * d for c, d in zip(coeffs, design))
        residual = float(np.linalg.norm((measured - fitted)[:, cols], axis=0).max())
        identity_component = complex(np.mean(np.diag(measured)[cols]))
        multi_degree = product.degrees[0] if len(product.degrees) == 1 else (0, 0)
        result = ScanResult(a0.label(), a1.label(), a2.label(), multi_degree,
                            complex(coeffs[0]), complex(coeffs[1]), complex(coeffs[2]), residual, identity_component)
        logger.debug(f"Scan {result.a0} | {result.a1} | {result.a2}: C={result.constant:.6g} "
                     f"C'={result.constant_left:.6g} C''={result.constant_right:.6g} fit={residual:.2e}")
        results.append(result)
    return results


class HochschildVerdict(Enum):
    SATISFIED = "SATISFIED"
    CANNOT_BE_SATISFIED = "CANNOT_BE_SATISFIED"
    FAILED = "FAILED"


@dataclass
class HochschildReport:
    verdict: HochschildVerdict
    residual: float
    tolerance: float
    mask_depth: int
    check_name: str
    prefactor: Optional[complex] = None
    scan: List[ScanResult] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)


def evaluate_hochschild(bundle: SpectralTripleBundle, tolerance: float = HOCHSCHILD_TOLERANCE,
                        depth: int = HOCHSCHILD_DEPTH) -> HochschildReport:
    case = bundle.case
    mask_depth = depth + reflection_margin(bundle.spin)
    mask = interior_mask(bundle.map, mask_depth)

    if case is DiracCase.LINEAR:
        prefactor = hochschild_prefactor(bundle.dparams)
        image = hochschild_image(bundle, canonical_cycle(bundle.dparams, bundle.lam))
        residual = interior_residual(image - bundle.gamma, mask)
        verdict = HochschildVerdict.SATISFIED if residual <= tolerance else HochschildVerdict.FAILED
        report = HochschildReport(verdict, residual, tolerance, mask_depth, "canonical_cycle_minus_grading",
                                  prefactor=prefactor)
    else:
        image = hochschild_image(bundle, spurious_cycle(bundle.lam))
        residual = interior_residual(image, mask)
        scan = homogeneous_commutator_scan(bundle)
        report = HochschildReport(HochschildVerdict.CANNOT_BE_SATISFIED, residual, tolerance, mask_depth,
                                  "spurious_cycle_image", scan=scan)
        if case is DiracCase.SPURIOUS:
            if residual > tolerance:
                report.verdict = HochschildVerdict.FAILED
                report.notes.append("pi(c0) does not vanish; the exclusion argument is not certified")
            else:
                report.notes.append("pi(c0) vanishes while c0 is the only candidate cycle: gamma is not reached")
        else:
            twisted = any(abs(s.constant_left) > tolerance or abs(s.constant_right) > tolerance for s in scan)
            report.notes.append("mixed case: commutator products carry D'-proportional parts"
                                if twisted else
                                "mixed case: commutator products vanish on the + block")

    logger.info(f"Hochschild case={case.value}: {report.verdict.value} "
                f"(residual={report.residual:.3e}, depth={mask_depth})")
    return report


class HochschildService:
    """Hochschild verdicts for one or more bundles"""

    def __init__(self, tolerance: float = HOCHSCHILD_TOLERANCE, depth: int = HOCHSCHILD_DEPTH):
        logger.info("Initializing Hochschild Service")
        self.tolerance = tolerance
        self.depth = depth

    def evaluate(self, bundles: List[SpectralTripleBundle]) -> List[HochschildReport]:
        reports = []
        for bundle in bundles:
            try:
                logger.info(f"Evaluating Hochschild cycle for spin=({bundle.spin.label}) case={bundle.case.value}")
                report = evaluate_hochschild(bundle, self.tolerance, self.depth)

                if report.verdict is HochschildVerdict.FAILED:
                    logger.warning(f"spin=({bundle.spin.label}): Hochschild verdict FAILED "
                                   f"(residual={report.residual:.3e})")
                reports.append(report)

            except NCTorusError as e:
                logger.error(f"Hochschild evaluation refused spin=({bundle.spin.label}): {e}")
                raise
        return reports
