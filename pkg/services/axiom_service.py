import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from config.settings import (DEFAULT_TOLERANCE, EQUIVARIANCE_DEPTH, FIRST_ORDER_DEPTH, MAX_WORKERS,
                             TORUS_RELATION_DEPTH, ZEROTH_ORDER_DEPTH)
from services.triple_service import (DiracCase, SpectralTripleBundle, TorusPolynomial, opposite_from_j,
                                     opposite_ops, rep_poly)
from utils.errors import NCTorusError
from utils.lattice import interior_mask, reflection_margin
from utils.opalg import LinearOp, anti_adjoint, commutator, compose, interior_residual

logger = logging.getLogger(__name__)

# Fixed mixed-degree test element: radius-1 monomials of total degree <= 2
_SAMPLE_POLY_SEED = 20240917


def sample_polynomial() -> TorusPolynomial:
    rng = np.random.default_rng(_SAMPLE_POLY_SEED)
    degrees = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (1, -1), (-1, 1)]
    coeffs = rng.normal(size=len(degrees)) + 1j * rng.normal(size=len(degrees))
    return TorusPolynomial.from_terms((p, q, complex(c)) for (p, q), c in zip(degrees, coeffs))


@dataclass(frozen=True)
class CheckRecord:
    name: str
    residual: float
    tolerance: float
    mask_depth: int

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "mask_depth": self.mask_depth,
        }


@dataclass
class AxiomReport:
    params: Dict[str, Any]
    checks: List[CheckRecord] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckRecord]:
        return [check for check in self.checks if not check.passed]

    def get(self, name: str) -> CheckRecord:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


def _depth(bundle: SpectralTripleBundle, base: int, uses_j: bool) -> int:
    return base + (reflection_margin(bundle.spin) if uses_j else 0)


def _identity(bundle: SpectralTripleBundle) -> LinearOp:
    return LinearOp.identity(bundle.map.dim)


def _opposites(bundle: SpectralTripleBundle) -> Tuple[LinearOp, LinearOp]:
    return opposite_from_j(bundle.j, bundle.piU), opposite_from_j(bundle.j, bundle.piV)


def check_torus_relation(bundle: SpectralTripleBundle, depth: int = TORUS_RELATION_DEPTH) -> float:
    defect = (compose(bundle.piU, bundle.piV)
              - compose(bundle.piV, bundle.piU).scale(bundle.lam.value))
    return interior_residual(defect, interior_mask(bundle.map, depth))


def check_representation_equivariance(bundle: SpectralTripleBundle, depth: int = EQUIVARIANCE_DEPTH) -> float:
    """Leibniz form rho(l) pi(a) - pi(a) rho(l) = pi(l > a) on generators"""
    mask = interior_mask(bundle.map, depth)
    zero = LinearOp.zeros(bundle.map.dim)
    pairs = [
        (bundle.delta1, bundle.piU, bundle.piU),
        (bundle.delta2, bundle.piV, bundle.piV),
        (bundle.delta1, bundle.piV, zero),
        (bundle.delta2, bundle.piU, zero),
    ]
    return max(interior_residual(commutator(rho, pi_a) - image, mask) for rho, pi_a, image in pairs)


def check_reality_conditions(bundle: SpectralTripleBundle, depth: int = 0) -> Dict[str, float]:
    """J^2 = -1, J gamma = -gamma J, J* J = 1 and J rho(l) + rho(l) J = 0"""
    mask = interior_mask(bundle.map, _depth(bundle, depth, True))
    j = bundle.j
    identity = _identity(bundle)
    return {
        "j_squared": interior_residual(compose(j, j) + identity, mask),
        "j_grading": interior_residual(compose(j, bundle.gamma) + compose(bundle.gamma, j), mask),
        "j_unitarity": interior_residual(compose(anti_adjoint(j), j) - identity, mask),
        "j_equivariance": max(interior_residual(compose(j, rho) + compose(rho, j), mask)
                              for rho in (bundle.delta1, bundle.delta2)),
    }


def check_zeroth_order(bundle: SpectralTripleBundle, depth: int = ZEROTH_ORDER_DEPTH,
                       poly: Optional[TorusPolynomial] = None) -> float:
    mask = interior_mask(bundle.map, _depth(bundle, depth, True))
    poly_op = rep_poly(poly or sample_polynomial(), bundle.map, bundle.lam, (bundle.piU, bundle.piV))
    return max(interior_residual(commutator(a, b_op), mask)
               for a in (bundle.piU, bundle.piV, poly_op) for b_op in _opposites(bundle))


def check_first_order(bundle: SpectralTripleBundle, depth: int = FIRST_ORDER_DEPTH) -> float:
    mask = interior_mask(bundle.map, _depth(bundle, depth, True))
    return max(interior_residual(commutator(commutator(bundle.dirac, a), b_op), mask)
               for a in (bundle.piU, bundle.piV) for b_op in _opposites(bundle))


def check_jd_commute(bundle: SpectralTripleBundle, depth: int = 0) -> float:
    mask = interior_mask(bundle.map, _depth(bundle, depth, True))
    return interior_residual(compose(bundle.j, bundle.dirac) - compose(bundle.dirac, bundle.j), mask)


def check_dirac_invariants(bundle: SpectralTripleBundle) -> Dict[str, float]:
    """Exact properties of the builders; no masking"""
    d = bundle.dirac.entries
    mask = interior_mask(bundle.map, 0)
    return {
        "dirac_hermitian": float(np.abs(d - d.conj().T).max()),
        "dirac_equivariance": max(interior_residual(commutator(rho, bundle.dirac), mask)
                                  for rho in (bundle.delta1, bundle.delta2)),
        "dirac_odd": interior_residual(compose(bundle.dirac, bundle.gamma) + compose(bundle.gamma, bundle.dirac),
                                       mask),
    }


def check_opposite_closed_form(bundle: SpectralTripleBundle, depth: int = EQUIVARIANCE_DEPTH) -> float:
    mask = interior_mask(bundle.map, _depth(bundle, depth, True))
    closed = opposite_ops(bundle.map, bundle.lam, bundle.rparams)
    return max(interior_residual(built - formula, mask) for built, formula in zip(_opposites(bundle), closed))


def run_axiom_suite(bundle: SpectralTripleBundle, tolerance: float = DEFAULT_TOLERANCE,
                    depth_override: Optional[int] = None) -> AxiomReport:
    """Every check once, in a fixed order; depth_override replaces the base depth of masked checks"""

    def base(default: int) -> int:
        return default if depth_override is None else depth_override

    jobs: List[Tuple[str, int, Callable[[], Any]]] = [
        ("torus_relation", base(TORUS_RELATION_DEPTH),
         lambda: check_torus_relation(bundle, base(TORUS_RELATION_DEPTH))),
        ("representation_equivariance", base(EQUIVARIANCE_DEPTH),
         lambda: check_representation_equivariance(bundle, base(EQUIVARIANCE_DEPTH))),
        ("reality", _depth(bundle, 0, True), lambda: check_reality_conditions(bundle)),
        ("zeroth_order", _depth(bundle, base(ZEROTH_ORDER_DEPTH), True),
         lambda: check_zeroth_order(bundle, base(ZEROTH_ORDER_DEPTH))),
        ("first_order", _depth(bundle, base(FIRST_ORDER_DEPTH), True),
         lambda: check_first_order(bundle, base(FIRST_ORDER_DEPTH))),
        ("jd_commute", _depth(bundle, 0, True), lambda: check_jd_commute(bundle)),
        ("dirac", 0, lambda: check_dirac_invariants(bundle)),
        ("opposite_closed_form", _depth(bundle, base(EQUIVARIANCE_DEPTH), True),
         lambda: check_opposite_closed_form(bundle, base(EQUIVARIANCE_DEPTH))),
    ]

    with ThreadPoolExecutor(max_workers=MAX_WORKERS) as executor:
        results = list(executor.map(lambda job: job[2](), jobs))

    report = AxiomReport(params=bundle_params(bundle))
    for (name, depth, _), result in zip(jobs, results):
        named = result if isinstance(result, dict) else {name: result}
        for check_name, residual in named.items():
            record = CheckRecord(check_name, float(residual), tolerance, depth)
            logger.debug(f"{check_name}: residual={record.residual:.3e} depth={depth}")
            report.checks.append(record)

    report.notes.extend(case_notes(bundle))
    for failure in report.failures:
        logger.warning(f"Check failed: {failure.name} residual={failure.residual:.3e} > {tolerance:.1e}")
    logger.info(f"Axiom suite spin=({bundle.spin.label}): "
                f"{len(report.checks) - len(report.failures)}/{len(report.checks)} checks pass")
    return report


def bundle_params(bundle: SpectralTripleBundle) -> Dict[str, Any]:
    d = bundle.dparams
    return {
        "spin": bundle.spin.label,
        "n_max": bundle.map.n_max,
        "lambda_turns": bundle.lam.angle_turns,
        "phi": bundle.rparams.phi,
        "psi": bundle.rparams.psi,
        "theta": bundle.rparams.theta_glob,
        "tau1": [d.tau1.real, d.tau1.imag],
        "tau2": [d.tau2.real, d.tau2.imag],
        "tau0": [d.tau0.real, d.tau0.imag],
        "eps_const": [d.eps_const.real, d.eps_const.imag],
        "case": bundle.case.value,
    }


def case_notes(bundle: SpectralTripleBundle) -> List[str]:
    case = bundle.case
    notes = []
    if case is DiracCase.SPURIOUS:
        notes.append("spurious class (phi, psi != 0): algebraic checks cannot exclude it; "
                     "see the resolvent and hochschild commands")
    elif case is DiracCase.MIXED_PSI and bundle.dparams.tau1 != 0:
        notes.append("mixed case phi=0, psi!=0: the tau1*mu term is not compatible with J "
                     "unless tau1 = 0; first_order and jd_commute report the defect")
    elif case is DiracCase.MIXED_PHI and bundle.dparams.tau2 != 0:
        notes.append("mixed case phi!=0, psi=0: the tau2*nu term is not compatible with J "
                     "unless tau2 = 0; first_order and jd_commute report the defect")
    return notes


class AxiomService:
    """Runs the axiom suite over one or more bundles"""

    def __init__(self, tolerance: float = DEFAULT_TOLERANCE, depth_override: Optional[int] = None):
        logger.info("Initializing Axiom Service")
        self.tolerance = tolerance
        self.depth_override = depth_override

    def verify(self, bundles: List[SpectralTripleBundle]) -> List[AxiomReport]:
        reports = []
        for bundle in bundles:
            try:
                logger.info(f"Verifying spin=({bundle.spin.label}) case={bundle.case.value}")

                # Masked residuals for every check, in report order
                report = run_axiom_suite(bundle, self.tolerance, self.depth_override)

                failed = [check.name for check in report.failures]
                if failed:
                    logger.warning(f"spin=({bundle.spin.label}): failed checks {failed}")
                reports.append(report)

            except NCTorusError as e:
                logger.error(f"Axiom suite refused spin=({bundle.spin.label}): {e}")
                raise
        return reports
