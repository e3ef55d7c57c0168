"""Unitary equivalence of the four reality structures.

All structures are compared on one integer lattice: the structure with offsets (a, b)
uses mu = m - a, nu = n - b, so that

    J e_{m,n,+-} = +- lambda^{-(m-a)(n-b)} e_{-m+2a, -n+2b, -+}
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from config.settings import (DEFAULT_SHIFT_WINDOW, INTERTWINER_TOLERANCE, MAX_WORKERS,
                             RATIONAL_MAX_DENOMINATOR)
from services.triple_service import (RealStructureParams, canonical_site_phase, reflection_real_structure,
                                     shift_operator)
from utils.errors import EmptyInteriorError, NCTorusError, ParameterError
from utils.lattice import BasisIndexMap, SpinStructure, Truncation, build_basis, interior_mask
from utils.opalg import (AntilinearOp, LinearOp, PhaseAngle, adjoint, commutator, compose, interior_residual)

logger = logging.getLogger(__name__)

RATIONAL_WARNING = "rational angle: λ not generic"

_RATIONAL_MATCH = 1e-12


def is_rational_angle(lam: PhaseAngle) -> bool:
    approx = Fraction(lam.angle_turns).limit_denominator(RATIONAL_MAX_DENOMINATOR)
    return abs(float(approx) - lam.angle_turns) < _RATIONAL_MATCH


def _offsets(spin: SpinStructure) -> Tuple[float, float]:
    return spin.eps_mu.value_float, spin.eps_nu.value_float


def table_site_phase(lam: PhaseAngle, spin: SpinStructure):
    """j(x, y) = lambda^{-(x-a)(y-b)} on integer labels"""
    a, b = _offsets(spin)
    return lambda x, y: lam.power(-(np.asarray(x) - a) * (np.asarray(y) - b))


def integer_basis(n_max: int) -> BasisIndexMap:
    return build_basis(Truncation(n_max, SpinStructure()))


def table_real_structure(basis: BasisIndexMap, lam: PhaseAngle, spin: SpinStructure) -> AntilinearOp:
    a, b = _offsets(spin)
    center = (int(round(2 * a)), int(round(2 * b)))
    return reflection_real_structure(basis, basis.m - a, basis.n - b, center,
                                     canonical_site_phase(lam, RealStructureParams()))


def table_representation(basis: BasisIndexMap, lam: PhaseAngle, spin: SpinStructure) -> Tuple[LinearOp, LinearOp]:
    a, _ = _offsets(spin)
    pi_u = shift_operator(basis, 1, 0, np.ones(basis.dim))
    pi_v = shift_operator(basis, 0, 1, lam.power(-(basis.m - a)))
    return pi_u, pi_v


@dataclass(frozen=True)
class IntertwinerProblem:
    source: SpinStructure
    target: SpinStructure
    lam: PhaseAngle
    shift_window: int = DEFAULT_SHIFT_WINDOW
    sample_window: Optional[int] = None

    def __post_init__(self):
        if self.shift_window < 1:
            raise ParameterError(f"Shift window K must be at least 1, got {self.shift_window}")
        if self.sample_window is None:
            object.__setattr__(self, "sample_window", self.shift_window + 1)
        if self.sample_window < 1:
            raise EmptyInteriorError(f"Sample window must be at least 1, got {self.sample_window}")

    @property
    def label(self) -> str:
        return f"({self.source.label})->({self.target.label})"

    @property
    def verification_n_max(self) -> int:
        return max(self.shift_window, self.sample_window) + 2


@dataclass
class AdmissibleShiftSet:
    shifts: List[Tuple[int, int]] = field(default_factory=list)
    deviations: Dict[Tuple[int, int], float] = field(default_factory=dict)
    ratios: Dict[Tuple[int, int], complex] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def __contains__(self, shift: Tuple[int, int]) -> bool:
        return shift in self.shifts

    def __len__(self) -> int:
        return len(self.shifts)


def admissible_shifts(problem: IntertwinerProblem) -> AdmissibleShiftSet:
    """(k, l) is admissible when r(x, y) = j_t(x, y) lambda^{2yk} / j_s(x+k, y+l) is constant on the sample"""
    result = AdmissibleShiftSet()
    if is_rational_angle(problem.lam):
        logger.warning(f"{problem.label}: {RATIONAL_WARNING} (turns={problem.lam.angle_turns})")
        result.warnings.append(RATIONAL_WARNING)

    j_source = table_site_phase(problem.lam, problem.source)
    j_target = table_site_phase(problem.lam, problem.target)
    window = np.arange(-problem.sample_window, problem.sample_window + 1)
    xs, ys = np.meshgrid(window, window, indexing="ij")
    origin = (xs == 0) & (ys == 0)

    big_k = problem.shift_window
    for k in range(-big_k, big_k + 1):
        for l in range(-big_k, big_k + 1):
            ratio = j_target(xs, ys) * problem.lam.power(2 * ys * k) / j_source(xs + k, ys + l)
            reference = ratio[origin][0]
            deviation = float(np.abs(ratio - reference).max())
            result.deviations[(k, l)] = deviation
            if deviation < INTERTWINER_TOLERANCE:
                result.shifts.append((k, l))
                result.ratios[(k, l)] = complex(reference)

    logger.debug(f"{problem.label}: admissible shifts {result.shifts}")
    return result


@dataclass
class IntertwinerCertificate:
    equivalent: bool
    shift: Optional[Tuple[int, int]] = None
    identity_sign: Optional[int] = None
    intertwining_residual: Optional[float] = None
    algebra_residual: Optional[float] = None
    admissible: AdmissibleShiftSet = field(default_factory=AdmissibleShiftSet)
    tried: Dict[Tuple[int, int], float] = field(default_factory=dict)
    operator: Optional[LinearOp] = field(default=None, repr=False)


def _candidate(basis: BasisIndexMap, shift: Tuple[int, int], minus_coeff: complex) -> LinearOp:
    """Block-diagonal single-shift W: w+ = 1 on the + block, w- = minus_coeff on the - block"""
    coeff = np.where(basis.s == 1, 1.0 + 0j, minus_coeff)
    return shift_operator(basis, shift[0], shift[1], coeff)


def _identity_sign(op: LinearOp) -> Optional[int]:
    eye = np.eye(op.dim)
    for sign in (1, -1):
        if np.abs(op.entries - sign * eye).max() < INTERTWINER_TOLERANCE:
            return sign
    return None


def intertwiner_verdict(problem: IntertwinerProblem) -> IntertwinerCertificate:
    admissible = admissible_shifts(problem)
    certificate = IntertwinerCertificate(equivalent=False, admissible=admissible)
    if not admissible.shifts:
        logger.info(f"{problem.label}: no admissible shift, not equivalent")
        return certificate

    basis = integer_basis(problem.verification_n_max)
    j_source = table_real_structure(basis, problem.lam, problem.source)
    j_target = table_real_structure(basis, problem.lam, problem.target)
    pi_source = table_representation(basis, problem.lam, problem.source)
    pi_target = table_representation(basis, problem.lam, problem.target)

    for shift in admissible.shifts:
        depth = max(abs(shift[0]), abs(shift[1])) + 1
        if depth > basis.n_max:
            continue
        mask = interior_mask(basis, depth)
        w = _candidate(basis, shift, 1.0 / admissible.ratios[shift])
        conjugated = compose(w, j_source, adjoint(w))
        cols = mask.indices
        target_cols = j_target.m[:, cols]
        kappa = complex(np.vdot(target_cols, conjugated.m[:, cols]) / np.vdot(target_cols, target_cols))
        if abs(kappa) < INTERTWINER_TOLERANCE:
            certificate.tried[shift] = float("inf")
            continue
        # (c W) J (c W)* = c^2 W J W*
        w = w.scale(kappa ** -0.5)
        residual = interior_residual(compose(w, j_source, adjoint(w)) - j_target, mask)
        algebra = max(interior_residual(compose(w, src, adjoint(w)) - tgt, mask)
                      for src, tgt in zip(pi_source, pi_target))
        certificate.tried[shift] = max(residual, algebra)
        if residual < INTERTWINER_TOLERANCE and algebra < INTERTWINER_TOLERANCE:
            certificate.equivalent = True
            certificate.shift = shift
            certificate.intertwining_residual = residual
            certificate.algebra_residual = algebra
            certificate.operator = w
            certificate.identity_sign = _identity_sign(w)
            break

    logger.info(f"{problem.label}: equivalent={certificate.equivalent} "
                f"(tried {len(certificate.tried)} candidate shifts)")
    return certificate


@dataclass
class VerdictMatrix:
    spins: List[SpinStructure]
    certificates: Dict[Tuple[int, int], IntertwinerCertificate]

    def matrix(self) -> List[List[bool]]:
        size = len(self.spins)
        return [[self.certificates[(i, j)].equivalent for j in range(size)] for i in range(size)]

    @property
    def warnings(self) -> List[str]:
        collected: List[str] = []
        for certificate in self.certificates.values():
            for warning in certificate.admissible.warnings:
                if warning not in collected:
                    collected.append(warning)
        return collected


def verdict_matrix(lam: PhaseAngle, spins: Optional[List[SpinStructure]] = None,
                   shift_window: int = DEFAULT_SHIFT_WINDOW) -> VerdictMatrix:
    spins = spins or SpinStructure.all()
    pairs = [(i, j) for i in range(len(spins)) for j in range(len(spins))]
    problems = [IntertwinerProblem(spins[i], spins[j], lam, shift_window) for i, j in pairs]

    with ThreadPoolExecutor(max_workers=MAX_WORKERS) as executor:
        certificates = list(executor.map(intertwiner_verdict, problems))

    return VerdictMatrix(spins=list(spins), certificates=dict(zip(pairs, certificates)))


def counterexample_unconstrained_W(basis: BasisIndexMap, lam: PhaseAngle) -> LinearOp:
    """W e_{m,n,+} = i lambda^{m/2} e_{m,n-1,-},  W e_{m,n,-} = i e_{m,n,+}"""
    plus = basis.s == 1
    to_minus = shift_operator(basis, 0, -1, np.where(plus, 1j * lam.power(basis.m / 2.0), 0.0), flip=True)
    to_plus = shift_operator(basis, 0, 0, np.where(plus, 0.0, 1j), flip=True)
    return to_minus + to_plus


@dataclass(frozen=True)
class CounterexampleReport:
    n_max: int
    mask_depth: int
    intertwining_residual: float
    unitarity_residual: float
    grading_anticommutator: float
    grading_commutator: float
    commutator_u: float
    commutator_v: float


def counterexample_report(lam: PhaseAngle, n_max: int = 5, depth: int = 2) -> CounterexampleReport:
    """W intertwines J_00 with J_0(1/2) but anticommutes with gamma and misses the algebra"""
    basis = integer_basis(n_max)
    mask = interior_mask(basis, depth)
    w = counterexample_unconstrained_W(basis, lam)
    w_star = adjoint(w)
    j_00 = table_real_structure(basis, lam, SpinStructure.parse("0,0"))
    j_0half = table_real_structure(basis, lam, SpinStructure.parse("0,1/2"))
    gamma = LinearOp.diagonal(basis.s.astype(float))
    pi_u, pi_v = table_representation(basis, lam, SpinStructure())

    report = CounterexampleReport(
        n_max=n_max,
        mask_depth=depth,
        intertwining_residual=interior_residual(compose(w_star, j_00, w) - j_0half, mask),
        unitarity_residual=interior_residual(compose(w_star, w) - LinearOp.identity(basis.dim), mask),
        grading_anticommutator=interior_residual(compose(w, gamma) + compose(gamma, w), mask),
        grading_commutator=interior_residual(commutator(w, gamma), mask),
        commutator_u=interior_residual(commutator(w, pi_u), mask),
        commutator_v=interior_residual(commutator(w, pi_v), mask),
    )
    logger.info(f"Counterexample W: intertwining={report.intertwining_residual:.3e}, "
                f"[W, gamma]={report.grading_commutator:.3e}, [W, pi(U)]={report.commutator_u:.3e}, "
                f"[W, pi(V)]={report.commutator_v:.3e}")
    return report


class ClassifyService:
    """Verdict matrix over the four spin structures, plus the optional counterexample"""

    def __init__(self, shift_window: int = DEFAULT_SHIFT_WINDOW):
        logger.info("Initializing Classify Service")
        self.shift_window = shift_window

    def classify(self, lam: PhaseAngle, spins: Optional[List[SpinStructure]] = None) -> VerdictMatrix:
        try:
            # Every ordered pair, including the diagonal
            result = verdict_matrix(lam, spins, self.shift_window)

            equivalent = sum(row.count(True) for row in result.matrix())
            logger.info(f"Classified {len(result.spins)} spin structures: "
                        f"{equivalent} equivalent ordered pairs")
            for warning in result.warnings:
                logger.warning(f"Classification warning: {warning}")
            return result

        except NCTorusError as e:
            logger.error(f"Classification refused (K={self.shift_window}): {e}")
            raise

    def counterexample(self, lam: PhaseAngle) -> CounterexampleReport:
        try:
            return counterexample_report(lam)
        except NCTorusError as e:
            logger.error(f"Counterexample evaluation failed: {e}")
            raise
