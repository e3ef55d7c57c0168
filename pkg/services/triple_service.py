import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np

from config.settings import DEFAULT_EPS_CONST, DEFAULT_TAU0, DEFAULT_TAU1, DEFAULT_TAU2, DEGENERACY_TOLERANCE
from utils.errors import ParameterError
from utils.lattice import BasisIndexMap, SpinStructure, Truncation, build_basis
from utils.opalg import (AntilinearOp, LinearOp, PhaseAngle, adjoint, anti_adjoint, compose,
                         compose_lin_lin)

logger = logging.getLogger(__name__)

SitePhase = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TorusPolynomial:
    """Sum of coeff * U^p V^q (U before V); keys (p, q) are unique"""

    terms: Tuple[Tuple[int, int, complex], ...] = ()

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[int, int, complex]]) -> "TorusPolynomial":
        merged: Dict[Tuple[int, int], complex] = {}
        for p, q, coeff in terms:
            merged[(int(p), int(q))] = merged.get((int(p), int(q)), 0j) + complex(coeff)
        return cls(tuple((p, q, c) for (p, q), c in sorted(merged.items()) if c != 0))

    @classmethod
    def constant(cls, value: complex = 1.0) -> "TorusPolynomial":
        return cls.from_terms([(0, 0, value)])

    @classmethod
    def monomial(cls, p: int, q: int, coeff: complex = 1.0) -> "TorusPolynomial":
        return cls.from_terms([(p, q, coeff)])

    def __add__(self, other: "TorusPolynomial") -> "TorusPolynomial":
        return TorusPolynomial.from_terms(self.terms + other.terms)

    def scale(self, factor: complex) -> "TorusPolynomial":
        return TorusPolynomial.from_terms((p, q, factor * c) for p, q, c in self.terms)

    def multiply(self, other: "TorusPolynomial", lam: PhaseAngle) -> "TorusPolynomial":
        # U^p V^q U^r V^s = lambda^{-qr} U^{p+r} V^{q+s}
        products = []
        for p, q, a in self.terms:
            for r, s, b in other.terms:
                products.append((p + r, q + s, a * b * complex(lam.power(-q * r))))
        return TorusPolynomial.from_terms(products)

    @property
    def shift_radius(self) -> int:
        """Largest per-coordinate lattice shift of any term"""
        return max((max(abs(p), abs(q)) for p, q, _ in self.terms), default=0)

    @property
    def degrees(self) -> Tuple[Tuple[int, int], ...]:
        return tuple((p, q) for p, q, _ in self.terms)

    def label(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for p, q, c in self.terms:
            word = "".join(f"{name}^{power}" if power not in (0, 1) else (name if power == 1 else "")
                           for name, power in (("U", p), ("V", q))) or "1"
            parts.append(word if c == 1 else f"({c:.6g}){word}")
        return " + ".join(parts)


@dataclass(frozen=True)
class RealStructureParams:
    phi: float = 0.0
    psi: float = 0.0
    theta_glob: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.phi, self.psi, self.theta_glob])):
            raise ParameterError("Real structure angles must be finite")


class DiracCase(Enum):
    LINEAR = "phi=0,psi=0"
    MIXED_PSI = "phi=0,psi!=0"
    MIXED_PHI = "phi!=0,psi=0"
    SPURIOUS = "phi!=0,psi!=0"

    @classmethod
    def from_angles(cls, phi: float, psi: float) -> "DiracCase":
        if phi == 0 and psi == 0:
            return cls.LINEAR
        if phi == 0:
            return cls.MIXED_PSI
        if psi == 0:
            return cls.MIXED_PHI
        return cls.SPURIOUS


@dataclass(frozen=True)
class DiracParams:
    tau1: complex = DEFAULT_TAU1
    tau2: complex = DEFAULT_TAU2
    tau0: complex = DEFAULT_TAU0
    eps_const: complex = DEFAULT_EPS_CONST

    def case(self, rparams: RealStructureParams) -> DiracCase:
        return DiracCase.from_angles(rparams.phi, rparams.psi)

    def validate(self, rparams: RealStructureParams):
        case = self.case(rparams)
        if case is DiracCase.LINEAR:
            if abs(self.eps_const) > DEGENERACY_TOLERANCE:
                raise ParameterError(f"eps_const must vanish when phi=psi=0 (got {self.eps_const})")
        elif abs(self.tau0 + self.eps_const) > DEGENERACY_TOLERANCE:
            raise ParameterError(f"Case {case.value} requires tau0 = -eps_const "
                                 f"(got tau0={self.tau0}, eps_const={self.eps_const})")


@dataclass(frozen=True, eq=False)
class SpectralTripleBundle:
    map: BasisIndexMap
    lam: PhaseAngle
    piU: LinearOp = field(repr=False)
    piV: LinearOp = field(repr=False)
    gamma: LinearOp = field(repr=False)
    delta1: LinearOp = field(repr=False)
    delta2: LinearOp = field(repr=False)
    dirac: LinearOp = field(repr=False)
    j: AntilinearOp = field(repr=False)
    rparams: RealStructureParams = RealStructureParams()
    dparams: DiracParams = DiracParams()

    @property
    def spin(self) -> SpinStructure:
        return self.map.spin

    @property
    def case(self) -> DiracCase:
        return self.dparams.case(self.rparams)


def shift_operator(basis: BasisIndexMap, dm: int, dn: int, coeff: np.ndarray, flip: bool = False) -> LinearOp:
    """e_{m,n,s} -> coeff * e_{m+dm,n+dn,s'}; columns whose target leaves the window stay zero"""
    target, inside = basis.target_indices(np.full(basis.dim, dm), np.full(basis.dim, dn), flip=flip)
    entries = np.zeros((basis.dim, basis.dim), dtype=complex)
    cols = np.flatnonzero(inside)
    entries[target[cols], cols] = np.broadcast_to(coeff, (basis.dim,))[cols]
    return LinearOp(entries)


def rep_U(basis: BasisIndexMap, lam: PhaseAngle) -> LinearOp:
    return shift_operator(basis, 1, 0, np.ones(basis.dim))


def rep_V(basis: BasisIndexMap, lam: PhaseAngle, gauge_exponent: int = -1) -> LinearOp:
    """pi(V) e_{mu,nu} = lambda^{-mu} e_{mu,nu+1}; gauge_exponent=+1 gives the mis-gauged variant"""
    return shift_operator(basis, 0, 1, lam.power(gauge_exponent * basis.mu))


def _power(op: LinearOp, exponent: int) -> LinearOp:
    base = op if exponent >= 0 else adjoint(op)
    return LinearOp(np.linalg.matrix_power(base.entries, abs(exponent)))


def rep_poly(poly: TorusPolynomial, basis: BasisIndexMap, lam: PhaseAngle,
             generators: Optional[Tuple[LinearOp, LinearOp]] = None) -> LinearOp:
    pi_u, pi_v = generators or (rep_U(basis, lam), rep_V(basis, lam))
    total = LinearOp.zeros(basis.dim)
    for p, q, coeff in poly.terms:
        total = total + compose_lin_lin(_power(pi_u, p), _power(pi_v, q)).scale(coeff)
    return total


def derivation_ops(basis: BasisIndexMap) -> Tuple[LinearOp, LinearOp]:
    return LinearOp.diagonal(basis.mu), LinearOp.diagonal(basis.nu)


def grading_op(basis: BasisIndexMap) -> LinearOp:
    return LinearOp.diagonal(basis.s.astype(float))


def canonical_site_phase(lam: PhaseAngle, rparams: RealStructureParams) -> SitePhase:
    """j_+(mu, nu) = exp(i(phi mu + psi nu)) lambda^{-mu nu}"""
    def phase(mu, nu):
        return np.exp(1j * (rparams.phi * mu + rparams.psi * nu)) * lam.power(-mu * nu)
    return phase


def reflection_real_structure(basis: BasisIndexMap, mu: np.ndarray, nu: np.ndarray,
                              center: Tuple[int, int], site_phase: SitePhase,
                              theta_glob: float = 0.0) -> AntilinearOp:
    """Antilinear J on labels (m, n) -> (center - (m, n)), real coordinates (mu, nu) -> (-mu, -nu).

    J e_+ = e^{i theta} j_+(mu, nu) e_-,  J e_- = -e^{i theta} j_+(-mu, -nu) e_+, so J^2 = -1
    wherever both reflections stay inside the window.
    """
    dm = center[0] - 2 * basis.m
    dn = center[1] - 2 * basis.n
    target, inside = basis.target_indices(dm, dn, flip=True)
    glob = np.exp(1j * theta_glob)
    plus = basis.s == 1
    coeff = np.where(plus, glob * site_phase(mu, nu), -glob * site_phase(-mu, -nu))
    matrix = np.zeros((basis.dim, basis.dim), dtype=complex)
    cols = np.flatnonzero(inside)
    matrix[target[cols], cols] = coeff[cols]
    return AntilinearOp(matrix)


def real_structure_op(basis: BasisIndexMap, lam: PhaseAngle, rparams: RealStructureParams,
                      spin: Optional[SpinStructure] = None,
                      site_phase: Optional[SitePhase] = None) -> AntilinearOp:
    if spin is not None and spin != basis.spin:
        raise ParameterError(f"Spin ({spin.label}) does not match the basis ({basis.spin.label})")
    # mu = m + eps, so -mu = (-m - 2 eps) + eps
    center = (-int(2 * basis.spin.eps_mu.value), -int(2 * basis.spin.eps_nu.value))
    phase = site_phase or canonical_site_phase(lam, rparams)
    return reflection_real_structure(basis, basis.mu, basis.nu, center, phase, rparams.theta_glob)


def opposite_ops(basis: BasisIndexMap, lam: PhaseAngle,
                 rparams: Optional[RealStructureParams] = None) -> Tuple[LinearOp, LinearOp]:
    """Closed forms of U° = J pi(U)* J^-1 and V° = J pi(V)* J^-1"""
    rparams = rparams or RealStructureParams()
    u_phase = np.exp(1j * rparams.phi * basis.s)
    v_phase = np.exp(1j * rparams.psi * basis.s)
    u_op = shift_operator(basis, 1, 0, u_phase * lam.power(-basis.nu))
    v_op = shift_operator(basis, 0, 1, v_phase)
    return u_op, v_op


def opposite_from_j(j: AntilinearOp, op: LinearOp) -> LinearOp:
    return compose(j, adjoint(op), anti_adjoint(j))


def automorphism_witness(basis: BasisIndexMap, rparams: RealStructureParams) -> LinearOp:
    angle = rparams.phi * basis.mu + rparams.psi * basis.nu + rparams.theta_glob
    return LinearOp.diagonal(np.exp(1j * basis.s * angle))


def dirac_coefficients(basis: BasisIndexMap, dparams: DiracParams, rparams: RealStructureParams) -> np.ndarray:
    """d^+_{mu,nu} on every index, for the four solution families"""
    mu, nu = basis.mu, basis.nu
    case = dparams.case(rparams)
    if case is DiracCase.LINEAR:
        return dparams.tau1 * mu + dparams.tau2 * nu + dparams.eps_const
    if case is DiracCase.MIXED_PSI:
        return dparams.tau1 * mu + dparams.tau0 * np.exp(-2j * rparams.psi * nu) + dparams.eps_const
    if case is DiracCase.MIXED_PHI:
        return dparams.tau2 * nu + dparams.tau0 * np.exp(-2j * rparams.phi * mu) + dparams.eps_const
    return dparams.tau0 * np.exp(-2j * (rparams.phi * mu + rparams.psi * nu)) + dparams.eps_const


def dirac_op_from_coefficients(basis: BasisIndexMap, coefficients) -> LinearOp:
    """D e_{+} = d^+ e_{-}, D e_{-} = conj(d^+) e_{+}; accepts an array or a callable of (mu, nu)"""
    d_plus = coefficients(basis.mu, basis.nu) if callable(coefficients) else coefficients
    d_plus = np.broadcast_to(np.asarray(d_plus, dtype=complex), (basis.dim,))
    plus = np.flatnonzero(basis.s == 1)
    minus = plus + basis.block_size
    entries = np.zeros((basis.dim, basis.dim), dtype=complex)
    entries[minus, plus] = d_plus[plus]
    entries[plus, minus] = np.conj(d_plus[plus])
    return LinearOp(entries)


def dirac_op(basis: BasisIndexMap, dparams: DiracParams, rparams: RealStructureParams,
             strict: bool = True) -> LinearOp:
    if strict:
        dparams.validate(rparams)
    return dirac_op_from_coefficients(basis, dirac_coefficients(basis, dparams, rparams))


def build_bundle(trunc: Truncation, lam: PhaseAngle,
                 rparams: Optional[RealStructureParams] = None,
                 dparams: Optional[DiracParams] = None,
                 strict: bool = True) -> SpectralTripleBundle:
    rparams = rparams or RealStructureParams()
    dparams = dparams or DiracParams()
    basis = build_basis(trunc)
    delta1, delta2 = derivation_ops(basis)
    bundle = SpectralTripleBundle(
        map=basis,
        lam=lam,
        piU=rep_U(basis, lam),
        piV=rep_V(basis, lam),
        gamma=grading_op(basis),
        delta1=delta1,
        delta2=delta2,
        dirac=dirac_op(basis, dparams, rparams, strict=strict),
        j=real_structure_op(basis, lam, rparams),
        rparams=rparams,
        dparams=dparams,
    )
    logger.info(f"Built spectral triple: spin=({trunc.spin.label}) n_max={trunc.n_max} "
                f"dim={basis.dim} case={bundle.case.value}")
    return bundle
