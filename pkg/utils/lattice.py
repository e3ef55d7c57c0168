import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, List, Optional, Tuple

import numpy as np

from utils.errors import EmptyInteriorError, ParameterError

logger = logging.getLogger(__name__)

SIGNS = (1, -1)


class Offset(Enum):
    """Lattice offset of a derivation spectrum, either 0 or 1/2"""

    ZERO = Fraction(0)
    HALF = Fraction(1, 2)

    @property
    def value_float(self) -> float:
        return float(self.value)

    @property
    def label(self) -> str:
        return "0" if self is Offset.ZERO else "1/2"

    @classmethod
    def parse(cls, text: str) -> "Offset":
        cleaned = text.strip()
        if cleaned in ("0", "0.0"):
            return cls.ZERO
        if cleaned in ("1/2", "0.5", ".5", "half"):
            return cls.HALF
        raise ParameterError(f"Spin offset must be 0 or 1/2, got '{text}'")


@dataclass(frozen=True)
class SpinStructure:
    eps_mu: Offset = Offset.ZERO
    eps_nu: Offset = Offset.ZERO

    @classmethod
    def parse(cls, text: str) -> "SpinStructure":
        parts = text.split(",")
        if len(parts) != 2:
            raise ParameterError(f"Spin structure must look like '0,1/2', got '{text}'")
        return cls(Offset.parse(parts[0]), Offset.parse(parts[1]))

    @classmethod
    def all(cls) -> List["SpinStructure"]:
        """The four structures in the order (0,0), (0,1/2), (1/2,0), (1/2,1/2)"""
        return [cls(a, b) for a in Offset for b in Offset]

    @property
    def label(self) -> str:
        return f"{self.eps_mu.label},{self.eps_nu.label}"

    @property
    def has_half(self) -> bool:
        return Offset.HALF in (self.eps_mu, self.eps_nu)


def reflection_margin(spin: SpinStructure) -> int:
    # a half-integer window is never symmetric under x -> -x; J loses one layer
    return 1 if spin.has_half else 0


@dataclass(frozen=True)
class Truncation:
    n_max: int
    spin: SpinStructure = field(default_factory=SpinStructure)

    def __post_init__(self):
        if not isinstance(self.n_max, (int, np.integer)) or self.n_max < 1:
            raise ParameterError(f"n_max must be a positive integer, got {self.n_max}")

    @property
    def width(self) -> int:
        return 2 * self.n_max + 1


@dataclass(frozen=True, eq=False)
class BasisIndexMap:
    """Flat indexing of e_{m,n,s}, grading-major then lexicographic in (m, n)"""

    trunc: Truncation
    m: np.ndarray = field(repr=False)
    n: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return self.trunc.n_max

    @property
    def spin(self) -> SpinStructure:
        return self.trunc.spin

    @property
    def dim(self) -> int:
        return int(self.m.shape[0])

    @property
    def block_size(self) -> int:
        return self.dim // 2

    def index_of(self, m: int, n: int, s: int) -> int:
        width = self.trunc.width
        if abs(m) > self.n_max or abs(n) > self.n_max or s not in SIGNS:
            raise KeyError(f"Site ({m}, {n}, {s}) is outside the window")
        block = 0 if s == 1 else 1
        return block * width * width + (m + self.n_max) * width + (n + self.n_max)

    def site_of(self, index: int) -> Tuple[int, int, int]:
        if not 0 <= index < self.dim:
            raise KeyError(f"Index {index} is outside [0, {self.dim})")
        return int(self.m[index]), int(self.n[index]), int(self.s[index])

    def target_indices(self, dm: np.ndarray, dn: np.ndarray,
                       flip: bool = False) -> Tuple[np.ndarray, np.ndarray]:
        """Flat targets of (m + dm, n + dn, s or -s); second array masks in-window targets"""
        m_t = self.m + dm
        n_t = self.n + dn
        s_t = -self.s if flip else self.s
        inside = (np.abs(m_t) <= self.n_max) & (np.abs(n_t) <= self.n_max)
        width = self.trunc.width
        block = np.where(s_t == 1, 0, 1)
        target = block * width * width + (m_t + self.n_max) * width + (n_t + self.n_max)
        return np.where(inside, target, -1), inside

    def __iter__(self) -> Iterator[Tuple[int, int, int]]:
        for index in range(self.dim):
            yield self.site_of(index)


def build_basis(trunc: Truncation) -> BasisIndexMap:
    width = trunc.width
    ms, ns = np.meshgrid(np.arange(-trunc.n_max, trunc.n_max + 1),
                         np.arange(-trunc.n_max, trunc.n_max + 1), indexing="ij")
    m_block = ms.ravel()
    n_block = ns.ravel()
    m = np.concatenate([m_block, m_block])
    n = np.concatenate([n_block, n_block])
    s = np.concatenate([np.ones(width * width, dtype=int), -np.ones(width * width, dtype=int)])
    # offsets stay exact in SpinStructure; floats only appear here
    mu = m + trunc.spin.eps_mu.value_float
    nu = n + trunc.spin.eps_nu.value_float
    logger.debug(f"Built basis n_max={trunc.n_max} spin=({trunc.spin.label}) dim={m.shape[0]}")
    return BasisIndexMap(trunc=trunc, m=m, n=n, s=s, mu=mu, nu=nu)


@dataclass(frozen=True, eq=False)
class InteriorMask:
    depth: int
    indices: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    def __contains__(self, index: int) -> bool:
        return bool(np.any(self.indices == index))


def interior_mask(basis: BasisIndexMap, depth: int, sign: Optional[int] = None) -> InteriorMask:
    """Indices whose (m, n) sit at least `depth` layers inside the window; `sign` keeps one grading block"""
    if depth < 0:
        raise ParameterError(f"Mask depth must be non-negative, got {depth}")
    if depth > basis.n_max:
        raise EmptyInteriorError(f"empty interior: depth {depth} exceeds n_max {basis.n_max}")
    limit = basis.n_max - depth
    keep = (np.abs(basis.m) <= limit) & (np.abs(basis.n) <= limit)
    if sign is not None:
        keep &= basis.s == sign
    return InteriorMask(depth=depth, indices=np.flatnonzero(keep))


