"""Dense complex operators, antilinear operators and interior residuals.

An antilinear operator is stored through its matrix part ``m``: it acts on a
vector ``v`` as ``m @ conj(v)``. Compositions follow from that rule:

    (j o a).m = j.m @ conj(a)        (a o j).m = a @ j.m
    j o k     = j.m @ conj(k.m)      (a linear operator)
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from utils.errors import DimensionMismatchError, EmptyInteriorError, ParameterError
from utils.lattice import InteriorMask

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhaseAngle:
    """A unit complex number lambda = exp(2 pi i * angle_turns)"""

    angle_turns: float

    def __post_init__(self):
        if not math.isfinite(self.angle_turns):
            raise ParameterError(f"Angle must be finite, got {self.angle_turns}")
        object.__setattr__(self, "angle_turns", self.angle_turns % 1.0)

    @property
    def value(self) -> complex:
        return complex(np.exp(1j * TWO_PI * self.angle_turns))

    def power(self, exponent):
        """lambda**exponent for real (array) exponents, computed from the accumulated angle"""
        return np.exp(1j * TWO_PI * self.angle_turns * np.asarray(exponent, dtype=float))


def _checked(entries: np.ndarray, name: str) -> np.ndarray:
    array = np.asarray(entries, dtype=complex)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionMismatchError(f"{name} needs a square matrix, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} has non-finite entries")
    return array


@dataclass(frozen=True, eq=False)
class LinearOp:
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", _checked(self.entries, "LinearOp"))

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @classmethod
    def identity(cls, dim: int) -> "LinearOp":
        return cls(np.eye(dim, dtype=complex))

    @classmethod
    def zeros(cls, dim: int) -> "LinearOp":
        return cls(np.zeros((dim, dim), dtype=complex))

    @classmethod
    def diagonal(cls, values) -> "LinearOp":
        return cls(np.diag(np.asarray(values, dtype=complex)))

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.entries @ vector

    def __add__(self, other: "LinearOp") -> "LinearOp":
        _same_dim(self, other)
        return LinearOp(self.entries + other.entries)

    def __sub__(self, other: "LinearOp") -> "LinearOp":
        _same_dim(self, other)
        return LinearOp(self.entries - other.entries)

    def scale(self, factor: complex) -> "LinearOp":
        return LinearOp(factor * self.entries)


@dataclass(frozen=True, eq=False)
class AntilinearOp:
    m: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "m", _checked(self.m, "AntilinearOp"))

    @property
    def dim(self) -> int:
        return int(self.m.shape[0])

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.m @ np.conj(vector)

    def __add__(self, other: "AntilinearOp") -> "AntilinearOp":
        _same_dim(self, other)
        return AntilinearOp(self.m + other.m)

    def __sub__(self, other: "AntilinearOp") -> "AntilinearOp":
        _same_dim(self, other)
        return AntilinearOp(self.m - other.m)

    def scale(self, factor: complex) -> "AntilinearOp":
        # (c J) v = c m conj(v): scaling acts on the left
        return AntilinearOp(factor * self.m)


Operator = Union[LinearOp, AntilinearOp]


def _same_dim(a: Operator, b: Operator):
    if a.dim != b.dim:
        raise DimensionMismatchError(f"Operator dimensions differ: {a.dim} vs {b.dim}")


def compose_lin_lin(a: LinearOp, b: LinearOp) -> LinearOp:
    _same_dim(a, b)
    return LinearOp(a.entries @ b.entries)


def compose_anti_lin(j: AntilinearOp, a: LinearOp) -> AntilinearOp:
    _same_dim(j, a)
    return AntilinearOp(j.m @ np.conj(a.entries))


def compose_lin_anti(a: LinearOp, j: AntilinearOp) -> AntilinearOp:
    _same_dim(a, j)
    return AntilinearOp(a.entries @ j.m)


def compose_anti_anti(j: AntilinearOp, k: AntilinearOp) -> LinearOp:
    _same_dim(j, k)
    return LinearOp(j.m @ np.conj(k.m))


def compose(*ops: Operator) -> Operator:
    """Left-to-right product ops[0] o ops[1] o ... with linearity tracked"""
    result = ops[0]
    for op in ops[1:]:
        if isinstance(result, LinearOp) and isinstance(op, LinearOp):
            result = compose_lin_lin(result, op)
        elif isinstance(result, AntilinearOp) and isinstance(op, LinearOp):
            result = compose_anti_lin(result, op)
        elif isinstance(result, LinearOp):
            result = compose_lin_anti(result, op)
        else:
            result = compose_anti_anti(result, op)
    return result


def commutator(a: LinearOp, b: LinearOp) -> LinearOp:
    return compose_lin_lin(a, b) - compose_lin_lin(b, a)


def adjoint(a: LinearOp) -> LinearOp:
    return LinearOp(a.entries.conj().T)


def anti_adjoint(j: AntilinearOp) -> AntilinearOp:
    # <j' u, v> = <j v, u> gives j'.m = transpose(j.m)
    return AntilinearOp(j.m.T.copy())


def interior_residual(op: Operator, mask: InteriorMask) -> float:
    """Largest column norm of `op` over the basis vectors selected by `mask`"""
    if len(mask) == 0:
        raise EmptyInteriorError("Residual needs a non-empty mask")
    matrix = op.entries if isinstance(op, LinearOp) else op.m
    if mask.indices.max() >= matrix.shape[1]:
        raise DimensionMismatchError(f"Mask index {mask.indices.max()} exceeds operator dim {matrix.shape[1]}")
    return float(np.linalg.norm(matrix[:, mask.indices], axis=0).max())
