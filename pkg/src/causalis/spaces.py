"""Operators on labeled tensor-product spaces.

A :class:`TensorSpace` is an ordered list of named factors, e.g.
``(AI:2, AO:2, BI:2, BO:2)``; a :class:`LabeledOperator` is a dense
complex matrix living on such a space.  Every structural map used
elsewhere in the package is expressed against labels rather than raw
index arithmetic: partial trace, the trace-and-replace map

    R_X(W) = Tr_X(W) (x) 1_X / d_X   (re-embedded at X's position),

partial transposition in the computational basis, and factor
permutation.  Keeping the factor bookkeeping here means the physics
modules never touch a reshape.

Matrices are stored row-major as ``complex128`` and treated as
immutable; all maps return new operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateLabelError,
    MismatchedFactorsError,
    UnknownLabelError,
)

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True, order=True)
class SpaceLabel:
    """A named tensor factor with its dimension."""

    name: str
    dim: int

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("label name must be non-empty")
        if self.dim < 1:
            raise DimensionMismatchError(f"label {self.name!r} has dim {self.dim} < 1")


@dataclass(frozen=True)
class TensorSpace:
    """Ordered tuple of distinct labeled factors."""

    factors: tuple[SpaceLabel, ...]

    def __post_init__(self) -> None:
        names = [f.name for f in self.factors]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DuplicateLabelError(f"duplicate factor names: {dupes}")

    @staticmethod
    def of(*pairs: tuple[str, int]) -> "TensorSpace":
        """Build a space from (name, dim) pairs in order."""
        return TensorSpace(tuple(SpaceLabel(n, d) for n, d in pairs))

    @property
    def dim(self) -> int:
        out = 1
        for f in self.factors:
            out *= f.dim
        return out

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.factors)

    def __len__(self) -> int:
        return len(self.factors)

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownLabelError(f"label {name!r} not in space {self.names}") from None

    def label(self, name: str) -> SpaceLabel:
        return self.factors[self.index(name)]

    def dim_of(self, names: Iterable[str]) -> int:
        out = 1
        for n in names:
            out *= self.label(n).dim
        return out

    def without(self, names: Iterable[str]) -> "TensorSpace":
        drop = self._resolve(names)
        return TensorSpace(tuple(f for i, f in enumerate(self.factors) if i not in drop))

    def _resolve(self, names: Iterable[str]) -> tuple[int, ...]:
        """Label names -> factor positions, rejecting unknowns and repeats."""
        seen: list[int] = []
        for n in names:
            i = self.index(n if isinstance(n, str) else n.name)
            if i in seen:
                raise DuplicateLabelError(f"label {self.names[i]!r} given twice")
            seen.append(i)
        return tuple(seen)


class LabeledOperator:
    """Dense square matrix attached to a TensorSpace.

    The matrix is copied on construction and frozen.  Row and column
    index orders both follow the factor order of ``space``: entry
    ``M[i, j]`` with ``i = (i_1 ... i_k)`` mixed-radix over the factor
    dims.
    """

    __slots__ = ("space", "matrix")

    def __init__(self, space: TensorSpace, matrix: np.ndarray):
        m = np.array(matrix, dtype=np.complex128, order="C")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"operator matrix must be square, got shape {m.shape}")
        if m.shape[0] != space.dim:
            raise DimensionMismatchError(
                f"matrix dim {m.shape[0]} does not match space dim {space.dim} {space.names}"
            )
        m.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, key, value):  # pragma: no cover - guard
        raise AttributeError("LabeledOperator is immutable")

    def __repr__(self) -> str:
        facs = ",".join(f"{f.name}:{f.dim}" for f in self.space.factors)
        return f"LabeledOperator[{facs}]"

    @property
    def dim(self) -> int:
        return self.space.dim

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def hermitized(self) -> "LabeledOperator":
        """(M + M^dag)/2 — use before any eigenvalue-based check."""
        return LabeledOperator(self.space, (self.matrix + self.matrix.conj().T) / 2)

    def min_eigenvalue(self) -> float:
        h = (self.matrix + self.matrix.conj().T) / 2
        return float(np.linalg.eigvalsh(h)[0])

    # -- arithmetic on identical spaces (same factor order) ------------------

    def _coerce(self, other: "LabeledOperator") -> np.ndarray:
        if not isinstance(other, LabeledOperator):
            raise TypeError("expected a LabeledOperator")
        if other.space.names != self.space.names or other.space.dims != self.space.dims:
            raise MismatchedFactorsError(
                f"operator spaces differ: {self.space.names} vs {other.space.names}"
            )
        return other.matrix

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        return LabeledOperator(self.space, self.matrix + self._coerce(other))

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        return LabeledOperator(self.space, self.matrix - self._coerce(other))

    def __mul__(self, scalar: complex) -> "LabeledOperator":
        return LabeledOperator(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "LabeledOperator":
        return LabeledOperator(self.space, self.matrix / scalar)

    def allclose(self, other: "LabeledOperator", tol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.matrix - self._coerce(other))) <= tol)


# -- reshaping core ----------------------------------------------------------


def _as_tensor(op: LabeledOperator) -> np.ndarray:
    """Matrix -> 2k-leg tensor, legs ordered (rows..., cols...)."""
    dims = op.space.dims
    return op.matrix.reshape(dims + dims)


def _from_tensor(space: TensorSpace, t: np.ndarray) -> LabeledOperator:
    d = space.dim
    return LabeledOperator(space, t.reshape(d, d))


# -- public maps -------------------------------------------------------------


def tensor(*ops: LabeledOperator) -> LabeledOperator:
    """Kronecker product; factor order is the concatenation of inputs."""
    if not ops:
        raise ValueError("tensor() needs at least one operator")
    factors: list[SpaceLabel] = []
    m = None
    for op in ops:
        factors.extend(op.space.factors)
        m = op.matrix if m is None else np.kron(m, op.matrix)
    return LabeledOperator(TensorSpace(tuple(factors)), m)


def partial_trace(op: LabeledOperator, labels: Iterable[str]) -> LabeledOperator:
    """Trace out the named factors; survivors keep their relative order."""
    drop = op.space._resolve(labels)
    if not drop:
        return op
    k = len(op.space)
    t = _as_tensor(op)
    for pos in sorted(drop, reverse=True):
        t = np.trace(t, axis1=pos, axis2=pos + k)
        k -= 1
    return _from_tensor(op.space.without(op.space.names[i] for i in drop), t)


def trace_and_replace(op: LabeledOperator, labels: Iterable[str]) -> LabeledOperator:
    """Tr_X(W) (x) 1_X/d_X, with the identity re-embedded at X's own slots.

    Idempotent and trace-preserving; maps on disjoint label sets commute.
    """
    drop = op.space._resolve(labels)
    if not drop:
        return op
    k = len(op.space)
    dims = op.space.dims
    t = _as_tensor(op)
    # trace each chosen leg pair, then restore it as (eye/d) via outer product
    for pos in drop:
        d = dims[pos]
        tr = np.trace(t, axis1=pos, axis2=pos + k)  # legs at pos vanish
        # reinsert two legs at the same positions holding eye(d)/d
        t = np.tensordot(tr, np.eye(d) / d, axes=0)  # appended legs at end
        order = list(range(2 * k - 2))
        order.insert(pos, 2 * k - 2)
        order.insert(pos + k, 2 * k - 1)
        t = t.transpose(order)
    return _from_tensor(op.space, t)


def partial_transpose(op: LabeledOperator, labels: Iterable[str]) -> LabeledOperator:
    """Transpose the named factors in the computational basis."""
    flip = op.space._resolve(labels)
    if not flip:
        return op
    k = len(op.space)
    perm = list(range(2 * k))
    for pos in flip:
        perm[pos], perm[pos + k] = perm[pos + k], perm[pos]
    return _from_tensor(op.space, _as_tensor(op).transpose(perm))


def permute_to(op: LabeledOperator, target: TensorSpace | Sequence[str]) -> LabeledOperator:
    """Reorder tensor factors to match ``target``.

    ``target`` may be a TensorSpace (dims must agree factor-by-factor)
    or just a sequence of label names.
    """
    if isinstance(target, TensorSpace):
        tgt_names = target.names
        tgt_space = target
    else:
        tgt_names = tuple(target)
        tgt_space = None
    if sorted(tgt_names) != sorted(op.space.names):
        raise MismatchedFactorsError(
            f"target {tgt_names} is not a permutation of {op.space.names}"
        )
    src = {n: i for i, n in enumerate(op.space.names)}
    order = [src[n] for n in tgt_names]
    if tgt_space is None:
        tgt_space = TensorSpace(tuple(op.space.factors[i] for i in order))
    else:
        for n in tgt_names:
            if tgt_space.label(n).dim != op.space.label(n).dim:
                raise DimensionMismatchError(
                    f"factor {n!r}: dim {tgt_space.label(n).dim} != {op.space.label(n).dim}"
                )
    k = len(op.space)
    perm = order + [i + k for i in order]
    return _from_tensor(tgt_space, _as_tensor(op).transpose(perm))


# -- convenience constructors -------------------------------------------------


def identity(space: TensorSpace) -> LabeledOperator:
    return LabeledOperator(space, np.eye(space.dim))


def uniform_state(space: TensorSpace) -> LabeledOperator:
    """Maximally mixed state 1/d on the given space."""
    return LabeledOperator(space, np.eye(space.dim) / space.dim)


def max_entangled(a: SpaceLabel, b: SpaceLabel) -> LabeledOperator:
    """Unnormalized |Phi+><Phi+| with |Phi+> = sum_i |ii> on factors (a, b).

    Trace equals the factor dimension, matching the Choi matrix of the
    identity channel.
    """
    if a.dim != b.dim:
        raise DimensionMismatchError(f"max_entangled needs equal dims, got {a.dim} and {b.dim}")
    d = a.dim
    phi = np.zeros(d * d, dtype=np.complex128)
    phi[:: d + 1] = 1.0  # |ii> components
    return LabeledOperator(TensorSpace((a, b)), np.outer(phi, phi.conj()))


def embed(op: LabeledOperator, target: TensorSpace) -> LabeledOperator:
    """op (x) identity on target's extra factors, ordered like ``target``.

    Every factor of ``op`` must appear in ``target`` with the same dim.
    """
    extra = [f for f in target.factors if f.name not in op.space]
    for f in op.space.factors:
        if target.label(f.name).dim != f.dim:
            raise DimensionMismatchError(
                f"factor {f.name!r}: dim {f.dim} != target {target.label(f.name).dim}"
            )
    wide = tensor(op, identity(TensorSpace(tuple(extra)))) if extra else op
    return permute_to(wide, target)
