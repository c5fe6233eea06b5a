"""Instrument sets and POVMs in Choi form.

An instrument element for setting x and outcome a is a PSD operator
I_{a|x} on input (x) output; summed over outcomes it must be the Choi
operator of a channel, i.e. Tr_out sum_a I_{a|x} = 1_in.  The Choi
convention used throughout pairs with the unnormalized maximally
entangled state: the identity channel has Choi |Phi+><Phi+| with
|Phi+> = sum_i |ii>.

POVMs are the output-less special case (measurement only), used by the
party acting last.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .spaces import (
    LabeledOperator,
    SpaceLabel,
    TensorSpace,
    max_entangled,
    partial_trace,
    permute_to,
    tensor,
)

PSD_FLOOR = -1e-10
TP_TOL = 1e-9


@dataclass(frozen=True)
class InstrumentSet:
    """Family of instruments indexed [setting][outcome] on input (x) output."""

    input_label: SpaceLabel
    output_label: SpaceLabel
    elements: tuple[tuple[LabeledOperator, ...], ...]

    def __post_init__(self) -> None:
        want = TensorSpace((self.input_label, self.output_label))
        if not self.elements or not self.elements[0]:
            raise ValidationError("instrument set needs at least one setting and outcome")
        n_out = len(self.elements[0])
        fixed = []
        for row in self.elements:
            if len(row) != n_out:
                raise ValidationError("ragged outcome counts across settings")
            fixed.append(tuple(self._canon(el, want) for el in row))
        object.__setattr__(self, "elements", tuple(fixed))

    @staticmethod
    def _canon(el: LabeledOperator, want: TensorSpace) -> LabeledOperator:
        if el.space.names != want.names:
            el = permute_to(el, want)
        if el.space.dims != want.dims:
            raise DimensionMismatchError(
                f"element dims {el.space.dims} do not match labels {want.dims}"
            )
        return el

    @property
    def settings(self) -> int:
        return len(self.elements)

    @property
    def outcomes(self) -> int:
        return len(self.elements[0])

    def element(self, x: int, a: int) -> LabeledOperator:
        return self.elements[x][a]

    def setting_sum(self, x: int) -> LabeledOperator:
        total = self.elements[x][0]
        for el in self.elements[x][1:]:
            total = total + el
        return total


@dataclass(frozen=True)
class POVMSet:
    """Measurements indexed [setting][outcome] on a single labeled factor."""

    space: SpaceLabel
    elements: tuple[tuple[LabeledOperator, ...], ...]

    def __post_init__(self) -> None:
        want = TensorSpace((self.space,))
        if not self.elements or not self.elements[0]:
            raise ValidationError("POVM set needs at least one setting and outcome")
        n_out = len(self.elements[0])
        fixed = []
        for row in self.elements:
            if len(row) != n_out:
                raise ValidationError("ragged outcome counts across settings")
            for el in row:
                if el.space.dims != want.dims or el.space.names != want.names:
                    raise DimensionMismatchError(
                        f"POVM element on {el.space.names}{el.space.dims}, "
                        f"expected {want.names}{want.dims}"
                    )
            fixed.append(tuple(row))
        object.__setattr__(self, "elements", tuple(fixed))

    @property
    def settings(self) -> int:
        return len(self.elements)

    @property
    def outcomes(self) -> int:
        return len(self.elements[0])

    def element(self, z: int, c: int) -> LabeledOperator:
        return self.elements[z][c]

    def setting_sum(self, z: int) -> LabeledOperator:
        total = self.elements[z][0]
        for el in self.elements[z][1:]:
            total = total + el
        return total


@dataclass
class InstrumentReport:
    """Positivity margins per element and completeness residuals per setting."""

    element_margins: list[tuple[tuple[int, int], float]]
    tp_residuals: list[float]

    @property
    def passed(self) -> bool:
        margins_ok = all(m >= PSD_FLOOR for _, m in self.element_margins)
        return margins_ok and all(r <= TP_TOL for r in self.tp_residuals)


def validate_instruments(instruments: InstrumentSet | POVMSet) -> InstrumentReport:
    """Check positivity of every element and trace preservation per setting."""
    margins = []
    residuals = []
    for x in range(instruments.settings):
        for a in range(instruments.outcomes):
            margins.append(((x, a), instruments.element(x, a).hermitized().min_eigenvalue()))
        total = instruments.setting_sum(x)
        if isinstance(instruments, InstrumentSet):
            reduced = partial_trace(total, [instruments.output_label.name])
            target = np.eye(instruments.input_label.dim)
        else:
            reduced = total
            target = np.eye(instruments.space.dim)
        residuals.append(float(np.max(np.abs(reduced.matrix - target))))
    return InstrumentReport(margins, residuals)


def _proj(vec: np.ndarray) -> np.ndarray:
    v = vec / np.linalg.norm(vec)
    return np.outer(v, v.conj())


def switch_instruments() -> tuple[InstrumentSet, InstrumentSet, POVMSet]:
    """The fixed qubit instruments used for the switch certification runs.

    Both untrusted channel parties measure and reprepare in the same
    basis: setting 0 works in the computational basis, setting 1 in the
    Hadamard basis.  The final party measures the control in the
    Hadamard basis (single setting).
    """
    zero = np.array([1.0, 0.0])
    one = np.array([0.0, 1.0])
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)

    def meas_reprep(in_label, out_label, vec):
        p = _proj(vec)
        op = np.kron(p.T, p)  # measure along vec, reprepare the same state
        space = TensorSpace((in_label, out_label))
        return LabeledOperator(space, op)

    ai, ao = SpaceLabel("AI", 2), SpaceLabel("AO", 2)
    bi, bo = SpaceLabel("BI", 2), SpaceLabel("BO", 2)
    a_elems = (
        (meas_reprep(ai, ao, zero), meas_reprep(ai, ao, one)),
        (meas_reprep(ai, ao, plus), meas_reprep(ai, ao, minus)),
    )
    b_elems = (
        (meas_reprep(bi, bo, zero), meas_reprep(bi, bo, one)),
        (meas_reprep(bi, bo, plus), meas_reprep(bi, bo, minus)),
    )
    ci = SpaceLabel("CI", 2)
    c_space = TensorSpace((ci,))
    c_elems = ((LabeledOperator(c_space, _proj(plus)), LabeledOperator(c_space, _proj(minus))),)
    return (
        InstrumentSet(ai, ao, a_elems),
        InstrumentSet(bi, bo, b_elems),
        POVMSet(ci, c_elems),
    )


def unitary_instrument(
    u: np.ndarray,
    input_label: SpaceLabel | None = None,
    output_label: SpaceLabel | None = None,
) -> InstrumentSet:
    """Single-element instrument: the Choi operator (1 (x) U)|Phi+><Phi+|(1 (x) U)^dag."""
    u = np.asarray(u, dtype=np.complex128)
    d = u.shape[0]
    if u.shape != (d, d) or np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-10:
        raise ValidationError("input is not unitary within 1e-10")
    input_label = input_label or SpaceLabel("in", d)
    output_label = output_label or SpaceLabel("out", d)
    if input_label.dim != d or output_label.dim != d:
        raise DimensionMismatchError("labels must carry the unitary's dimension")
    phi = max_entangled(input_label, output_label).matrix
    lift = np.kron(np.eye(d), u)
    choi = LabeledOperator(TensorSpace((input_label, output_label)), lift @ phi @ lift.conj().T)
    return InstrumentSet(input_label, output_label, ((choi,),))


def _spanning_states(d: int) -> list[np.ndarray]:
    """d^2 pure states whose projectors span the Hermitian operators on C^d.

    Basis kets, then (|j>+|k>)/sqrt2 and (|j>+i|k>)/sqrt2 for j<k; for
    d=2 these are exactly the sigma_z, sigma_x, sigma_y eigenstate
    choices |0>,|1>,|+>,|+i>.
    """
    eye = np.eye(d, dtype=np.complex128)
    states = [eye[j] for j in range(d)]
    for j in range(d):
        for k in range(j + 1, d):
            states.append((eye[j] + eye[k]) / np.sqrt(2))
    for j in range(d):
        for k in range(j + 1, d):
            states.append((eye[j] + 1j * eye[k]) / np.sqrt(2))
    return states


def tomographic_instruments(
    d_in: int,
    d_out: int,
    input_label: SpaceLabel | None = None,
    output_label: SpaceLabel | None = None,
) -> InstrumentSet:
    """Measure-and-reprepare family spanning the operator space on in (x) out.

    One informationally complete POVM S_a = F^{-1/2}|phi_a><phi_a|F^{-1/2}
    built from d_in^2 spanning states (F is their frame operator), crossed
    with d_out^2 repreparations from the same state family: settings index
    the repreparation, outcomes the POVM element, d_in^2 x d_out^2 elements
    in total with full Gram rank.
    """
    if d_in < 2 or d_out < 2:
        raise ValidationError("tomographic family needs dimensions >= 2")
    input_label = input_label or SpaceLabel("in", d_in)
    output_label = output_label or SpaceLabel("out", d_out)
    if input_label.dim != d_in or output_label.dim != d_out:
        raise DimensionMismatchError("labels disagree with requested dimensions")
    projs_in = [_proj(v) for v in _spanning_states(d_in)]
    frame = sum(projs_in)
    vals, vecs = np.linalg.eigh(frame)
    inv_sqrt = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.conj().T
    povm = [inv_sqrt @ p @ inv_sqrt for p in projs_in]
    repreps = [_proj(v) for v in _spanning_states(d_out)]
    space = TensorSpace((input_label, output_label))
    elements = tuple(
        tuple(LabeledOperator(space, np.kron(s.T, rho)) for s in povm) for rho in repreps
    )
    return InstrumentSet(input_label, output_label, elements)


def random_instruments(
    d_in: int,
    d_out: int,
    settings: int,
    outcomes: int,
    rng: np.random.Generator,
    input_label: SpaceLabel | None = None,
    output_label: SpaceLabel | None = None,
) -> InstrumentSet:
    """Haar-flavoured random instrument family, one instrument per setting.

    Each element starts as a Wishart matrix G G^dag on in (x) out; the
    whole setting is then conjugated by T^{-1/2} (x) 1 where T is the
    input marginal of the sum, which restores trace preservation without
    disturbing positivity.  Wishart sums are generically full rank, so
    the inverse root exists.
    """
    input_label = input_label or SpaceLabel("in", d_in)
    output_label = output_label or SpaceLabel("out", d_out)
    if input_label.dim != d_in or output_label.dim != d_out:
        raise DimensionMismatchError("labels disagree with requested dimensions")
    n = d_in * d_out
    space = TensorSpace((input_label, output_label))
    rows = []
    for _ in range(settings):
        raw = []
        for _ in range(outcomes):
            g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            raw.append(g @ g.conj().T)
        total_in = np.trace(
            np.add.reduce(raw).reshape(d_in, d_out, d_in, d_out), axis1=1, axis2=3
        )
        vals, vecs = np.linalg.eigh(total_in)
        fix = np.kron(vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.conj().T, np.eye(d_out))
        rows.append(tuple(LabeledOperator(space, fix @ g @ fix.conj().T) for g in raw))
    return InstrumentSet(input_label, output_label, tuple(rows))


def random_povms(
    d: int,
    settings: int,
    outcomes: int,
    rng: np.random.Generator,
    label: SpaceLabel | None = None,
) -> POVMSet:
    """Random POVM per setting: Wishart elements whitened by their sum."""
    label = label or SpaceLabel("in", d)
    if label.dim != d:
        raise DimensionMismatchError("label disagrees with requested dimension")
    space = TensorSpace((label,))
    rows = []
    for _ in range(settings):
        raw = []
        for _ in range(outcomes):
            g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            raw.append(g @ g.conj().T)
        total = np.add.reduce(raw)
        vals, vecs = np.linalg.eigh(total)
        fix = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.conj().T
        rows.append(tuple(LabeledOperator(space, fix @ g @ fix.conj().T) for g in raw))
    return POVMSet(label, tuple(rows))
