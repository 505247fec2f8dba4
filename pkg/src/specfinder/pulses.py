"""Average-Hamiltonian pulse schedules.

A schedule is an ordered list of segments, each running a generator for some
time inside a Pauli frame ``v``: the evolution is ``v exp(-i G dt) v^dagger``.
Frames are ideal instantaneous pulses. The first-order average of a schedule
made of system segments is the duration-weighted mean of the conjugated
Hamiltonians; :func:`simulate_schedule` gives the exact pulse-level product
for comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .hamiltonian import PairHamiltonian, frame_signs, one_qubit_share, to_dense
from .pauli import PauliAxis, PauliString, embed, hermitian_eig, nearest_unitary, pauli_expm, single

SYSTEM = "SYS"
IDLE = "IDLE"
ENGINEERED = "ENG"


@dataclass(frozen=True)
class Generator:
    """What drives a segment: the system Hamiltonian, nothing, or ``sign * sigma_axis^qubit (x) sigma_z``."""

    kind: str = SYSTEM
    qubit: int | None = None
    axis: PauliAxis | None = None
    sign: int = 1

    def __post_init__(self):
        if self.kind not in (SYSTEM, IDLE, ENGINEERED):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == ENGINEERED:
            axis = PauliAxis.parse(self.axis)
            if axis is PauliAxis.I:
                raise ValueError("engineered coupling needs a non-identity axis")
            if self.sign not in (1, -1):
                raise ValueError("engineered coupling sign must be +1 or -1")
            object.__setattr__(self, "axis", axis)

    @classmethod
    def engineered(cls, qubit: int, axis, sign: int = 1) -> "Generator":
        return cls(ENGINEERED, qubit, PauliAxis.parse(axis), sign)

    def __str__(self) -> str:
        if self.kind != ENGINEERED:
            return self.kind
        return f"ENG{'+' if self.sign > 0 else '-'}j{self.qubit}:{self.axis.value.lower()}"

    @classmethod
    def parse(cls, text: str) -> "Generator":
        text = text.strip()
        if text in (SYSTEM, IDLE):
            return cls(text)
        if text.startswith(ENGINEERED) and len(text) > 5 and text[3] in "+-" and text[4] == "j":
            qubit, _, axis = text[5:].partition(":")
            if qubit.isdigit() and axis:
                return cls.engineered(int(qubit), axis, 1 if text[3] == "+" else -1)
        raise ValueError(f"malformed generator {text!r}")


SYSTEM_GENERATOR = Generator(SYSTEM)


@dataclass(frozen=True)
class Segment:
    frame: PauliString
    duration: float
    generator: Generator = SYSTEM_GENERATOR

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError(f"segment duration must be nonnegative, got {self.duration}")


@dataclass(frozen=True)
class PulseSchedule:
    n: int
    segments: tuple[Segment, ...]
    total_time: float
    has_ancilla: bool = False

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for seg in self.segments:
            if seg.frame.n != self.n:
                raise ValueError("segment frame does not match the register size")
            if seg.generator.kind == ENGINEERED:
                if not self.has_ancilla:
                    raise ValueError("engineered couplings need an ancilla")
                if not 0 <= seg.generator.qubit < self.n:
                    raise ValueError(f"coupling qubit {seg.generator.qubit} out of range")
        total = math.fsum(seg.duration for seg in self.segments)
        if abs(total - self.total_time) > 1e-12 * max(1.0, abs(self.total_time)):
            raise ValueError(f"segment durations sum to {total!r}, not {self.total_time!r}")

    def __len__(self) -> int:
        return len(self.segments)

    def dumps(self) -> str:
        """Line-oriented text form: ``<duration> <frame> <generator>`` per line."""
        lines = [f"# schedule n={self.n} ancilla={int(self.has_ancilla)} total={self.total_time!r}"]
        lines += [f"{seg.duration!r} {seg.frame} {seg.generator}" for seg in self.segments]
        return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> PulseSchedule:
    n = None
    has_ancilla = False
    total = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = dict(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)
            if "n" in fields:
                n = int(fields["n"])
                has_ancilla = fields.get("ancilla", "0") == "1"
                total = float(fields["total"]) if "total" in fields else None
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected '<duration> <frame> <generator>'")
        rows.append((lineno, parts))
    if n is None:
        raise ValueError("schedule header with n=... is missing")
    segments = []
    for lineno, (dur, frame, gen) in rows:
        try:
            segments.append(Segment(PauliString.parse(frame, n), float(dur), Generator.parse(gen)))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if total is None:
        total = math.fsum(seg.duration for seg in segments)
    return PulseSchedule(n, tuple(segments), total, has_ancilla)


# --- GF(4) orthogonal arrays ------------------------------------------------

# elements 0, 1, w, w^2 encoded as 0..3; addition is XOR of the 2-bit codes
_GF4_LOG = {1: 0, 2: 1, 3: 2}
_GF4_EXP = (1, 2, 3)
GF4_SYMBOLS = (PauliAxis.I, PauliAxis.X, PauliAxis.Y, PauliAxis.Z)
MAX_OA_ROWS = 85


def gf4_add(a: int, b: int) -> int:
    return a ^ b


def gf4_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _GF4_EXP[(_GF4_LOG[a] + _GF4_LOG[b]) % 3]


@dataclass(frozen=True)
class OrthogonalArray:
    """One symbol row per qubit; symbols I (the identity), X, Y, Z."""

    rows: tuple[tuple[PauliAxis, ...], ...]

    @property
    def length(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def pair_counts(self, i: int, j: int) -> dict[tuple[PauliAxis, PauliAxis], int]:
        counts = {pair: 0 for pair in product(GF4_SYMBOLS, repeat=2)}
        for a, b in zip(self.rows[i], self.rows[j]):
            counts[a, b] += 1
        return counts

    def is_strength_two(self) -> bool:
        d = self.length
        if d % 16 and len(self.rows) > 1:
            return False
        for i in range(len(self.rows)):
            if any(self.rows[i].count(s) * 4 != d for s in GF4_SYMBOLS):
                return False
            for j in range(i + 1, len(self.rows)):
                if any(c * 16 != d for c in self.pair_counts(i, j).values()):
                    return False
        return True


def build_orthogonal_array(q: int) -> OrthogonalArray:
    """Strength-2 array from linear functionals on GF(4)^s.

    Columns run over all of GF(4)^s; rows are the nonzero functionals with
    leading coefficient 1 (one per projective point), taken in lexicographic
    order. Two non-proportional functionals are jointly surjective onto
    GF(4)^2, which gives every symbol pair the same count.
    """
    if q < 1:
        raise ValueError("need at least one row")
    if q > MAX_OA_ROWS:
        raise ValueError(f"q={q} exceeds the supported {MAX_OA_ROWS} rows")
    s = 1
    while (4**s - 1) // 3 < q:
        s += 1
    columns = list(product(range(4), repeat=s))
    functionals = [
        f for f in product(range(4), repeat=s) if any(f) and next(x for x in f if x) == 1
    ][:q]
    rows = []
    for f in functionals:
        row = []
        for v in columns:
            acc = 0
            for fi, vi in zip(f, v):
                acc = gf4_add(acc, gf4_mul(fi, vi))
            row.append(GF4_SYMBOLS[acc])
        rows.append(tuple(row))
    return OrthogonalArray(tuple(rows))


# --- schedule construction -------------------------------------------------


def _frame(n: int, terms) -> PauliString:
    return PauliString.from_terms(n, [(q, a) for q, a in terms if PauliAxis.parse(a) is not PauliAxis.I])


def _equal_split(n: int, frames: Sequence[PauliString], T: float) -> PulseSchedule:
    d = len(frames)
    return PulseSchedule(n, tuple(Segment(f, T / d) for f in frames), T)


def compose(outer: PulseSchedule, inner: PulseSchedule) -> PulseSchedule:
    """Nest ``inner`` inside every segment of ``outer`` (frames multiply).

    Both must consist of system segments. Pauli conjugations commute at the
    coefficient level, so the average of the result is the inner average
    followed by the outer one.
    """
    if outer.n != inner.n:
        raise ValueError("schedules act on different registers")
    for s in (*outer.segments, *inner.segments):
        if s.generator.kind != SYSTEM:
            raise ValueError("only system segments can be nested")
    if inner.total_time <= 0:
        raise ValueError("inner schedule must have positive length")
    segments = []
    for o in outer.segments:
        for i in inner.segments:
            segments.append(Segment(o.frame * i.frame, o.duration * i.duration / inner.total_time))
    return PulseSchedule(outer.n, tuple(segments), outer.total_time)


def decoupling_schedule(n: int, M: Iterable[int], T: float) -> PulseSchedule:
    """Switch off every term touching the qubits in ``M``."""
    M = sorted(set(M))
    for q in M:
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range for n={n}")
    if not M:
        return PulseSchedule(n, (Segment(PauliString.identity(n), T),), T)
    oa = build_orthogonal_array(len(M))
    frames = [
        _frame(n, [(q, oa.rows[i][col]) for i, q in enumerate(M)]) for col in range(oa.length)
    ]
    return _equal_split(n, frames, T)


def _check_pair(n: int, j: int, k: int, alpha, beta) -> tuple[PauliAxis, PauliAxis]:
    if j == k:
        raise ValueError("j and k must differ")
    for q in (j, k):
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range for n={n}")
    alpha, beta = PauliAxis.parse(alpha), PauliAxis.parse(beta)
    if PauliAxis.I in (alpha, beta):
        raise ValueError("axes must be non-identity")
    return alpha, beta


def isolate_pair_schedule(n: int, j: int, k: int, alpha, beta, T: float) -> PulseSchedule:
    """Keep only ``r^j_alpha``, ``r^k_beta`` and ``J_{j,k,alpha,beta}``."""
    alpha, beta = _check_pair(n, j, k, alpha, beta)
    rest = [q for q in range(n) if q not in (j, k)]
    four = [
        PauliString.identity(n),
        _frame(n, [(j, alpha)]),
        _frame(n, [(k, beta)]),
        _frame(n, [(j, alpha), (k, beta)]),
    ]
    inner = _equal_split(n, four, 1.0)
    return compose(decoupling_schedule(n, rest, T), inner)


def cancel_one_qubit_schedule(j: int, k: int, alpha, beta, T: float, n: int | None = None) -> PulseSchedule:
    """Remove the 1-qubit parts of an isolated term, keeping the coupling."""
    n = max(j, k) + 1 if n is None else n
    alpha, beta = _check_pair(n, j, k, alpha, beta)
    flip = _frame(n, [(j, alpha.succ()), (k, beta.succ())])
    return _equal_split(n, [PauliString.identity(n), flip], T)


def rescale_fraction(n: int, corrected: bool = True) -> float:
    """Target ratio of 1-qubit weight to coupling weight after rescaling."""
    if n < 2:
        raise ValueError("rescaling needs n >= 2")
    if corrected:
        return 2.0 * one_qubit_share(n)
    return 2.0 / (n - 1)


def rescale_schedule(n: int, j: int, k: int, alpha, beta, delta: float, corrected: bool = True) -> PulseSchedule:
    """Scale the 1-qubit parts of an isolated term relative to its coupling.

    The frame ``sigma_alpha'^j sigma_beta'^k`` (successor axes) flips both
    fields but not the coupling, so running it for a fraction ``f`` of the time scales the fields
    by ``1 - 2f``. When the target ratio exceeds 1 (n = 2 without the share
    correction) the coupling is damped instead with a mixture of single-qubit
    flips and the schedule is stretched so the coupling keeps its weight.
    """
    alpha, beta = _check_pair(n, j, k, alpha, beta)
    ratio = rescale_fraction(n, corrected)
    both = _frame(n, [(j, alpha.succ()), (k, beta.succ())])
    ident = PauliString.identity(n)
    if ratio <= 1.0:
        f = (1.0 - ratio) / 2.0
        segments = (Segment(both, f * delta), Segment(ident, delta - f * delta))
        return PulseSchedule(n, segments, delta)
    # identity for w0, each single flip for q = (1 - w0) / 2: fields keep w0,
    # the coupling keeps 2 w0 - 1
    w0 = ratio / (2.0 * ratio - 1.0)
    q = (1.0 - w0) / 2.0
    coupling_weight = 2.0 * w0 - 1.0
    total = delta / coupling_weight
    segments = (
        Segment(ident, w0 * total),
        Segment(_frame(n, [(j, alpha.succ())]), q * total),
        Segment(_frame(n, [(k, beta.succ())]), q * total),
    )
    return PulseSchedule(n, segments, math.fsum(s.duration for s in segments))


def inversion_frames(n: int, j: int, k: int, alpha, beta) -> list[PauliString]:
    alpha, beta = _check_pair(n, j, k, alpha, beta)
    return [
        _frame(n, [(j, alpha.succ())]),
        _frame(n, [(k, beta.succ())]),
        _frame(n, [(j, alpha.succ()), (k, beta.succ())]),
    ]


def inversion_schedule(j: int, k: int, alpha, beta, T: float, p: int, n: int | None = None) -> PulseSchedule:
    """Approximate ``exp(+i H_term T)`` from forward evolution alone.

    The three frames cycle over 3p slices of length T/p. Each frame flips
    two of the three components of the term, so their mean is -1/3 of it;
    the schedule therefore lasts 3T.
    """
    if int(p) != p or p < 1:
        raise ValueError(f"slice count p must be a positive integer, got {p!r}")
    n = max(j, k) + 1 if n is None else n
    frames = inversion_frames(n, j, k, alpha, beta)
    segments = tuple(Segment(frames[l % 3], T / p) for l in range(3 * int(p)))
    return PulseSchedule(n, segments, 3.0 * T)


# --- evaluation --------------------------------------------------------------


def symbolic_average(s: PulseSchedule, H: PairHamiltonian) -> PairHamiltonian:
    """Duration-weighted mean of the frame-conjugated Hamiltonians.

    Net weights are summed with ``math.fsum`` per coefficient, so terms whose
    signs cancel come out exactly zero.
    """
    if H.n != s.n:
        raise ValueError(f"schedule acts on {s.n} qubits, Hamiltonian on {H.n}")
    if s.total_time <= 0:
        raise ValueError("schedule has zero length")
    for seg in s.segments:
        if seg.generator.kind != SYSTEM:
            raise ValueError("symbolic averaging needs system segments only")
    weights: dict[PauliString, float] = {}
    for seg in s.segments:
        weights[seg.frame] = weights.get(seg.frame, 0.0) + seg.duration
    signs = [frame_signs(H.n, frame) for frame in weights]
    w = list(weights.values())
    total = math.fsum(w)

    def net(select) -> np.ndarray:
        stacked = np.stack([select(sg) for sg in signs])
        flat = stacked.reshape(len(w), -1)
        return np.array([math.fsum(wi * si for wi, si in zip(w, col)) for col in flat.T]).reshape(stacked.shape[1:])

    return PairHamiltonian(H.n, H.r * net(lambda sg: sg[0]) / total, H.J * net(lambda sg: sg[1]) / total)


def dense_average(s: PulseSchedule, H: PairHamiltonian) -> np.ndarray:
    """Independent dense route: sum of ``w v H v^dagger`` over segments."""
    h = to_dense(H)
    out = np.zeros_like(h)
    for seg in s.segments:
        v = embed(seg.frame)
        out += (seg.duration / s.total_time) * (v @ h @ v)
    return out


@dataclass
class _Propagators:
    """Per-call cache of slice propagators keyed by generator and duration."""

    h: np.ndarray
    n: int
    has_ancilla: bool
    system_eig: tuple[np.ndarray, np.ndarray] | None = None
    cache: dict = field(default_factory=dict)
    frames: dict = field(default_factory=dict)

    def frame(self, frame: PauliString) -> np.ndarray | None:
        if not frame.support:
            return None
        if frame not in self.frames:
            self.frames[frame] = embed(frame, self.n + int(self.has_ancilla))
        return self.frames[frame]

    def evolution(self, gen: Generator, dt: float) -> np.ndarray | None:
        key = (gen, dt)
        if key in self.cache:
            return self.cache[key]
        dim = 2 ** (self.n + int(self.has_ancilla))
        if gen.kind == IDLE or dt == 0.0:
            u = None
        elif gen.kind == SYSTEM:
            if self.system_eig is None:
                self.system_eig = hermitian_eig(self.h)
            w, v = self.system_eig
            u = (v * np.exp(-1j * w * dt)) @ v.conj().T
            if self.has_ancilla:
                u = np.kron(u, np.eye(2))
        else:
            p = coupling_operator(self.n, gen.qubit, gen.axis)
            u = pauli_expm(p, gen.sign * dt)
        assert u is None or u.shape == (dim, dim)
        self.cache[key] = u
        return u


def coupling_operator(n: int, qubit: int, axis) -> np.ndarray:
    """``sigma_axis^qubit (x) sigma_z`` with the ancilla as qubit ``n``."""
    return single(n + 1, qubit, axis) @ single(n + 1, n, PauliAxis.Z)


def _cycle(segments: Sequence[Segment], slices: int, symmetric: bool) -> list[tuple[Segment, float]]:
    if symmetric:
        half = [(s, s.duration / (2 * slices)) for s in segments]
        return half + half[::-1]
    return [(s, s.duration / slices) for s in segments]


def simulate_schedule(
    s: PulseSchedule,
    H: PairHamiltonian,
    slices: int = 1,
    symmetric: bool = False,
) -> np.ndarray:
    """Pulse-level unitary of ``s`` driven by ``H``.

    The segment list is cut into ``slices`` repetitions of itself, each
    segment running for ``duration / slices`` per repetition, so the product
    approaches the first-order average as ``slices`` grows. With
    ``symmetric`` every repetition is played forwards then backwards at half
    length, which removes the leading error term. Later segments multiply
    on the left.
    """
    if H.n != s.n:
        raise ValueError(f"schedule acts on {s.n} qubits, Hamiltonian on {H.n}")
    if int(slices) != slices or slices < 1:
        raise ValueError(f"slices must be a positive integer, got {slices!r}")
    slices = int(slices)
    props = _Propagators(to_dense(H), s.n, s.has_ancilla)
    dim = 2 ** (s.n + int(s.has_ancilla))
    cycle = np.eye(dim, dtype=complex)
    for seg, dt in _cycle(s.segments, slices, symmetric):
        u = props.evolution(seg.generator, dt)
        if u is None:
            continue
        v = props.frame(seg.frame)
        if v is not None:
            u = v @ u @ v
        cycle = u @ cycle
    cycle = nearest_unitary(cycle)
    return np.linalg.matrix_power(cycle, slices) if slices > 1 else cycle
