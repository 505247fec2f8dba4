"""Coefficient-level pair-interaction Hamiltonians.

A :class:`PairHamiltonian` stores 1-qubit fields ``r[j, a]`` and couplings
``J[j, k, a, b]`` (``j < k``) with the axis index ``a`` in x=0, y=1, z=2.
Conjugating by a Pauli frame only flips signs, so averaging over frames is
exact integer-sign bookkeeping and never touches a dense matrix.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Iterator, Sequence

import numpy as np

from .pauli import NON_IDENTITY, PauliAxis, PauliString, embed, single

MAX_SYSTEM_QUBITS = 8


def _axis_index(axis: "PauliAxis | str | int") -> int:
    if isinstance(axis, (int, np.integer)):
        if not 0 <= axis < 3:
            raise ValueError(f"axis index {axis} out of range")
        return int(axis)
    axis = PauliAxis.parse(axis)
    if axis is PauliAxis.I:
        raise ValueError("a Hamiltonian term needs a non-identity axis")
    return axis.label


@dataclass(frozen=True, eq=False)
class PairHamiltonian:
    n: int
    r: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_SYSTEM_QUBITS:
            raise ValueError(f"n must lie in [1, {MAX_SYSTEM_QUBITS}], got {self.n}")
        r = np.array(self.r, dtype=float).reshape(self.n, 3)
        J = np.array(self.J, dtype=float).reshape(self.n, self.n, 3, 3)
        lower = np.tril(np.ones((self.n, self.n), dtype=bool))
        if np.any(J[lower] != 0.0):
            raise ValueError("couplings must only be set for j < k")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(J))):
            raise ValueError("coefficients must be finite")
        r.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "J", J)

    @classmethod
    def zero(cls, n: int) -> "PairHamiltonian":
        return cls(n, np.zeros((n, 3)), np.zeros((n, n, 3, 3)))

    @classmethod
    def from_terms(
        cls,
        n: int,
        fields: Iterable[tuple[int, "PauliAxis | str", float]] = (),
        couplings: Iterable[tuple[int, int, "PauliAxis | str", "PauliAxis | str", float]] = (),
    ) -> "PairHamiltonian":
        """Build from sparse ``(j, axis, value)`` and ``(j, k, a, b, value)`` lists.

        Couplings given with ``j > k`` are stored transposed.
        """
        r = np.zeros((n, 3))
        J = np.zeros((n, n, 3, 3))
        for j, axis, value in fields:
            _check_qubit(j, n)
            r[j, _axis_index(axis)] += value
        for j, k, a, b, value in couplings:
            _check_qubit(j, n)
            _check_qubit(k, n)
            if j == k:
                raise ValueError("a coupling needs two distinct qubits")
            a, b = _axis_index(a), _axis_index(b)
            if j > k:
                j, k, a, b = k, j, b, a
            J[j, k, a, b] += value
        return cls(n, r, J)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PairHamiltonian):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.r, other.r) and np.array_equal(self.J, other.J)

    def __repr__(self) -> str:
        return f"PairHamiltonian(n={self.n}, nonzero={self.count_nonzero()})"

    def coupling(self, j: int, k: int, a, b) -> float:
        a, b = _axis_index(a), _axis_index(b)
        if j < k:
            return float(self.J[j, k, a, b])
        return float(self.J[k, j, b, a])

    def count_nonzero(self) -> int:
        return int(np.count_nonzero(self.r) + np.count_nonzero(self.J))

    def is_zero(self) -> bool:
        return self.count_nonzero() == 0

    def terms(self) -> Iterator[tuple[PauliString, float]]:
        """Nonzero Pauli terms with their coefficients."""
        for j, a in zip(*np.nonzero(self.r)):
            yield PauliString.from_terms(self.n, [(j, NON_IDENTITY[a])]), float(self.r[j, a])
        for j, k, a, b in zip(*np.nonzero(self.J)):
            yield (
                PauliString.from_terms(self.n, [(j, NON_IDENTITY[a]), (k, NON_IDENTITY[b])]),
                float(self.J[j, k, a, b]),
            )

    def __add__(self, other: "PairHamiltonian") -> "PairHamiltonian":
        _same_n(self, other)
        return PairHamiltonian(self.n, self.r + other.r, self.J + other.J)

    def __sub__(self, other: "PairHamiltonian") -> "PairHamiltonian":
        _same_n(self, other)
        return PairHamiltonian(self.n, self.r - other.r, self.J - other.J)

    def scaled(self, factor: float) -> "PairHamiltonian":
        return PairHamiltonian(self.n, factor * self.r, factor * self.J)

    def max_abs_difference(self, other: "PairHamiltonian") -> float:
        _same_n(self, other)
        return float(max(np.max(np.abs(self.r - other.r), initial=0.0), np.max(np.abs(self.J - other.J), initial=0.0)))


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise ValueError(f"qubit index {q} out of range for n={n}")


def _same_n(a: PairHamiltonian, b: PairHamiltonian) -> None:
    if a.n != b.n:
        raise ValueError(f"qubit counts differ: {a.n} vs {b.n}")


def to_dense(H: PairHamiltonian, n: int | None = None) -> np.ndarray:
    """Dense 2^n matrix; extra qubits beyond ``H.n`` act trivially."""
    n = H.n if n is None else n
    out = np.zeros((2**n, 2**n), dtype=complex)
    for p, value in H.terms():
        out += value * embed(p, n)
    return out


def frame_signs(n: int, frame: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Sign (+1/-1) picked up by every r and J coefficient under ``frame``."""
    if frame.n != n:
        raise ValueError(f"frame acts on {frame.n} qubits, Hamiltonian on {n}")
    # flip[j, a] = 1 when the frame anticommutes with sigma_a on qubit j
    flip = np.zeros((n, 3), dtype=np.int8)
    for j, axis in enumerate(frame.axes):
        if axis is not PauliAxis.I:
            flip[j] = 1
            flip[j, axis.label] = 0
    r_sign = 1 - 2 * flip
    parity = (flip[:, None, :, None] + flip[None, :, None, :]) % 2
    J_sign = 1 - 2 * parity
    return r_sign.astype(float), J_sign.astype(float)


def conjugate(H: PairHamiltonian, frame: PauliString) -> PairHamiltonian:
    """Coefficients of ``v H v^dagger`` for a Pauli frame ``v``."""
    r_sign, J_sign = frame_signs(H.n, frame)
    return PairHamiltonian(H.n, H.r * r_sign, H.J * J_sign)


def average(terms: Sequence[tuple[float, PairHamiltonian]]) -> PairHamiltonian:
    """Convex combination of Hamiltonians on the same register."""
    if not terms:
        raise ValueError("nothing to average")
    weights = [float(w) for w, _ in terms]
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError(f"weights sum to {sum(weights)!r}, not 1")
    n = terms[0][1].n
    r = np.zeros((n, 3))
    J = np.zeros((n, n, 3, 3))
    for w, H in terms:
        if H.n != n:
            raise ValueError("all Hamiltonians must share the qubit count")
        r += w * H.r
        J += w * H.J
    return PairHamiltonian(n, r, J)


@dataclass(frozen=True)
class IsolatedTerm:
    """``a sigma_alpha^j + b sigma_beta^k + c sigma_alpha^j sigma_beta^k``."""

    j: int
    k: int
    alpha: PauliAxis
    beta: PauliAxis
    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.j == self.k:
            raise ValueError("an isolated term needs two distinct qubits")
        object.__setattr__(self, "alpha", PauliAxis.parse(self.alpha))
        object.__setattr__(self, "beta", PauliAxis.parse(self.beta))
        if PauliAxis.I in (self.alpha, self.beta):
            raise ValueError("isolated-term axes must be non-identity")

    def is_zero(self) -> bool:
        return self.a == 0.0 and self.b == 0.0 and self.c == 0.0

    def to_hamiltonian(self, n: int) -> PairHamiltonian:
        return PairHamiltonian.from_terms(
            n,
            fields=[(self.j, self.alpha, self.a), (self.k, self.beta, self.b)],
            couplings=[(self.j, self.k, self.alpha, self.beta, self.c)],
        )

    def to_dense(self, n: int) -> np.ndarray:
        """Dense operator on ``n`` qubits (``n`` may include an idle ancilla)."""
        pair = PauliString.from_terms(n, [(self.j, self.alpha), (self.k, self.beta)])
        return (
            self.a * single(n, self.j, self.alpha)
            + self.b * single(n, self.k, self.beta)
            + self.c * embed(pair)
        )


def one_qubit_share(n: int) -> float:
    """Weight of ``r^j_alpha`` carried by each of the 3(n-1) pair terms it enters.

    Every field appears in (n-1) partner choices times 3 partner axes, so a
    share of 1/(3(n-1)) rebuilds each field exactly once in the pair sum.
    """
    if n < 2:
        raise ValueError("pair terms need at least two qubits")
    return 1.0 / (3 * (n - 1))


def isolated_term(H: PairHamiltonian, j: int, k: int, alpha, beta, scale_1q: float = 1.0) -> IsolatedTerm:
    """Pick out the (j, k, alpha, beta) term, scaling its 1-qubit parts."""
    if j == k:
        raise ValueError("j and k must differ")
    _check_qubit(j, H.n)
    _check_qubit(k, H.n)
    a_idx, b_idx = _axis_index(alpha), _axis_index(beta)
    return IsolatedTerm(
        j=j,
        k=k,
        alpha=NON_IDENTITY[a_idx],
        beta=NON_IDENTITY[b_idx],
        a=scale_1q * float(H.r[j, a_idx]),
        b=scale_1q * float(H.r[k, b_idx]),
        c=H.coupling(j, k, a_idx, b_idx),
    )


def pair_terms(n: int) -> list[tuple[int, int, PauliAxis, PauliAxis]]:
    """All (j < k, alpha, beta) selections in lexicographic order."""
    return [
        (j, k, NON_IDENTITY[a], NON_IDENTITY[b])
        for (j, k) in combinations(range(n), 2)
        for a, b in product(range(3), range(3))
    ]


def reconstruct_from_shares(H: PairHamiltonian) -> PairHamiltonian:
    """Sum of all pair terms at the corrected 1-qubit share; equals ``H``."""
    share = one_qubit_share(H.n)
    total = PairHamiltonian.zero(H.n)
    for j, k, alpha, beta in pair_terms(H.n):
        total = total + isolated_term(H, j, k, alpha, beta, share).to_hamiltonian(H.n)
    return total


def random_hamiltonian(n: int, seed: int, coeff_range: float = 1.0) -> PairHamiltonian:
    """Seeded instance with every coefficient uniform in [-range, range]."""
    if n < 2:
        raise ValueError("random instances need n >= 2")
    rng = np.random.default_rng(seed)
    r = rng.uniform(-coeff_range, coeff_range, size=(n, 3))
    J = np.zeros((n, n, 3, 3))
    for j, k in combinations(range(n), 2):
        J[j, k] = rng.uniform(-coeff_range, coeff_range, size=(3, 3))
    return PairHamiltonian(n, r, J)


def spread_bound(H: PairHamiltonian) -> float:
    """Upper bound on the largest minus smallest eigenvalue.

    Each Pauli term has spectrum {-1, 1}, so the triangle inequality bounds
    the spread by twice the l1 norm of the coefficients.
    """
    return 2.0 * float(np.sum(np.abs(H.r)) + np.sum(np.abs(H.J)))
