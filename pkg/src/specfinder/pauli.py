"""Dense operator algebra on a handful of qubits.

Qubit 0 is the leftmost tensor factor, so a basis index reads as the bit
string ``q0 q1 ... q_{n-1}`` with q0 the most significant bit.

The eigensolver is a cyclic complex Jacobi iteration; it doubles as the
brute-force oracle for every exact value in the test suite, and the matrix
exponential is built on top of it.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12
JACOBI_TOL = 1e-12
MAX_QUBITS = 13


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""


class PauliAxis(enum.Enum):
    I = "I"
    X = "X"
    Y = "Y"
    Z = "Z"

    @classmethod
    def parse(cls, value: "PauliAxis | str") -> "PauliAxis":
        if isinstance(value, PauliAxis):
            return value
        key = str(value).strip().upper()
        if key == "1":
            key = "I"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown Pauli axis {value!r}") from None

    @property
    def label(self) -> int:
        """Cyclic label x -> 0, y -> 1, z -> 2."""
        if self is PauliAxis.I:
            raise ValueError("the identity has no cyclic label")
        return _CYCLIC.index(self)

    @classmethod
    def from_label(cls, label: int) -> "PauliAxis":
        return _CYCLIC[label % 3]

    def succ(self, steps: int = 1) -> "PauliAxis":
        """Cyclic successor x -> y -> z -> x."""
        return PauliAxis.from_label(self.label + steps)

    @property
    def matrix(self) -> np.ndarray:
        return _MATRICES[self]


_CYCLIC = (PauliAxis.X, PauliAxis.Y, PauliAxis.Z)
NON_IDENTITY = _CYCLIC

_MATRICES = {
    PauliAxis.I: np.eye(2, dtype=complex),
    PauliAxis.X: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliAxis.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    PauliAxis.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in _MATRICES.values():
    _m.setflags(write=False)


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis on ``n`` qubits, without phase."""

    n: int
    axes: tuple[PauliAxis, ...]

    def __post_init__(self):
        if len(self.axes) != self.n:
            raise ValueError("axes must list one entry per qubit")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, (PauliAxis.I,) * n)

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[int, "PauliAxis | str"]]) -> "PauliString":
        axes = [PauliAxis.I] * n
        seen = set()
        for q, axis in terms:
            if not 0 <= q < n:
                raise ValueError(f"qubit index {q} out of range for n={n}")
            if q in seen:
                raise ValueError(f"qubit {q} appears twice; one axis per qubit")
            seen.add(q)
            axes[q] = PauliAxis.parse(axis)
        return cls(n, tuple(axes))

    @classmethod
    def from_mapping(cls, n: int, mapping: Mapping[int, "PauliAxis | str"]) -> "PauliString":
        return cls.from_terms(n, mapping.items())

    @classmethod
    def parse(cls, text: str, n: int) -> "PauliString":
        """Parse the compact form ``X0.Z2``; ``I`` is the identity."""
        text = text.strip()
        if text in ("I", ""):
            return cls.identity(n)
        terms = []
        for part in text.split("."):
            if len(part) < 2 or not part[1:].isdigit():
                raise ValueError(f"malformed Pauli factor {part!r}")
            terms.append((int(part[1:]), part[0]))
        return cls.from_terms(n, terms)

    def __str__(self) -> str:
        parts = [f"{a.value}{q}" for q, a in enumerate(self.axes) if a is not PauliAxis.I]
        return ".".join(parts) if parts else "I"

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, a in enumerate(self.axes) if a is not PauliAxis.I)

    def __getitem__(self, q: int) -> PauliAxis:
        return self.axes[q]

    def commutes_with(self, other: "PauliString") -> bool:
        if other.n != self.n:
            raise ValueError("qubit counts differ")
        clashes = sum(
            1
            for a, b in zip(self.axes, other.axes)
            if a is not PauliAxis.I and b is not PauliAxis.I and a is not b
        )
        return clashes % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        """Product with the overall phase dropped (frame composition)."""
        if other.n != self.n:
            raise ValueError("qubit counts differ")
        return PauliString(self.n, tuple(_mul_axes(a, b) for a, b in zip(self.axes, other.axes)))

    def extend(self, n: int) -> "PauliString":
        if n < self.n:
            raise ValueError("cannot shrink a Pauli string")
        return PauliString(n, self.axes + (PauliAxis.I,) * (n - self.n))


def _mul_axes(a: PauliAxis, b: PauliAxis) -> PauliAxis:
    if a is PauliAxis.I:
        return b
    if b is PauliAxis.I:
        return a
    if a is b:
        return PauliAxis.I
    return PauliAxis.from_label(3 - a.label - b.label)


def embed(p: PauliString, n: int | None = None) -> np.ndarray:
    """Dense 2^n matrix of ``p``; pads with identities when ``n > p.n``."""
    n = p.n if n is None else n
    if n < p.n:
        raise ValueError(f"Pauli string on {p.n} qubits does not fit in {n}")
    if n > MAX_QUBITS:
        raise ValueError(f"n={n} exceeds the supported {MAX_QUBITS} qubits")
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        axis = p.axes[q] if q < p.n else PauliAxis.I
        out = np.kron(out, axis.matrix)
    return out


def single(n: int, q: int, axis: "PauliAxis | str") -> np.ndarray:
    return embed(PauliString.from_terms(n, [(q, axis)]))


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.linalg.norm(a - dagger(a)) < tol * max(1.0, np.linalg.norm(a))


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])) < tol


def _check_hermitian(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not is_hermitian(a):
        raise ValueError("matrix is not Hermitian")
    return a


def hermitian_eig(a, tol: float = JACOBI_TOL, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ascending eigenvalues and a unitary whose columns are the
    matching eigenvectors, so that ``a = V diag(w) V^H``.
    """
    a = _check_hermitian(a)
    a = 0.5 * (a + dagger(a))
    dim = a.shape[0]
    v = np.eye(dim, dtype=complex)
    threshold = tol * max(1.0, np.linalg.norm(a))

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < threshold:
            break
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                phase = apq / mag
                app, aqq = a[p, p].real, a[q, q].real
                zeta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = dagger(g) @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    else:
        raise NumericalError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    # one Newton-Schulz step removes the rounding drift the rotations leave in V^H V;
    # long products of propagators built from V otherwise lose unitarity
    v = v @ (1.5 * np.eye(dim) - 0.5 * (dagger(v) @ v))
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def nearest_unitary(u: np.ndarray, tol: float = 1e-14, max_iter: int = 6) -> np.ndarray:
    """Polar projection of an almost-unitary matrix by Newton-Schulz steps.

    Used on long products of propagators, whose unitarity otherwise drifts
    with accumulated rounding. The correction is second order in the drift.
    """
    u = np.asarray(u, dtype=complex)
    eye = np.eye(u.shape[0])
    for _ in range(max_iter):
        gram = dagger(u) @ u
        drift = np.linalg.norm(gram - eye)
        if drift < tol:
            break
        if drift > 0.5:
            raise NumericalError(f"matrix is too far from unitary to project (drift {drift:.3g})")
        u = u @ (1.5 * eye - 0.5 * gram)
    return u


def expm_i(a, t: float) -> np.ndarray:
    """exp(-i a t) for Hermitian ``a``, through its eigen-decomposition."""
    w, v = hermitian_eig(a)
    return (v * np.exp(-1j * w * t)) @ dagger(v)


def pauli_expm(p: np.ndarray, theta: float) -> np.ndarray:
    """exp(-i theta P) for a dense operator with P^2 = 1."""
    return math.cos(theta) * np.eye(p.shape[0], dtype=complex) - 1j * math.sin(theta) * p


def spectral_norm(a) -> float:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    w, _ = hermitian_eig(dagger(a) @ a)
    return math.sqrt(max(w[-1], 0.0))


def as_state(psi, dim: int | None = None) -> np.ndarray:
    """Validate a normalized state vector."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("a state vector must be one-dimensional")
    if dim is not None and psi.shape[0] != dim:
        raise ValueError(f"state has dimension {psi.shape[0]}, expected {dim}")
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise ValueError("state is not normalized")
    return psi


def as_density(rho, dim: int | None = None) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, PSD."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("a density matrix must be square")
    if dim is not None and rho.shape[0] != dim:
        raise ValueError(f"density matrix has dimension {rho.shape[0]}, expected {dim}")
    if np.linalg.norm(rho - dagger(rho)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise ValueError("density matrix does not have unit trace")
    w, _ = hermitian_eig(0.5 * (rho + dagger(rho)))
    if w[0] < -1e-9:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def basis_state(bits: str) -> np.ndarray:
    """Computational basis state from a bit string, qubit 0 first."""
    if not bits or any(b not in "01" for b in bits):
        raise ValueError(f"invalid bit string {bits!r}")
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi
