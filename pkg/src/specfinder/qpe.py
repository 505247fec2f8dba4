"""Phase estimation on the conditional evolution.

Ancilla qubit j (the j-th binary digit of the readout register) controls
``exp(-i H (x) sigma_z 2^j tau)``. With ancilla bit 0 selecting ``sigma_z = +1``
the register branch ``|l>`` carries the target evolution
``exp(-i H tau (2^m - 1 - 2l))``; for an eigenstate that is a relative phase
``exp(+2i l E tau)``. After the inverse Fourier transform the readout peaks
at ``k = 2^m E tau / pi`` (mod 2^m), which :func:`decode_energy` inverts.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .conditional import IDEAL, PULSE, ConditionalEvolution, ConversionParams, ancilla_blocks
from .hamiltonian import PairHamiltonian, to_dense
from .pauli import as_density, as_state, dagger, hermitian_eig

SAMPLE_CHUNK = 1024


def max_threads() -> int:
    """Worker cap from ``SF_THREADS`` (default: CPU count)."""
    raw = os.environ.get("SF_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"SF_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1


def choose_tau(delta: float) -> float:
    """Base time with ``2 tau delta = pi``."""
    if not delta > 0:
        raise ValueError(f"spectral spread bound must be positive, got {delta}")
    return math.pi / (2.0 * delta)


@dataclass(frozen=True)
class PEConfig:
    m: int
    tau: float
    delta: float
    mode: str = IDEAL
    params: ConversionParams | None = None
    shots: int = 4096
    seed: int = 0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.mode not in (IDEAL, PULSE):
            raise ValueError(f"mode must be {IDEAL!r} or {PULSE!r}")
        if self.mode == PULSE and self.params is None:
            object.__setattr__(self, "params", ConversionParams(mode=PULSE))
        if self.shots < 0:
            raise ValueError("shots must be nonnegative")

    @classmethod
    def from_delta(cls, m: int, delta: float, **kw) -> "PEConfig":
        return cls(m=m, tau=choose_tau(delta), delta=delta, **kw)

    @property
    def size(self) -> int:
        return 2**self.m

    @property
    def resolution(self) -> float:
        """Energy step between adjacent readouts, ``pi / (2^m tau)``."""
        return math.pi / (self.size * self.tau)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["params"] = None if self.params is None else self.params.as_dict()
        return d


def decode_energy(k: int, cfg: PEConfig) -> float:
    """Energy for readout ``k``; the upper half of the register wraps to negative."""
    n = cfg.size
    if int(k) != k or not 0 <= k < n:
        raise ValueError(f"readout {k!r} out of range [0, {n})")
    signed = k if k < n // 2 else k - n
    return math.pi * signed / (n * cfg.tau)


def decoded_energies(cfg: PEConfig) -> np.ndarray:
    return np.array([decode_energy(k, cfg) for k in range(cfg.size)])


def energy_to_readout(energy: float, cfg: PEConfig) -> float:
    """Real-valued readout position ``2^m E tau / pi`` (not reduced mod 2^m)."""
    return cfg.size * energy * cfg.tau / math.pi


def fejer_kernel(energy: float, m: int, tau: float) -> np.ndarray:
    """Closed-form readout distribution for an eigenstate of energy ``energy``."""
    n = 2**m
    theta = 2.0 * energy * tau - 2.0 * math.pi * np.arange(n) / n
    den = n * np.sin(theta / 2.0)
    num = np.sin(n * theta / 2.0)
    out = np.ones(n)
    ok = np.abs(np.sin(theta / 2.0)) > 1e-12
    out[ok] = (num[ok] / den[ok]) ** 2
    return out


def kernel_mixture(energies: Sequence[float], weights: Sequence[float], cfg: PEConfig) -> np.ndarray:
    out = np.zeros(cfg.size)
    for e, w in zip(energies, weights):
        out += w * fejer_kernel(e, cfg.m, cfg.tau)
    return out


def controlled_blocks(H: PairHamiltonian, cfg: PEConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    """Target-register blocks ``(ancilla |0>, ancilla |1>)`` for every ancilla qubit."""
    blocks = []
    if cfg.mode == IDEAL:
        w, v = hermitian_eig(to_dense(H))
        for j in range(cfg.m):
            t = 2**j * cfg.tau
            plus = (v * np.exp(-1j * w * t)) @ dagger(v)
            blocks.append((plus, dagger(plus)))
        return blocks
    evolve = ConditionalEvolution(H, cfg.params)
    for j in range(cfg.m):
        blocks.append(ancilla_blocks(evolve(2**j * cfg.tau)))
    return blocks


def qpe_amplitudes(
    psi: np.ndarray, cfg: PEConfig, blocks: list[tuple[np.ndarray, np.ndarray]]
) -> np.ndarray:
    """Joint amplitudes ``[k, target]`` after the inverse Fourier transform."""
    states = psi[None, :].astype(complex)
    for v0, v1 in blocks:
        # branch index l gains bit j: first half bit 0, second half bit 1
        states = np.concatenate([states @ v0.T, states @ v1.T], axis=0)
    states /= math.sqrt(cfg.size)
    return np.fft.fft(states, axis=0) / math.sqrt(cfg.size)


def _components(H: PairHamiltonian, initial) -> list[tuple[float, np.ndarray]]:
    dim = 2**H.n
    initial = np.asarray(initial)
    if initial.ndim == 1:
        return [(1.0, as_state(initial, dim))]
    rho = as_density(initial, dim)
    w, v = hermitian_eig(rho)
    return [(float(wi), v[:, i]) for i, wi in enumerate(w) if wi > 1e-14]


@dataclass(frozen=True)
class QPEDistribution:
    probabilities: np.ndarray
    cfg: PEConfig

    @property
    def energies(self) -> np.ndarray:
        return decoded_energies(self.cfg)

    def mode(self) -> int:
        return int(np.argmax(self.probabilities))


def run_qpe(H: PairHamiltonian, initial, cfg: PEConfig, blocks=None) -> QPEDistribution:
    """Exact readout distribution for a pure state or density matrix."""
    blocks = controlled_blocks(H, cfg) if blocks is None else blocks
    probs = np.zeros(cfg.size)
    for weight, psi in _components(H, initial):
        amps = qpe_amplitudes(psi, cfg, blocks)
        probs += weight * np.sum(np.abs(amps) ** 2, axis=1)
    return QPEDistribution(probs, cfg)


def post_measurement_state(H: PairHamiltonian, psi, cfg: PEConfig, k: int) -> np.ndarray:
    """Normalized target state after reading ``k`` (pure input)."""
    amps = qpe_amplitudes(as_state(psi, 2**H.n), cfg, controlled_blocks(H, cfg))
    out = amps[k]
    norm = np.linalg.norm(out)
    if norm == 0:
        raise ValueError(f"readout {k} has zero probability")
    return out / norm


@dataclass
class Histogram:
    k: np.ndarray
    counts: np.ndarray
    probabilities: np.ndarray
    energies: np.ndarray
    shots: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(np.sum(self.counts)) != self.shots:
            raise ValueError("histogram counts do not sum to the shot count")

    def occupied(self) -> np.ndarray:
        return self.k[self.counts > 0] if self.shots else self.k[self.probabilities > 0]

    def to_csv(self) -> str:
        lines = ["k,count,probability,energy_estimate"]
        for k, c, p, e in zip(self.k, self.counts, self.probabilities, self.energies):
            lines.append(f"{int(k)},{int(c)},{float(p)!r},{float(e)!r}")
        return "\n".join(lines) + "\n"


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def sample_counts(probabilities: np.ndarray, shots: int, seed: int) -> np.ndarray:
    """Seeded multinomial draw by inverse CDF.

    Shots are cut into fixed chunks with their own spawned seed streams, so
    the result does not depend on how many threads process the chunks.
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    p = np.clip(np.asarray(probabilities, dtype=float), 0.0, None)
    cdf = np.cumsum(p / p.sum())
    cdf[-1] = 1.0
    sizes = [min(SAMPLE_CHUNK, shots - start) for start in range(0, shots, SAMPLE_CHUNK)]
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def draw(i: int) -> np.ndarray:
        u = np.random.default_rng(streams[i]).random(sizes[i])
        return np.bincount(np.searchsorted(cdf, u, side="right"), minlength=len(p))[: len(p)]

    workers = min(max_threads(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, range(len(sizes))))
    else:
        parts = [draw(i) for i in range(len(sizes))]
    return np.sum(parts, axis=0)


def histogram_from_distribution(dist: QPEDistribution, sampled: bool, metadata: dict | None = None) -> Histogram:
    cfg = dist.cfg
    k = np.arange(cfg.size)
    if sampled:
        counts = sample_counts(dist.probabilities, cfg.shots, cfg.seed)
        probs = counts / cfg.shots
        shots = cfg.shots
    else:
        counts = np.zeros(cfg.size, dtype=int)
        probs = dist.probabilities.copy()
        shots = 0
    meta = {"config": cfg.as_dict(), "sampled": sampled}
    meta.update(metadata or {})
    return Histogram(k, counts, probs, dist.energies, shots, meta)


def sample_qpe(H: PairHamiltonian, initial, cfg: PEConfig) -> Histogram:
    """Seeded readout samples from the exact distribution."""
    return histogram_from_distribution(run_qpe(H, initial, cfg), sampled=True)


def circular_distance(k: np.ndarray, x: float, size: int) -> np.ndarray:
    d = np.mod(np.asarray(k, dtype=float) - x, size)
    return np.minimum(d, size - d)


def tail_probability_check(H: PairHamiltonian, eigenstate, cfg: PEConfig, e: int) -> tuple[float, float]:
    """Readout mass further than ``e`` from ``2^m E tau / pi``, and the bound ``1/(2e-2)``."""
    if int(e) != e or e < 2:
        raise ValueError(f"e must be an integer >= 2, got {e!r}")
    psi = as_state(eigenstate, 2**H.n)
    h = to_dense(H)
    energy = float(np.vdot(psi, h @ psi).real)
    if np.linalg.norm(h @ psi - energy * psi) > 1e-8:
        raise ValueError("input is not an eigenstate of H")
    dist = run_qpe(H, psi, cfg)
    d = circular_distance(np.arange(cfg.size), energy_to_readout(energy, cfg), cfg.size)
    return float(np.sum(dist.probabilities[d > e])), 1.0 / (2 * e - 2)


MIXED = "mixed"
THERMAL = "thermal"


def initial_density(H: PairHamiltonian, prep: str = MIXED, beta: float = 0.0) -> np.ndarray:
    """Maximally mixed or Gibbs state of ``H``.

    The Gibbs weights come from the exact eigen-decomposition, which sits
    outside the protocol; it only stands in for a thermal preparation.
    """
    dim = 2**H.n
    if prep == MIXED:
        return np.eye(dim, dtype=complex) / dim
    if prep != THERMAL:
        raise ValueError(f"unknown preparation {prep!r}")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    w, v = hermitian_eig(to_dense(H))
    if math.isinf(beta):
        weights = (w - w[0] < 1e-9).astype(float)
    else:
        weights = np.exp(-beta * (w - w[0]))
    weights /= weights.sum()
    return (v * weights) @ dagger(v)


def density_of_states(
    H: PairHamiltonian,
    cfg: PEConfig,
    prep: str = MIXED,
    beta: float = 0.0,
    exact: bool = True,
) -> Histogram:
    """Readout histogram for a mixed or thermal target register."""
    rho = initial_density(H, prep, beta)
    dist = run_qpe(H, rho, cfg)
    meta = {"preparation": prep, "beta": beta if prep == THERMAL else None}
    return histogram_from_distribution(dist, sampled=not exact, metadata=meta)


def dos_oracle(H: PairHamiltonian, cfg: PEConfig, prep: str = MIXED, beta: float = 0.0) -> np.ndarray:
    """Per-eigenvalue kernel synthesis from the exact spectrum."""
    w, v = hermitian_eig(to_dense(H))
    rho = initial_density(H, prep, beta)
    weights = [float(np.vdot(v[:, i], rho @ v[:, i]).real) for i in range(len(w))]
    return kernel_mixture(w, weights, cfg)


def gap_report(h: Histogram, threshold: float) -> list[tuple[float, float]]:
    """Runs of readouts below ``threshold`` between the lowest and highest occupied energies.

    Bins are taken in energy order, so a run never crosses the wrap point of
    the readout register. Each gap is reported as (first, last) empty-bin
    energy.
    """
    order = np.argsort(h.energies, kind="stable")
    probs = h.probabilities[order]
    energies = h.energies[order]
    occupied = np.nonzero(probs >= threshold)[0]
    if occupied.size == 0:
        return []
    gaps = []
    start = None
    for i in range(occupied[0], occupied[-1] + 1):
        if probs[i] < threshold:
            if start is None:
                start = i
        elif start is not None:
            gaps.append((float(energies[start]), float(energies[i - 1])))
            start = None
    return gaps
