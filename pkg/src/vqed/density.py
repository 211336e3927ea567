"""Dense density-matrix engine.

Holds the value type for (possibly sub-normalized) density operators plus the
channel primitives everything else is built on: unitary application, local
depolarizing noise, expectation values, fidelity against pure states, and
projective measurement with sampled outcomes.

Tolerances follow a fixed hierarchy: 1e-12 for algebraic identities, 1e-10
for accumulated-evolution checks, 1e-8 for Hermiticity rejection.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ATOL_ALGEBRA = 1e-12
ATOL_STATE = 1e-10
ATOL_HERMITIAN = 1e-8
TRACE_FLOOR = 1e-14

_MAGIC = b"DMX1"


class DensityMatrix:
    """Dense density operator on m qubits.

    ``normalized=False`` marks deliberately sub-normalized objects, e.g. the
    surviving branch after post-selection; their trace carries protocol
    meaning and must not be silently rescaled.
    """

    __slots__ = ("data", "normalized")

    def __init__(self, data: np.ndarray, *, normalized: bool = True, copy: bool = True):
        arr = np.array(data, dtype=np.complex128, copy=copy)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {arr.shape}")
        dim = arr.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"dimension {dim} is not a power of two")
        self.data = arr
        self.normalized = normalized

    @classmethod
    def from_pure(cls, vector: np.ndarray) -> "DensityMatrix":
        v = np.asarray(vector, dtype=np.complex128).ravel()
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > ATOL_STATE:
            raise ValueError(f"state vector norm {norm} is not 1")
        return cls(np.outer(v, v.conj()), copy=False)

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "DensityMatrix":
        dim = 1 << num_qubits
        return cls(np.eye(dim, dtype=np.complex128) / dim, copy=False)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.data, normalized=self.normalized)

    def normalize(self) -> "DensityMatrix":
        """Explicitly rescale to unit trace."""
        tr = self.trace()
        if tr < TRACE_FLOOR:
            raise ValueError(f"trace {tr} too small to normalize")
        return DensityMatrix(self.data / tr, normalized=True, copy=False)

    def validate(self) -> None:
        """Check Hermiticity, positivity and trace within the standard tolerances."""
        herm = np.max(np.abs(self.data - self.data.conj().T))
        if herm > ATOL_STATE:
            raise ValueError(f"Hermiticity residue {herm} exceeds {ATOL_STATE}")
        eigs = np.linalg.eigvalsh((self.data + self.data.conj().T) / 2)
        if eigs.min() < -ATOL_STATE:
            raise ValueError(f"negative eigenvalue {eigs.min()}")
        tr = self.trace()
        if tr <= 0:
            raise ValueError(f"non-positive trace {tr}")
        if self.normalized and abs(tr - 1.0) > ATOL_STATE:
            raise ValueError(f"trace {tr} of a normalized state is not 1")
        if not self.normalized and tr > 1.0 + ATOL_STATE:
            raise ValueError(f"trace {tr} exceeds 1")

    # -- serialization (dims header + row-major complex doubles) ------------

    def to_bytes(self) -> bytes:
        header = _MAGIC + struct.pack("<QB", self.dim, int(self.normalized))
        return header + np.ascontiguousarray(self.data).tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "DensityMatrix":
        if blob[:4] != _MAGIC:
            raise ValueError("bad magic in density-matrix blob")
        dim, normalized = struct.unpack("<QB", blob[4:13])
        data = np.frombuffer(blob[13:], dtype=np.complex128).reshape(dim, dim)
        return cls(data, normalized=bool(normalized))

    def __repr__(self) -> str:
        tag = "" if self.normalized else ", unnormalized"
        return f"DensityMatrix({self.num_qubits} qubits, trace={self.trace():.6g}{tag})"


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing-noise placements for a logical circuit.

    gate_p
        Per-qubit depolarizing strength applied to every physical qubit after
        each logical gate layer.
    gadget_p
        If set, the projection gadget itself is noisy: the sampled stabilizer
        gate is followed by per-qubit depolarizing on all n system qubits and
        the controlled-stabilizer gate by depolarizing on all n + 1 qubits,
        ancilla included.
    ancilla_p
        If set, only the gadget ancilla is noisy: one depolarizing of this
        strength per controlled-Pauli factor, padded so each gadget
        contributes exactly n applications.
    """

    gate_p: float = 0.0
    gadget_p: float | None = None
    ancilla_p: float | None = None

    def __post_init__(self) -> None:
        for label, p in (
            ("gate_p", self.gate_p),
            ("gadget_p", self.gadget_p),
            ("ancilla_p", self.ancilla_p),
        ):
            if p is not None and not 0.0 <= p <= 1.0:
                raise ValueError(f"{label}={p} outside [0, 1]")


# -- channel primitives -----------------------------------------------------


def _embedded_conjugation(data: np.ndarray, u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """U rho U^dag with a 2**t unitary embedded on ``targets`` (qubit 0 = MSB)."""
    t = len(targets)
    tensor = data.reshape((2,) * (2 * n))
    # ket side
    tensor = np.moveaxis(tensor, targets, range(t))
    shape = tensor.shape
    tensor = (u @ tensor.reshape(1 << t, -1)).reshape(shape)
    tensor = np.moveaxis(tensor, range(t), targets)
    # bra side
    bra = [n + q for q in targets]
    tensor = np.moveaxis(tensor, bra, range(2 * n - t, 2 * n))
    shape = tensor.shape
    tensor = (tensor.reshape(-1, 1 << t) @ u.conj().T).reshape(shape)
    tensor = np.moveaxis(tensor, range(2 * n - t, 2 * n), bra)
    return tensor.reshape(data.shape)


def apply_unitary(
    rho: DensityMatrix, u: np.ndarray, targets: Sequence[int] | None = None
) -> DensityMatrix:
    """Conjugate by a unitary acting on ``targets`` (defaults to all qubits)."""
    n = rho.num_qubits
    u = np.asarray(u, dtype=np.complex128)
    if targets is None:
        targets = tuple(range(n))
    targets = tuple(int(q) for q in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets {targets} are not distinct")
    if any(not 0 <= q < n for q in targets):
        raise ValueError(f"targets {targets} out of range for {n} qubits")
    if u.shape != (1 << len(targets), 1 << len(targets)):
        raise ValueError(f"unitary shape {u.shape} does not match {len(targets)} targets")
    if targets == tuple(range(n)):
        out = u @ rho.data @ u.conj().T
    else:
        out = _embedded_conjugation(rho.data, u, targets, n)
    return DensityMatrix(out, normalized=rho.normalized, copy=False)


def _depolarize_array(data: np.ndarray, p: float, target: int, n: int) -> np.ndarray:
    """Depolarizing on one qubit of a raw dim x dim array (qubit 0 = MSB)."""
    a = 1 << target
    b = 1 << (n - 1 - target)
    six = data.reshape(a, 2, b, a, 2, b)
    traced = six[:, 0, :, :, 0, :] + six[:, 1, :, :, 1, :]
    out = (1.0 - p) * six
    out[:, 0, :, :, 0, :] += (p / 2.0) * traced
    out[:, 1, :, :, 1, :] += (p / 2.0) * traced
    return out.reshape(data.shape)


def _depolarize_array_all(data: np.ndarray, p: float, n: int) -> np.ndarray:
    for q in range(n):
        data = _depolarize_array(data, p, q, n)
    return data


def apply_depolarizing(rho: DensityMatrix, p: float, target: int) -> DensityMatrix:
    """Single-qubit depolarizing: rho -> (1-p) rho + p (I/2 otimes tr_q rho).

    Equivalent to the four-Kraus mixture with X, Y, Z each at weight p/4.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    n = rho.num_qubits
    if not 0 <= target < n:
        raise ValueError(f"target {target} out of range for {n} qubits")
    if p == 0.0:
        return rho.copy()
    out = _depolarize_array(rho.data, p, target, n)
    return DensityMatrix(out, normalized=rho.normalized, copy=False)


def depolarize_all(rho: DensityMatrix, p: float) -> DensityMatrix:
    """Local depolarizing of strength p on every qubit."""
    out = rho
    for q in range(rho.num_qubits):
        out = apply_depolarizing(out, p, q)
    return out


def expectation(rho: DensityMatrix, observable: np.ndarray) -> float:
    """Real part of tr[rho A] for Hermitian A; complains if either check fails."""
    a = np.asarray(observable)
    if a.shape != rho.data.shape:
        raise ValueError(f"observable shape {a.shape} does not match dim {rho.dim}")
    herm = np.max(np.abs(a - a.conj().T))
    if herm > ATOL_STATE:
        raise ValueError(f"observable Hermiticity residue {herm}")
    val = np.einsum("ij,ji->", rho.data, a)
    if abs(val.imag) > ATOL_HERMITIAN:
        raise ValueError(f"imaginary expectation residue {val.imag}")
    return float(val.real)


def fidelity_pure(rho: DensityMatrix, psi: np.ndarray) -> float:
    """<psi| rho |psi>, clamped to [0, 1]."""
    v = np.asarray(psi, dtype=np.complex128).ravel()
    if v.shape[0] != rho.dim:
        raise ValueError(f"vector length {v.shape[0]} does not match dim {rho.dim}")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > ATOL_STATE:
        raise ValueError(f"state vector norm {norm} is not 1")
    if abs(rho.trace() - 1.0) > ATOL_STATE:
        raise ValueError(f"fidelity needs a normalized state, trace={rho.trace()}")
    val = float((v.conj() @ rho.data @ v).real)
    if val < -ATOL_STATE or val > 1.0 + ATOL_STATE:
        raise ValueError(f"fidelity {val} outside [0, 1] beyond tolerance")
    return min(1.0, max(0.0, val))


def measure_projective(
    rho: DensityMatrix,
    projectors: tuple[np.ndarray, np.ndarray],
    rng: np.random.Generator,
) -> tuple[int, DensityMatrix]:
    """Sample a two-outcome projective measurement.

    ``projectors`` is the (+1, -1) pair; it must resolve the identity and
    each member must be a Hermitian idempotent.  Returns the sampled outcome
    and the renormalized post-measurement state.  A branch with probability
    below 1e-14 is never sampled.
    """
    plus, minus = projectors
    dim = rho.dim
    if np.max(np.abs(plus + minus - np.eye(dim))) > ATOL_STATE:
        raise ValueError("projectors do not resolve the identity")
    for pi in (plus, minus):
        if np.max(np.abs(pi - pi.conj().T)) > ATOL_STATE:
            raise ValueError("projector is not Hermitian")
        if np.max(np.abs(pi @ pi - pi)) > ATOL_STATE:
            raise ValueError("projector is not idempotent")
    tr = rho.trace()
    if tr < TRACE_FLOOR:
        raise ValueError("state trace vanished; cannot measure")
    p_plus = float(np.einsum("ij,ji->", plus, rho.data).real) / tr
    p_minus = float(np.einsum("ij,ji->", minus, rho.data).real) / tr
    if p_plus < TRACE_FLOOR and p_minus < TRACE_FLOOR:
        raise ValueError("both measurement branches have vanishing probability")
    if p_plus < TRACE_FLOOR:
        outcome = -1
    elif p_minus < TRACE_FLOOR:
        outcome = +1
    else:
        outcome = +1 if rng.random() < p_plus else -1
    pi = plus if outcome == +1 else minus
    post = pi @ rho.data @ pi
    post /= np.trace(post).real
    if not rho.normalized:
        post = post * tr  # keep the pre-measurement weight on the branch
    return outcome, DensityMatrix(post, normalized=rho.normalized, copy=False)


# -- reproducible random streams ---------------------------------------------


def shot_stream(master_seed: int, shot_index: int) -> np.random.Generator:
    """Independent generator for one shot, derived from (master seed, index).

    Streams do not depend on evaluation order or thread count, so shot-level
    parallelism cannot perturb results.
    """
    return np.random.default_rng(np.random.SeedSequence((int(master_seed), int(shot_index))))


def derived_seed(master_seed: int, *path: int) -> int:
    """Stable integer sub-seed for a labelled position in an experiment grid."""
    ss = np.random.SeedSequence((int(master_seed),) + tuple(int(x) for x in path))
    return int(ss.generate_state(1, np.uint64)[0])
