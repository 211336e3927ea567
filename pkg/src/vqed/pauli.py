"""Phase-tracked n-qubit Pauli operators.

An operator is stored as two bitmasks plus a global phase exponent: bit q of
``x_mask`` / ``z_mask`` says whether qubit q carries an X / Z component, and
``phase`` is an integer k (mod 4) meaning an overall factor of i**k.  The
per-qubit letter is read off the two bits as

    (0, 0) -> I,   (1, 0) -> X,   (1, 1) -> Y,   (0, 1) -> Z.

Qubit 0 is the leftmost letter of a string such as "XZZXI" and the most
significant tensor factor of the dense matrix, so transcription of printed
operator tables is literal.

All group arithmetic (products, commutation, weights) is exact integer
arithmetic; floating point only enters through the dense renderings.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

#: Hard cap on dense renderings, 2**12 x 2**12 at most.
MAX_DENSE_QUBITS = 12

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_PHASE_PREFIX = {0: "", 1: "i", 2: "-", 3: "-i"}
_PREFIX_PHASE = {"": 0, "+": 0, "i": 1, "+i": 1, "-": 2, "-i": 3}

_SINGLE_DENSE = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class DimensionError(ValueError):
    """Raised when operands act on different numbers of qubits."""


@dataclass(frozen=True)
class PauliString:
    """Element of the n-qubit Pauli group, sign and i-factor included.

    Immutable value type: every operation returns a new instance, so
    instances can be shared freely across threads.
    """

    n: int
    x_mask: int = 0
    z_mask: int = 0
    phase: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need at least one qubit, got n={self.n}")
        full = (1 << self.n) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError(f"mask exceeds {self.n} qubits")
        if self.x_mask < 0 or self.z_mask < 0:
            raise ValueError("masks must be non-negative")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        """One non-identity letter at ``qubit``, identity elsewhere."""
        if not 0 <= qubit < n:
            raise ValueError(f"qubit {qubit} out of range for n={n}")
        xb, zb = _LETTER_BITS[letter]
        return cls(n, xb << qubit, zb << qubit)

    @classmethod
    def from_string(cls, text: str) -> "PauliString":
        """Parse e.g. ``"XZZXI"``, ``"-iXY"``, ``"+ZZ"``.

        The optional leading token is one of ``+ - i -i +i``; the rest is
        letters from ``IXYZ``.  Parsing is the exact inverse of ``str()``.
        """
        s = text.strip()
        prefix = ""
        for cand in ("-i", "+i", "i", "-", "+"):
            if s.startswith(cand):
                prefix, s = cand, s[len(cand):]
                break
        if not s:
            raise ValueError(f"no Pauli letters in {text!r}")
        x = z = 0
        for q, ch in enumerate(s):
            try:
                xb, zb = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r} in {text!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(s), x, z, _PREFIX_PHASE[prefix])

    # -- inspection --------------------------------------------------------

    def letter(self, qubit: int) -> str:
        return _BITS_LETTER[(self.x_mask >> qubit) & 1, (self.z_mask >> qubit) & 1]

    @property
    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    @property
    def sign(self) -> complex:
        return 1j ** self.phase

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0 and self.phase == 0

    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def __str__(self) -> str:
        return _PHASE_PREFIX[self.phase] + self.letters

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    # -- group algebra -----------------------------------------------------

    def multiply(self, other: "PauliString") -> "PauliString":
        """Group product self * other with the exact i**k phase.

        Result masks are the XOR of the operand masks; the phase follows from
        composing the per-qubit (x, z) pairs, counted with popcounts so no
        floating point is involved.
        """
        if self.n != other.n:
            raise DimensionError(f"qubit counts differ: {self.n} vs {other.n}")
        x3 = self.x_mask ^ other.x_mask
        z3 = self.z_mask ^ other.z_mask
        k = (
            self.phase
            + other.phase
            + (self.x_mask & self.z_mask).bit_count()
            + (other.x_mask & other.z_mask).bit_count()
            - (x3 & z3).bit_count()
            + 2 * (self.z_mask & other.x_mask).bit_count()
        )
        return PauliString(self.n, x3, z3, k % 4)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return self.multiply(other)

    def commutes(self, other: "PauliString") -> bool:
        """True iff self * other == other * self (symplectic inner product)."""
        if self.n != other.n:
            raise DimensionError(f"qubit counts differ: {self.n} vs {other.n}")
        crossings = (self.x_mask & other.z_mask).bit_count() + (
            self.z_mask & other.x_mask
        ).bit_count()
        return crossings % 2 == 0

    def weight(self) -> int:
        """Number of non-identity tensor factors."""
        return (self.x_mask | self.z_mask).bit_count()

    # -- dense rendering ---------------------------------------------------

    def to_dense(self) -> np.ndarray:
        """Dense 2**n x 2**n matrix, qubit 0 as the most significant factor."""
        if self.n > MAX_DENSE_QUBITS:
            raise ValueError(
                f"dense rendering capped at {MAX_DENSE_QUBITS} qubits, got {self.n}"
            )
        m = np.eye(1, dtype=np.complex128)
        for q in range(self.n):
            m = np.kron(m, _SINGLE_DENSE[self.letter(q)])
        return self.sign * m

    def mul_matrix_left(self, mat: np.ndarray) -> np.ndarray:
        """Return ``self_dense @ mat`` without materialising the dense form.

        A Pauli is a signed permutation in the computational basis, so the
        product is a row permutation times a phase vector.
        """
        perm, coef = _dense_action(self)
        return coef[perm][:, None] * mat[perm, :]

    def mul_matrix_right(self, mat: np.ndarray) -> np.ndarray:
        """Return ``mat @ self_dense``."""
        perm, coef = _dense_action(self)
        return mat[:, perm] * coef[None, :]

    def sandwich(self, mat: np.ndarray) -> np.ndarray:
        """Return ``self_dense @ mat @ self_dense`` (same operator both sides)."""
        perm, coef = _dense_action(self)
        out = mat[perm, :][:, perm]
        c = coef[perm]
        return out * (c[:, None] * coef[None, :])


def _index_mask(mask: int, n: int) -> int:
    """Map a qubit-indexed mask to basis-index bit positions (qubit 0 = MSB)."""
    out = 0
    for q in range(n):
        if (mask >> q) & 1:
            out |= 1 << (n - 1 - q)
    return out


def _parity_vector(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    for shift in (16, 8, 4, 2, 1):
        v ^= v >> shift
    return (v & 1).astype(bool)


@functools.lru_cache(maxsize=None)
def _dense_action(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Permutation and phase vectors with ``dense @ e_c = coef[c] * e_perm[c]``."""
    if p.n > MAX_DENSE_QUBITS:
        raise ValueError(
            f"dense action capped at {MAX_DENSE_QUBITS} qubits, got {p.n}"
        )
    dim = 1 << p.n
    x_idx = _index_mask(p.x_mask, p.n)
    z_idx = _index_mask(p.z_mask, p.n)
    idx = np.arange(dim)
    signs = np.where(_parity_vector(idx & z_idx), -1.0, 1.0)
    k = (p.phase + (p.x_mask & p.z_mask).bit_count()) % 4
    coef = (1j**k * signs).astype(np.complex128)
    perm = idx ^ x_idx
    return perm, coef
