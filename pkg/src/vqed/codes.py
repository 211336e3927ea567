"""Stabilizer codes: built-in registry, group enumeration, code-space
projectors, logical states, syndromes, minimum-weight recovery tables, and
transversal single-qubit gate sets.

Codes are immutable after construction; the derived objects (full group,
dense projector, recovery table, kron'd transversal unitaries) are built
lazily and cached on the instance.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .pauli import MAX_DENSE_QUBITS, PauliString

_ATOL = 1e-12

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
_S = np.array([[1, 0], [0, 1j]], dtype=np.complex128)

#: Named single-qubit gates accepted in transversal-set descriptions.
SINGLE_QUBIT_GATES: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "H": _H,
    "S": _S,
    "SDG": _S.conj().T,
    # "SH" is the matrix product S @ H, i.e. H first in circuit order.
    "SH": _S @ _H,
    "HS": _H @ _S,
}


class TransversalGate(NamedTuple):
    """A single-qubit unitary applied identically to every physical qubit."""

    label: str
    matrix: np.ndarray


def _canonical_key(u: np.ndarray) -> tuple:
    """Key identifying a 2x2 unitary up to global phase."""
    flat = u.ravel()
    for v in flat:
        if abs(v) > 1e-8:
            un = u * (abs(v) / v)
            return tuple(np.round(un.ravel().real, 9) + 0.0) + tuple(
                np.round(un.ravel().imag, 9) + 0.0
            )
    raise ValueError("zero matrix")


@functools.lru_cache(maxsize=1)
def clifford_gates() -> tuple[TransversalGate, ...]:
    """The 24 single-qubit Clifford gates (up to global phase).

    Generated by breadth-first closure of {H, S}; labels are words in matrix
    order, so label "SH" means the matrix S @ H.  Order is deterministic.
    """
    eye = np.eye(2, dtype=np.complex128)
    found: dict[tuple, TransversalGate] = {_canonical_key(eye): TransversalGate("I", eye)}
    frontier = [TransversalGate("I", eye)]
    while frontier:
        nxt = []
        for word, mat in frontier:
            for gname in ("H", "S"):
                cand = SINGLE_QUBIT_GATES[gname] @ mat
                key = _canonical_key(cand)
                if key not in found:
                    label = gname + ("" if word == "I" else word)
                    gate = TransversalGate(label, cand)
                    found[key] = gate
                    nxt.append(gate)
        frontier = nxt
    gates = tuple(found.values())
    assert len(gates) == 24
    return gates


def resolve_transversal(names: Sequence[str] | str) -> tuple[TransversalGate, ...]:
    """Resolve a transversal-set description to concrete gates.

    Accepts a list of gate names from ``SINGLE_QUBIT_GATES`` or the token
    ``"clifford"`` (the 24 single-qubit Cliffords).
    """
    if isinstance(names, str):
        names = [names]
    if len(names) == 1 and names[0].lower() in ("clifford", "clifford24"):
        return clifford_gates()
    gates = []
    for name in names:
        key = name.upper()
        if key not in SINGLE_QUBIT_GATES:
            raise ValueError(f"unknown single-qubit gate {name!r}")
        gates.append(TransversalGate(key, SINGLE_QUBIT_GATES[key]))
    return tuple(gates)


class StabilizerGroup:
    """Full stabilizer group in generator-product order.

    Element i (0-based) is the product of the generators selected by the
    binary expansion of i, least-significant bit selecting the first
    generator; element 0 is the identity.  Elements carry their exact signs:
    products of positive generators may legitimately come out as -1 times a
    Pauli word, and those signs are kept.
    """

    def __init__(self, elements: Sequence[PauliString]):
        self.elements = tuple(elements)
        self._index: dict[tuple[int, int], int] = {}
        for i, p in enumerate(self.elements):
            key = (p.x_mask, p.z_mask)
            if key in self._index:
                raise ValueError("duplicate group element: generators are dependent")
            self._index[key] = i
        self._dense: list[np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self.elements)

    def __getitem__(self, i: int) -> PauliString:
        return self.elements[i]

    def index_of(self, p: PauliString) -> int:
        """Index of the element with the same Pauli word as ``p``."""
        try:
            return self._index[(p.x_mask, p.z_mask)]
        except KeyError:
            raise KeyError(f"{p} is not in the stabilizer group") from None

    def __contains__(self, p: PauliString) -> bool:
        i = self._index.get((p.x_mask, p.z_mask))
        return i is not None and self.elements[i].phase == p.phase

    def dense_elements(self) -> list[np.ndarray]:
        if self._dense is None:
            self._dense = [p.to_dense() for p in self.elements]
        return self._dense


@dataclass(frozen=True)
class RecoveryTable:
    """Syndrome -> minimum-weight recovery Pauli, deterministic tie-break.

    Candidates are scanned by weight, then by qubit-position tuple, then by
    letters in X < Y < Z order; the first Pauli reproducing the syndrome
    wins.  All recoveries have phase +1.
    """

    entries: dict[tuple[int, ...], PauliString]

    def recovery(self, syndrome: Sequence[int]) -> PauliString:
        key = tuple(int(s) for s in syndrome)
        try:
            return self.entries[key]
        except KeyError:
            raise KeyError(f"no recovery recorded for syndrome {key}") from None

    def __len__(self) -> int:
        return len(self.entries)

    def items(self):
        return self.entries.items()


class StabilizerCode:
    """An [[n, k, d]] stabilizer code with transversal gate set.

    Parameters
    ----------
    name : str
        Identifier used in reports and CSV output.
    n, k, d : int
        Physical qubits, logical qubits, code distance.
    generators : sequence of str or PauliString
        The n - k stabilizer generators.
    logical_x, logical_z : sequence of str or PauliString
        One logical X and Z per logical qubit.
    transversal : sequence of str, or "clifford"
        Names of single-qubit gates applied transversally.
    """

    def __init__(
        self,
        name: str,
        n: int,
        k: int,
        d: int,
        generators: Sequence[str | PauliString],
        logical_x: Sequence[str | PauliString] | str | PauliString,
        logical_z: Sequence[str | PauliString] | str | PauliString,
        transversal: Sequence[str] | str = ("X", "Y", "Z"),
    ):
        self.name = name
        self.n = int(n)
        self.k = int(k)
        self.d = int(d)
        self.generators = tuple(self._as_pauli(g) for g in generators)
        self.logical_x = tuple(self._as_pauli(p) for p in self._as_list(logical_x))
        self.logical_z = tuple(self._as_pauli(p) for p in self._as_list(logical_z))
        self.transversal = resolve_transversal(transversal)
        self._validate()
        self._group = self._enumerate()
        self._projector: np.ndarray | None = None
        self._logical_zero: np.ndarray | None = None
        self._recovery: RecoveryTable | None = None
        self._full_unitaries: dict[str, np.ndarray] = {}
        if self.n <= MAX_DENSE_QUBITS:
            self._check_transversal_preserves_code_space()

    @staticmethod
    def _as_list(item) -> list:
        if isinstance(item, (str, PauliString)):
            return [item]
        return list(item)

    def _as_pauli(self, p: str | PauliString) -> PauliString:
        out = PauliString.from_string(p) if isinstance(p, str) else p
        if out.n != self.n:
            raise ValueError(f"{out} does not act on {self.n} qubits")
        return out

    def _validate(self) -> None:
        if len(self.generators) != self.n - self.k:
            raise ValueError(
                f"expected {self.n - self.k} generators, got {len(self.generators)}"
            )
        if len(self.logical_x) != self.k or len(self.logical_z) != self.k:
            raise ValueError(f"expected {self.k} logical X and Z operators")
        for g in self.generators:
            if g.x_mask == 0 and g.z_mask == 0:
                raise ValueError("a generator must not be proportional to identity")
            if g.phase % 2 != 0:
                raise ValueError(f"generator {g} does not square to +identity")
        for a, b in itertools.combinations(self.generators, 2):
            if not a.commutes(b):
                raise ValueError(f"generators {a} and {b} do not commute")
        for lop in (*self.logical_x, *self.logical_z):
            for g in self.generators:
                if not lop.commutes(g):
                    raise ValueError(f"logical operator {lop} anticommutes with {g}")
        for i, (lx, lz) in enumerate(zip(self.logical_x, self.logical_z)):
            if lx.commutes(lz):
                raise ValueError(f"logical X and Z of qubit {i} must anticommute")
            for j in range(self.k):
                if j != i and not lx.commutes(self.logical_z[j]):
                    raise ValueError("logical operators of distinct qubits must commute")

    def _enumerate(self) -> StabilizerGroup:
        size = 1 << (self.n - self.k)
        elements = []
        for t in range(size):
            m = PauliString.identity(self.n)
            for j, g in enumerate(self.generators):
                if (t >> j) & 1:
                    m = m.multiply(g)
            if m.phase % 2 != 0:
                raise ValueError(f"group element {m} carries an imaginary phase")
            if m.x_mask == 0 and m.z_mask == 0 and m.phase == 2:
                raise ValueError("-identity is in the group: invalid stabilizer set")
            elements.append(m)
        return StabilizerGroup(elements)

    def _check_transversal_preserves_code_space(self) -> None:
        proj = self.projector()
        for gate in self.transversal:
            u = self.transversal_unitary(gate)
            if not np.allclose(u @ proj @ u.conj().T, proj, atol=_ATOL):
                raise ValueError(
                    f"transversal gate {gate.label} does not preserve the code space"
                )

    # -- derived objects ---------------------------------------------------

    def group(self) -> StabilizerGroup:
        """All 2**(n-k) stabilizer elements, exact signs included."""
        return self._group

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the code space: the uniform group sum."""
        if self._projector is None:
            if self.n > MAX_DENSE_QUBITS:
                raise ValueError(f"projector capped at {MAX_DENSE_QUBITS} qubits")
            dim = 1 << self.n
            acc = np.zeros((dim, dim), dtype=np.complex128)
            for el in self._group.dense_elements():
                acc += el
            self._projector = acc / len(self._group)
        return self._projector

    def logical_zero(self) -> np.ndarray:
        """Unit vector with P v = v and Z_L v = +v (k = 1 codes only).

        Found by applying the projector onto the logical-zero sector to the
        computational basis states in lexicographic order and normalising the
        first image with norm above 1e-8.
        """
        if self.k != 1:
            raise ValueError("logical_zero is defined for k = 1 codes")
        if self._logical_zero is None:
            dim = 1 << self.n
            sector = self.projector() @ (
                np.eye(dim) + self.logical_z[0].to_dense()
            ) / 2.0
            for b in range(dim):
                v = sector[:, b]
                norm = np.linalg.norm(v)
                if norm > 1e-8:
                    self._logical_zero = v / norm
                    break
            else:  # pragma: no cover - impossible for a valid code
                raise RuntimeError("no basis state overlaps the logical zero sector")
        return self._logical_zero

    def syndrome(self, error: PauliString) -> tuple[int, ...]:
        """Generator eigenvalues flipped by ``error``: +1 commute, -1 anticommute."""
        if error.n != self.n:
            raise ValueError(f"{error} does not act on {self.n} qubits")
        return tuple(1 if error.commutes(g) else -1 for g in self.generators)

    def recovery_table(self) -> RecoveryTable:
        """Minimum-weight recovery for every syndrome, by brute-force search."""
        if self._recovery is None:
            wanted = 1 << (self.n - self.k)
            entries: dict[tuple[int, ...], PauliString] = {}
            for weight in range(self.n + 1):
                for positions in itertools.combinations(range(self.n), weight):
                    for letters in itertools.product("XYZ", repeat=weight):
                        x = z = 0
                        for q, ch in zip(positions, letters):
                            xb, zb = (1, 0) if ch == "X" else (1, 1) if ch == "Y" else (0, 1)
                            x |= xb << q
                            z |= zb << q
                        cand = PauliString(self.n, x, z)
                        syn = self.syndrome(cand)
                        if syn not in entries:
                            entries[syn] = cand
                    if len(entries) == wanted:
                        break
                if len(entries) == wanted:
                    break
            if len(entries) != wanted:
                raise ValueError("some syndromes are unreachable by any Pauli error")
            self._recovery = RecoveryTable(entries)
        return self._recovery

    def transversal_unitary(self, gate: TransversalGate | str) -> np.ndarray:
        """The full n-qubit unitary ``u`` applied on every qubit (cached per label)."""
        if isinstance(gate, str):
            matches = [g for g in self.transversal if g.label == gate]
            if not matches:
                raise ValueError(f"{gate!r} is not in the transversal set of {self.name}")
            gate = matches[0]
        cached = self._full_unitaries.get(gate.label)
        if cached is None:
            cached = np.eye(1, dtype=np.complex128)
            for _ in range(self.n):
                cached = np.kron(cached, gate.matrix)
            self._full_unitaries[gate.label] = cached
        return cached

    def transversal_gates(self) -> list[np.ndarray]:
        """Full n-qubit unitaries of the whole transversal set, in set order."""
        return [self.transversal_unitary(g) for g in self.transversal]

    def __repr__(self) -> str:
        return f"StabilizerCode({self.name}: [[{self.n},{self.k},{self.d}]])"


_BUILTIN: dict[str, dict] = {
    "code_412": dict(
        n=4,
        k=1,
        d=2,
        generators=["XXXX", "ZZZZ", "IZZI"],
        logical_x=["IXXI"],
        logical_z=["ZZII"],
        transversal=("X", "Y", "Z"),
    ),
    "code_513": dict(
        n=5,
        k=1,
        d=3,
        generators=["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"],
        logical_x=["XXXXX"],
        logical_z=["ZZZZZ"],
        transversal=("X", "Y", "Z", "SH"),
    ),
    "code_713": dict(
        n=7,
        k=1,
        d=3,
        generators=[
            "IIIZZZZ",
            "IZZIIZZ",
            "ZIZIZIZ",
            "IIIXXXX",
            "IXXIIXX",
            "XIXIXIX",
        ],
        logical_x=["XXXXXXX"],
        logical_z=["ZZZZZZZ"],
        transversal="clifford",
    ),
}


@functools.lru_cache(maxsize=None)
def build_code(name: str) -> StabilizerCode:
    """Construct a built-in code by name; instances are cached and shared."""
    try:
        spec = _BUILTIN[name]
    except KeyError:
        known = ", ".join(sorted(_BUILTIN))
        raise ValueError(f"unknown code {name!r} (known: {known})") from None
    return StabilizerCode(name=name, **spec)


def known_codes() -> tuple[str, ...]:
    return tuple(sorted(_BUILTIN))


def code_from_json(source: str | Path | dict) -> StabilizerCode:
    """Build a user-defined code from a JSON description.

    The document needs keys ``n, k, d, generators, logical_x, logical_z`` and
    optionally ``name`` and ``transversal`` (list of gate names or
    ``"clifford"``).  ``source`` may be a dict or a path to a JSON file.
    """
    if isinstance(source, dict):
        doc = source
    else:
        doc = json.loads(Path(source).read_text())
    missing = [key for key in ("n", "k", "d", "generators", "logical_x", "logical_z") if key not in doc]
    if missing:
        raise ValueError(f"code description missing keys: {missing}")
    return StabilizerCode(
        name=str(doc.get("name", "custom")),
        n=doc["n"],
        k=doc["k"],
        d=doc["d"],
        generators=doc["generators"],
        logical_x=doc["logical_x"],
        logical_z=doc["logical_z"],
        transversal=doc.get("transversal", ("X", "Y", "Z")),
    )
