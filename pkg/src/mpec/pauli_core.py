"""Pauli-frame representation and propagation through Clifford locations.

Only the X/Z support of errors is tracked; phases and signs are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

SINGLE_PAULIS = ("X", "Y", "Z")
# 15 non-identity two-qubit Paulis, first letter on the first qubit (control).
TWO_QUBIT_PAULIS = tuple(
    a + b for a, b in product("IXYZ", repeat=2) if a + b != "II"
)

# (x, z) bits of a single-qubit Pauli letter.
_XZ = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


class QubitIndexError(IndexError):
    pass


def pauli_bits(letter: str) -> tuple[int, int]:
    try:
        return _XZ[letter]
    except KeyError:
        raise ValueError(f"unknown Pauli letter {letter!r}") from None


def pauli_code(op: str) -> int:
    """Pack a one- or two-letter Pauli string into the engine's integer code.

    Bits are ``x0 | z0 << 1 | x1 << 2 | z1 << 3``.
    """
    code = 0
    for pos, letter in enumerate(op):
        x, z = pauli_bits(letter)
        code |= (x | z << 1) << (2 * pos)
    if code == 0:
        raise ValueError("identity is not an error")
    return code


def pauli_from_code(code: int, arity: int) -> str:
    letters = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
    return "".join(
        letters[((code >> 2 * k) & 1, (code >> (2 * k + 1)) & 1)] for k in range(arity)
    )


@dataclass
class PauliFrame:
    """Per-qubit X and Z error bits of one trial."""

    x: np.ndarray
    z: np.ndarray
    measured: dict = field(default_factory=dict)

    @classmethod
    def clean(cls, n_qubits: int) -> "PauliFrame":
        return cls(np.zeros(n_qubits, dtype=np.uint8), np.zeros(n_qubits, dtype=np.uint8))

    @property
    def n_qubits(self) -> int:
        return len(self.x)

    def copy(self) -> "PauliFrame":
        return PauliFrame(self.x.copy(), self.z.copy(), dict(self.measured))

    def is_clean(self) -> bool:
        return not (self.x.any() or self.z.any())

    def _check(self, qubit: int) -> None:
        if not 0 <= qubit < len(self.x):
            raise QubitIndexError(f"qubit {qubit} outside frame of {len(self.x)} qubits")


def apply_pauli(frame: PauliFrame, qubit: int, op: str) -> PauliFrame:
    """XOR a single-qubit Pauli into ``frame`` in place and return it."""
    frame._check(qubit)
    x, z = pauli_bits(op)
    frame.x[qubit] ^= x
    frame.z[qubit] ^= z
    return frame


def apply_fault(frame: PauliFrame, qubits: tuple, op: str) -> PauliFrame:
    """Apply a (possibly two-qubit) Pauli string to ``qubits`` in order."""
    if len(op) != len(qubits):
        raise ValueError(f"{op!r} does not act on {len(qubits)} qubit(s)")
    for q, letter in zip(qubits, op):
        if letter != "I":
            apply_pauli(frame, q, letter)
    return frame


def propagate_location(frame: PauliFrame, loc) -> Optional[int]:
    """Push the frame through one noiseless location.

    Returns the outcome-flip bit for measurements, else ``None``.  A measured
    qubit is retired: its result is also stored in ``frame.measured``.
    """
    kind = loc.kind
    qubits = loc.qubits
    for q in qubits:
        frame._check(q)
    if kind == "CNOT":
        c, t = qubits
        frame.x[t] ^= frame.x[c]
        frame.z[c] ^= frame.z[t]
        return None
    if kind in ("PrepZ", "PrepX"):
        q = qubits[0]
        frame.x[q] = 0
        frame.z[q] = 0
        return None
    if kind == "MeasZ":
        bit = int(frame.x[qubits[0]])
    elif kind == "MeasX":
        bit = int(frame.z[qubits[0]])
    elif kind == "Memory":
        return None
    else:
        raise ValueError(f"unknown location kind {kind!r}")
    frame.measured[qubits[0]] = bit
    return bit
