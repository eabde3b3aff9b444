"""Dense statevector simulation of small parameterized circuits.

Qubit 0 is the most significant bit of the amplitude index. Parameterized
gates are Pauli rotations ``exp(-i * theta/2 * P)``; with this half-angle
generator the two-point shift rule at ``+-pi/2`` is exact per gate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

MAX_QUBITS = 12

_SQRT1_2 = 1.0 / np.sqrt(2.0)


class CircuitError(ValueError):
    """Raised for malformed circuits or parameter vectors."""


@dataclass(frozen=True)
class PauliRotation:
    """``exp(-i * angle/2 * P)`` for a Pauli string ``P``.

    ``param_index`` selects the circuit parameter driving the angle; when it
    is ``None`` the gate is fixed at ``angle``.
    """

    pauli: str
    param_index: int | None = None
    angle: float = 0.0

    def __post_init__(self):
        if not self.pauli or set(self.pauli) - set("IXYZ"):
            raise CircuitError(f"bad Pauli string {self.pauli!r}")


@dataclass(frozen=True)
class H:
    qubit: int


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise CircuitError("CNOT control and target must differ")


Gate = PauliRotation | H | CNOT


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple = ()
    num_params: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise CircuitError(f"num_qubits must be in [1, {MAX_QUBITS}], got {self.num_qubits}")
        if self.num_params < 0:
            raise CircuitError("num_params must be nonnegative")
        n = self.num_qubits
        for g in self.gates:
            if isinstance(g, PauliRotation):
                if len(g.pauli) != n:
                    raise CircuitError(f"Pauli string {g.pauli!r} does not span {n} qubits")
                if g.param_index is not None and not 0 <= g.param_index < self.num_params:
                    raise CircuitError(f"param_index {g.param_index} outside [0, {self.num_params})")
            elif isinstance(g, H):
                if not 0 <= g.qubit < n:
                    raise CircuitError(f"qubit {g.qubit} out of range")
            elif isinstance(g, CNOT):
                if not (0 <= g.control < n and 0 <= g.target < n):
                    raise CircuitError(f"CNOT qubits {g.control},{g.target} out of range")
            else:
                raise CircuitError(f"unsupported gate {g!r}")

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def gates_for_param(self, k: int) -> list[int]:
        """Indices of the gates whose angle depends on parameter ``k``."""
        return [i for i, g in enumerate(self.gates)
                if isinstance(g, PauliRotation) and g.param_index == k]

    def multiplicities(self) -> np.ndarray:
        return np.array([len(self.gates_for_param(k)) for k in range(self.num_params)], dtype=int)


@dataclass(frozen=True, eq=False)
class DiagonalTerm:
    """One ``V^dagger D V`` piece of an observable decomposition."""

    basis_change: Circuit
    diagonal: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diagonal, dtype=float)
        object.__setattr__(self, "diagonal", diag)
        if self.basis_change.num_params != 0:
            raise CircuitError("basis change must not carry parameters")
        if diag.shape != (self.basis_change.dim,):
            raise CircuitError(f"diagonal has shape {diag.shape}, expected ({self.basis_change.dim},)")
        if not np.all(np.isfinite(diag)) or self.norm <= 0:
            raise CircuitError("diagonal must be finite with a nonzero entry")

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.diagonal)))

    @property
    def is_computational(self) -> bool:
        return len(self.basis_change.gates) == 0


@dataclass(frozen=True, eq=False)
class Observable:
    terms: tuple
    norm_bound: float | None = None

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise CircuitError("observable needs at least one term")
        dims = {t.basis_change.num_qubits for t in terms}
        if len(dims) != 1:
            raise CircuitError("all terms must act on the same number of qubits")
        if self.norm_bound is None:
            if all(t.is_computational for t in terms):
                total = np.sum([t.diagonal for t in terms], axis=0)
                bound = float(np.max(np.abs(total)))
            else:
                bound = float(sum(t.norm for t in terms))
            object.__setattr__(self, "norm_bound", bound)

    @property
    def num_qubits(self) -> int:
        return self.terms[0].basis_change.num_qubits

    @property
    def term_norms(self) -> np.ndarray:
        return np.array([t.norm for t in self.terms])

    def merged(self) -> "Observable":
        """Collapse computational-basis terms into a single term."""
        if not all(t.is_computational for t in self.terms):
            raise CircuitError("only computational-basis terms can be merged")
        total = np.sum([t.diagonal for t in self.terms], axis=0)
        return Observable((DiagonalTerm(self.terms[0].basis_change, total),))


def z_parity_diagonal(num_qubits: int, qubits: Sequence[int], coeff: float = 1.0) -> np.ndarray:
    """Diagonal of ``coeff * prod_q Z_q`` in the computational basis."""
    idx = np.arange(1 << num_qubits)
    sign = np.ones(idx.shape)
    for q in qubits:
        bit = (idx >> (num_qubits - 1 - q)) & 1
        sign = sign * (1 - 2 * bit)
    return coeff * sign


def pauli_term(pauli: str, coeff: float = 1.0) -> DiagonalTerm:
    """Measurement term for ``coeff * P``: rotate X/Y into Z, then read parity."""
    n = len(pauli)
    gates = []
    for q, p in enumerate(pauli):
        if p == "X":
            gates.append(H(q))
        elif p == "Y":
            gates.append(PauliRotation("".join("X" if i == q else "I" for i in range(n)), None, np.pi / 2))
    support = [q for q, p in enumerate(pauli) if p != "I"]
    return DiagonalTerm(Circuit(n, gates), z_parity_diagonal(n, support, coeff))


# -- gate application ------------------------------------------------------

class _PauliAction:
    """Precomputed index map for applying a Pauli string to a statevector."""

    def __init__(self, pauli: str):
        n = len(pauli)
        flip = 0
        zy = 0
        ny = 0
        for q, p in enumerate(pauli):
            bit = 1 << (n - 1 - q)
            if p in "XY":
                flip |= bit
            if p in "ZY":
                zy |= bit
            ny += p == "Y"
        idx = np.arange(1 << n)
        src = idx ^ flip
        parity = np.array([bin(int(v)).count("1") & 1 for v in (src & zy)])
        self.src = src
        self.phase = (1j ** ny) * (1 - 2 * parity)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.phase * psi[self.src]


_PAULI_CACHE: dict[str, _PauliAction] = {}


def _pauli_action(pauli: str) -> _PauliAction:
    act = _PAULI_CACHE.get(pauli)
    if act is None:
        act = _PAULI_CACHE[pauli] = _PauliAction(pauli)
    return act


def _apply_gate(psi: np.ndarray, gate, n: int, angle: float = 0.0) -> np.ndarray:
    if isinstance(gate, PauliRotation):
        return np.cos(angle / 2) * psi - 1j * np.sin(angle / 2) * _pauli_action(gate.pauli).apply(psi)
    if isinstance(gate, H):
        t = psi.reshape(1 << gate.qubit, 2, -1)
        a, b = t[:, 0, :], t[:, 1, :]
        return np.stack([a + b, a - b], axis=1).reshape(-1) * _SQRT1_2
    # CNOT
    t = psi.reshape([2] * n).copy()
    sel = [slice(None)] * n
    sel[gate.control] = 1
    sub = t[tuple(sel)]
    axis = gate.target - (gate.target > gate.control)
    t[tuple(sel)] = np.flip(sub, axis=axis)
    return t.reshape(-1)


def _check_theta(circuit: Circuit, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != circuit.num_params:
        raise CircuitError(f"theta has length {theta.shape[0]}, circuit expects {circuit.num_params}")
    return theta


def _run(circuit: Circuit, theta: np.ndarray, psi: np.ndarray,
         shifted_gate: int | None = None, shift: float = 0.0) -> np.ndarray:
    n = circuit.num_qubits
    for i, g in enumerate(circuit.gates):
        angle = 0.0
        if isinstance(g, PauliRotation):
            angle = g.angle if g.param_index is None else theta[g.param_index]
            if i == shifted_gate:
                angle = angle + shift
        psi = _apply_gate(psi, g, n, angle)
    return psi


def apply_circuit(circuit: Circuit, theta, *, shifted_gate: int | None = None,
                  shift: float = 0.0) -> np.ndarray:
    """Return ``U(theta)|0...0>``.

    ``shifted_gate``/``shift`` offset the angle of one gate only, which is what
    the gate-level shift rule needs when a parameter feeds several gates.
    """
    theta = _check_theta(circuit, theta)
    psi = np.zeros(circuit.dim, dtype=complex)
    psi[0] = 1.0
    return _run(circuit, theta, psi, shifted_gate, shift)


def term_probabilities(psi: np.ndarray, term: DiagonalTerm) -> np.ndarray:
    """Outcome distribution over basis states after the term's basis change."""
    if not term.is_computational:
        psi = _run(term.basis_change, np.zeros(0), psi)
    p = np.abs(psi) ** 2
    total = p.sum()
    if abs(total - 1.0) > 1e-10:
        raise CircuitError(f"state norm drifted to {total}")
    return p / total


def expectation_from_state(psi: np.ndarray, obs: Observable) -> float:
    return float(sum(term_probabilities(psi, t) @ t.diagonal for t in obs.terms))


def exact_expectation(circuit: Circuit, theta, obs: Observable) -> float:
    """<0|U(theta)^dagger O U(theta)|0> computed from amplitudes."""
    if obs.num_qubits != circuit.num_qubits:
        raise CircuitError("observable and circuit disagree on qubit count")
    return expectation_from_state(apply_circuit(circuit, theta), obs)


def shift_gradient(circuit: Circuit, theta, obs: Observable, k: int) -> float:
    """Exact d f / d theta_k from +-pi/2 shifts of every gate driven by ``k``."""
    theta = _check_theta(circuit, theta)
    if not 0 <= k < circuit.num_params:
        raise CircuitError(f"parameter index {k} out of range")
    total = 0.0
    for gi in circuit.gates_for_param(k):
        plus = expectation_from_state(apply_circuit(circuit, theta, shifted_gate=gi, shift=np.pi / 2), obs)
        minus = expectation_from_state(apply_circuit(circuit, theta, shifted_gate=gi, shift=-np.pi / 2), obs)
        total += (plus - minus) / 2
    return total


def exact_gradient(circuit: Circuit, theta, obs: Observable) -> np.ndarray:
    return np.array([shift_gradient(circuit, theta, obs, k) for k in range(circuit.num_params)])


def sample_from_probabilities(probs: np.ndarray, diagonal: np.ndarray, r: int,
                              rng: np.random.Generator) -> np.ndarray:
    if r < 0:
        raise ValueError("shot count must be nonnegative")
    if r == 0:
        return np.empty(0)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(r), side="right")
    return diagonal[np.minimum(idx, len(diagonal) - 1)]


def sample_term(circuit: Circuit, theta, term: DiagonalTerm, r: int,
                rng: np.random.Generator, *, shifted_gate: int | None = None,
                shift: float = 0.0) -> np.ndarray:
    """Draw ``r`` measurement outcomes of ``term`` on ``U(theta)|0>``.

    Each outcome is a diagonal entry of ``D_j`` picked by inverse-CDF over the
    basis-state probabilities. ``r == 0`` yields an empty array.
    """
    psi = apply_circuit(circuit, theta, shifted_gate=shifted_gate, shift=shift)
    return sample_from_probabilities(term_probabilities(psi, term), term.diagonal, r, rng)


def hessian_norm_bound(obs: Observable, m: int, multiplicities=None) -> float:
    """Upper bound on the spectral norm of the Hessian of f.

    With one gate per parameter this is ``m * ||O||``. When parameter ``k``
    drives ``G_k`` gates each mixed second difference picks up ``G_i*G_j``
    bounded terms, and the Frobenius norm gives ``sum_k G_k**2 * ||O||``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if multiplicities is None:
        return m * obs.norm_bound
    g = np.asarray(multiplicities, dtype=float)
    if g.shape != (m,):
        raise ValueError("need one multiplicity per parameter")
    return float(np.sum(g ** 2) * obs.norm_bound)
