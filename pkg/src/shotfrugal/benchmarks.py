"""Benchmark problems: the one-qubit cosine landscape and QAOA MaxCut."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import (
    CNOT, Circuit, DiagonalTerm, H, Observable, PauliRotation,
    hessian_norm_bound, z_parity_diagonal,
)


@dataclass(frozen=True)
class Graph:
    num_vertices: int
    edges: tuple

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.num_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge ({u}, {v}) outside vertex range")

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls(n, [(i, (i + 1) % n) for i in range(n)])

    @classmethod
    def from_edge_list(cls, text: str, num_vertices: int | None = None) -> "Graph":
        """Parse ``u v`` pairs, one per line, 0-indexed. Blank lines and ``#`` comments are skipped."""
        edges = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
        if num_vertices is None:
            num_vertices = 1 + max((max(e) for e in edges), default=-1)
        return cls(num_vertices, edges)

    @classmethod
    def read(cls, path) -> "Graph":
        return cls.from_edge_list(Path(path).read_text())


SQUARE = Graph.cycle(4)


@dataclass(frozen=True, eq=False)
class BenchmarkProblem:
    name: str
    circuit: Circuit
    observable: Observable
    known_optimum: float | None = None
    optimum_note: str = ""
    graph: Graph | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.circuit.num_qubits != self.observable.num_qubits:
            raise ValueError("circuit and observable qubit counts differ")

    @property
    def num_params(self) -> int:
        return self.circuit.num_params

    @property
    def hessian_bound(self) -> float:
        """Hessian norm bound accounting for parameters shared between gates."""
        return hessian_norm_bound(self.observable, self.num_params, self.circuit.multiplicities())

    def cut_value(self, f: float) -> float:
        if self.graph is None:
            raise ValueError(f"{self.name} is not a MaxCut problem")
        return (len(self.graph.edges) - f) / 2


def make_cosine_problem() -> BenchmarkProblem:
    """``R_x(theta)`` on one qubit measured in Z, so ``f(theta) = cos(theta)``."""
    circuit = Circuit(1, [PauliRotation("X", 0)], num_params=1)
    obs = Observable((DiagonalTerm(Circuit(1), [1.0, -1.0]),))
    return BenchmarkProblem("cosine", circuit, obs, known_optimum=-1.0,
                            optimum_note="f = cos(theta), minimum -1 at theta = pi")


def maxcut_observable(graph: Graph, merge_terms: bool = False) -> Observable:
    n = graph.num_vertices
    terms = tuple(DiagonalTerm(Circuit(n), z_parity_diagonal(n, e)) for e in graph.edges)
    obs = Observable(terms)
    return obs.merged() if merge_terms else obs


def qaoa_circuit(graph: Graph, layers: int = 1) -> Circuit:
    """H on every qubit, then ``layers`` rounds of ZZ cost and X mixer rotations.

    Parameter ``2*l`` is the cost angle of layer ``l`` and ``2*l + 1`` its mixer angle.
    """
    if layers < 1:
        raise ValueError("QAOA needs at least one layer")
    n = graph.num_vertices
    gates = [H(q) for q in range(n)]
    for layer in range(layers):
        for u, v in graph.edges:
            gates.append(PauliRotation("".join("Z" if q in (u, v) else "I" for q in range(n)), 2 * layer))
        for q in range(n):
            gates.append(PauliRotation("".join("X" if i == q else "I" for i in range(n)), 2 * layer + 1))
    return Circuit(n, gates, num_params=2 * layers)


def make_maxcut_problem(graph: Graph = SQUARE, layers: int = 1, merge_terms: bool = False) -> BenchmarkProblem:
    obs = maxcut_observable(graph, merge_terms)
    best, _ = brute_force_maxcut(graph)
    return BenchmarkProblem(
        f"maxcut_{graph.num_vertices}v{len(graph.edges)}e_p{layers}",
        qaoa_circuit(graph, layers), obs,
        known_optimum=float(len(graph.edges) - 2 * best),
        optimum_note="ground-state energy of sum Z_u Z_v; a depth-limited ansatz may not reach it",
        graph=graph,
    )


def brute_force_maxcut(graph: Graph) -> tuple[int, list[str]]:
    """Exhaustive maximum cut; returns the value and every optimal bitstring."""
    n = graph.num_vertices
    if n > 20:
        raise ValueError("brute force limited to 20 vertices")
    best, arg = -1, []
    for bits in itertools.product("01", repeat=n):
        cut = sum(bits[u] != bits[v] for u, v in graph.edges)
        if cut > best:
            best, arg = cut, ["".join(bits)]
        elif cut == best:
            arg.append("".join(bits))
    return best, arg
