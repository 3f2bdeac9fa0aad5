"""Fast per-trial evaluation of polynomial expressions in rotated ensembles.

An expression string is compiled once into a small tree whose leaves are
single-family polynomials ("blocks"). Each block's base matrix is built once
per dimension; a trial only conjugates it by that family's unitary.

Spiked, two-spectrum and projection ensembles are diagonal in a known real
frame (identity or one Givens rotation), so block bases are stored as
diagonals and a conjugated block is ``Y diag(d) Y*`` with ``Y = F^T U R``.
Here ``R`` is the family's frame and ``F`` is the working frame, chosen as the
frame of an unrotated diagonal family so that its blocks stay diagonal.
Traces and vector states are invariant under the orthogonal change of frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..matrices import build_matrix
from ..parsing import ParseError, build, parse_ast
from ..scalars import to_complex
from ..words import Generator, Polynomial


# ------------------------------------------------------------------ frames


@dataclass(frozen=True)
class Frame:
    """Real Givens rotation in the plane (i, j); the identity when ``angle == 0``."""

    i: int = 0
    j: int = 1
    angle: float = 0.0

    @property
    def trivial(self) -> bool:
        return self.angle == 0.0

    def right(self, M: np.ndarray) -> np.ndarray:
        """``M @ G``."""
        if self.trivial:
            return M
        c, s = np.cos(self.angle), np.sin(self.angle)
        out = M.copy()
        out[:, self.i] = c * M[:, self.i] + s * M[:, self.j]
        out[:, self.j] = -s * M[:, self.i] + c * M[:, self.j]
        return out

    def left_t(self, M: np.ndarray) -> np.ndarray:
        """``G.T @ M`` for a matrix or a vector."""
        if self.trivial:
            return M
        c, s = np.cos(self.angle), np.sin(self.angle)
        out = M.copy()
        out[self.i] = c * M[self.i] + s * M[self.j]
        out[self.j] = -s * M[self.i] + c * M[self.j]
        return out


IDENTITY_FRAME = Frame()


def spectral_form(spec: Mapping, N: int) -> tuple[Frame, np.ndarray] | None:
    """(frame, diagonal) with ``build_matrix(spec, N) = G diag(d) G^T``, or None."""
    kind = spec.get("kind")
    if kind == "spiked_diagonal":
        flat = dict(spec, angle=0.0)
        d = np.diag(build_matrix(flat, N)).copy()
        angle = float(spec.get("angle", 0.0))
        pos = int(spec.get("position", 0))
        return (Frame(pos, pos + 1, angle) if angle else IDENTITY_FRAME), d
    if kind in ("two_spectrum", "projection"):
        return IDENTITY_FRAME, np.diag(build_matrix(spec, N)).copy()
    return None


# ---------------------------------------------------------------- compiling


@dataclass(frozen=True)
class Const:
    value: complex


@dataclass(frozen=True)
class BlockNode:
    family: int
    poly: Polynomial


@dataclass(frozen=True)
class Sum:
    terms: tuple  # of (coefficient, node)


@dataclass(frozen=True)
class Product:
    factors: tuple


Node = Const | BlockNode | Sum | Product


@dataclass(frozen=True)
class Program:
    """A compiled expression: ``poly`` is its full expansion, ``root`` the evaluation tree."""

    text: str
    poly: Polynomial
    root: Node

    def blocks(self) -> list[BlockNode]:
        out: list[BlockNode] = []

        def walk(n):
            if isinstance(n, BlockNode):
                out.append(n)
            elif isinstance(n, Sum):
                for _, t in n.terms:
                    walk(t)
            elif isinstance(n, Product):
                for f in n.factors:
                    walk(f)

        walk(self.root)
        return out

    def alternating_factors(self) -> list[BlockNode] | None:
        """The blocks of a top-level product that alternates between two families."""
        root = self.root
        if not isinstance(root, Product) or not all(isinstance(f, BlockNode) for f in root.factors):
            return None
        fams = [f.family for f in root.factors]
        if len(fams) < 2 or len(fams) % 2 or len(set(fams[0::2])) != 1 or len(set(fams[1::2])) != 1:
            return None
        if fams[0] == fams[1]:
            return None
        return list(root.factors)


def _to_node(p: Polynomial) -> Node:
    fams = p.family_set()
    if not fams:
        return Const(to_complex(p.scalar_part()))
    (fam,) = fams
    return BlockNode(fam, p)


def compile_expression(text: str, center: Callable[[Polynomial], Polynomial] | None = None) -> Program:
    """Compile ``text`` (the polynomial grammar) with braces resolved by ``center``."""
    ast = parse_ast(text)

    # conv returns a Polynomial when the subtree touches at most one family
    def conv(node):
        kind = node[0]
        if kind == "num":
            return Polynomial.constant(node[1])
        if kind == "gen":
            return Polynomial.generator(node[1])
        if kind == "center":
            inner = conv(node[1])
            if not isinstance(inner, Polynomial) or len(inner.family_set()) > 1:
                raise ParseError("centered factor mixes families", text, node[2])
            if center is None:
                raise ParseError("centering braces need a weight functional", text, node[2])
            return center(inner)
        if kind == "pow":
            base = conv(node[1])
            if isinstance(base, Polynomial):
                return base ** node[2]
            return Product(tuple([base] * node[2])) if node[2] else Polynomial.constant(1)
        if kind == "mul":
            parts: list = []
            for sub in node[1]:
                c = conv(sub)
                if (isinstance(c, Polynomial) and parts and isinstance(parts[-1], Polynomial)
                        and len(c.family_set() | parts[-1].family_set()) <= 1):
                    parts[-1] = parts[-1] * c
                else:
                    parts.append(c)
            if len(parts) == 1:
                return parts[0]
            return Product(tuple(_to_node(x) if isinstance(x, Polynomial) else x for x in parts))
        if kind == "add":
            subs = [(sign, conv(sub)) for sign, sub in node[1]]
            if all(isinstance(s, Polynomial) for _, s in subs):
                fams = frozenset().union(*(s.family_set() for _, s in subs))
                if len(fams) <= 1:
                    out = Polynomial()
                    for sign, s in subs:
                        out = out + s if sign > 0 else out - s
                    return out
            return Sum(tuple((float(sign), _to_node(s) if isinstance(s, Polynomial) else s) for sign, s in subs))
        raise AssertionError(kind)

    root = conv(ast)
    if isinstance(root, Polynomial):
        root = _to_node(root)
    return Program(text, build(ast, center, text), root)


# ------------------------------------------------------------ matrix values


class Value:
    """Scalar multiple of the identity, diagonal, dense, or framed ``Y inner Y*``."""

    __slots__ = ("kind", "data", "Y", "unitary", "_dense")

    def __init__(self, kind: str, data, Y=None, unitary: bool = True):
        self.kind = kind
        self.data = data
        self.Y = Y
        self.unitary = unitary
        self._dense = None

    def dense(self) -> np.ndarray:
        if self.kind == "dense":
            return self.data
        if self._dense is None:
            Y, inner = self.Y, self.data
            if inner.ndim == 1:
                self._dense = (Y * inner) @ Y.conj().T
            else:
                self._dense = Y @ inner @ Y.conj().T
        return self._dense

    def simple(self) -> "Value":
        """Same operator as scalar, diagonal or dense."""
        return Value("dense", self.dense()) if self.kind == "framed" else self


def _trace(a: Value, N: int) -> complex:
    if a.kind == "scalar":
        return a.data * N
    if a.kind == "diag":
        return a.data.sum()
    if a.kind == "framed" and a.unitary:
        return a.data.sum() if a.data.ndim == 1 else np.trace(a.data)
    return np.trace(a.dense())


def _mul(a: Value, b: Value) -> Value:
    a, b = a.simple(), b.simple()
    if a.kind == "scalar":
        return Value(b.kind, a.data * b.data)
    if b.kind == "scalar":
        return Value(a.kind, a.data * b.data)
    if a.kind == "diag":
        return Value("diag", a.data * b.data) if b.kind == "diag" else Value("dense", a.data[:, None] * b.data)
    if b.kind == "diag":
        return Value("dense", a.data * b.data[None, :])
    return Value("dense", a.data @ b.data)


_RANK = {"scalar": 0, "diag": 1, "dense": 2}


def _promote(a: Value, kind: str, N: int):
    if a.kind == kind:
        return a.data
    if kind == "diag":
        return np.full(N, a.data, dtype=complex)
    return np.diag(a.data) if a.kind == "diag" else a.data * np.eye(N, dtype=complex)


def _add(a: Value, b: Value, cb: complex, N: int) -> Value:
    """``a + cb * b``."""
    a, b = a.simple(), b.simple()
    kind = max(a.kind, b.kind, key=_RANK.__getitem__)
    return Value(kind, _promote(a, kind, N) + cb * _promote(b, kind, N))


def _trace_prod(a: Value, b: Value, N: int) -> complex:
    a, b = a.simple(), b.simple()
    if a.kind == "scalar":
        return a.data * _trace(b, N)
    if b.kind == "scalar":
        return b.data * _trace(a, N)
    if a.kind == "diag":
        return a.data @ (b.data if b.kind == "diag" else np.diagonal(b.data))
    if b.kind == "diag":
        return np.diagonal(a.data) @ b.data
    return np.sum(a.data * b.data.T)


def _matvec(a: Value, x: np.ndarray) -> np.ndarray:
    if a.kind == "scalar" or a.kind == "diag":
        return a.data * x
    if a.kind == "dense":
        return a.data @ x
    Y = a.Y
    y = Y.conj().T @ x
    y = a.data * y if a.data.ndim == 1 else a.data @ y
    return Y @ y


# --------------------------------------------------------------- evaluator


@dataclass
class FamilyBasis:
    """Per-dimension data for one family: frame and diagonals, or dense members."""

    family: int
    N: int
    frame: Frame | None
    diagonals: dict[int, np.ndarray] | None
    dense: dict[int, np.ndarray]
    _bases: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_specs(cls, family: int, specs, N: int) -> "FamilyBasis":
        specs = specs if isinstance(specs, list) else [specs]
        forms = [spectral_form(s, N) for s in specs]
        dense = {i: build_matrix(s, N) for i, s in enumerate(specs)}
        if all(f is not None for f in forms) and len({f[0] for f in forms}) == 1:
            return cls(family, N, forms[0][0], {i: f[1] for i, f in enumerate(forms)}, dense)
        return cls(family, N, None, None, dense)

    def base(self, p: Polynomial) -> np.ndarray:
        """Diagonal (1-d) or dense (2-d) base representation of ``p`` in the family's frame."""
        hit = self._bases.get(p)
        if hit is not None:
            return hit
        N = self.N
        if self.diagonals is not None:
            out = np.zeros(N, dtype=complex)
            for w, c in p.items():
                term = np.full(N, to_complex(c))
                for g in w:
                    term = term * self._member(self.diagonals, g)
                out += term
        else:
            out = np.zeros((N, N), dtype=complex)
            for w, c in p.items():
                term = np.eye(N, dtype=complex) * to_complex(c)
                for g in w:
                    term = term @ self._member(self.dense, g)
                out += term
        self._bases[p] = out
        return out

    def _member(self, table, g: Generator):
        try:
            return table[g.index]
        except KeyError:
            raise KeyError(f"no matrix registered for generator {g}") from None


class Evaluator:
    """Evaluates compiled programs for one dimension.

    ``rotated`` lists families conjugated by a per-trial unitary. The working
    frame is the frame of the first unrotated family with a diagonal form.
    """

    def __init__(self, ensemble_specs: Mapping[int, object], N: int, rotated: Sequence[int]):
        self.N = N
        self.bases = {f: FamilyBasis.from_specs(f, s, N) for f, s in ensemble_specs.items()}
        self.rotated = tuple(rotated)
        self.working: Frame = IDENTITY_FRAME
        self.anchor = None
        for f, b in self.bases.items():
            if f not in self.rotated and b.frame is not None:
                self.working, self.anchor = b.frame, f
                break
        # constant change of frame for the other unrotated families
        self._static: dict[int, np.ndarray | None] = {}
        for f, b in self.bases.items():
            if f in self.rotated or f == self.anchor:
                continue
            frame = b.frame if b.frame is not None else IDENTITY_FRAME
            if frame.trivial and self.working.trivial:
                self._static[f] = None
            else:
                self._static[f] = self.working.left_t(frame.right(np.eye(N, dtype=complex)))

    def to_working(self, v: np.ndarray) -> np.ndarray:
        return self.working.left_t(np.asarray(v, dtype=complex))

    def trial(self, unitaries: Mapping[int, np.ndarray], unitary: bool = True) -> "TrialState":
        """State for one draw; ``unitary=False`` marks rotations that are not unitary."""
        Ys: dict[int, np.ndarray | None] = {}
        for f, b in self.bases.items():
            if f in self.rotated:
                U = unitaries[f]
                if b.frame is not None:
                    U = b.frame.right(U)
                Ys[f] = self.working.left_t(U)
            elif f == self.anchor:
                Ys[f] = None
            else:
                Ys[f] = self._static.get(f)
        return TrialState(self, Ys, unitary)


class TrialState:
    def __init__(self, ev: Evaluator, Ys: dict, unitary: bool):
        self.ev = ev
        self.Ys = Ys
        self.unitary = unitary
        self._values: dict = {}

    def block(self, node: BlockNode) -> Value:
        key = (node.family, node.poly)
        hit = self._values.get(key)
        if hit is not None:
            return hit
        basis = self.ev.bases.get(node.family)
        if basis is None:
            raise KeyError(f"no ensemble registered for family {node.family}")
        inner = basis.base(node.poly)
        Y = self.Ys[node.family]
        if Y is None:
            val = Value("diag", inner) if inner.ndim == 1 else Value("dense", inner)
        else:
            val = Value("framed", inner, Y, self.unitary or node.family not in self.ev.rotated)
        self._values[key] = val
        return val

    def value(self, node: Node) -> Value:
        N = self.ev.N
        if isinstance(node, Const):
            return Value("scalar", node.value)
        if isinstance(node, BlockNode):
            return self.block(node)
        if isinstance(node, Sum):
            out = Value("scalar", 0j)
            for c, t in node.terms:
                out = _add(out, self.value(t), c, N)
            return out
        out = self.value(node.factors[0])
        for f in node.factors[1:]:
            out = _mul(out, self.value(f))
        return out

    def trace(self, node: Node) -> complex:
        """Unnormalized trace."""
        N = self.ev.N
        if isinstance(node, Const):
            return node.value * N
        if isinstance(node, BlockNode):
            return _trace(self.block(node), N)
        if isinstance(node, Sum):
            return sum(c * self.trace(t) for c, t in node.terms)
        fs = node.factors
        head = self.value(fs[0])
        for f in fs[1:-1]:
            head = _mul(head, self.value(f))
        return _trace_prod(head, self.value(fs[-1]), N)

    def apply(self, node: Node, x: np.ndarray) -> np.ndarray:
        if isinstance(node, Const):
            return node.value * x
        if isinstance(node, BlockNode):
            return _matvec(self.block(node), x)
        if isinstance(node, Sum):
            out = np.zeros_like(x)
            for c, t in node.terms:
                out = out + c * self.apply(t, x)
            return out
        for f in reversed(node.factors):
            x = self.apply(f, x)
        return x

    def state(self, program: Program, mode: str, v: np.ndarray | None = None) -> complex:
        """``mode`` is "trace" (normalized), "Trace" or "vector"; ``v`` is in the working frame."""
        if mode == "vector":
            return complex(np.vdot(v, self.apply(program.root, v)))
        t = complex(self.trace(program.root))
        return t / self.ev.N if mode == "trace" else t
