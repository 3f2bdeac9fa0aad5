"""Haar and stabilizer-conditioned Haar unitaries, deterministic ensembles, word states."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .functionals import MomentFunctional
from .words import Generator, Polynomial, Word, as_polynomial

UNITARY_TOL = 1e-12
PERP_TOL = 1e-8


def sample_haar(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR of a complex Ginibre matrix, fixing the phases of R's diagonal."""
    if N < 1:
        raise ValueError("dimension must be positive")
    z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    ph = d / np.abs(d)
    return q * ph[None, :]


def _standard_indices(V: np.ndarray) -> list[int] | None:
    """Column positions if every fixed vector is exactly a standard basis vector."""
    idx = []
    for j in range(V.shape[1]):
        nz = np.flatnonzero(V[:, j])
        if len(nz) != 1 or V[nz[0], j] != 1:
            return None
        idx.append(int(nz[0]))
    return idx


def orthonormal_complement(V: np.ndarray) -> np.ndarray:
    """Isometry Q (N x (N-k)) onto the orthogonal complement of the columns of V."""
    N, k = V.shape
    std = _standard_indices(V)
    if std is not None:
        keep = [i for i in range(N) if i not in set(std)]
        return np.eye(N, dtype=complex)[:, keep]
    q, _ = np.linalg.qr(np.hstack([V, np.eye(N, dtype=complex)]))
    Q = q[:, k:N]
    # one round of re-orthogonalization against V, then re-normalize
    Q = Q - V @ (V.conj().T @ Q)
    Q, _ = np.linalg.qr(Q)
    return Q


def check_orthonormal(V: np.ndarray, tol: float = UNITARY_TOL) -> None:
    gram = V.conj().T @ V
    err = np.max(np.abs(gram - np.eye(V.shape[1]))) if V.shape[1] else 0.0
    if err > tol:
        raise ValueError(f"fixed vectors are not orthonormal (Gram error {err:.2e})")


@dataclass
class StabilizerHaarSampler:
    """Uniform unitaries fixing each column of ``fixed_vectors``.

    A sample is ``sum_i v_i v_i^* + Q W Q^*`` with ``W`` Haar on U(N - k).
    """

    N: int
    fixed_vectors: np.ndarray
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    def __post_init__(self):
        V = np.asarray(self.fixed_vectors, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        if V.shape[0] != self.N:
            raise ValueError("fixed vectors must have length N")
        if V.shape[1] >= self.N:
            raise ValueError("need fewer fixed vectors than the dimension")
        check_orthonormal(V)
        self.fixed_vectors = V
        self.k = V.shape[1]
        self.projector = V @ V.conj().T
        self.complement = orthonormal_complement(V)
        self._std = _standard_indices(V)

    def sample_inner(self) -> np.ndarray:
        """The Haar factor W on the complement."""
        return sample_haar(self.N - self.k, self.rng)

    def embed(self, W: np.ndarray) -> np.ndarray:
        if self._std is not None:
            keep = [i for i in range(self.N) if i not in set(self._std)]
            U = np.zeros((self.N, self.N), dtype=complex)
            U[np.ix_(keep, keep)] = W
            U[self._std, self._std] = 1.0
            return U
        Q = self.complement
        return self.projector + Q @ W @ Q.conj().T

    def sample(self) -> np.ndarray:
        return self.embed(self.sample_inner())


def sample_stabilizer_haar(sampler: StabilizerHaarSampler) -> np.ndarray:
    return sampler.sample()


def unitarity_residual(U: np.ndarray) -> float:
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), "fro"))


def compress_perp(U: np.ndarray, v: np.ndarray, tol: float = PERP_TOL) -> np.ndarray:
    """``U - v v^*`` for a unitary fixing the unit vector ``v``."""
    v = np.asarray(v, dtype=complex).ravel()
    err = np.linalg.norm(U @ v - v)
    if err > tol:
        raise ValueError(f"U does not fix v (residual {err:.2e})")
    return U - np.outer(v, v.conj())


# ------------------------------------------------------------- ensembles


@dataclass
class MatrixEnsemble:
    """Labelled N x N matrices of one family; ``norm_bound`` dominates every spectral norm."""

    family: int
    members: dict[int, np.ndarray]
    norm_bound: float | None = None

    def __post_init__(self):
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        dims = {m.shape for m in self.members.values()}
        if len(dims) != 1:
            raise ValueError("ensemble members must share a dimension")
        (shape,) = dims
        if len(shape) != 2 or shape[0] != shape[1] or shape[0] < 1:
            raise ValueError("ensemble members must be square")
        self.members = {i: np.asarray(m, dtype=complex) for i, m in self.members.items()}
        actual = max(np.linalg.norm(m, 2) for m in self.members.values())
        if self.norm_bound is None:
            self.norm_bound = float(actual)
        elif actual > self.norm_bound * (1 + 1e-9) + 1e-12:
            raise ValueError(f"recorded norm bound {self.norm_bound} is below the actual norm {actual}")

    @property
    def N(self) -> int:
        return next(iter(self.members.values())).shape[0]

    def __getitem__(self, index: int) -> np.ndarray:
        return self.members[index]


def conjugate(U: np.ndarray, ens: MatrixEnsemble) -> MatrixEnsemble:
    if U.shape[0] != ens.N:
        raise ValueError("dimension mismatch between unitary and ensemble")
    Uh = U.conj().T
    return MatrixEnsemble(ens.family, {i: U @ m @ Uh for i, m in ens.members.items()}, ens.norm_bound)


def _givens(N: int, i: int, j: int, angle: float) -> np.ndarray:
    G = np.eye(N)
    c, s = np.cos(angle), np.sin(angle)
    G[i, i] = G[j, j] = c
    G[i, j], G[j, i] = -s, s
    return G


def spiked_diagonal(N: int, theta, a=0.0, position: int = 0, angle: float = 0.0) -> np.ndarray:
    """``theta`` at ``position``; bulk entries cycle through ``a`` (scalar or list).

    A nonzero ``angle`` tilts the spike by a real rotation in the plane
    (position, position + 1), which keeps every trace but changes vector states.
    """
    bulk = np.atleast_1d(np.asarray(a, dtype=complex))
    if not 0 <= position < N:
        raise ValueError("spike position out of range")
    d = np.empty(N, dtype=complex)
    others = [i for i in range(N) if i != position]
    d[others] = bulk[np.arange(len(others)) % len(bulk)]
    d[position] = theta
    M = np.diag(d)
    if angle:
        if position + 1 >= N:
            raise ValueError("tilt needs position + 1 < N")
        G = _givens(N, position, position + 1, angle)
        M = G @ M @ G.T
    return M


def two_spectrum(N: int, values: Sequence) -> np.ndarray:
    """Diagonal matrix with ``values`` laid out in contiguous equal chunks."""
    vals = np.asarray(values, dtype=complex)
    if len(vals) == 0 or N % len(vals):
        raise ValueError("N must be a multiple of the number of spectral values")
    return np.diag(np.repeat(vals, N // len(vals)))


def shift(N: int) -> np.ndarray:
    """Cyclic shift e_i -> e_{i+1}."""
    return np.roll(np.eye(N, dtype=complex), 1, axis=0)


def projection(N: int, rank: int) -> np.ndarray:
    if not 0 <= rank <= N:
        raise ValueError("rank must lie in 0..N")
    d = np.zeros(N, dtype=complex)
    d[:rank] = 1
    return np.diag(d)


ENSEMBLE_KINDS = ("spiked_diagonal", "two_spectrum", "shift", "projection")


def build_matrix(spec: Mapping, N: int) -> np.ndarray:
    kind = spec.get("kind")
    if kind == "spiked_diagonal":
        return spiked_diagonal(N, complex(spec["theta"]), spec.get("a", 0.0),
                               int(spec.get("position", 0)), float(spec.get("angle", 0.0)))
    if kind == "two_spectrum":
        return two_spectrum(N, spec["values"])
    if kind == "shift":
        return shift(N)
    if kind == "projection":
        return projection(N, int(spec["rank"]))
    raise ValueError(f"unknown ensemble kind {kind!r}; expected one of {', '.join(ENSEMBLE_KINDS)}")


def standard_ensembles(kind: str, N: int, family: int = 0, **params) -> MatrixEnsemble:
    """One-member ensemble of the given ``kind``; see :func:`build_matrix` for parameters."""
    return MatrixEnsemble(family, {0: build_matrix({"kind": kind, **params}, N)})


def ensemble_from_spec(spec, family: int, N: int) -> MatrixEnsemble:
    """``spec`` is one matrix spec (index 0) or a list of them (indices 0, 1, ...)."""
    specs = spec if isinstance(spec, list) else [spec]
    return MatrixEnsemble(family, {i: build_matrix(s, N) for i, s in enumerate(specs)})


# ---------------------------------------------------------------- states

STATE_MODES = ("trace", "Trace", "vector")


def _matrix_of(ensembles: Mapping[int, MatrixEnsemble], g: Generator) -> np.ndarray:
    try:
        return ensembles[g.family].members[g.index]
    except KeyError:
        raise KeyError(f"no matrix registered for generator {g}") from None


def word_matrix(ensembles: Mapping[int, MatrixEnsemble], w: Word, N: int) -> np.ndarray:
    out = np.eye(N, dtype=complex)
    for g in w:
        out = out @ _matrix_of(ensembles, g)
    return out


def evaluate_word_state(ensembles: Mapping[int, MatrixEnsemble], w, mode: str = "trace",
                        v: np.ndarray | None = None) -> complex:
    """Normalized trace, unnormalized trace, or vector state ``<P v, v>`` of a word or polynomial."""
    if mode not in STATE_MODES:
        raise ValueError(f"unknown state mode {mode!r}")
    Ns = {e.N for e in ensembles.values()}
    if len(Ns) != 1:
        raise ValueError("ensembles have different dimensions")
    (N,) = Ns
    if mode == "vector":
        if v is None:
            raise ValueError("vector state needs a vector")
        v = np.asarray(v, dtype=complex).ravel()
        if v.shape[0] != N:
            raise ValueError("vector has the wrong dimension")
        if abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ValueError("vector state needs a unit vector")
    p = as_polynomial(w)
    total = 0j
    for word, c in p.items():
        if mode == "vector":
            x = v
            for g in reversed(word):
                x = _matrix_of(ensembles, g) @ x
            val = np.vdot(v, x)
        else:
            val = np.trace(word_matrix(ensembles, word, N))
            if mode == "trace":
                val = val / N
        total += complex(c) * val
    return complex(total)


def _clean(z: complex, tol: float = 1e-13) -> complex | float:
    return z.real if abs(z.imag) <= tol * max(1.0, abs(z.real)) else z


def matrix_functional(ens: MatrixEnsemble, mode: str = "trace", v: np.ndarray | None = None,
                      exclude: np.ndarray | None = None) -> MomentFunctional:
    """Finite-N functional of one ensemble as a :class:`MomentFunctional`.

    ``mode="trace"`` with ``exclude`` (orthonormal columns) gives the normalized
    trace over the orthogonal complement of those columns.
    """
    N = ens.N
    ensembles = {ens.family: ens}
    if exclude is not None:
        E = np.asarray(exclude, dtype=complex)
        E = E[:, None] if E.ndim == 1 else E
        k = E.shape[1]

        def rule(w):
            M = word_matrix(ensembles, w, N)
            return _clean((np.trace(M) - np.trace(E.conj().T @ M @ E)) / (N - k))

        return MomentFunctional(ens.family, rule=rule, tracial=False, name="compressed-trace")
    if mode == "vector":
        return MomentFunctional(ens.family, rule=lambda w: _clean(evaluate_word_state(ensembles, w, "vector", v)),
                                name="vector-state")
    if mode == "trace":
        return MomentFunctional(ens.family, rule=lambda w: _clean(evaluate_word_state(ensembles, w, "trace")),
                                tracial=True, name="trace")
    raise ValueError(f"unsupported functional mode {mode!r}")


def polynomial_matrix(ensembles: Mapping[int, MatrixEnsemble], p: Polynomial, N: int) -> np.ndarray:
    out = np.zeros((N, N), dtype=complex)
    for w, c in p.items():
        out += complex(c) * word_matrix(ensembles, w, N)
    return out
