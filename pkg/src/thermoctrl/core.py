"""Dense linear-algebra substrate.

Everything in here is small and dense by design (dimension n <= 8 is the
design point): probability vectors on the standard simplex, Gibbs vectors,
stochastic-matrix predicates, superoperators acting on column-stacked
matrices, a generalized partial trace, and a matrix exponential.

Superoperator convention: an operator ``L`` on n x n matrices is stored as
the n^2 x n^2 matrix acting on column-stacked inputs, ``vec(X) = X.T.ravel()``
in row-major numpy (columns of X concatenated).  With this choice the unitary
conjugation ``X -> U X U^+`` has matrix ``conj(U) (x) U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

#: default tolerance for algebraic identities (sums, commutators, residuals)
ALG_TOL = 1e-9
#: default tolerance for geometric comparisons (polytopes, curves, regions)
GEO_TOL = 1e-6


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# Simplex and Gibbs vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbVector:
    """Element of the standard simplex.

    Entries in ``[-tol, 0)`` are clamped to zero and the vector renormalized;
    larger negativity or a total too far from one is rejected.  Instances are
    immutable (the underlying array is marked read-only).
    """

    entries: np.ndarray
    tol: float = ALG_TOL

    def __post_init__(self):
        v = np.asarray(self.entries, dtype=float).copy()
        if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
            raise InvalidInputError("probability vector must be a finite 1-D array")
        if np.any(v < -self.tol):
            raise InvalidInputError(
                f"entry {v.min():.3e} below -tol={-self.tol:.1e}; not a probability vector"
            )
        v[v < 0.0] = 0.0
        total = v.sum()
        if abs(total - 1.0) > max(self.tol, self.tol * v.size):
            raise InvalidInputError(f"entries sum to {total!r}, expected 1")
        v /= total
        object.__setattr__(self, "entries", _readonly(v))

    @property
    def n(self) -> int:
        return self.entries.size

    def as_array(self) -> np.ndarray:
        return np.array(self.entries)

    def permute(self, perm) -> "ProbVector":
        return ProbVector(self.entries[np.asarray(perm, dtype=int)], self.tol)

    @staticmethod
    def uniform(n: int) -> "ProbVector":
        return ProbVector(np.full(n, 1.0 / n))

    def to_json(self) -> list:
        return self.entries.tolist()

    @staticmethod
    def from_json(data) -> "ProbVector":
        return ProbVector(np.asarray(data, dtype=float))


@dataclass(frozen=True)
class GibbsVector:
    """Strictly positive equilibrium weights, optionally tied to energies.

    When ``energies`` and ``temperature`` are present the entries are the
    normalized Boltzmann weights exp(-E_k/T); keeping the energies around lets
    downstream code evaluate level ratios exp(-(E_{k+1}-E_k)/T) without the
    round-off of dividing two tiny weights.
    """

    entries: np.ndarray
    energies: np.ndarray | None = None
    temperature: float | None = None

    def __post_init__(self):
        v = np.asarray(self.entries, dtype=float)
        if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
            raise InvalidInputError("Gibbs vector must be a finite 1-D array")
        if np.any(v <= 0.0):
            raise InvalidInputError("Gibbs vector entries must be strictly positive")
        object.__setattr__(self, "entries", _readonly(v / v.sum()))
        if self.energies is not None:
            object.__setattr__(self, "energies", _readonly(np.asarray(self.energies, dtype=float)))

    @property
    def n(self) -> int:
        return self.entries.size

    def as_array(self) -> np.ndarray:
        return np.array(self.entries)

    def ratios(self) -> np.ndarray:
        """Successive level ratios d_{k+1}/d_k, taken from energies if known."""
        if self.energies is not None and self.temperature is not None:
            if math.isinf(self.temperature):
                return np.ones(self.n - 1)
            gaps = np.diff(self.energies)
            return np.exp(-gaps / self.temperature)
        return self.entries[1:] / self.entries[:-1]

    @staticmethod
    def uniform(n: int) -> "GibbsVector":
        return GibbsVector(np.full(n, 1.0 / n), np.zeros(n), math.inf)

    @staticmethod
    def from_ratio(a: float, n: int) -> "GibbsVector":
        """Geometric weights (1, a, a^2, ...)/Z of an equidistant ladder."""
        if not 0.0 < a or not np.isfinite(a):
            raise InvalidInputError(f"ratio must be positive and finite, got {a!r}")
        if a == 1.0:
            return GibbsVector.uniform(n)
        # energies 0..n-1 at temperature -1/ln(a) reproduce exactly these ratios
        return GibbsVector(a ** np.arange(n), np.arange(n, dtype=float), -1.0 / math.log(a))

    def to_json(self) -> dict:
        return {
            "entries": self.entries.tolist(),
            "energies": None if self.energies is None else self.energies.tolist(),
            "temperature": self.temperature,
        }


def gibbs_vector(energies, temperature: float) -> GibbsVector:
    """Normalized Boltzmann weights exp(-E_k/T); T = +inf gives the uniform vector."""
    energies = np.asarray(energies, dtype=float)
    if not np.all(np.isfinite(energies)):
        raise InvalidInputError("energies must be finite")
    if not (temperature > 0.0):
        raise InvalidInputError(f"temperature must be positive (or +inf), got {temperature!r}")
    if math.isinf(temperature):
        w = np.ones(energies.size)
    else:
        w = np.exp(-(energies - energies.min()) / temperature)
    return GibbsVector(w / w.sum(), energies, temperature)


# ---------------------------------------------------------------------------
# Stochastic / permutation matrix predicates
# ---------------------------------------------------------------------------

def is_column_stochastic(a: np.ndarray, tol: float = ALG_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.all(a >= -tol) and np.allclose(a.sum(axis=0), 1.0, atol=tol))


def is_d_stochastic(a: np.ndarray, d: np.ndarray, tol: float = ALG_TOL) -> bool:
    d = np.asarray(d, dtype=float)
    return is_column_stochastic(a, tol) and bool(np.allclose(a @ d, d, atol=tol * max(1.0, d.max())))


def is_permutation_matrix(a: np.ndarray, tol: float = ALG_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    near01 = np.all((np.abs(a) < tol) | (np.abs(a - 1.0) < tol))
    return bool(
        near01
        and np.allclose(a.sum(axis=0), 1.0, atol=tol)
        and np.allclose(a.sum(axis=1), 1.0, atol=tol)
    )


def perm_matrix(perm) -> np.ndarray:
    """Permutation matrix P with (P x)_i = x_{perm[i]} (perm as image list)."""
    perm = np.asarray(perm, dtype=int)
    n = perm.size
    if sorted(perm.tolist()) != list(range(n)):
        raise InvalidInputError(f"not a permutation of 0..{n - 1}: {perm.tolist()}")
    p = np.zeros((n, n))
    p[np.arange(n), perm] = 1.0
    return p


@dataclass(frozen=True)
class SquareMatrix:
    """A square matrix carrying a validated structural tag."""

    entries: np.ndarray
    kind: str = "general"
    tol: float = ALG_TOL

    _KINDS = ("general", "column-stochastic", "d-stochastic", "permutation", "hermitian", "unitary")

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError("expected a square matrix")
        if self.kind not in self._KINDS:
            raise InvalidInputError(f"unknown kind {self.kind!r}")
        ok = True
        if self.kind == "column-stochastic":
            ok = is_column_stochastic(a, self.tol)
        elif self.kind == "permutation":
            ok = is_permutation_matrix(a, self.tol)
        elif self.kind == "hermitian":
            ok = np.allclose(a, a.conj().T, atol=self.tol)
        elif self.kind == "unitary":
            ok = np.allclose(a @ a.conj().T, np.eye(a.shape[0]), atol=self.tol)
        if not ok:
            raise InvalidInputError(f"matrix does not satisfy the {self.kind!r} invariant")
        object.__setattr__(self, "entries", _readonly(a))

    @staticmethod
    def d_stochastic(a: np.ndarray, d, tol: float = ALG_TOL) -> "SquareMatrix":
        d = np.asarray(d, dtype=float)
        if not is_d_stochastic(a, d, tol):
            raise InvalidInputError("matrix is not d-stochastic")
        m = SquareMatrix(a, "general", tol)
        object.__setattr__(m, "kind", "d-stochastic")
        return m

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def to_json(self) -> dict:
        data = complex_matrix_to_json(self.entries) if np.iscomplexobj(self.entries) \
            else {"re": np.asarray(self.entries, dtype=float).tolist()}
        data["kind"] = self.kind
        return data


# ---------------------------------------------------------------------------
# Column stacking and superoperators
# ---------------------------------------------------------------------------

def stack(x: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    x = np.asarray(x)
    return x.T.reshape(-1)


def unstack(v: np.ndarray, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`stack`."""
    v = np.asarray(v)
    if n is None:
        n = math.isqrt(v.size)
    return v.reshape(n, n).T


@dataclass(frozen=True)
class Superoperator:
    """Linear map on n x n complex matrices in the column-stacking basis."""

    matrix: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError("superoperator matrix must be square")
        n = math.isqrt(m.shape[0])
        if n * n != m.shape[0]:
            raise InvalidInputError("superoperator matrix size must be a perfect square")
        if self.dim and self.dim != n:
            raise InvalidInputError(f"dim={self.dim} inconsistent with matrix size {m.shape[0]}")
        object.__setattr__(self, "matrix", _readonly(m))
        object.__setattr__(self, "dim", n)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return unstack(self.matrix @ stack(np.asarray(x, dtype=complex)), self.dim)

    def compose(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix @ other.matrix)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return self.compose(other)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix + other.matrix)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix - other.matrix)

    def __mul__(self, scalar) -> "Superoperator":
        return Superoperator(self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Superoperator":
        return Superoperator(-self.matrix)

    @staticmethod
    def identity(n: int) -> "Superoperator":
        return Superoperator(np.eye(n * n, dtype=complex))

    @staticmethod
    def zero(n: int) -> "Superoperator":
        return Superoperator(np.zeros((n * n, n * n), dtype=complex))

    @staticmethod
    def from_basis_action(fn, n: int) -> "Superoperator":
        """Build the matrix of ``fn`` by applying it to all matrix units."""
        m = np.zeros((n * n, n * n), dtype=complex)
        for j in range(n):
            for i in range(n):
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = 1.0
                m[:, j * n + i] = stack(fn(e))
        return Superoperator(m)

    def is_trace_annihilating(self, tol: float = ALG_TOL) -> bool:
        tr = stack(np.eye(self.dim, dtype=complex))
        return bool(np.max(np.abs(tr @ self.matrix)) <= tol * max(1.0, _norm(self.matrix)))

    def is_trace_preserving(self, tol: float = ALG_TOL) -> bool:
        tr = stack(np.eye(self.dim, dtype=complex))
        return bool(np.max(np.abs(tr @ self.matrix - tr)) <= tol * max(1.0, _norm(self.matrix)))

    def is_hermiticity_preserving(self, tol: float = ALG_TOL) -> bool:
        n = self.dim
        scale = max(1.0, _norm(self.matrix))
        for j in range(n):
            for i in range(j, n):
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = 1.0
                out = self(e)
                out_dag = self(e.conj().T)
                if np.max(np.abs(out_dag - out.conj().T)) > tol * scale:
                    return False
        return True

    def to_json(self) -> dict:
        return complex_matrix_to_json(self.matrix)

    @staticmethod
    def from_json(data) -> "Superoperator":
        return Superoperator(complex_matrix_from_json(data))


def _norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, ord=np.inf))


def adjoint_action(u: np.ndarray) -> Superoperator:
    """Superoperator of X -> U X U^+ (equals conj(U) (x) U when column-stacked)."""
    u = np.asarray(u, dtype=complex)
    return Superoperator(np.kron(u.conj(), u))


def ad(h: np.ndarray, tol: float = ALG_TOL) -> Superoperator:
    """Commutator superoperator X -> [H, X]; its spectrum is {E_i - E_j}."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidInputError("expected a square matrix")
    if np.max(np.abs(h - h.conj().T)) > tol * max(1.0, _norm(h)):
        raise InvalidInputError("matrix is not Hermitian within tolerance")
    n = h.shape[0]
    eye = np.eye(n, dtype=complex)
    return Superoperator(np.kron(eye, h) - np.kron(h.T, eye))


# ---------------------------------------------------------------------------
# Generalized partial trace
# ---------------------------------------------------------------------------

def partial_trace_wrt(x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Partial trace of ``b`` with respect to ``x``.

    Unique n x n matrix satisfying tr(A tr_X(B)) = tr((A (x) X) B) for all A,
    with the first tensor factor of size n and the second of size m matching
    ``x``.  Recovers the ordinary partial trace over the second factor when
    ``x`` is the identity.
    """
    x = np.asarray(x, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1] or b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise InvalidInputError("expected square matrices")
    m = x.shape[0]
    nm = b.shape[0]
    if nm % m != 0:
        raise InvalidInputError(f"dimension {nm} does not factor through bath dimension {m}")
    n = nm // m
    b4 = b.reshape(n, m, n, m)
    # tr_X(B)[j, i] = sum_{a,b} X[a, b] B[(j, b), (i, a)]
    return np.einsum("ab,jbia->ji", x, b4)


def partial_trace_bath(b: np.ndarray, m: int) -> np.ndarray:
    """Ordinary partial trace over the trailing factor of size m."""
    return partial_trace_wrt(np.eye(m), b)


# ---------------------------------------------------------------------------
# Matrix exponential
# ---------------------------------------------------------------------------

# Pade-13 numerator coefficients and the Higham order-13 threshold
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
    33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def _expm_pade13(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    b = _PADE13
    ident = np.eye(n, dtype=a.dtype)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    return np.linalg.solve(v - u, v + u)


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential: scaling-and-squaring Pade-13 with a Hermitian fast path."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError("expected a square matrix")
    if not np.all(np.isfinite(a.real)) or (np.iscomplexobj(a) and not np.all(np.isfinite(a.imag))):
        raise InvalidInputError("matrix has non-finite entries")
    a = a.astype(complex, copy=False)
    scale = np.max(np.abs(a)) if a.size else 0.0
    herm = np.max(np.abs(a - a.conj().T)) <= 1e-13 * max(1.0, scale)
    skew = np.max(np.abs(a + a.conj().T)) <= 1e-13 * max(1.0, scale)
    if herm or skew:
        w, v = np.linalg.eigh(a if herm else 1j * a)
        if not herm:
            w = -1j * w
        out = (v * np.exp(w)) @ v.conj().T
    else:
        norm1 = np.max(np.abs(a).sum(axis=0)) if a.size else 0.0
        squarings = max(0, int(math.ceil(math.log2(norm1 / _THETA13)))) if norm1 > _THETA13 else 0
        out = _expm_pade13(a / (2.0 ** squarings))
        for _ in range(squarings):
            out = out @ out
    return out


def expm_real(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a real matrix, returned real."""
    return expm(a).real


# ---------------------------------------------------------------------------
# JSON helpers for complex matrices
# ---------------------------------------------------------------------------

def complex_matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def complex_matrix_from_json(data) -> np.ndarray:
    if isinstance(data, dict):
        re = np.asarray(data.get("re"), dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    return np.asarray(data, dtype=float).astype(complex)
