"""GKSL generators for thermal dynamics.

Builds dissipators from Lindblad operators, the thermal ladder operators
whose mixing angles encode the bath temperature, and semigroup generators
obtained by second-order expansion of a bath coupling: given a total
Hamiltonian commuting with the free energy of system plus bath, projecting it
out with temperature-weighted generalized partial traces yields Lindblad
operators whose semigroup stays inside the (closure of the) thermal
operations.  Membership predicates for that wedge and its edge are included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import (
    ALG_TOL,
    GibbsVector,
    Superoperator,
    ad,
    adjoint_action,
    expm,
    gibbs_vector,
    partial_trace_wrt,
)
from .errors import InvalidInputError


# ---------------------------------------------------------------------------
# Setup and generator containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThermalSetup:
    """Diagonal system Hamiltonian plus a bath temperature."""

    h0_diag: np.ndarray
    temperature: float

    def __post_init__(self):
        h = np.asarray(self.h0_diag, dtype=float)
        if h.ndim != 1 or not np.all(np.isfinite(h)):
            raise InvalidInputError("H0 must be given by a finite vector of diagonal energies")
        if not (self.temperature > 0.0):
            raise InvalidInputError("temperature must be positive or +inf")
        object.__setattr__(self, "h0_diag", h)

    @property
    def n(self) -> int:
        return self.h0_diag.size

    @property
    def h0(self) -> np.ndarray:
        return np.diag(self.h0_diag.astype(complex))

    @property
    def eps(self) -> float:
        """The qubit shorthand e^(-1/T)."""
        return 0.0 if math.isinf(self.temperature) else math.exp(-1.0 / self.temperature)

    def gibbs_vector(self) -> GibbsVector:
        return gibbs_vector(self.h0_diag, self.temperature)

    def gibbs_state(self) -> np.ndarray:
        return np.diag(self.gibbs_vector().entries.astype(complex))


@dataclass(frozen=True)
class GKSLGenerator:
    """Generator L = -i ad_H - sum_k Gamma_{V_k} with its cached superoperator."""

    hamiltonian: np.ndarray
    lindblad_ops: tuple

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @cached_property
    def superoperator(self) -> Superoperator:
        l = -1j * ad(self.hamiltonian).matrix
        if self.lindblad_ops:
            l = l - dissipator(self.lindblad_ops).matrix
        return Superoperator(l)

    def propagator(self, t: float) -> Superoperator:
        return Superoperator(expm(t * self.superoperator.matrix))


def gksl_generator(h: np.ndarray, vs) -> GKSLGenerator:
    h = np.asarray(h, dtype=complex)
    if np.max(np.abs(h - h.conj().T)) > ALG_TOL * max(1.0, np.abs(h).max()):
        raise InvalidInputError("Hamiltonian part must be Hermitian")
    return GKSLGenerator(h, tuple(np.asarray(v, dtype=complex) for v in vs))


# ---------------------------------------------------------------------------
# Dissipator and ladder operators
# ---------------------------------------------------------------------------

def dissipator(vs) -> Superoperator:
    """Sum of single-operator dissipators (positive sign convention).

    Gamma(rho) = sum_k [ (V_k^+ V_k rho + rho V_k^+ V_k)/2 - V_k rho V_k^+ ];
    the evolution is rho' = -i[H, rho] - Gamma(rho).
    """
    vs = [np.asarray(v, dtype=complex) for v in vs]
    if not vs:
        raise InvalidInputError("need at least one Lindblad operator")
    n = vs[0].shape[0]
    if any(v.shape != (n, n) for v in vs):
        raise InvalidInputError("Lindblad operators must share one square shape")
    eye = np.eye(n, dtype=complex)
    g = np.zeros((n * n, n * n), dtype=complex)
    for v in vs:
        vv = v.conj().T @ v
        g += 0.5 * (np.kron(vv.T, eye) + np.kron(eye, vv)) - np.kron(v.conj(), v)
    return Superoperator(g)


def thermal_angles(d: GibbsVector) -> np.ndarray:
    """Mixing angles arccos((1 + d_{k+1}/d_k)^{-1/2}) in (0, pi/4]."""
    r = d.ratios()
    return np.arccos(1.0 / np.sqrt(1.0 + r))


def _ladder_cos_sin(d: GibbsVector) -> tuple[np.ndarray, np.ndarray]:
    r = d.ratios()
    c = 1.0 / np.sqrt(1.0 + r)
    return c, np.sqrt(r) * c


def ladder_weights(n: int) -> np.ndarray:
    """Spin-ladder amplitudes sqrt(k (n - k)) for k = 1..n-1."""
    k = np.arange(1, n)
    return np.sqrt(k * (n - k))


def ladder_ops(d: GibbsVector, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Thermally weighted raising/lowering pair (upper and lower bidiagonal)."""
    if n is None:
        n = d.n
    if n != d.n or n < 2:
        raise InvalidInputError("need len(d) = n >= 2")
    w = ladder_weights(n)
    c, s = _ladder_cos_sin(d)
    up = np.zeros((n, n), dtype=complex)
    lo = np.zeros((n, n), dtype=complex)
    for k in range(n - 1):
        up[k, k + 1] = w[k] * c[k]
        lo[k + 1, k] = w[k] * s[k]
    return up, lo


def thermal_ladder_generator(d: GibbsVector, h: np.ndarray | None = None) -> GKSLGenerator:
    """Generator with dissipator Gamma_{sigma+^d} + Gamma_{sigma-^d}."""
    up, lo = ladder_ops(d)
    if h is None:
        h = np.zeros((d.n, d.n), dtype=complex)
    return gksl_generator(h, (up, lo))


def diagonal_restriction(s: Superoperator) -> np.ndarray:
    """Action of a superoperator on diagonal matrices, as a real n x n matrix."""
    n = s.dim
    out = np.zeros((n, n))
    for j in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[j, j] = 1.0
        out[:, j] = np.real(np.diag(s(e)))
    return out


# ---------------------------------------------------------------------------
# Stinespring curve expansion
# ---------------------------------------------------------------------------

def _check_density(omega: np.ndarray, tol: float = ALG_TOL) -> tuple[np.ndarray, np.ndarray]:
    omega = np.asarray(omega, dtype=complex)
    if np.max(np.abs(omega - omega.conj().T)) > tol * max(1.0, np.abs(omega).max()):
        raise InvalidInputError("ancilla state must be Hermitian")
    evals, evecs = np.linalg.eigh(omega)
    if evals.min() < -tol or abs(evals.sum() - 1.0) > tol * omega.shape[0]:
        raise InvalidInputError("ancilla state must be positive semidefinite with unit trace")
    # ascending eigenvalues; ties keep eigh's deterministic ordering
    return np.clip(evals, 0.0, None), evecs


def stinespring_taylor(h: np.ndarray, omega: np.ndarray) -> tuple[Superoperator, Superoperator]:
    """First and second derivative superoperators of the bath-coupling curve.

    For the curve t -> tr_bath(e^{-itH} ((.) (x) omega) e^{itH}) this returns
    (A1, A2) with expansion id + t A1 + t^2/2 A2 + O(t^3):

    * A1 = -i ad_{tr_omega(H)},
    * A2 = -sum_{j,k} Gamma_{sqrt(2 r_k) tr_{|g_k><g_j|}(H)}

    where omega = sum_k r_k |g_k><g_k|.  Zero eigenvalues simply drop their
    terms.
    """
    h = np.asarray(h, dtype=complex)
    evals, evecs = _check_density(omega)
    m = evals.size
    if h.shape[0] % m != 0:
        raise InvalidInputError("total dimension must factor through the ancilla dimension")
    n = h.shape[0] // m
    order1 = Superoperator(-1j * ad(partial_trace_wrt(np.asarray(omega, dtype=complex), h)).matrix)
    acc = np.zeros((n * n, n * n), dtype=complex)
    for j in range(m):
        for k in range(m):
            if evals[k] == 0.0:
                continue
            x = np.outer(evecs[:, k], evecs[:, j].conj())
            v = math.sqrt(2.0 * evals[k]) * partial_trace_wrt(x, h)
            acc += dissipator([v]).matrix
    return order1, Superoperator(-acc)


def stinespring_propagator(h: np.ndarray, omega: np.ndarray, t: float) -> Superoperator:
    """Exact superoperator of tr_bath(e^{-itH} ((.) (x) omega) e^{itH})."""
    h = np.asarray(h, dtype=complex)
    omega = np.asarray(omega, dtype=complex)
    m = omega.shape[0]
    n = h.shape[0] // m
    u = expm(-1j * t * h)

    def act(x):
        return partial_trace_wrt(np.eye(m, dtype=complex), u @ np.kron(x, omega) @ u.conj().T)

    return Superoperator.from_basis_action(act, n)


# ---------------------------------------------------------------------------
# Dilation-projected thermal generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DilationGenerator:
    """Result of the dilation projection: the generator plus its V grid."""

    generator: GKSLGenerator
    v: tuple  # m x m nested tuple of n x n arrays, indexed [j][k]
    bath_energies: np.ndarray
    bath_basis: np.ndarray


def ladder_htot(n: int, delta_e: float, temperature: float) -> np.ndarray:
    """Energy-conserving exchange coupling of an n-level ladder to one bath qubit.

    Couples |e_j, e_2> with |e_{j+1}, e_1> at the spin-ladder amplitude times
    (1 + e^(-dE/T))^(-1/2); commutes with diag(0..n-1) dE (x) 1 + 1 (x)
    diag(0, 1) dE.
    """
    if n < 2:
        raise InvalidInputError("need n >= 2")
    if not (delta_e > 0.0) or not (temperature > 0.0):
        raise InvalidInputError("need positive level spacing and temperature")
    d = gibbs_vector(np.arange(n, dtype=float) * delta_e, temperature)
    w = ladder_weights(n)
    c, _ = _ladder_cos_sin(d)
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n - 1):
        # composite index (system, bath) with bath as the trailing factor
        a = 2 * j + 1        # |e_j, e_2>
        b = 2 * (j + 1)      # |e_{j+1}, e_1>
        h[a, b] = w[j] * c[j]
        h[b, a] = w[j] * c[j]
    return h


def markov_to_generator(
    h_tot: np.ndarray,
    h_b: np.ndarray,
    h: np.ndarray,
    setup: ThermalSetup,
    tol: float = 1e-10,
) -> DilationGenerator:
    """Temperature-weighted projection of a total Hamiltonian to a generator.

    Preconditions (checked): [H_tot, H0 (x) 1 + 1 (x) H_B] = 0 and [H, H0] = 0.
    With H_B = sum_j E'_j |g_j><g_j| the Lindblad operators are

        V_{jk} = e^(-E'_j / 2T) tr_{|g_j><g_k|}(H_tot),

    and the returned generator is -i ad_H - sum_{jk} Gamma_{V_jk}.  The double
    sum is symmetric under relabeling, so either index may carry the weight;
    this layout puts the raising operator at V[0][1] for ladder couplings.
    """
    h_tot = np.asarray(h_tot, dtype=complex)
    h_b = np.asarray(h_b, dtype=complex)
    h = np.asarray(h, dtype=complex)
    n = setup.n
    m = h_b.shape[0]
    if h_tot.shape != (n * m, n * m):
        raise InvalidInputError(f"H_tot must be {n * m} x {n * m}")

    free = np.kron(setup.h0, np.eye(m)) + np.kron(np.eye(n), h_b)
    comm = h_tot @ free - free @ h_tot
    scale = max(1.0, np.abs(h_tot).max() * max(1.0, np.abs(free).max()))
    if np.max(np.abs(comm)) > tol * scale:
        raise InvalidInputError(
            f"[H_tot, H0 (x) 1 + 1 (x) H_B] has norm {np.max(np.abs(comm)):.2e}; "
            "the coupling does not conserve the free energy")
    comm0 = h @ setup.h0 - setup.h0 @ h
    if np.max(np.abs(comm0)) > tol * max(1.0, np.abs(h).max() * max(1.0, np.abs(setup.h0).max())):
        raise InvalidInputError(
            f"[H, H0] has norm {np.max(np.abs(comm0)):.2e}; the coherent part must commute")

    # eigenvalue ties broken by ascending energy then original order (eigh)
    if np.max(np.abs(h_b - np.diag(np.diag(h_b)))) == 0.0:
        order = np.argsort(np.diag(h_b).real, kind="stable")
        energies = np.diag(h_b).real[order]
        basis = np.eye(m, dtype=complex)[:, order]
    else:
        energies, basis = np.linalg.eigh(h_b)

    t_inv = 0.0 if math.isinf(setup.temperature) else 1.0 / setup.temperature
    vgrid = []
    ops = []
    for j in range(m):
        weight = math.exp(-energies[j] * t_inv / 2.0)
        row = []
        for k in range(m):
            x = np.outer(basis[:, j], basis[:, k].conj())
            v = weight * partial_trace_wrt(x, h_tot)
            row.append(v)
            ops.append(v)
        vgrid.append(tuple(row))
    gen = GKSLGenerator(h, tuple(ops))
    return DilationGenerator(gen, tuple(vgrid), energies, basis)


# ---------------------------------------------------------------------------
# Wedge membership
# ---------------------------------------------------------------------------

def choi_matrix(s: Superoperator) -> np.ndarray:
    """Choi matrix (1/n) sum_{ij} |i><j| (x) S(|i><j|)."""
    n = s.dim
    c = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            c[i * n:(i + 1) * n, j * n:(j + 1) * n] = s(e)
    return c / n


def is_cp(s: Superoperator, tol: float = ALG_TOL) -> bool:
    c = choi_matrix(s)
    c = 0.5 * (c + c.conj().T)
    w = np.linalg.eigvalsh(c)
    return bool(w.min() >= -tol * max(1.0, np.abs(w).max()))


def is_cptp(s: Superoperator, tol: float = ALG_TOL) -> bool:
    return is_cp(s, tol) and s.is_trace_preserving(tol)


def cond_cp(l: Superoperator, tol: float = ALG_TOL) -> bool:
    """Conditional complete positivity of a Hermiticity-preserving map.

    Compresses the Choi matrix by the projector complementary to the
    maximally entangled reference vector and checks positive semidefiniteness
    with a relative eigenvalue floor.
    """
    if not l.is_hermiticity_preserving(1e-8):
        raise InvalidInputError("conditional complete positivity needs a "
                                "Hermiticity-preserving map")
    return cond_cp_min_eig(l) >= -tol * max(1.0, float(np.abs(l.matrix).max()))


def cond_cp_min_eig(l: Superoperator) -> float:
    n = l.dim
    c = choi_matrix(l) * n  # unnormalized (id (x) L)(|Omega><Omega|) * n
    omega = np.zeros(n * n, dtype=complex)
    omega[:: n + 1] = 1.0 / math.sqrt(n)
    p = np.eye(n * n, dtype=complex) - np.outer(omega, omega.conj())
    comp = p @ c @ p
    comp = 0.5 * (comp + comp.conj().T)
    return float(np.linalg.eigvalsh(comp).min())


@dataclass(frozen=True)
class WedgeReport:
    hermiticity_preserving: bool
    trace_annihilating: bool
    conditionally_cp: bool
    fixes_gibbs: bool
    covariant: bool

    @property
    def ok(self) -> bool:
        return (self.hermiticity_preserving and self.trace_annihilating
                and self.conditionally_cp and self.fixes_gibbs and self.covariant)

    def to_json(self) -> dict:
        return {
            "hermiticity_preserving": self.hermiticity_preserving,
            "trace_annihilating": self.trace_annihilating,
            "conditionally_cp": self.conditionally_cp,
            "fixes_gibbs": self.fixes_gibbs,
            "covariant": self.covariant,
            "is_wedge_member": self.ok,
        }


def is_ento_generator(l: Superoperator, setup: ThermalSetup, tol: float = ALG_TOL) -> WedgeReport:
    """Generator test for the covariant Gibbs-preserving wedge.

    Conjunction of Hermiticity preservation, trace annihilation, conditional
    complete positivity, L(gibbs) = 0, and [L, ad_{H0}] = 0.
    """
    scale = max(1.0, float(np.abs(l.matrix).max()))
    herm = l.is_hermiticity_preserving(tol)
    trace = l.is_trace_annihilating(tol)
    try:
        ccp = cond_cp_min_eig(l) >= -tol * scale
    except InvalidInputError:
        ccp = False
    gibbs = bool(np.max(np.abs(l(setup.gibbs_state()))) <= tol * scale)
    adh = ad(setup.h0).matrix
    comm = l.matrix @ adh - adh @ l.matrix
    cov = bool(np.max(np.abs(comm)) <= tol * scale * max(1.0, np.abs(adh).max()))
    return WedgeReport(herm, trace, ccp, gibbs, cov)


def is_edge_generator(h: np.ndarray, setup: ThermalSetup, tol: float = ALG_TOL) -> bool:
    """Edge membership of -i ad_H: true iff [H, H0] vanishes."""
    h = np.asarray(h, dtype=complex)
    comm = h @ setup.h0 - setup.h0 @ h
    scale = max(1.0, np.abs(h).max() * max(1.0, np.abs(setup.h0).max()))
    return bool(np.max(np.abs(comm)) <= tol * scale)


def conjugate_by_edge(gen: GKSLGenerator, h_prime: np.ndarray) -> Superoperator:
    """Superoperator Ad_{e^{-iH'}} L Ad_{e^{iH'}} for edge conjugation tests."""
    u = expm(-1j * np.asarray(h_prime, dtype=complex))
    adu = adjoint_action(u)
    adu_inv = adjoint_action(u.conj().T)
    return adu @ gen.superoperator @ adu_inv


# ---------------------------------------------------------------------------
# Dilation fit (randomized search hook; no claim either way)
# ---------------------------------------------------------------------------

def dilation_fit(
    l: Superoperator,
    setup: ThermalSetup,
    m: int = 2,
    trials: int = 8,
    seed: int = 0,
    max_nfev: int = 400,
):
    """Least-squares search for a dilation (H_tot, H_B, H) reproducing ``l``.

    Randomized multistart over couplings that commute with the free energy;
    returns (best relative residual, best DilationGenerator).  A small
    residual certifies representability of this particular generator; a large
    one proves nothing.
    """
    from scipy.optimize import least_squares

    n = setup.n
    h_b = np.diag(np.arange(m, dtype=float) - (m - 1) / 2.0)
    free = (setup.h0_diag[:, None] + np.diag(h_b)[None, :]).reshape(-1)
    # only index pairs of equal free energy may couple; diagonal always may
    pairs = [(i, j) for i in range(n * m) for j in range(i, n * m)
             if abs(free[i] - free[j]) < 1e-12]

    def build(params):
        h_tot = np.zeros((n * m, n * m), dtype=complex)
        k = 0
        for (i, j) in pairs:
            if i == j:
                h_tot[i, i] = params[k]
                k += 1
            else:
                h_tot[i, j] = params[k] + 1j * params[k + 1]
                h_tot[j, i] = params[k] - 1j * params[k + 1]
                k += 2
        h = np.diag(np.array([params[k + i] for i in range(n)], dtype=complex))
        return h_tot, h

    nparams = sum(1 if i == j else 2 for i, j in pairs) + n

    def residual(params):
        h_tot, h = build(params)
        gen = markov_to_generator(h_tot, h_b, h, setup)
        diff = gen.generator.superoperator.matrix - l.matrix
        return np.concatenate([diff.real.ravel(), diff.imag.ravel()])

    rng = np.random.default_rng(seed)
    scale = max(1.0, float(np.abs(l.matrix).max()))
    best = (np.inf, None)
    for _ in range(trials):
        x0 = rng.normal(scale=1.0, size=nparams)
        try:
            res = least_squares(residual, x0, max_nfev=max_nfev)
        except Exception:
            continue
        rel = float(np.linalg.norm(res.fun)) / scale
        if rel < best[0]:
            h_tot, h = build(res.x)
            best = (rel, markov_to_generator(h_tot, h_b, h, setup))
    return best
