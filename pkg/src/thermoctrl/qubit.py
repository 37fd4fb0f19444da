"""Exact single-qubit thermal map algebra.

Every qubit map under consideration is determined by a population mixing
weight mu, the Boltzmann factor eps = e^(-1/T), and a complex coherence
multiplier c.  In the column-stacked basis the superoperator is

    [[1 - eps*mu, 0,       0,      mu    ],
     [0,          c,       0,      0     ],
     [0,          0,       conj(c), 0    ],
     [eps*mu,     0,       0,      1 - mu]]

so c multiplies the lower-left coherence entry of the density matrix.  The
map is a thermal channel iff |c|^2 <= (1 - eps*mu)(1 - mu); it lies in the
Markovian subsemigroup iff additionally mu <= 1/(1 + eps) and
|c|^2 <= 1 - mu(1 + eps).  Composition acts on parameters by an explicit law
that is closed on both classes, for arbitrary (even different) temperatures.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ALG_TOL, Superoperator, expm
from .errors import InvalidInputError


class Classification(enum.Enum):
    NON_THERMAL = "NonThermal"
    THERMAL_NON_MARKOVIAN = "ThermalNonMarkovian"
    MARKOVIAN = "Markovian"


@dataclass(frozen=True)
class QubitThermalParams:
    """Parameter triple (mu, eps, c) of a covariant qubit map.

    ``eps_degenerate`` flags compositions with mu = 0 where eps is not
    determined by the map itself (only the product eps*mu ever enters
    downstream formulas); the stored value is then inherited by convention.
    """

    mu: float
    eps: float
    c: complex
    eps_degenerate: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.eps) and np.isfinite(abs(self.c))):
            raise InvalidInputError("parameters must be finite")

    def thermal_margin(self) -> float:
        """min of the slack in mu, eps in [0,1] and |c|^2 <= (1-eps mu)(1-mu)."""
        box = min(self.mu, 1.0 - self.mu, self.eps, 1.0 - self.eps)
        return float(min(box, (1.0 - self.eps * self.mu) * (1.0 - self.mu) - abs(self.c) ** 2))

    def markov_margin(self) -> float:
        """min slack of mu <= 1/(1+eps) and |c|^2 <= 1 - mu (1+eps)."""
        return float(min(1.0 / (1.0 + self.eps) - self.mu,
                         1.0 - self.mu * (1.0 + self.eps) - abs(self.c) ** 2))

    def is_thermal(self, tol: float = ALG_TOL) -> bool:
        return self.thermal_margin() >= -tol

    def is_markovian(self, tol: float = ALG_TOL) -> bool:
        return self.is_thermal(tol) and self.markov_margin() >= -tol

    @staticmethod
    def identity(eps: float) -> "QubitThermalParams":
        return QubitThermalParams(0.0, eps, 1.0 + 0.0j)

    @staticmethod
    def thermal_reset(eps: float) -> "QubitThermalParams":
        return QubitThermalParams(1.0 / (1.0 + eps), eps, 0.0j)

    @staticmethod
    def beta_swap(eps: float) -> "QubitThermalParams":
        return QubitThermalParams(1.0, eps, 0.0j)


def superoperator_of(p: QubitThermalParams, tol: float = ALG_TOL) -> Superoperator:
    """4 x 4 column-stacked superoperator of a thermal parameter triple."""
    if not p.is_thermal(tol):
        raise InvalidInputError(
            f"parameters violate the thermal bound by {-p.thermal_margin():.3e}")
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1.0 - p.eps * p.mu
    m[0, 3] = p.mu
    m[3, 0] = p.eps * p.mu
    m[3, 3] = 1.0 - p.mu
    m[1, 1] = p.c
    m[2, 2] = np.conj(p.c)
    return Superoperator(m)


def psi_map(phi: Superoperator) -> tuple[float, complex]:
    """Extract (mu, c) from a covariant qubit superoperator.

    Reads the population transfer into the ground level and the coherence
    multiplier; on thermal maps this inverts :func:`superoperator_of`, and it
    is a homomorphism for the parameter composition at fixed temperature.
    """
    if phi.dim != 2:
        raise InvalidInputError("expected a qubit superoperator")
    return float(phi.matrix[0, 3].real), complex(phi.matrix[1, 1])


def diagonal_action(p: QubitThermalParams) -> np.ndarray:
    """2 x 2 column-stochastic action on the populations."""
    return np.array([[1.0 - p.eps * p.mu, p.mu], [p.eps * p.mu, 1.0 - p.mu]])


# ---------------------------------------------------------------------------
# One-parameter semigroups
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SemigroupParams:
    """Generator data (u, x, omega) at Boltzmann factor eps.

    u >= 0 is the thermalisation rate, x the coherence decay rate, omega the
    coherent rotation; membership in the wedge requires 2x >= u (1 + eps).
    """

    u: float
    x: float
    omega: float
    eps: float

    def __post_init__(self):
        if self.u < 0.0:
            raise InvalidInputError("thermalisation rate u must be nonnegative")
        if not (0.0 <= self.eps <= 1.0):
            raise InvalidInputError("eps must lie in [0, 1]")
        if 2.0 * self.x < self.u * (1.0 + self.eps) - ALG_TOL:
            raise InvalidInputError(
                f"wedge condition 2x >= u(1+eps) violated: 2*{self.x} < {self.u*(1+self.eps)}")


def generator_of(sp: SemigroupParams) -> Superoperator:
    """Wedge generator with populations mixing at rate u and coherences at x -+ i omega."""
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = -sp.eps * sp.u
    m[0, 3] = sp.u
    m[3, 0] = sp.eps * sp.u
    m[3, 3] = -sp.u
    m[1, 1] = -sp.x - 1j * sp.omega
    m[2, 2] = -sp.x + 1j * sp.omega
    return Superoperator(m)


def semigroup_element(sp: SemigroupParams, t: float) -> QubitThermalParams:
    """Closed-form parameters of e^{tL}: mu_t = (1 - e^{-t u (1+eps)})/(1+eps)."""
    if t < 0.0:
        raise InvalidInputError("time must be nonnegative")
    mu_t = (1.0 - math.exp(-t * sp.u * (1.0 + sp.eps))) / (1.0 + sp.eps)
    c_t = cmath.exp(-(sp.x + 1j * sp.omega) * t)
    return QubitThermalParams(mu_t, sp.eps, c_t)


def propagator(sp: SemigroupParams, t: float) -> Superoperator:
    """Numerical e^{tL}; the closed form above is its independent cross-check."""
    return Superoperator(expm(t * generator_of(sp).matrix))


def time_parameter(mu: float, eps: float) -> complex:
    """Formal time (in units of u) reaching mixing weight mu.

    Real up to the Markovian limit mu* = 1/(1+eps); beyond it the logarithm
    picks up a constant imaginary part pi/(1+eps) (the mirror branch has the
    opposite sign).
    """
    return -cmath.log(complex(1.0 - mu * (1.0 + eps))) / (1.0 + eps)


# ---------------------------------------------------------------------------
# Composition (arbitrary temperatures)
# ---------------------------------------------------------------------------

def compose(p1: QubitThermalParams, p2: QubitThermalParams,
            tol: float = ALG_TOL) -> QubitThermalParams:
    """Parameters of the concatenation p1 after p2 (superoperator product).

    mu3 = mu1 + mu2 - mu1 mu2 (1 + eps1), eps3 mu3 = eps1 mu1 + eps2 mu2 -
    mu1 mu2 (1 + eps1) eps2, c3 = c1 c2.  Thermality is preserved, and so is
    Markovianity, even for different temperatures.  When mu3 = 0 the factor
    eps3 is not determined; it is inherited from p2 and flagged.
    """
    if not (p1.is_thermal(tol) and p2.is_thermal(tol)):
        raise InvalidInputError("both factors must be thermal")
    mu3 = p1.mu + p2.mu - p1.mu * p2.mu * (1.0 + p1.eps)
    epsmu3 = p1.eps * p1.mu + p2.eps * p2.mu - p1.mu * p2.mu * (1.0 + p1.eps) * p2.eps
    c3 = p1.c * p2.c
    if abs(mu3) <= 1e-15:
        return QubitThermalParams(0.0, p2.eps, c3, eps_degenerate=True)
    return QubitThermalParams(mu3, epsmu3 / mu3, c3)


# ---------------------------------------------------------------------------
# Classification and region geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassifyResult:
    label: Classification
    boundary: bool
    thermal_margin: float
    markov_margin: float


def classify(p: QubitThermalParams, tol: float = ALG_TOL) -> ClassifyResult:
    """Region label with a boundary flag for within-tolerance equalities."""
    tm = p.thermal_margin()
    mm = p.markov_margin()
    # absolute cushion absorbs the rounding of the margin formulas themselves
    band = tol + 1e-15
    if tm < -band:
        return ClassifyResult(Classification.NON_THERMAL, abs(tm) <= band, tm, mm)
    if mm < -band:
        return ClassifyResult(Classification.THERMAL_NON_MARKOVIAN,
                              abs(tm) <= band or abs(mm) <= band, tm, mm)
    return ClassifyResult(Classification.MARKOVIAN,
                          abs(tm) <= band or abs(mm) <= band, tm, mm)


def markov_radius(mu, eps: float):
    """Largest |c| of a Markovian map at mixing weight mu."""
    return np.sqrt(np.clip(1.0 - np.asarray(mu) * (1.0 + eps), 0.0, None))


def thermal_radius(mu, eps: float):
    """Largest |c| of a thermal map at mixing weight mu."""
    mu = np.asarray(mu)
    return np.sqrt(np.clip(1.0 - mu * (1.0 + eps) + mu * mu * eps, 0.0, None))


@dataclass(frozen=True)
class RegionSamples:
    """Surface point clouds of the Markovian and thermal cones in (mu, c)."""

    eps: float
    markov: np.ndarray   # (k, 3) rows (mu, Re c, Im c)
    thermal: np.ndarray


def mto_region_sample(eps: float, resolution: int = 60) -> RegionSamples:
    if not (0.0 < eps < 1.0):
        raise InvalidInputError("eps must lie in (0, 1)")
    if resolution < 2:
        raise InvalidInputError("resolution must be at least 2")
    phis = np.linspace(0.0, 2.0 * math.pi, 2 * resolution, endpoint=False)

    def cloud(mu_max, radius_fn):
        mus = np.linspace(0.0, mu_max, resolution)
        r = radius_fn(mus, eps)
        mu_g, phi_g = np.meshgrid(mus, phis, indexing="ij")
        r_g = np.repeat(r[:, None], phis.size, axis=1)
        return np.column_stack([
            mu_g.ravel(), (r_g * np.cos(phi_g)).ravel(), (r_g * np.sin(phi_g)).ravel()])

    return RegionSamples(
        eps,
        cloud(1.0 / (1.0 + eps), markov_radius),
        cloud(1.0, thermal_radius),
    )


def thermal_markov_gap(eps: float, resolution: int = 400) -> float:
    """Largest distance from a point of the thermal region to the Markovian one.

    Measured in the (mu, |c|) half-plane.  Shrinks to zero as eps -> 0, which
    is the zero-temperature collapse of the two cones onto each other.
    """
    mu_star = 1.0 / (1.0 + eps)
    mus = np.linspace(0.0, 1.0, resolution)
    rs = thermal_radius(mus, eps)
    # thermal region sampled along its boundary; the sup is attained there
    pts = np.column_stack([mus, rs])
    bmu = np.linspace(0.0, mu_star, 4 * resolution)
    border = np.column_stack([bmu, markov_radius(bmu, eps)])
    inside = (pts[:, 0] <= mu_star) & (pts[:, 1] <= markov_radius(np.clip(pts[:, 0], 0, mu_star), eps) + 1e-15)
    d2 = ((pts[:, None, :] - border[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    d = np.sqrt(d2)
    d[inside] = 0.0
    return float(d.max())
