"""Metric containers and the tensor calculus used by the stress checks.

Index conventions, fixed once here and used everywhere:

* ``MetricJet.components[mu, nu]``  = G_{mu nu}
* ``MetricJet.d1[mu, nu, rho]``     = G_{mu nu, rho}
* ``Christoffel.symbols[rho, mu, nu]`` = Gamma^rho_{mu nu}
* ``SemDensity.contravariant[mu, nu]`` = T^{mu nu} (weight-1 density,
  the sqrt(-det G) factor is already inside)
* ``SemDensity.d1[mu, nu, rho]``    = partial_rho T^{mu nu}

Signature convention is (-, +, ..., +): exactly one negative eigenvalue, so
det G < 0 in every dimension and sqrt(-det G) is the volume factor.

The private ``_g*`` helpers work over a generic scalar ring (floats or Taylor
values) with branch-free cofactor inverses for dimensions 2-4; they are what
the exact jet-slot perturbations of the Lagrangians run through.  The public
numeric ops use the same conventions on plain arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingJet, SingularMetric, WrongSignature
from .taylor import gsqrt, scalar_of

_SINGULAR_TOL = 1e-12


@dataclass
class Dimension:
    """Spacetime dimension n+1; the package supports 2, 3 and 4."""

    n_plus_1: int

    def __post_init__(self):
        if self.n_plus_1 not in (2, 3, 4):
            raise ValueError("supported dimensions are 2, 3, 4")


@dataclass
class MetricJet:
    """A metric value at a point, optionally with first/second partials."""

    components: np.ndarray
    d1: np.ndarray | None = None
    d2: np.ndarray | None = None

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=float)
        n = self.components.shape[0]
        if self.components.shape != (n, n):
            raise ValueError("metric components must form a square matrix")
        if not np.allclose(self.components, self.components.T, atol=1e-12):
            raise ValueError("metric components must be symmetric")

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def require_lorentzian(self) -> None:
        check_lorentzian(self.components)


@dataclass
class Christoffel:
    """Connection coefficients; symbols[rho, mu, nu] = Gamma^rho_{mu nu}."""

    symbols: np.ndarray

    @property
    def dim(self) -> int:
        return self.symbols.shape[0]


@dataclass
class SemDensity:
    """Stress-energy-momentum tensor density (weight 1).

    Either the contravariant components T^{mu nu}, the mixed components
    T^mu_nu, or both may be populated, plus optionally the coordinate
    partials of the contravariant form.
    """

    contravariant: np.ndarray | None = None
    mixed: np.ndarray | None = None
    d1: np.ndarray | None = None
    weight: int = 1


def check_lorentzian(g: np.ndarray) -> None:
    """Raise WrongSignature unless g has exactly one negative eigenvalue."""
    eig = np.linalg.eigvalsh(np.asarray(g, dtype=float))
    neg = int(np.sum(eig < 0.0))
    if neg != 1 or np.any(np.abs(eig) < _SINGULAR_TOL):
        raise WrongSignature(
            f"expected Lorentzian signature (one negative eigenvalue), got eigenvalues {eig}"
        )


def inverse_metric(m: MetricJet) -> np.ndarray:
    """Inverse of the metric by Gauss elimination with partial pivoting."""
    g = m.components
    n = g.shape[0]
    a = np.hstack([g.astype(float), np.eye(n)])
    scale = np.max(np.abs(g))
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) < _SINGULAR_TOL * max(scale, 1.0):
            raise SingularMetric("pivot below singularity threshold")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
        a[col] /= a[col, col]
        for row in range(n):
            if row != col and a[row, col] != 0.0:
                a[row] -= a[row, col] * a[col]
    return a[:, n:]


def volume_factor(m: MetricJet) -> float:
    """sqrt(-det G); raises WrongSignature when det G >= 0."""
    det = float(np.linalg.det(m.components))
    if det >= 0.0:
        raise WrongSignature(f"det G = {det:.6g} is not negative")
    return float(np.sqrt(-det))


def christoffel(m: MetricJet) -> Christoffel:
    """Levi-Civita connection of the metric jet (needs d1)."""
    if m.d1 is None:
        raise SingularMetric("christoffel requires metric first derivatives")
    ginv = inverse_metric(m)
    # Gamma^rho_{mu nu} = 1/2 g^{rho lam} (g_{lam mu, nu} + g_{lam nu, mu} - g_{mu nu, lam})
    d = m.d1
    bracket = d.transpose(0, 1, 2) + d.transpose(0, 2, 1) - d.transpose(2, 0, 1)
    return Christoffel(0.5 * np.einsum("rl,lmn->rmn", ginv, bracket))


def christoffel_pullback(
    eta_jet2, kappa_d1: np.ndarray, gamma_fiber: np.ndarray
) -> Christoffel:
    """Connection of a pulled-back metric assembled from covariance-field jets.

    Gamma^rho_{mu nu} = eta^b_{,mu nu} kap^rho_b
                      + eta^c_{,mu} eta^d_{,nu} gamma^b_{cd} kap^rho_b,

    with ``gamma_fiber[b, c, d]`` the fibre-metric connection at eta(x) and
    ``kappa_d1`` the inverse Jacobian kap^rho_b.
    """
    eta_jet2.require(2)
    first = np.einsum("bmn,rb->rmn", eta_jet2.d2, kappa_d1)
    second = np.einsum("cm,dn,bcd,rb->rmn", eta_jet2.d1, eta_jet2.d1, gamma_fiber, kappa_d1)
    return Christoffel(first + second)


def covariant_divergence_density(t: SemDensity, gamma: Christoffel) -> np.ndarray:
    """D^rho = partial_mu T^{mu rho} + Gamma^rho_{mu nu} T^{mu nu}.

    For a weight-1 symmetric density this is the full covariant divergence:
    the usual trace-Gamma term is absorbed by the density weight.
    """
    if t.contravariant is None or t.d1 is None:
        raise MissingJet("divergence needs contravariant components and their partials")
    div = np.einsum("mrm->r", t.d1)  # partial_mu T^{mu rho} = d1[mu, rho, mu]
    return div + np.einsum("rmn,mn->r", gamma.symbols, t.contravariant)


# ---- generic-scalar matrix algebra ------------------------------------------
#
# Cofactor-based: no pivoting, so the same code runs on floats and on Taylor
# values (whose ordering is undefined).  Dimensions 2-4 only, which is all the
# package supports.


def _g_det2(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def _g_det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _g_minor(m, i, j):
    return [[m[r][c] for c in range(len(m)) if c != j] for r in range(len(m)) if r != i]


def g_det(m):
    n = len(m)
    if n == 2:
        return _g_det2(m)
    if n == 3:
        return _g_det3(m)
    if n == 4:
        tot = None
        for j in range(4):
            term = m[0][j] * _g_det3(_g_minor(m, 0, j))
            if j % 2:
                term = -term
            tot = term if tot is None else tot + term
        return tot
    raise ValueError("generic determinant implemented for dimensions 2-4")


def g_inverse(m, det=None):
    """Adjugate inverse over a generic scalar ring; raises SingularMetric."""
    n = len(m)
    if det is None:
        det = g_det(m)
    if np.any(np.abs(scalar_of(det)) < _SINGULAR_TOL):
        raise SingularMetric("generic inverse: determinant below threshold")
    if n == 2:
        return [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ]
    if n == 3:
        inv = [[None] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                cof = _g_det2(_g_minor(m, j, i))
                if (i + j) % 2:
                    cof = -cof
                inv[i][j] = cof / det
        return inv
    if n == 4:
        inv = [[None] * 4 for _ in range(4)]
        for i in range(4):
            for j in range(4):
                cof = _g_det3(_g_minor(m, j, i))
                if (i + j) % 2:
                    cof = -cof
                inv[i][j] = cof / det
        return inv
    raise ValueError("generic inverse implemented for dimensions 2-4")


def g_volume_factor(m, det=None):
    """sqrt(-det) over a generic scalar ring (DomainError if det >= 0)."""
    if det is None:
        det = g_det(m)
    return gsqrt(-det)


def g_christoffel(ginv, gd):
    """Gamma^rho_{mu nu} over a generic ring; gd[m][n][r] = G_{mn,r}."""
    n = len(ginv)
    gamma = [[[None] * n for _ in range(n)] for _ in range(n)]
    for rho in range(n):
        for mu in range(n):
            for nu in range(mu, n):
                acc = None
                for lam in range(n):
                    term = ginv[rho][lam] * (
                        gd[lam][mu][nu] + gd[lam][nu][mu] - gd[mu][nu][lam]
                    )
                    acc = term if acc is None else acc + term
                val = 0.5 * acc
                gamma[rho][mu][nu] = val
                gamma[rho][nu][mu] = val
    return gamma
