"""Geometry of the SL(2,C) action on the Riemann sphere with the chordal metric.

Points are kept as normalized homogeneous pairs so that nothing degrades near
infinity; matrices are det-1 representatives (projective classes up to sign).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

DET_TOL = 1e-12
RECON_TOL = 1e-9
NORM_ONE_TOL = 1e-9
SAMPLE_TOL = 1e-6


class DomainError(ValueError):
    """Argument outside the domain of a closed-form expression."""


class NormOneError(ValueError):
    """Cartan poles are undefined for (near-)unitary matrices."""


class NotHyperbolicError(ValueError):
    """Fixed-point data requested for a non-hyperbolic element."""


@dataclass(frozen=True)
class SpherePoint:
    """Point of the Riemann sphere as a normalized homogeneous pair (z, w).

    Equality is projective: two pairs represent the same point when they
    differ by a unit phase.
    """

    z: complex
    w: complex

    @staticmethod
    def from_affine(value: complex) -> "SpherePoint":
        s = math.sqrt(1.0 + abs(value) ** 2)
        return SpherePoint(complex(value) / s, 1.0 / s)

    @staticmethod
    def infinity() -> "SpherePoint":
        return SpherePoint(1.0 + 0.0j, 0.0j)

    @staticmethod
    def from_pair(z: complex, w: complex) -> "SpherePoint":
        n = math.hypot(abs(z), abs(w))
        if n == 0.0:
            raise DomainError("null homogeneous pair")
        return SpherePoint(z / n, w / n)

    def is_infinity(self, tol: float = 1e-12) -> bool:
        return abs(self.w) <= tol

    def to_affine(self) -> complex:
        if self.is_infinity():
            raise DomainError("point at infinity has no affine coordinate")
        return self.z / self.w

    def canonical(self) -> "SpherePoint":
        """Fix the projective phase: larger component made real nonnegative."""
        anchor = self.z if abs(self.z) >= abs(self.w) else self.w
        phase = anchor / abs(anchor)
        return SpherePoint(self.z / phase, self.w / phase)

    def antipode(self) -> "SpherePoint":
        return SpherePoint(-self.w.conjugate(), self.z.conjugate())


def chordal_distance(p: SpherePoint, q: SpherePoint) -> float:
    """Chordal distance on the sphere; 0 for equal points, 1 for antipodal."""
    d = abs(p.z * q.w - q.z * p.w)
    return min(d, 1.0)


@dataclass(frozen=True)
class MoebiusMatrix:
    """Det-1 complex 2x2 matrix acting on the sphere by fractional-linear maps."""

    mat: np.ndarray  # shape (2, 2), complex; treated as immutable

    def __post_init__(self) -> None:
        det = self.mat[0, 0] * self.mat[1, 1] - self.mat[0, 1] * self.mat[1, 0]
        if abs(det - 1.0) > 1e-9:
            raise DomainError(f"determinant {det} is not 1")

    @staticmethod
    def from_rows(row0, row1) -> "MoebiusMatrix":
        return MoebiusMatrix(np.array([row0, row1], dtype=complex))

    @staticmethod
    def normalized(mat: np.ndarray) -> "MoebiusMatrix":
        """Scale an invertible matrix to determinant 1 (principal square root)."""
        m = np.asarray(mat, dtype=complex)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if det == 0:
            raise DomainError("singular matrix")
        return MoebiusMatrix(m / cmath.sqrt(det))

    @staticmethod
    def identity() -> "MoebiusMatrix":
        return MoebiusMatrix(np.eye(2, dtype=complex))

    @staticmethod
    def diagonal(lam: complex) -> "MoebiusMatrix":
        return MoebiusMatrix(np.array([[lam, 0.0], [0.0, 1.0 / lam]], dtype=complex))

    def inverse(self) -> "MoebiusMatrix":
        a, b, c, d = self.mat.ravel()
        return MoebiusMatrix(np.array([[d, -b], [-c, a]], dtype=complex))

    def __matmul__(self, other: "MoebiusMatrix") -> "MoebiusMatrix":
        return MoebiusMatrix(self.mat @ other.mat)

    def trace(self) -> complex:
        return self.mat[0, 0] + self.mat[1, 1]


def apply(m: MoebiusMatrix, p: SpherePoint) -> SpherePoint:
    """Projective action on homogeneous coordinates, renormalized."""
    z = m.mat[0, 0] * p.z + m.mat[0, 1] * p.w
    w = m.mat[1, 0] * p.z + m.mat[1, 1] * p.w
    return SpherePoint.from_pair(z, w)


def operator_norm(m: MoebiusMatrix) -> float:
    """Largest singular value; equals 1 exactly on the special-unitary group."""
    t = float(np.sum(np.abs(m.mat) ** 2))
    disc = max(t * t - 4.0, 0.0)
    return math.sqrt((t + math.sqrt(disc)) / 2.0)


def spherical_derivative(m: MoebiusMatrix, p: SpherePoint) -> float:
    """Local chordal distortion of the map at p.

    For a normalized pair u this is 1/|m u|^2, which agrees with the affine
    formula |m'(z)| (1+|z|^2)/(1+|m z|^2).
    """
    v = m.mat @ np.array([p.z, p.w])
    return 1.0 / float(np.sum(np.abs(v) ** 2))


@dataclass(frozen=True)
class ChordalDisc:
    center: SpherePoint
    radius: float

    def __post_init__(self) -> None:
        if not 0.0 < self.radius <= 1.0:
            raise DomainError("chordal radius must lie in (0, 1]")

    def contains(self, p: SpherePoint, tol: float = 0.0) -> bool:
        return chordal_distance(self.center, p) < self.radius + tol


@dataclass(frozen=True)
class CartanTriple:
    """Factorization m = k · diag(lambda, 1/lambda) · kp with k, kp special-unitary.

    lambda is real >= 1; s = kp^{-1}(0) is the maximal-expansion source and
    n = k(inf) the contraction target.
    """

    k: MoebiusMatrix
    lam: float
    kp: MoebiusMatrix
    s: SpherePoint
    n: SpherePoint

    def reconstruct(self) -> MoebiusMatrix:
        a = np.array([[self.lam, 0.0], [0.0, 1.0 / self.lam]], dtype=complex)
        return MoebiusMatrix(self.k.mat @ a @ self.kp.mat)


def _hermitian_top_eigvec(h: np.ndarray, top_eig: float) -> np.ndarray:
    """Unit eigenvector of a 2x2 Hermitian matrix for its given top eigenvalue."""
    c1 = np.array([h[0, 1], top_eig - h[0, 0]])
    c2 = np.array([top_eig - h[1, 1], h[1, 0]])
    v = c1 if np.sum(np.abs(c1) ** 2) >= np.sum(np.abs(c2) ** 2) else c2
    nv = math.sqrt(float(np.sum(np.abs(v) ** 2)))
    if nv == 0.0:
        # isotropic case: any direction is extremal
        return np.array([1.0 + 0.0j, 0.0j])
    return v / nv


def _su2_with_first_column(col: np.ndarray) -> np.ndarray:
    return np.array([[col[0], -col[1].conjugate()], [col[1], col[0].conjugate()]])


def _phase_diag(phi: float) -> np.ndarray:
    e = cmath.exp(1j * phi)
    return np.array([[e, 0.0], [0.0, 1.0 / e]], dtype=complex)


def cartan(m: MoebiusMatrix) -> CartanTriple:
    """Cartan decomposition with a deterministic phase convention.

    All phases are absorbed into the unitary factors so lambda is real >= 1;
    the residual gauge circle is fixed by making k[0,0] real nonnegative
    (falling back to k[1,0] when the corner vanishes).
    """
    lam = operator_norm(m)
    if lam <= 1.0 + NORM_ONE_TOL:
        raise NormOneError("poles are not defined at operator norm 1")
    top = lam * lam
    a = m.mat
    right = _hermitian_top_eigvec(a.conj().T @ a, top)   # max-stretch source direction
    left = _hermitian_top_eigvec(a @ a.conj().T, top)    # max-stretch target direction
    # the pole s is the *least*-expanded direction: orthogonal to the top
    # right-singular vector; n is the most-expanded image direction.
    s = SpherePoint(right[0], right[1]).antipode().canonical()
    n = SpherePoint(left[0], left[1]).canonical()

    k = _su2_with_first_column(np.array([n.z, n.w]))
    kp = np.array([[s.w, -s.z], [s.z.conjugate(), s.w.conjugate()]])
    # residual diagonal phase: k^H m kp^H is diagonal up to rounding
    g = k.conj().T @ a @ kp.conj().T
    k = k @ _phase_diag(cmath.phase(g[0, 0]))
    corner = k[0, 0] if abs(k[0, 0]) > 1e-8 else k[1, 0]
    psi = -cmath.phase(corner) if abs(corner) > 0 else 0.0
    k = k @ _phase_diag(psi)
    kp = _phase_diag(-psi) @ kp
    return CartanTriple(MoebiusMatrix(k), lam, MoebiusMatrix(kp), s, n)


def image_cap_radius(norm: float, alpha: float) -> float:
    """Chordal radius around n of the image of the complement of D(s, alpha).

    Comes from pushing the boundary circle |z|^2 = alpha^2/(1-alpha^2) through
    the diagonal factor; equals alpha exactly when norm = sqrt(1-alpha^2)/alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if norm <= 1.0:
        raise DomainError("norm must exceed 1")
    a2 = alpha * alpha
    return math.sqrt((1.0 - a2) / (1.0 - a2 + norm ** 4 * a2))


def alpha_for_half_cap(norm: float) -> float:
    """Radius alpha with image of the closed disc D(s, alpha) equal to the
    complement of D(n, 1/2)."""
    if norm <= 1.0:
        raise DomainError("norm must exceed 1")
    return math.sqrt(3.0 / (3.0 + norm ** 4))


def norm_lower_bound(alpha: float) -> float:
    """Norm forced on any map squeezing the complement of an alpha-disc into a
    closed alpha-disc, for alpha < 1/3."""
    if not 0.0 < alpha < 1.0 / 3.0:
        raise DomainError("alpha must lie in (0, 1/3)")
    return math.sqrt(1.0 - 9.0 * alpha * alpha) / (3.0 * alpha)


@dataclass(frozen=True)
class HyperbolicElement:
    """Hyperbolic matrix with its fixed points and contraction constant.

    c1 is the chordal Lipschitz constant of the inverse conjugator, i.e. the
    squared operator norm of the det-normalized P^{-1}; the n-th power maps the
    complement of D(repelling, c1 |lam|^-n) into the closed disc of the same
    radius around the attracting point.
    """

    m: MoebiusMatrix
    lambda_eig: complex
    attracting: SpherePoint
    repelling: SpherePoint
    conjugator: MoebiusMatrix
    c1: float


def _eigvec(mat: np.ndarray, eig: complex) -> np.ndarray:
    c1 = np.array([mat[0, 1], eig - mat[0, 0]])
    c2 = np.array([eig - mat[1, 1], mat[1, 0]])
    v = c1 if np.sum(np.abs(c1) ** 2) >= np.sum(np.abs(c2) ** 2) else c2
    return v / math.sqrt(float(np.sum(np.abs(v) ** 2)))


def hyperbolic_data(m: MoebiusMatrix, tol: float = 1e-9) -> HyperbolicElement:
    tr = m.trace()
    if abs(tr) <= 2.0 + tol:
        raise NotHyperbolicError(f"|trace| = {abs(tr)} is not > 2")
    disc = cmath.sqrt(tr * tr - 4.0)
    lam1 = (tr + disc) / 2.0
    lam2 = (tr - disc) / 2.0
    lam = lam1 if abs(lam1) > abs(lam2) else lam2
    v_att = _eigvec(m.mat, lam)
    v_rep = _eigvec(m.mat, 1.0 / lam)
    p_inv = np.column_stack([v_att, v_rep])
    p_inv = MoebiusMatrix.normalized(p_inv)
    c1 = operator_norm(p_inv) ** 2
    return HyperbolicElement(
        m=m,
        lambda_eig=lam,
        attracting=SpherePoint(v_att[0], v_att[1]).canonical(),
        repelling=SpherePoint(v_rep[0], v_rep[1]).canonical(),
        conjugator=p_inv.inverse(),
        c1=c1,
    )


def chordal_circle_points(center: SpherePoint, radius: float, count: int) -> list[SpherePoint]:
    """Sample points at exact chordal distance `radius` from `center`."""
    if not 0.0 < radius < 1.0:
        raise DomainError("need a radius in (0, 1)")
    # circle of chordal radius r around [0:1] sits at |z| = r/sqrt(1-r^2);
    # the SU(2) map below sends [0:1] to the center.
    rho = radius / math.sqrt(1.0 - radius * radius)
    move = np.array([[center.w.conjugate(), center.z], [-center.z.conjugate(), center.w]])
    out = []
    for j in range(count):
        p = SpherePoint.from_affine(rho * cmath.exp(2j * math.pi * j / count))
        v = move @ np.array([p.z, p.w])
        out.append(SpherePoint.from_pair(v[0], v[1]))
    return out
