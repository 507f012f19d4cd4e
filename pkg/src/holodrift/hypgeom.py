"""Upper half-plane geometry: built-in Fuchsian surfaces, fundamental-polygon
tessellation tracking, free-word reduction, and cusp charts.

Both presets share the ideal quadrilateral {|x| <= 1} minus the two half-discs
of radius 1/2 at +-1/2, with different side pairings.  Words over the letters
'a', 'A', 'b', 'B' (uppercase = inverse) are plain freely reduced strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce as _reduce

import numpy as np

EDGE_TOL = 1e-9
LETTERS = "aAbB"


class UnknownPresetError(ValueError):
    pass


class StepTooLargeError(ValueError):
    """Point is neither in the current tile nor in any neighbor."""


class DegenerateAnnulusError(ValueError):
    pass


class GeometryError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# words

def letter_inverse(g: str) -> str:
    return g.swapcase()


def word_inverse(w: str) -> str:
    return w[::-1].swapcase()


def word_reduce(letters) -> str:
    """Free reduction of a letter sequence; idempotent."""
    stack: list[str] = []
    for g in letters:
        if g not in LETTERS:
            raise ValueError(f"unknown generator label {g!r}")
        if stack and stack[-1] == g.swapcase():
            stack.pop()
        else:
            stack.append(g)
    return "".join(stack)


def word_product(w1: str, w2: str) -> str:
    """Reduced product of two already-reduced words."""
    stack = list(w1)
    for g in w2:
        if stack and stack[-1] == g.swapcase():
            stack.pop()
        else:
            stack.append(g)
    return "".join(stack)


# ---------------------------------------------------------------------------
# half-plane primitives

@dataclass(frozen=True)
class HalfPlanePoint:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not self.y > 0.0:
            raise ValueError("half-plane points need y > 0")


def hyp_distance(p: HalfPlanePoint, q: HalfPlanePoint) -> float:
    return hyp_distance_xy(p.x, p.y, q.x, q.y)


def hyp_distance_xy(x1, y1, x2, y2):
    """Distance for the metric (dx^2+dy^2)/y^2; stable for nearby points."""
    d2 = (x1 - x2) ** 2 + (y1 - y2) ** 2
    return 2.0 * np.arcsinh(np.sqrt(d2 / (4.0 * y1 * y2)))


@dataclass(frozen=True)
class RealMoebius:
    """Det-1 real 2x2 matrix acting on the upper half-plane by isometries."""

    mat: np.ndarray

    def __post_init__(self) -> None:
        det = self.mat[0, 0] * self.mat[1, 1] - self.mat[0, 1] * self.mat[1, 0]
        if abs(det - 1.0) > 1e-12:
            raise ValueError(f"determinant {det} is not 1")

    @staticmethod
    def from_rows(row0, row1) -> "RealMoebius":
        return RealMoebius(np.array([row0, row1], dtype=float))

    @staticmethod
    def identity() -> "RealMoebius":
        return RealMoebius(np.eye(2))

    def inverse(self) -> "RealMoebius":
        a, b, c, d = self.mat.ravel()
        return RealMoebius(np.array([[d, -b], [-c, a]]))

    def __matmul__(self, other: "RealMoebius") -> "RealMoebius":
        return RealMoebius(self.mat @ other.mat)

    def apply(self, p: HalfPlanePoint) -> HalfPlanePoint:
        x, y = mobius_xy(self.mat, p.x, p.y)
        return HalfPlanePoint(float(x), float(y))

    def trace(self) -> float:
        return float(self.mat[0, 0] + self.mat[1, 1])


def mobius_xy(mat, x, y):
    """Apply a det-1 real Moebius matrix to half-plane coordinates.

    Works on scalars or numpy arrays.
    """
    a, b, c, d = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    u = c * x + d
    den = u * u + (c * y) ** 2
    return ((a * x + b) * u + a * c * y * y) / den, y / den


# ---------------------------------------------------------------------------
# fundamental polygon

@dataclass(frozen=True)
class PolygonSide:
    """Half-plane region p0 + p1*x + p2*(x^2+y^2) >= 0; crossing it enters the
    neighbor tile labelled by `letter`."""

    letter: str
    coefs: tuple[float, float, float]

    def value(self, x, y):
        p0, p1, p2 = self.coefs
        return p0 + p1 * x + p2 * (x * x + y * y)


@dataclass(frozen=True)
class Polygon:
    sides: tuple[PolygonSide, ...]

    def side_values(self, x, y):
        return np.array([s.value(x, y) for s in self.sides])

    def contains(self, x: float, y: float, tol: float = EDGE_TOL) -> bool:
        return bool(np.all(self.side_values(x, y) >= -tol))

    def coef_array(self) -> np.ndarray:
        return np.array([s.coefs for s in self.sides])


# ---------------------------------------------------------------------------
# cusps and presets

@dataclass(frozen=True)
class CuspChart:
    """Horodisc pair around one puncture.

    `conjugator` sends the cusp point to infinity; in that chart the stabilizer
    is the translation by `width`, horodiscs are {y > level}, and `charts`
    lists the conjugators for every ideal vertex of the base polygon in this
    cusp's orbit (primary first).  `loop_word` translates by +width there.
    """

    name: str
    conjugator: RealMoebius
    width: float
    level_inner: float
    level_outer: float
    loop_word: str
    charts: tuple[RealMoebius, ...]

    def heights(self, x, y):
        """Chart heights of a point under every vertex chart (rows)."""
        return np.array([mobius_xy(c.mat, x, y)[1] for c in self.charts])


def cauchy_parameter(chart: CuspChart) -> float:
    """Scale of the exit-winding law for the annulus between the horodiscs.

    Equals log(1/r) for the radius ratio r of the two horocycle images in the
    punctured-disc coordinate exp(2*pi*i*z/width).
    """
    if not chart.level_inner > chart.level_outer:
        raise DegenerateAnnulusError("inner horodisc must sit above the outer one")
    return 2.0 * math.pi * (chart.level_inner - chart.level_outer) / chart.width


@dataclass(frozen=True)
class SurfacePreset:
    name: str
    generators: tuple[tuple[str, RealMoebius], ...]
    polygon: Polygon
    cusps: tuple[CuspChart, ...]
    base: HalfPlanePoint
    min_displacement: float

    def gen(self, letter: str) -> RealMoebius:
        for lab, m in self.generators:
            if lab == letter:
                return m
        raise KeyError(letter)

    def word_matrix(self, w: str) -> RealMoebius:
        mats = [self.gen(g) for g in w]
        return _reduce(lambda m1, m2: m1 @ m2, mats, RealMoebius.identity())

    def orbit_candidates(self, max_len: int = 2) -> list[tuple[str, HalfPlanePoint]]:
        """Orbit points of the base for all reduced words up to max_len."""
        words = [""]
        frontier = [""]
        for _ in range(max_len):
            nxt = []
            for w in frontier:
                for g in LETTERS:
                    if w and w[-1] == g.swapcase():
                        continue
                    nxt.append(w + g)
            words.extend(nxt)
            frontier = nxt
        return [(w, self.word_matrix(w).apply(self.base)) for w in words]


def _rm(rows) -> RealMoebius:
    return RealMoebius(np.array(rows, dtype=float))


def _build_thrice_punctured() -> SurfacePreset:
    a = _rm([[1, 2], [0, 1]])
    b = _rm([[1, 0], [2, 1]])
    gens = (("a", a), ("A", a.inverse()), ("b", b), ("B", b.inverse()))
    polygon = Polygon((
        PolygonSide("a", (1.0, -1.0, 0.0)),      # x <= 1
        PolygonSide("A", (1.0, 1.0, 0.0)),       # x >= -1
        PolygonSide("b", (0.0, -1.0, 1.0)),      # outside |z - 1/2| = 1/2
        PolygonSide("B", (0.0, 1.0, 1.0)),       # outside |z + 1/2| = 1/2
    ))
    level_outer, level_inner = 1.2, 2.2
    ident = RealMoebius.identity()
    s0 = _rm([[0, -1], [1, 0]])                  # 0 -> inf
    s1 = _rm([[0, -1], [1, -1]])                 # 1 -> inf
    s1m = _rm([[0, -1], [1, 1]])                 # -1 -> inf (same cusp as 1)
    cusps = (
        CuspChart("inf", ident, 2.0, level_inner, level_outer, "a", (ident,)),
        CuspChart("zero", s0, 2.0, level_inner, level_outer, "B", (s0,)),
        CuspChart("one", s1, 2.0, level_inner, level_outer, "bA", (s1, s1m)),
    )
    return SurfacePreset(
        name="thrice_punctured",
        generators=gens,
        polygon=polygon,
        cusps=cusps,
        base=HalfPlanePoint(0.0, 1.0),
        min_displacement=math.acosh(3.0),
    )


def _build_punctured_torus() -> SurfacePreset:
    a = _rm([[1, 1], [1, 2]])
    b = _rm([[1, -1], [-1, 2]])
    gens = (("a", a), ("A", a.inverse()), ("b", b), ("B", b.inverse()))
    polygon = Polygon((
        PolygonSide("B", (1.0, -1.0, 0.0)),      # x <= 1
        PolygonSide("A", (1.0, 1.0, 0.0)),       # x >= -1
        PolygonSide("a", (0.0, -1.0, 1.0)),      # outside |z - 1/2| = 1/2
        PolygonSide("b", (0.0, 1.0, 1.0)),       # outside |z + 1/2| = 1/2
    ))
    level_outer, level_inner = 1.5, 2.5
    ident = RealMoebius.identity()
    charts = (
        ident,                                   # vertex inf
        _rm([[2, -1], [-1, 1]]),                 # vertex 1  (= a^{-1})
        _rm([[2, 1], [1, 1]]),                   # vertex -1 (= b^{-1})
        _rm([[3, -1], [1, 0]]),                  # vertex 0  (= (ab)^{-1})
    )
    cusps = (
        CuspChart("inf", ident, 6.0, level_inner, level_outer, "BAba", charts),
    )
    return SurfacePreset(
        name="punctured_torus",
        generators=gens,
        polygon=polygon,
        cusps=cusps,
        base=HalfPlanePoint(0.0, 1.0),
        min_displacement=math.acosh(3.5),
    )


_PRESETS = {
    "thrice_punctured": _build_thrice_punctured,
    "punctured_torus": _build_punctured_torus,
}


def preset_surface(name: str) -> SurfacePreset:
    try:
        return _PRESETS[name]()
    except KeyError:
        raise UnknownPresetError(
            f"unknown preset {name!r}; choose from {sorted(_PRESETS)}"
        ) from None


def preset_from_dict(spec: dict) -> SurfacePreset:
    """Build a custom surface from config data (same polygon conventions as
    the presets; the minimal displacement at the base point must be supplied)."""
    a = _rm(spec["generators"]["a"])
    b = _rm(spec["generators"]["b"])
    gens = (("a", a), ("A", a.inverse()), ("b", b), ("B", b.inverse()))
    sides = tuple(
        PolygonSide(s["letter"], tuple(float(c) for c in s["coefs"]))
        for s in spec["polygon"]
    )
    cusps = []
    for c in spec["cusps"]:
        charts = tuple(_rm(m) for m in c["charts"])
        cusps.append(CuspChart(
            name=c["name"],
            conjugator=charts[0],
            width=float(c["width"]),
            level_inner=float(c["level_inner"]),
            level_outer=float(c["level_outer"]),
            loop_word=c["loop_word"],
            charts=charts,
        ))
    bx, by = spec["base"]
    return SurfacePreset(
        name=spec.get("name", "custom"),
        generators=gens,
        polygon=Polygon(sides),
        cusps=tuple(cusps),
        base=HalfPlanePoint(float(bx), float(by)),
        min_displacement=float(spec["min_displacement"]),
    )


# ---------------------------------------------------------------------------
# tessellation tracking

def locate_step(preset: SurfacePreset, p: HalfPlanePoint, current: str) -> str:
    """Word of the tile containing p, given that p lies in the tile `current`
    or one of its side neighbors.

    Within EDGE_TOL of a side the lexicographically smaller word wins, so the
    assignment is deterministic on boundaries.
    """
    q = preset.word_matrix(word_inverse(current)).apply(p)
    vals = preset.polygon.side_values(q.x, q.y)
    candidates = []
    if np.all(vals >= -EDGE_TOL):
        candidates.append(current)
    for side, v in zip(preset.polygon.sides, vals):
        if v < EDGE_TOL:
            g = side.letter
            q2 = preset.gen(letter_inverse(g)).apply(q)
            if preset.polygon.contains(q2.x, q2.y):
                candidates.append(word_product(current, g))
    if not candidates:
        raise StepTooLargeError(
            "point is outside the current tile and all of its neighbors"
        )
    return min(candidates)


def nearest_orbit_point(
    preset: SurfacePreset,
    p: HalfPlanePoint,
    current: str,
    radius: float,
) -> tuple[str, float] | None:
    """Closest orbit point of the base within `radius`, searched over tiles at
    word-distance <= 2 from `current`; None when there is none."""
    q = preset.word_matrix(word_inverse(current)).apply(p)
    best = None
    for w, pt in preset.orbit_candidates():
        d = hyp_distance(q, pt)
        if d <= radius and (best is None or d < best[1]):
            best = (word_product(current, w), d)
    return best
