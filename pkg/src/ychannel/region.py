"""Exact-rational DoF region of the three-user MIMO Y channel.

The region is a polytope in the six message DoFs
``(d12, d13, d21, d23, d31, d32)`` cut out by 18 halfspaces: six
nonnegativity rows, a transmit (source) and a receive (sink) bound per user,
and one relay bound per permutation of the users.  Everything here is done
with :class:`fractions.Fraction` and plain integers so that membership and
vertex identity are decided exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from math import lcm
from typing import Iterable, Sequence

__all__ = [
    "DIRECTIONS",
    "USERS",
    "AntennaConfig",
    "DofTuple",
    "Halfspace",
    "HalfspaceSystem",
    "Vertex",
    "VertexSet",
    "RegionError",
    "build_region",
    "contains",
    "violations",
    "enumerate_vertices",
    "max_weighted",
    "parse_rational",
]

USERS = (1, 2, 3)
# canonical coordinate order of a DoF tuple
DIRECTIONS: tuple[tuple[int, int], ...] = ((1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2))
_INDEX = {d: k for k, d in enumerate(DIRECTIONS)}
DIM = len(DIRECTIONS)


class RegionError(ValueError):
    """Raised for malformed configurations, tuples or objectives."""


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"`` / ``"p"`` strings (or ints) into a Fraction.

    Floats are rejected on purpose; region arithmetic never goes through
    binary floating point.
    """
    if isinstance(text, bool):
        raise RegionError(f"not a rational: {text!r}")
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if not isinstance(text, str):
        raise RegionError(f"not a rational: {text!r}")
    s = text.strip()
    if not s or "." in s or "e" in s.lower():
        raise RegionError(f"rationals must be given as 'p/q' strings, got {text!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise RegionError(f"not a rational: {text!r}") from exc


@dataclass(frozen=True)
class AntennaConfig:
    """Antenna counts ``(M1, M2, M3, N)`` of the three users and the relay."""

    M1: int
    M2: int
    M3: int
    N: int

    def __post_init__(self):
        for name in ("M1", "M2", "M3", "N"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise RegionError(f"{name} must be a positive integer, got {value!r}")

    @classmethod
    def parse(cls, text: str) -> "AntennaConfig":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise RegionError(f"expected 'M1,M2,M3,N', got {text!r}")
        try:
            values = [int(p) for p in parts]
        except ValueError as exc:
            raise RegionError(f"antenna counts must be integers: {text!r}") from exc
        return cls(*values)

    @property
    def M(self) -> tuple[int, int, int]:
        return (self.M1, self.M2, self.M3)

    def antennas(self, user: int) -> int:
        return self.M[user - 1]

    def scaled(self, k: int) -> "AntennaConfig":
        return AntennaConfig(self.M1 * k, self.M2 * k, self.M3 * k, self.N * k)

    def relabeled(self, perm: Sequence[int]) -> "AntennaConfig":
        """Config seen after relabeling: new user ``a`` is old user ``perm[a-1]``."""
        M = self.M
        return AntennaConfig(M[perm[0] - 1], M[perm[1] - 1], M[perm[2] - 1], self.N)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.M1, self.M2, self.M3, self.N)

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.as_tuple())


@dataclass(frozen=True)
class DofTuple:
    """Six nonnegative rational DoFs in canonical order ``d12,d13,d21,d23,d31,d32``."""

    coords: tuple[Fraction, ...]

    def __post_init__(self):
        coords = tuple(parse_rational(c) for c in self.coords)
        if len(coords) != DIM:
            raise RegionError(f"a DoF tuple has {DIM} entries, got {len(coords)}")
        if any(c < 0 for c in coords):
            raise RegionError(f"DoF entries must be nonnegative: {coords}")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, *values) -> "DofTuple":
        if len(values) == 1 and not isinstance(values[0], (int, str, Fraction)):
            values = tuple(values[0])
        return cls(tuple(values))

    @classmethod
    def parse(cls, text: str) -> "DofTuple":
        return cls(tuple(parse_rational(p) for p in text.split(",")))

    @classmethod
    def from_mapping(cls, d: dict[tuple[int, int], Fraction | int]) -> "DofTuple":
        return cls(tuple(Fraction(d.get(k, 0)) for k in DIRECTIONS))

    @classmethod
    def zero(cls) -> "DofTuple":
        return cls((0,) * DIM)

    def __getitem__(self, key: tuple[int, int]) -> Fraction:
        return self.coords[_INDEX[key]]

    def __iter__(self):
        return iter(self.coords)

    def total(self) -> Fraction:
        return sum(self.coords, Fraction(0))

    def scaled(self, k) -> "DofTuple":
        return DofTuple(tuple(c * k for c in self.coords))

    def relabeled(self, perm: Sequence[int]) -> "DofTuple":
        """Tuple in new labels; new user ``a`` is old user ``perm[a-1]``."""
        return DofTuple(tuple(self[(perm[a - 1], perm[b - 1])] for a, b in DIRECTIONS))

    def as_strings(self) -> list[str]:
        return [str(c) for c in self.coords]

    def __str__(self) -> str:
        return "(" + ",".join(self.as_strings()) + ")"


@dataclass(frozen=True)
class Halfspace:
    """``coeffs . d <= bound`` with a provenance label.

    ``kind`` is one of ``nonneg``, ``source``, ``sink``, ``relay``; ``label``
    is the direction (nonneg), the user (source/sink) or the permutation
    (relay) the row was generated from.
    """

    coeffs: tuple[int, ...]
    bound: Fraction
    kind: str
    label: tuple[int, ...]

    @property
    def tag(self) -> str:
        return f"{self.kind}({','.join(str(v) for v in self.label)})"

    def lhs(self, d: DofTuple) -> Fraction:
        return sum((c * x for c, x in zip(self.coeffs, d.coords) if c), Fraction(0))

    def holds(self, d: DofTuple) -> bool:
        return self.lhs(d) <= self.bound

    def describe(self) -> str:
        terms = []
        for c, (i, j) in zip(self.coeffs, DIRECTIONS):
            if c == 1:
                terms.append(f"d{i}{j}")
            elif c == -1:
                terms.append(f"-d{i}{j}")
        return f"{self.tag}: {' + '.join(terms)} <= {self.bound}"


@dataclass(frozen=True)
class HalfspaceSystem:
    config: AntennaConfig
    halfspaces: tuple[Halfspace, ...]

    def __len__(self) -> int:
        return len(self.halfspaces)

    def __iter__(self):
        return iter(self.halfspaces)

    def by_kind(self, kind: str) -> list[Halfspace]:
        return [h for h in self.halfspaces if h.kind == kind]

    def without(self, *kinds: str) -> "HalfspaceSystem":
        return HalfspaceSystem(self.config, tuple(h for h in self.halfspaces if h.kind not in kinds))

    def to_json(self, vertices: "VertexSet | None" = None) -> dict:
        out = {
            "config": dict(zip(("M1", "M2", "M3", "N"), self.config.as_tuple())),
            "halfspaces": [
                {"coeffs": list(h.coeffs), "bound": str(h.bound), "tag": h.tag}
                for h in self.halfspaces
            ],
        }
        if vertices is not None:
            out["vertices"] = vertices.to_json()
        return out


def _row(pairs: Iterable[tuple[int, int]], value: int = 1) -> tuple[int, ...]:
    row = [0] * DIM
    for p in pairs:
        row[_INDEX[p]] = value
    return tuple(row)


def build_region(config: AntennaConfig) -> HalfspaceSystem:
    """The 18-halfspace description of the region for ``config``."""
    rows: list[Halfspace] = []
    for direction in DIRECTIONS:
        rows.append(Halfspace(_row([direction], -1), Fraction(0), "nonneg", direction))
    for i in USERS:
        j, k = (u for u in USERS if u != i)
        rows.append(Halfspace(_row([(i, j), (i, k)]), Fraction(config.antennas(i)), "source", (i,)))
    for i in USERS:
        j, k = (u for u in USERS if u != i)
        rows.append(Halfspace(_row([(j, i), (k, i)]), Fraction(config.antennas(i)), "sink", (i,)))
    for p1, p2, p3 in permutations(USERS):
        rows.append(Halfspace(_row([(p1, p2), (p1, p3), (p2, p3)]), Fraction(config.N),
                              "relay", (p1, p2, p3)))
    return HalfspaceSystem(config, tuple(rows))


def violations(system: HalfspaceSystem, d: DofTuple) -> list[Halfspace]:
    return [h for h in system.halfspaces if not h.holds(d)]


def contains(system: HalfspaceSystem, d: DofTuple) -> bool:
    return all(h.holds(d) for h in system.halfspaces)


# ---------------------------------------------------------------------------
# vertex enumeration
# ---------------------------------------------------------------------------

def _det_adj(rows: Sequence[Sequence[int]]) -> tuple[int, list[list[int]]] | None:
    """Determinant and adjugate of a small integer matrix, or None if singular.

    Fraction-free (Bareiss) Gauss-Jordan on ``[A | I]``: every division is
    exact, the left block ends as ``det * I`` and the right block as the
    adjugate.  The sign is normalized so the returned determinant is positive.
    """
    n = len(rows)
    a = [list(r) + [int(i == k) for k in range(n)] for i, r in enumerate(rows)]
    prev = 1
    sign = 1
    for k in range(n):
        if a[k][k] == 0:
            piv = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if piv is None:
                return None
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        pk = a[k][k]
        rk = a[k]
        for i in range(n):
            if i == k:
                continue
            ri = a[i]
            f = ri[k]
            a[i] = [(pk * x - f * y) // prev for x, y in zip(ri, rk)]
        prev = pk
    det = prev
    adj = [r[n:] for r in a]
    if sign < 0:
        adj = [[-x for x in r] for r in adj]
        det = -det
    if det < 0:
        det, adj = -det, [[-x for x in r] for r in adj]
    return det, adj


@lru_cache(maxsize=8)
def _basis_solvers(coeffs: tuple[tuple[int, ...], ...]):
    """All nonsingular 6-row subsets of ``coeffs`` with their integer inverses.

    Only depends on the coefficient rows, which are the same for every
    antenna configuration, so the ~18k eliminations run once per process.
    """
    out = []
    for subset in combinations(range(len(coeffs)), DIM):
        res = _det_adj([coeffs[i] for i in subset])
        if res is not None:
            out.append((subset, res[0], res[1]))
    return tuple(out)


@dataclass(frozen=True)
class Vertex:
    point: DofTuple
    tight: tuple[int, ...]  # indices into the halfspace system


@dataclass(frozen=True)
class VertexSet:
    system: HalfspaceSystem
    vertices: tuple[Vertex, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def points(self) -> list[DofTuple]:
        return [v.point for v in self.vertices]

    def __contains__(self, d: DofTuple) -> bool:
        return any(v.point == d for v in self.vertices)

    def to_json(self) -> list[dict]:
        return [{"coords": v.point.as_strings(), "tight": list(v.tight)} for v in self.vertices]


def enumerate_vertices(system: HalfspaceSystem) -> VertexSet:
    """All vertices of the polytope, sorted lexicographically.

    Every rank-6 subset of halfspaces is solved as an equality system; the
    feasible solutions are the vertices.  Degenerate vertices (more than six
    tight rows) are merged and carry the full tight set.
    """
    hs = system.halfspaces
    coeffs = tuple(h.coeffs for h in hs)
    scale = lcm(*(h.bound.denominator for h in hs))
    b = [int(h.bound * scale) for h in hs]

    found: dict[tuple[Fraction, ...], None] = {}
    for subset, det, adj in _basis_solvers(coeffs):
        bs = [b[i] for i in subset]
        num = [sum(a * x for a, x in zip(row, bs)) for row in adj]
        # feasibility in integers: coeffs . num <= b * det
        ok = True
        for row, bi in zip(coeffs, b):
            if sum(c * x for c, x in zip(row, num) if c) > bi * det:
                ok = False
                break
        if ok:
            found.setdefault(tuple(Fraction(x, det * scale) for x in num), None)

    vertices = []
    for coords in sorted(found):
        point = DofTuple(coords)
        tight = tuple(k for k, h in enumerate(hs) if h.lhs(point) == h.bound)
        vertices.append(Vertex(point, tight))
    return VertexSet(system, tuple(vertices))


def max_weighted(system: HalfspaceSystem, weights: Sequence, vertices: VertexSet | None = None
                 ) -> tuple[Fraction, DofTuple]:
    """Maximize ``sum w_ij d_ij`` over the region.

    Returns the exact optimum and the first maximizing vertex in canonical
    order.
    """
    w = [parse_rational(x) for x in weights]
    if len(w) != DIM:
        raise RegionError(f"need {DIM} weights, got {len(w)}")
    if any(x < 0 for x in w):
        raise RegionError("weights must be nonnegative")
    if all(x == 0 for x in w):
        raise RegionError("degenerate objective")
    if vertices is None:
        vertices = enumerate_vertices(system)
    best_val, best = None, None
    for v in vertices:
        val = sum((a * x for a, x in zip(w, v.point.coords)), Fraction(0))
        if best_val is None or val > best_val:
            best_val, best = val, v.point
    return best_val, best
