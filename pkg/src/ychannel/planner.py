"""Pattern decomposition of a DoF tuple into pairwise/cyclic exchanges.

A tuple is first scaled to integers (symbol extension), then users are
relabeled so that one of two orientation patterns holds:

* Case I: ``d12>=d21, d31>=d13, d23>=d32`` (a cyclic dominance).  Three
  pairwise exchanges (PDE), one cyclic exchange 1->2->3->1 (CDE) of weight
  ``gamma`` and residual streams 2->3 and 3->1.
* Case II: ``d12>=d21, d13>d31, d23>=d32`` (transitive).  Three pairwise
  exchanges and residual streams 1->2, 1->3, 2->3.

All plan quantities are in relabeled, symbol-extended integer units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from math import lcm

from .region import (
    DIRECTIONS,
    USERS,
    AntennaConfig,
    DofTuple,
    RegionError,
    build_region,
    violations,
)

__all__ = [
    "Relabeling",
    "Block",
    "PatternPlan",
    "PlanError",
    "FeasibilityCheck",
    "FeasibilityReport",
    "integerize",
    "classify",
    "plan",
    "feasibility_report",
    "CASE_I_BLOCKS",
    "CASE_II_BLOCKS",
]

# relay decoding blocks in the order they occupy the relay subspace
CASE_I_BLOCKS = ("NC12", "NC13", "NC23", "CDE_A", "CDE_B", "R23", "R31")
CASE_II_BLOCKS = ("NC12", "NC13", "NC23", "R12", "R13", "R23")


class PlanError(RegionError):
    """Tuple not in the region, or an internal planning inconsistency."""


@dataclass(frozen=True)
class Relabeling:
    """User relabeling; new user ``a`` is original user ``perm[a-1]``."""

    perm: tuple[int, int, int] = (1, 2, 3)

    def __post_init__(self):
        if sorted(self.perm) != [1, 2, 3]:
            raise PlanError(f"not a permutation of (1,2,3): {self.perm}")

    @property
    def inverse(self) -> "Relabeling":
        inv = [0, 0, 0]
        for a, orig in enumerate(self.perm, start=1):
            inv[orig - 1] = a
        return Relabeling(tuple(inv))

    def to_original(self, user: int) -> int:
        return self.perm[user - 1]

    def to_relabeled(self, user: int) -> int:
        return self.perm.index(user) + 1

    def direction_to_original(self, direction: tuple[int, int]) -> tuple[int, int]:
        return (self.to_original(direction[0]), self.to_original(direction[1]))

    def direction_to_relabeled(self, direction: tuple[int, int]) -> tuple[int, int]:
        return (self.to_relabeled(direction[0]), self.to_relabeled(direction[1]))

    def apply(self, d: DofTuple) -> DofTuple:
        return d.relabeled(self.perm)

    def rotated(self, r: int) -> "Relabeling":
        p = self.perm
        return Relabeling((p[r % 3], p[(r + 1) % 3], p[(r + 2) % 3]))

    @property
    def is_identity(self) -> bool:
        return self.perm == (1, 2, 3)


@dataclass(frozen=True)
class Block:
    kind: str  # NC12, NC13, NC23, CDE_A, CDE_B, R12, R13, R23, R31
    size: int


@dataclass(frozen=True)
class PatternPlan:
    case: str  # "I" or "II"
    relabeling: Relabeling
    t: int
    d_int: DofTuple  # relabeled, extended tuple (integers)
    pde_weights: tuple[int, int, int]  # pairs (1,2), (1,3), (2,3)
    gamma: int
    residuals: dict[tuple[int, int], int]
    J: int  # relay dimensions used across the t-symbol extension
    blocks: tuple[Block, ...]
    config: AntennaConfig = field(repr=False)  # original (unextended) config

    @property
    def block_sizes(self) -> list[int]:
        return [b.size for b in self.blocks]

    @property
    def relay_dims_per_use(self) -> Fraction:
        return Fraction(self.J, self.t)

    @property
    def config_ext(self) -> AntennaConfig:
        """Relabeled config with all antenna counts multiplied by t."""
        return self.config.relabeled(self.relabeling.perm).scaled(self.t)

    def stream_sizes(self) -> dict[tuple[int, int], dict[str, int]]:
        """Per relabeled direction, the stream count of each kind (p/c/r)."""
        w12, w13, w23 = self.pde_weights
        out = {dirn: {"p": 0, "c": 0, "r": 0} for dirn in DIRECTIONS}
        for (i, j), w in (((1, 2), w12), ((1, 3), w13), ((2, 3), w23)):
            out[(i, j)]["p"] = w
            out[(j, i)]["p"] = w
        if self.case == "I":
            for dirn in ((1, 2), (2, 3), (3, 1)):
                out[dirn]["c"] = self.gamma
        for dirn, size in self.residuals.items():
            out[dirn]["r"] = size
        return out

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "permutation": list(self.relabeling.perm),
            "t": self.t,
            "dof_extended": [int(x) for x in self.d_int],
            "pde_weights": {"1<->2": self.pde_weights[0], "1<->3": self.pde_weights[1],
                            "2<->3": self.pde_weights[2]},
            "gamma": self.gamma,
            "residuals": {f"{i}->{j}": n for (i, j), n in self.residuals.items()},
            "J": self.J,
            "blockLayout": [{"kind": b.kind, "size": b.size} for b in self.blocks],
        }


def integerize(d: DofTuple) -> tuple[int, DofTuple]:
    """Smallest extension t with t*d integral, and t*d."""
    t = lcm(*(x.denominator for x in d))
    return t, d.scaled(t)


def _excesses(d: DofTuple) -> tuple[Fraction, Fraction, Fraction]:
    return (d[(1, 2)] - d[(2, 1)], d[(2, 3)] - d[(3, 2)], d[(3, 1)] - d[(1, 3)])


def _is_case_one(d: DofTuple) -> bool:
    return d[(1, 2)] >= d[(2, 1)] and d[(3, 1)] >= d[(1, 3)] and d[(2, 3)] >= d[(3, 2)]


def _is_case_two(d: DofTuple) -> bool:
    return d[(1, 2)] >= d[(2, 1)] and d[(1, 3)] > d[(3, 1)] and d[(2, 3)] >= d[(3, 2)]


def classify(d: DofTuple) -> tuple[Relabeling, str]:
    """Relabeling that brings ``d`` into Case I (preferred) or Case II.

    For Case I the rotation is canonicalized so that ``d12 - d21`` is the
    smallest of the three cyclic excesses.
    """
    perms = [Relabeling(p) for p in permutations(USERS)]
    for rel in perms:
        dd = rel.apply(d)
        if _is_case_one(dd):
            ex = _excesses(dd)
            r = ex.index(min(ex))
            return rel.rotated(r), "I"
    for rel in perms:
        if _is_case_two(rel.apply(d)):
            return rel, "II"
    # every orientation of three pairs is cyclic or transitive
    raise AssertionError(f"classification failed for {d}; this is a bug")


def plan(d: DofTuple, config: AntennaConfig) -> PatternPlan:
    """Decompose ``d`` into the transmission patterns for ``config``."""
    bad = violations(build_region(config), d)
    if bad:
        raise PlanError(f"{d} not in D* for config {config}: violates {bad[0].describe()}")

    t, dext = integerize(d)
    rel, case = classify(dext)
    x = {k: int(v) for k, v in zip(DIRECTIONS, rel.apply(dext))}

    if case == "I":
        gamma = x[(1, 2)] - x[(2, 1)]
        weights = (x[(2, 1)], x[(1, 3)], x[(3, 2)])
        residuals = {
            (2, 3): x[(2, 3)] - x[(3, 2)] - gamma,
            (3, 1): x[(3, 1)] - x[(1, 3)] - gamma,
        }
        J = x[(2, 1)] + x[(2, 3)] + x[(3, 1)]
        sizes = (*weights, gamma, gamma, residuals[(2, 3)], residuals[(3, 1)])
        blocks = tuple(Block(k, s) for k, s in zip(CASE_I_BLOCKS, sizes))
    else:
        gamma = 0
        weights = (x[(2, 1)], x[(3, 1)], x[(3, 2)])
        residuals = {
            (1, 2): x[(1, 2)] - x[(2, 1)],
            (1, 3): x[(1, 3)] - x[(3, 1)],
            (2, 3): x[(2, 3)] - x[(3, 2)],
        }
        J = x[(1, 2)] + x[(1, 3)] + x[(2, 3)]
        sizes = (*weights, residuals[(1, 2)], residuals[(1, 3)], residuals[(2, 3)])
        blocks = tuple(Block(k, s) for k, s in zip(CASE_II_BLOCKS, sizes))

    if any(r < 0 for r in residuals.values()) or gamma < 0:
        raise AssertionError(f"negative residual in plan for {d}; this is a bug")
    if sum(sizes) != J:
        raise AssertionError(f"block layout does not fill J={J}; this is a bug")

    return PatternPlan(
        case=case,
        relabeling=rel,
        t=t,
        d_int=rel.apply(dext),
        pde_weights=weights,
        gamma=gamma,
        residuals=residuals,
        J=J,
        blocks=blocks,
        config=config,
    )


@dataclass(frozen=True)
class FeasibilityCheck:
    name: str
    lhs: int
    rhs: int

    @property
    def ok(self) -> bool:
        return self.lhs >= self.rhs

    @property
    def margin(self) -> int:
        return self.lhs - self.rhs

    def __str__(self) -> str:
        rel = ">=" if self.ok else "<"
        return f"{self.name}: {self.lhs} {rel} {self.rhs}"


@dataclass(frozen=True)
class FeasibilityReport:
    checks: tuple[FeasibilityCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[FeasibilityCheck]:
        return [c for c in self.checks if not c.ok]

    def __getitem__(self, name: str) -> FeasibilityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def raise_for_failures(self) -> None:
        if not self.ok:
            raise PlanError("infeasible plan: " + "; ".join(str(c) for c in self.failures))

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [{"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "ok": c.ok}
                       for c in self.checks],
        }


def feasibility_report(p: PatternPlan, config: AntennaConfig | None = None) -> FeasibilityReport:
    """Dimension-counting conditions for the plan, in relabeled extended units.

    Each check reads ``lhs >= rhs``.  Pairwise alignment needs
    ``M_i + M_j - J >= w_ij``; cyclic alignment needs ``sum M - J >= gamma``;
    users need enough antennas for their outgoing and incoming streams and
    the relay needs ``J <= N``.
    """
    cfg = p.config if config is None else config
    ext = cfg.relabeled(p.relabeling.perm).scaled(p.t)
    M = {u: ext.antennas(u) for u in USERS}
    x = {k: int(v) for k, v in zip(DIRECTIONS, p.d_int)}
    checks = []
    for (i, j), w in zip(((1, 2), (1, 3), (2, 3)), p.pde_weights):
        checks.append(FeasibilityCheck(f"pairwise({i},{j}): M{i}+M{j}-J >= w", M[i] + M[j] - p.J, w))
    checks.append(FeasibilityCheck("cyclic: M1+M2+M3-J >= gamma", sum(M.values()) - p.J, p.gamma))
    for i in USERS:
        out = sum(x[(i, j)] for j in USERS if j != i)
        checks.append(FeasibilityCheck(f"transmit({i}): M{i} >= sum_j d{i}j", M[i], out))
    for i in USERS:
        inc = sum(x[(j, i)] for j in USERS if j != i)
        checks.append(FeasibilityCheck(f"receive({i}): M{i} >= sum_j dj{i}", M[i], inc))
    checks.append(FeasibilityCheck("relay: N >= J", ext.N, p.J))
    return FeasibilityReport(tuple(checks))
