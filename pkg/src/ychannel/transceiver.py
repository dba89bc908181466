"""Signal-alignment transceiver synthesis.

Given a :class:`~ychannel.planner.PatternPlan` and a deactivated channel,
build

* MAC precoders ``V[(i, j)][kind]`` (user i's precoder for its kind-``p/c/r``
  streams to user j), aligned pairwise in ``null([H_i, -H_j])`` and cyclically
  in ``null([H_1, H_2, -H_3])``;
* the relay zero-forcing matrix ``W``, inverse of the aligned relay blocks;
* BC receive filters ``U[(i, j)][kind]`` (rows applied by user j), aligned in
  left null spaces of stacked downlink channels;
* the relay broadcast zero-forcing matrix ``T``.

All of it lives in relabeled user coordinates of the plan.  Each receiver
row block observes a fixed combination of relay blocks; :data:`decode_rule`
states which own streams are cancelled and with what sign the desired
stream appears.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .channel import DeactivatedChannel, complex_gaussian
from .planner import PatternPlan
from .region import DIRECTIONS, USERS

__all__ = [
    "KINDS",
    "SynthesisError",
    "AlignmentError",
    "RankError",
    "TransceiverDesign",
    "StreamIndex",
    "null_space",
    "left_null_space",
    "decode_rule",
    "design_mac_precoders",
    "design_relay_zf",
    "design_bc",
    "synthesize",
]

KINDS = ("p", "c", "r")
_PAIRS = ((1, 2), (1, 3), (2, 3))
_CYCLE = ((1, 2), (2, 3), (3, 1))


class SynthesisError(RuntimeError):
    pass


class AlignmentError(SynthesisError):
    pass


class RankError(SynthesisError):
    pass


def _rank_tol(s: np.ndarray, shape, rtol: Optional[float]) -> float:
    if s.size == 0:
        return 0.0
    if rtol is None:
        rtol = max(shape) * np.finfo(float).eps
    return rtol * s[0]


def null_space(A: np.ndarray, rtol: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis (columns) of ``{x : A x = 0}`` via SVD.

    Rank threshold is ``rtol * sigma_max`` with ``rtol`` defaulting to
    ``max(A.shape) * eps``.
    """
    m, n = A.shape
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if m == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > _rank_tol(s, A.shape, rtol)))
    return vh[rank:].conj().T


def left_null_space(A: np.ndarray, rtol: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis (rows) of ``{x : x A = 0}``."""
    return null_space(A.conj().T, rtol).conj().T


def _orthonormal(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((n, 0), dtype=complex)
    q, _ = np.linalg.qr(complex_gaussian(rng, (n, k)))
    return q


def _pick(basis: np.ndarray, w: int, rng: np.random.Generator, what: str) -> np.ndarray:
    """``w`` orthonormal columns in the span of ``basis``, in generic position."""
    n, k = basis.shape
    if w == 0:
        return np.zeros((n, 0), dtype=complex)
    if k < w:
        raise AlignmentError(f"alignment infeasible at runtime: {what} has null space "
                             f"dimension {k} < required {w}")
    return basis @ _orthonormal(rng, k, w)


def _sigma_min(A: np.ndarray) -> float:
    if A.size == 0:
        return float("inf")
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def _check_rank(A: np.ndarray, full: int, what: str, rtol: Optional[float], rows: bool = False) -> None:
    if full == 0:
        return
    s = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(s > _rank_tol(s, A.shape, rtol)))
    if rank != full:
        axis = "row" if rows else "column"
        raise RankError(f"{what}: {axis} rank {rank} != {full}")


def decode_rule(case: str, direction: tuple[int, int], kind: str):
    """How receiver j recovers stream kind ``kind`` of ``direction=(i, j)``.

    Returns ``(sign, own)``: the row block observes
    ``sign * s_desired + sum(coef * s_own)`` with ``own`` a list of
    ``((direction, kind), coef)`` the receiver knows and cancels.
    """
    i, j = direction
    if kind == "p":
        return 1, [(((j, i), "p"), 1)]
    if kind == "r":
        return 1, []
    if case != "I":
        raise ValueError(f"no cyclic streams in case {case}")
    # CDE_A = s12c + s31c, CDE_B = s23c + s31c; user 2 reads CDE_B - CDE_A
    if direction == (3, 1):
        return 1, [(((1, 2), "c"), 1)]
    if direction == (2, 3):
        return 1, [(((3, 1), "c"), 1)]
    if direction == (1, 2):
        return -1, [(((2, 3), "c"), 1)]
    raise ValueError(f"direction {direction} carries no cyclic stream")


@dataclass(frozen=True)
class StreamIndex:
    """Global ordering of the plan's streams: directions in canonical order,
    kinds ``p, c, r`` within each direction."""

    sizes: dict  # (direction, kind) -> size
    slices: dict  # (direction, kind) -> slice into the stacked stream vector
    total: int

    @classmethod
    def from_plan(cls, plan: PatternPlan) -> "StreamIndex":
        per = plan.stream_sizes()
        sizes, slices, off = {}, {}, 0
        for dirn in DIRECTIONS:
            for kind in KINDS:
                n = per[dirn][kind]
                sizes[(dirn, kind)] = n
                slices[(dirn, kind)] = slice(off, off + n)
                off += n
        return cls(sizes, slices, off)

    def outgoing(self, user: int):
        return [(d, k) for (d, k) in self.sizes if d[0] == user]

    def incoming(self, user: int):
        return [(d, k) for (d, k) in self.sizes if d[1] == user]


@dataclass
class TransceiverDesign:
    plan: PatternPlan
    H: tuple  # relabeled deactivated uplink, (J_tot, M_i t)
    G: tuple  # relabeled deactivated downlink, (M_i t, J_tot)
    V: dict = field(default_factory=dict)  # (dirn) -> {kind: M_i t x n}
    U: dict = field(default_factory=dict)  # (dirn) -> {kind: n x M_j t}
    B: Optional[np.ndarray] = None
    W: Optional[np.ndarray] = None
    S: Optional[np.ndarray] = None  # BC stack whose inverse is T
    T: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def streams(self) -> StreamIndex:
        return StreamIndex.from_plan(self.plan)

    def precoder(self, user: int) -> np.ndarray:
        """User's full precoder, columns in global stream order."""
        idx = self.streams
        cols = [self.V[d][k] for (d, k) in idx.outgoing(user)]
        Mt = self.H[user - 1].shape[1]
        return np.hstack(cols) if cols else np.zeros((Mt, 0), dtype=complex)

    def receiver(self, user: int) -> np.ndarray:
        """User's full receive filter, rows in global stream order."""
        idx = self.streams
        rows = [self.U[d][k] for (d, k) in idx.incoming(user)]
        Mt = self.G[user - 1].shape[0]
        return np.vstack(rows) if rows else np.zeros((0, Mt), dtype=complex)

    def with_precoder_column(self, direction, kind, col, value=0.0) -> "TransceiverDesign":
        """Copy with one precoder column overwritten (fault injection)."""
        V = {d: {k: m.copy() for k, m in ks.items()} for d, ks in self.V.items()}
        V[direction][kind][:, col] = value
        return replace(self, V=V)

    def matrices(self) -> dict[str, np.ndarray]:
        out = {"W": self.W, "T": self.T, "B": self.B, "S": self.S}
        for (i, j), ks in self.V.items():
            for k, m in ks.items():
                if m.size:
                    out[f"V{k}_{i}{j}"] = m
        for (i, j), ks in self.U.items():
            for k, m in ks.items():
                if m.size:
                    out[f"U{k}_{i}{j}"] = m
        return out

    def manifest(self) -> dict:
        return {
            "case": self.plan.case,
            "permutation": list(self.plan.relabeling.perm),
            "t": self.plan.t,
            "J": self.plan.J,
            "blockLayout": [{"kind": b.kind, "size": b.size} for b in self.plan.blocks],
            "diagnostics": self.diagnostics,
        }

    def save(self, path) -> None:
        from .io import write_matrices

        write_matrices(path, self.matrices(), {"kind": "design", **self.manifest()})


def _empty_kinds(plan: PatternPlan, H, along_rows: bool):
    per = plan.stream_sizes()
    out = {}
    for (i, j) in DIRECTIONS:
        out[(i, j)] = {}
        for k in KINDS:
            if along_rows:
                out[(i, j)][k] = np.zeros((per[(i, j)][k], H[j - 1].shape[0]), dtype=complex)
            else:
                out[(i, j)][k] = np.zeros((H[i - 1].shape[1], per[(i, j)][k]), dtype=complex)
    return out


def _relay_columns(plan: PatternPlan):
    """(block kind) -> (direction, kind) whose ``H V`` spans that relay block."""
    if plan.case == "I":
        return {"NC12": ((1, 2), "p"), "NC13": ((1, 3), "p"), "NC23": ((2, 3), "p"),
                "CDE_A": ((1, 2), "c"), "CDE_B": ((2, 3), "c"),
                "R23": ((2, 3), "r"), "R31": ((3, 1), "r")}
    return {"NC12": ((1, 2), "p"), "NC13": ((1, 3), "p"), "NC23": ((2, 3), "p"),
            "R12": ((1, 2), "r"), "R13": ((1, 3), "r"), "R23": ((2, 3), "r")}


def _relay_rows(plan: PatternPlan):
    """(block kind) -> (direction, kind) whose ``U G`` row block selects it."""
    if plan.case == "I":
        return {"NC12": ((2, 1), "p"), "NC13": ((3, 1), "p"), "NC23": ((3, 2), "p"),
                "CDE_A": ((3, 1), "c"), "CDE_B": ((2, 3), "c"),
                "R23": ((2, 3), "r"), "R31": ((3, 1), "r")}
    return {"NC12": ((2, 1), "p"), "NC13": ((3, 1), "p"), "NC23": ((3, 2), "p"),
            "R12": ((1, 2), "r"), "R13": ((1, 3), "r"), "R23": ((2, 3), "r")}


def design_mac_precoders(plan: PatternPlan, H, rng: np.random.Generator,
                         rtol: Optional[float] = None) -> dict:
    """MAC precoders for every stream of the plan (relabeled coordinates)."""
    V = _empty_kinds(plan, H, along_rows=False)
    for (i, j), w in zip(_PAIRS, plan.pde_weights):
        if w == 0:
            continue
        Mi = H[i - 1].shape[1]
        basis = null_space(np.hstack([H[i - 1], -H[j - 1]]), rtol)
        v = _pick(basis, w, rng, f"pairwise stack [H{i}r -H{j}r]")
        V[(i, j)]["p"], V[(j, i)]["p"] = v[:Mi], v[Mi:]
    if plan.gamma:
        M1, M2 = H[0].shape[1], H[1].shape[1]
        basis = null_space(np.hstack([H[0], H[1], -H[2]]), rtol)
        v = _pick(basis, plan.gamma, rng, "cyclic stack [H1r H2r -H3r]")
        V[(1, 2)]["c"], V[(2, 3)]["c"], V[(3, 1)]["c"] = v[:M1], v[M1:M1 + M2], v[M1 + M2:]
    for (i, j), n in plan.residuals.items():
        V[(i, j)]["r"] = _orthonormal(rng, H[i - 1].shape[1], n)

    idx = StreamIndex.from_plan(plan)
    for u in USERS:
        cols = [V[d][k] for (d, k) in idx.outgoing(u)]
        P = np.hstack(cols)
        _check_rank(P, P.shape[1], f"precoder of user {u}", rtol)
    return V


def design_relay_zf(V: dict, plan: PatternPlan, H, rtol: Optional[float] = None):
    """Relay MAC zero-forcing ``W = B^{-1}``; returns ``(W, B)``."""
    cols = _relay_columns(plan)
    parts = []
    for block in plan.blocks:
        dirn, kind = cols[block.kind]
        parts.append(H[dirn[0] - 1] @ V[dirn][kind])
    J = plan.J
    B = np.hstack(parts) if parts else np.zeros((J, 0), dtype=complex)
    if B.shape != (J, J):
        raise SynthesisError(f"relay block matrix has shape {B.shape}, expected ({J}, {J})")
    if J == 0:
        return np.zeros((0, 0), dtype=complex), B
    try:
        _check_rank(B, J, "B-matrix rank deficient", rtol)
    except RankError as exc:
        raise RankError(f"B-matrix rank deficient ({exc})") from exc
    return np.linalg.inv(B), B


def design_bc(plan: PatternPlan, G, rng: np.random.Generator, rtol: Optional[float] = None):
    """BC receive filters and broadcast zero-forcing; returns ``(U, T, S)``."""
    U = _empty_kinds(plan, G, along_rows=True)
    for (i, j), w in zip(_PAIRS, plan.pde_weights):
        if w == 0:
            continue
        Mi = G[i - 1].shape[0]
        basis = left_null_space(np.vstack([G[i - 1], -G[j - 1]]), rtol)
        x = _pick(basis.T, w, rng, f"pairwise stack [H_r{i}; -H_r{j}]").T
        # rows at receiver i decode the stream from j and vice versa
        U[(j, i)]["p"], U[(i, j)]["p"] = x[:, :Mi], x[:, Mi:]
    if plan.gamma:
        M1, M2 = G[0].shape[0], G[1].shape[0]
        basis = left_null_space(np.vstack([G[0], G[1], G[2]]), rtol)
        x = _pick(basis.T, plan.gamma, rng, "cyclic stack [H_r1; H_r2; H_r3]").T
        U[(3, 1)]["c"], U[(1, 2)]["c"], U[(2, 3)]["c"] = x[:, :M1], x[:, M1:M1 + M2], -x[:, M1 + M2:]
    for (i, j), n in plan.residuals.items():
        U[(i, j)]["r"] = _orthonormal(rng, G[j - 1].shape[0], n).T

    idx = StreamIndex.from_plan(plan)
    for u in USERS:
        rows = [U[d][k] for (d, k) in idx.incoming(u)]
        R = np.vstack(rows)
        _check_rank(R, R.shape[0], f"receive filter of user {u}", rtol, rows=True)

    rows_of = _relay_rows(plan)
    parts = []
    for block in plan.blocks:
        dirn, kind = rows_of[block.kind]
        parts.append(U[dirn][kind] @ G[dirn[1] - 1])
    J = plan.J
    S = np.vstack(parts) if parts else np.zeros((0, J), dtype=complex)
    if S.shape != (J, J):
        raise SynthesisError(f"BC stack has shape {S.shape}, expected ({J}, {J})")
    if J == 0:
        return U, np.zeros((0, 0), dtype=complex), S
    try:
        _check_rank(S, J, "BC stack", rtol, rows=True)
    except RankError as exc:
        raise RankError(f"BC stack singular ({exc})") from exc
    return U, np.linalg.inv(S), S


def synthesize(plan: PatternPlan, ch: DeactivatedChannel, seed: int = 0,
               rtol: Optional[float] = None) -> TransceiverDesign:
    """Full design for ``plan`` over ``ch`` (given in original user labels).

    ``seed`` drives the generic choices: combinations inside null spaces
    and the residual precoders / receive rows.
    """
    if ch.J_total != plan.J:
        raise SynthesisError(f"channel keeps {ch.J_total} relay dimensions, plan needs {plan.J}")
    if ch.t != plan.t:
        raise SynthesisError(f"channel extension t={ch.t}, plan needs t={plan.t}")
    rc = ch.relabeled(plan.relabeling.perm)
    rng = np.random.default_rng([seed, 0x5A11])
    V = design_mac_precoders(plan, rc.up, rng, rtol)
    W, B = design_relay_zf(V, plan, rc.up, rtol)
    U, T, S = design_bc(plan, rc.down, rng, rtol)
    diag = {
        "sigma_min_B": _sigma_min(B),
        "sigma_min_S": _sigma_min(S),
        "cond_B": float(np.linalg.cond(B)) if plan.J else 1.0,
        "cond_S": float(np.linalg.cond(S)) if plan.J else 1.0,
    }
    return TransceiverDesign(plan, rc.up, rc.down, V, U, B, W, S, T, diag)
