"""Independent verifiers.

These deliberately avoid the code paths they check:

* membership is a direct scan of the region inequalities written out by
  hand, not the tagged halfspace system;
* LP optima come from an exact-rational simplex, not vertex enumeration;
* null-space dimensions are measured with column-pivoted QR, not SVD;
* end-to-end decodability is one explicit matrix product over all streams,
  with cancellation derived from the relay block contents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np
import scipy.linalg

from .region import AntennaConfig, DofTuple
from .transceiver import KINDS, StreamIndex, TransceiverDesign

__all__ = [
    "OracleVerdict",
    "membership_lp",
    "lp_optimum",
    "qr_rank",
    "rank_audit",
    "end_to_end_matrix",
]


@dataclass(frozen=True)
class OracleVerdict:
    subject: str
    passed: bool
    witness: Any = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.passed and self.witness is None:
            raise ValueError("a failing verdict needs a witness")

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {"subject": self.subject, "pass": self.passed, "witness": self.witness,
                "details": self.details}


# --- membership -------------------------------------------------------------

_PERMS = ((1, 2, 3), (1, 3, 2), (2, 1, 3), (2, 3, 1), (3, 1, 2), (3, 2, 1))


def _dof_dict(d) -> dict:
    vals = [Fraction(x) for x in d]
    keys = ("12", "13", "21", "23", "31", "32")
    return {(int(k[0]), int(k[1])): v for k, v in zip(keys, vals)}


def _inequalities(config: AntennaConfig):
    """Yield ``(name, lhs(d), rhs)`` for every region inequality."""
    M = {1: config.M1, 2: config.M2, 3: config.M3}
    for k in ("12", "13", "21", "23", "31", "32"):
        i, j = int(k[0]), int(k[1])
        yield f"nonnegativity d{i}{j} >= 0", (lambda d, i=i, j=j: -d[(i, j)]), 0
    for p1, p2, p3 in _PERMS:
        if p2 < p3:
            yield (f"source bound user {p1}",
                   (lambda d, a=p1, b=p2, c=p3: d[(a, b)] + d[(a, c)]), M[p1])
            yield (f"sink bound user {p1}",
                   (lambda d, a=p1, b=p2, c=p3: d[(b, a)] + d[(c, a)]), M[p1])
        yield (f"relay bound p=({p1},{p2},{p3})",
               (lambda d, a=p1, b=p2, c=p3: d[(a, b)] + d[(a, c)] + d[(b, c)]), config.N)


def membership_lp(config: AntennaConfig, d) -> OracleVerdict:
    dd = _dof_dict(d)
    for name, lhs, rhs in _inequalities(config):
        value = lhs(dd)
        if value > rhs:
            return OracleVerdict("membership", False, name,
                                 {"lhs": str(value), "rhs": str(rhs)})
    return OracleVerdict("membership", True)


def lp_optimum(config: AntennaConfig, weights: Sequence) -> Fraction:
    """``max w.d`` over the region by exact simplex (Bland's rule).

    The origin is feasible and all right-hand sides are nonnegative, so the
    slack basis is a valid start and no phase one is needed.
    """
    c = [Fraction(w) for w in weights]
    rows, rhs = [], []
    for name, lhs, bound in _inequalities(config):
        if name.startswith("nonneg"):
            continue
        coeffs = []
        for k in ((1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)):
            probe = {kk: Fraction(0) for kk in ((1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2))}
            probe[k] = Fraction(1)
            coeffs.append(lhs(probe))
        rows.append(coeffs)
        rhs.append(Fraction(bound))
    m, n = len(rows), len(c)
    # tableau rows: [A | I | b], objective row: [-c | 0 | 0]
    tab = [r + [Fraction(int(i == k)) for k in range(m)] + [b] for i, (r, b) in enumerate(zip(rows, rhs))]
    obj = [-x for x in c] + [Fraction(0)] * m + [Fraction(0)]
    basis = list(range(n, n + m))
    while True:
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            return obj[-1]
        ratios = [(tab[i][-1] / tab[i][enter], basis[i], i) for i in range(m) if tab[i][enter] > 0]
        if not ratios:
            raise ValueError("unbounded LP")
        _, _, leave = min(ratios)
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[leave])]
        f = obj[enter]
        obj = [x - f * y for x, y in zip(obj, tab[leave])]
        basis[leave] = enter


# --- rank audit -------------------------------------------------------------

def qr_rank(A: np.ndarray, rtol: float = 1e-10) -> int:
    """Numerical rank from column-pivoted QR: ``#{|R_kk| > rtol |R_00|}``."""
    if A.size == 0:
        return 0
    R = scipy.linalg.qr(A, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return 0
    return int(np.sum(diag > rtol * diag[0]))


def rank_audit(design: TransceiverDesign, rtol: float = 1e-10) -> OracleVerdict:
    """Measured null-space dimensions versus rank-nullity predictions.

    Checks the three pairwise stacks and the triple stack on both the
    uplink (``[H_i -H_j]``) and downlink (``[H_ri; -H_rj]``, left null space)
    sides, and that each is at least as large as the plan needs.
    """
    plan = design.plan
    H, G = design.H, design.G
    Mt = [h.shape[1] for h in H]
    J = plan.J
    dims = {}
    problems = []
    needs = dict(zip(((1, 2), (1, 3), (2, 3)), plan.pde_weights))
    for (i, j), w in needs.items():
        predicted = max(0, Mt[i - 1] + Mt[j - 1] - J)
        up = np.hstack([H[i - 1], -H[j - 1]])
        down = np.vstack([G[i - 1], -G[j - 1]])
        measured_up = up.shape[1] - qr_rank(up, rtol)
        measured_down = down.shape[0] - qr_rank(down.T, rtol)
        dims[f"pair{i}{j}"] = {"predicted": predicted, "mac": measured_up, "bc": measured_down,
                               "needed": w}
        for side, m in (("mac", measured_up), ("bc", measured_down)):
            if m != predicted:
                problems.append(f"pair ({i},{j}) {side}: null dim {m} != predicted {predicted}")
            if m < w:
                problems.append(f"pair ({i},{j}) {side}: null dim {m} < weight {w}")
    predicted = max(0, sum(Mt) - J)
    up = np.hstack([H[0], H[1], -H[2]])
    down = np.vstack([G[0], G[1], G[2]])
    measured_up = up.shape[1] - qr_rank(up, rtol)
    measured_down = down.shape[0] - qr_rank(down.T, rtol)
    dims["triple"] = {"predicted": predicted, "mac": measured_up, "bc": measured_down,
                      "needed": plan.gamma}
    for side, m in (("mac", measured_up), ("bc", measured_down)):
        if m != predicted:
            problems.append(f"triple {side}: null dim {m} != predicted {predicted}")
        if m < plan.gamma:
            problems.append(f"triple {side}: null dim {m} < gamma {plan.gamma}")
    if problems:
        return OracleVerdict("rank_audit", False, problems[0], {"dims": dims, "problems": problems})
    return OracleVerdict("rank_audit", True, None, {"dims": dims})


# --- end-to-end map ---------------------------------------------------------

def _block_contents(case: str) -> dict:
    """Relay block -> signed streams it carries (relabeled coordinates)."""
    if case == "I":
        return {
            "NC12": {((1, 2), "p"): 1, ((2, 1), "p"): 1},
            "NC13": {((1, 3), "p"): 1, ((3, 1), "p"): 1},
            "NC23": {((2, 3), "p"): 1, ((3, 2), "p"): 1},
            "CDE_A": {((1, 2), "c"): 1, ((3, 1), "c"): 1},
            "CDE_B": {((2, 3), "c"): 1, ((3, 1), "c"): 1},
            "R23": {((2, 3), "r"): 1},
            "R31": {((3, 1), "r"): 1},
        }
    return {
        "NC12": {((1, 2), "p"): 1, ((2, 1), "p"): 1},
        "NC13": {((1, 3), "p"): 1, ((3, 1), "p"): 1},
        "NC23": {((2, 3), "p"): 1, ((3, 2), "p"): 1},
        "R12": {((1, 2), "r"): 1},
        "R13": {((1, 3), "r"): 1},
        "R23": {((2, 3), "r"): 1},
    }


def _observed_blocks(case: str, stream) -> dict:
    """Signed combination of relay blocks a receive row block is aimed at."""
    (i, j), kind = stream
    if kind == "p":
        a, b = sorted((i, j))
        return {f"NC{a}{b}": 1}
    if kind == "r":
        return {f"R{i}{j}": 1}
    return {(3, 1): {"CDE_A": 1}, (2, 3): {"CDE_B": 1}, (1, 2): {"CDE_B": 1, "CDE_A": -1}}[(i, j)]


def end_to_end_matrix(design: TransceiverDesign, tol: float = 1e-9) -> OracleVerdict:
    """Explicit map from all transmitted streams to all post-cancellation estimates.

    Passes iff it equals the routing selection (identity on each stream's
    intended receiver, zero on everything else) within ``tol``.
    """
    plan = design.plan
    idx = StreamIndex.from_plan(plan)
    S = idx.total
    # relay observation of every stream, then the full chain up to each receiver
    X = np.zeros((plan.J, S), dtype=complex)
    for (dirn, kind), sl in idx.slices.items():
        if sl.stop > sl.start:
            X[:, sl] = design.H[dirn[0] - 1] @ design.V[dirn][kind]
    relay_out = design.T @ (design.W @ X)

    contents = _block_contents(plan.case)
    perm = plan.relabeling.perm
    worst = (0.0, None)
    rows_checked = 0
    for (dirn, kind), sl in idx.slices.items():
        n = sl.stop - sl.start
        if n == 0:
            continue
        j = dirn[1]
        Z = design.U[dirn][kind] @ design.G[j - 1] @ relay_out  # n x S
        # perfect cancellation: receiver j knows every stream it sent
        for (d2, k2), sl2 in idx.slices.items():
            if d2[0] == j:
                Z[:, sl2] = 0
        sign = sum(coef * contents[blk].get((dirn, kind), 0)
                   for blk, coef in _observed_blocks(plan.case, (dirn, kind)).items())
        if sign == 0:
            return OracleVerdict("end_to_end", False, f"no path for stream {dirn}/{kind}")
        target = np.zeros((n, S))
        target[:, sl] = np.eye(n)
        err = np.abs(Z / sign - target)
        e = float(err.max())
        rows_checked += n
        if e > worst[0]:
            r, c = np.unravel_index(int(err.argmax()), err.shape)
            worst = (e, (dirn, kind, int(r), int(c)))
    details = {"max_abs_error": worst[0], "streams": S, "rows": rows_checked}
    if worst[0] > tol:
        dirn, kind, r, c = worst[1]
        orig = (perm[dirn[0] - 1], perm[dirn[1] - 1])
        witness = (f"direction {orig[0]}->{orig[1]} ({kind}-stream row {r}, column {c}): "
                   f"error {worst[0]:.3e} > {tol:.0e}")
        details["direction"] = f"{orig[0]}->{orig[1]}"
        return OracleVerdict("end_to_end", False, witness, details)
    return OracleVerdict("end_to_end", True, None, details)
