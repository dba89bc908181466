"""MAC + BC signal chain: noiseless recovery checks and rate-versus-power curves."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import complex_gaussian, deactivate, sample
from .planner import PatternPlan, plan as make_plan
from .region import DIRECTIONS, USERS, AntennaConfig, DofTuple
from .transceiver import (
    KINDS,
    StreamIndex,
    SynthesisError,
    TransceiverDesign,
    decode_rule,
    synthesize,
)

__all__ = [
    "NOISELESS_TOL",
    "SimulationError",
    "SymbolLoad",
    "SimulationReport",
    "MonteCarloReport",
    "draw_symbols",
    "relay_block_contents",
    "run_noiseless",
    "estimate_rates",
    "fit_slope",
    "monte_carlo",
]

NOISELESS_TOL = 1e-8


class SimulationError(RuntimeError):
    pass


def _dkey(d: tuple[int, int]) -> str:
    return f"{d[0]}->{d[1]}"


@dataclass
class SymbolLoad:
    """Symbols per (relabeled direction, kind)."""

    symbols: dict

    def stacked(self, idx: StreamIndex) -> np.ndarray:
        s = np.zeros(idx.total, dtype=complex)
        for key, sl in idx.slices.items():
            s[sl] = self.symbols[key]
        return s

    def __getitem__(self, key):
        return self.symbols[key]


def draw_symbols(plan: PatternPlan, rng: np.random.Generator, alphabet: str = "gaussian") -> SymbolLoad:
    idx = StreamIndex.from_plan(plan)
    out = {}
    for key, n in idx.sizes.items():
        if alphabet == "gaussian":
            out[key] = complex_gaussian(rng, n)
        elif alphabet == "qpsk":
            bits = rng.integers(0, 2, size=(n, 2))
            out[key] = ((2 * bits[:, 0] - 1) + 1j * (2 * bits[:, 1] - 1)) / np.sqrt(2)
        else:
            raise ValueError(f"unknown symbol alphabet {alphabet!r}")
    return SymbolLoad(out)


def relay_block_contents(plan: PatternPlan, s: SymbolLoad) -> np.ndarray:
    """What the relay should hold after zero-forcing, block by block."""
    parts = []
    for b in plan.blocks:
        if b.kind.startswith("NC"):
            i, j = int(b.kind[2]), int(b.kind[3])
            parts.append(s[((i, j), "p")] + s[((j, i), "p")])
        elif b.kind == "CDE_A":
            parts.append(s[((1, 2), "c")] + s[((3, 1), "c")])
        elif b.kind == "CDE_B":
            parts.append(s[((2, 3), "c")] + s[((3, 1), "c")])
        else:
            i, j = int(b.kind[1]), int(b.kind[2])
            parts.append(s[((i, j), "r")])
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


@dataclass
class SimulationReport:
    recovery_error: dict = field(default_factory=dict)  # "i->j" (original labels) -> rel. error
    relay_error: float = 0.0
    noise_covariance: dict = field(default_factory=dict)  # user -> (M t x M t) at last power point
    rate_points: list = field(default_factory=list)  # [{"P_dB", "sum_rate", "per_direction"}]
    slope: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)
    tol: float = NOISELESS_TOL

    @property
    def max_error(self) -> float:
        return max(self.recovery_error.values(), default=0.0)

    @property
    def failed_directions(self) -> list[str]:
        return [k for k, e in self.recovery_error.items() if not e <= self.tol]

    @property
    def recovered(self) -> bool:
        return not self.failed_directions and self.relay_error <= self.tol

    def to_json(self) -> dict:
        out = {
            "recovery_error": self.recovery_error,
            "max_error": self.max_error,
            "relay_error": self.relay_error,
            "recovered": self.recovered,
            "failed_directions": self.failed_directions,
            "diagnostics": self.diagnostics,
        }
        if self.rate_points:
            out["rate_points"] = self.rate_points
            out["slope"] = self.slope
            out["noise_variance"] = {str(u): np.real(np.diag(K)).tolist()
                                     for u, K in self.noise_covariance.items()}
        return out


def _rel_err(est: np.ndarray, ref: np.ndarray) -> float:
    if ref.size == 0:
        return 0.0
    return float(np.linalg.norm(est - ref) / np.linalg.norm(ref))


def run_noiseless(design: TransceiverDesign, seed: int = 0, alphabet: str = "gaussian",
                  tol: float = NOISELESS_TOL) -> SimulationReport:
    """Push random symbols through the noiseless chain and decode at every user."""
    plan = design.plan
    idx = StreamIndex.from_plan(plan)
    rng = np.random.default_rng([seed, 0x5EED])
    s = draw_symbols(plan, rng, alphabet)

    # MAC phase
    y_r = np.zeros(plan.J, dtype=complex)
    for u in USERS:
        x_u = sum((design.V[d][k] @ s[(d, k)] for (d, k) in idx.outgoing(u)),
                  np.zeros(design.H[u - 1].shape[1], dtype=complex))
        y_r = y_r + design.H[u - 1] @ x_u
    s_relay = design.W @ y_r
    expected = relay_block_contents(plan, s)
    relay_err = _rel_err(s_relay, expected)

    # BC phase
    x_r = design.T @ s_relay
    estimates = {}
    for j in USERS:
        y_j = design.G[j - 1] @ x_r
        for (dirn, kind) in idx.incoming(j):
            if idx.sizes[(dirn, kind)] == 0:
                estimates[(dirn, kind)] = np.zeros(0, dtype=complex)
                continue
            z = design.U[dirn][kind] @ y_j
            sign, own = decode_rule(plan.case, dirn, kind)
            for key, coef in own:
                z = z - coef * s[key]
            estimates[(dirn, kind)] = z / sign

    perm = plan.relabeling.perm
    errors = {}
    for dirn in DIRECTIONS:
        ref = np.concatenate([s[(dirn, k)] for k in KINDS])
        est = np.concatenate([estimates[(dirn, k)] for k in KINDS])
        orig = (perm[dirn[0] - 1], perm[dirn[1] - 1])
        errors[_dkey(orig)] = _rel_err(est, ref)
    errors = {_dkey(d): errors[_dkey(d)] for d in DIRECTIONS}
    return SimulationReport(recovery_error=errors, relay_error=relay_err,
                            diagnostics=dict(design.diagnostics), tol=tol)


def fit_slope(power_db: Sequence[float], rates: Sequence[float]) -> float:
    """Least-squares slope of rate against log2(P)."""
    x = np.log2(10.0 ** (np.asarray(power_db, dtype=float) / 10.0))
    return float(np.polyfit(x, np.asarray(rates, dtype=float), 1)[0])


def estimate_rates(design: TransceiverDesign, power_grid_db: Sequence[float],
                   power_scale: float = 1.0) -> SimulationReport:
    """Per-stream rate proxy ``log2(1 + SNR)`` over a grid of power levels.

    Each user splits ``P t`` uniformly over its streams (unit-norm precoder
    columns).  The relay scales ``T`` by ``beta`` so its expected output
    power, forwarded relay noise included, equals ``P t``; receivers undo
    ``beta``.  Effective noise at user j is
    ``A A^H + U U^H / beta^2`` with ``A = U_j H_rj T W``.  Sum rates are per
    channel use (divided by t).  ``power_scale`` multiplies every user's
    stream power and exists for sensitivity checks.
    """
    grid = list(power_grid_db)
    if len(grid) < 2:
        raise SimulationError("power grid needs at least two points")
    plan = design.plan
    idx = StreamIndex.from_plan(plan)
    t = plan.t
    perm = plan.relabeling.perm
    n_out = {u: sum(idx.sizes[k] for k in idx.outgoing(u)) for u in USERS}
    J = plan.J

    points = []
    noise_cov = {}
    for p_db in grid:
        P = 10.0 ** (p_db / 10.0)
        stream_power = {u: (power_scale * P * t / n_out[u] if n_out[u] else 0.0) for u in USERS}
        per_dir = {_dkey((perm[d[0] - 1], perm[d[1] - 1])): 0.0 for d in DIRECTIONS}
        total = 0.0
        if J:
            Cy = np.eye(J, dtype=complex)
            for (dirn, kind), n in idx.sizes.items():
                if n:
                    HV = design.H[dirn[0] - 1] @ design.V[dirn][kind]
                    Cy += stream_power[dirn[0]] * HV @ HV.conj().T
            TW = design.T @ design.W
            out_power = float(np.real(np.trace(TW @ Cy @ TW.conj().T)))
            beta2 = P * t / out_power
            for j in USERS:
                Uj = design.receiver(j)
                if Uj.shape[0] == 0:
                    continue
                A = Uj @ design.G[j - 1] @ TW
                K = A @ A.conj().T + (Uj @ Uj.conj().T) / beta2
                if np.linalg.eigvalsh(K).min() <= 0:
                    raise SimulationError(f"degenerate noise model at user {j}")
                noise_cov[j] = K
                var = np.real(np.diag(K))
                row = 0
                for (dirn, kind) in idx.incoming(j):
                    n = idx.sizes[(dirn, kind)]
                    if n == 0:
                        continue
                    snr = stream_power[dirn[0]] / var[row:row + n]
                    r = float(np.sum(np.log2(1.0 + snr))) / t
                    per_dir[_dkey((perm[dirn[0] - 1], perm[dirn[1] - 1]))] += r
                    total += r
                    row += n
        points.append({"P_dB": float(p_db), "sum_rate": total,
                       "per_direction": {_dkey(d): per_dir[_dkey(d)] for d in DIRECTIONS}})
    slope = fit_slope([p["P_dB"] for p in points], [p["sum_rate"] for p in points])
    return SimulationReport(noise_covariance=noise_cov, rate_points=points, slope=slope,
                            diagnostics=dict(design.diagnostics))


@dataclass
class MonteCarloReport:
    config: AntennaConfig
    dof: DofTuple
    mode: str
    seed_base: int
    trials: list = field(default_factory=list)  # per-trial dicts
    power_grid_db: tuple = ()

    @property
    def n_trials(self) -> int:
        return len(self.trials)

    @property
    def n_recovered(self) -> int:
        return sum(1 for t in self.trials if t.get("recovered"))

    @property
    def n_failed_synthesis(self) -> int:
        return sum(1 for t in self.trials if t.get("error"))

    def _errors(self) -> list[float]:
        return [t["max_error"] for t in self.trials if "max_error" in t]

    def _slopes(self) -> list[float]:
        return [t["slope"] for t in self.trials if t.get("slope") is not None]

    def mean_rates(self) -> list[dict]:
        ok = [t for t in self.trials if "rate_points" in t]
        rows = []
        for k, p_db in enumerate(self.power_grid_db):
            if not ok:
                break
            per = {_dkey(d): float(np.mean([t["rate_points"][k]["per_direction"][_dkey(d)] for t in ok]))
                   for d in DIRECTIONS}
            rows.append({"P_dB": float(p_db),
                         "sum_rate": float(np.mean([t["rate_points"][k]["sum_rate"] for t in ok])),
                         "per_direction": per})
        return rows

    def to_json(self) -> dict:
        errs, slopes = self._errors(), self._slopes()
        out = {
            "config": list(self.config.as_tuple()),
            "dof": self.dof.as_strings(),
            "mode": self.mode,
            "seed_base": self.seed_base,
            "n_trials": self.n_trials,
            "n_failed_synthesis": self.n_failed_synthesis,
            "trials": self.trials,
        }
        if self.mode == "noiseless":
            out["n_recovered"] = self.n_recovered
            out["max_error"] = max(errs) if errs else None
            out["mean_error"] = float(np.mean(errs)) if errs else None
        else:
            out["power_grid_db"] = [float(p) for p in self.power_grid_db]
            out["mean_rates"] = self.mean_rates()
            out["slope"] = ({"mean": float(np.mean(slopes)), "min": min(slopes), "max": max(slopes)}
                            if slopes else None)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dirs = [_dkey(d) for d in DIRECTIONS]
        if self.mode == "noiseless":
            w.writerow(["trial", "seed", "recovered", "max_error", *(f"err_{d}" for d in dirs)])
            for t in self.trials:
                errs = t.get("recovery_error", {})
                w.writerow([t["trial"], t["seed"], int(bool(t.get("recovered"))),
                            repr(t.get("max_error", float("nan"))),
                            *(repr(errs.get(d, float("nan"))) for d in dirs)])
        else:
            w.writerow(["P_dB", "sum_rate", *(f"rate_{d}" for d in dirs)])
            for row in self.mean_rates():
                w.writerow([repr(row["P_dB"]), repr(row["sum_rate"]),
                            *(repr(row["per_direction"][d]) for d in dirs)])
        return buf.getvalue()


def monte_carlo(config: AntennaConfig, d: DofTuple, trials: int, seed_base: int = 0,
                mode: str = "noiseless", power_grid_db: Sequence[float] = (40.0, 50.0, 60.0),
                rtol: Optional[float] = None, tol: float = NOISELESS_TOL) -> MonteCarloReport:
    """Independent channel draws with seeds ``seed_base + k``.

    Synthesis failures are recorded on the trial, not raised.
    """
    if mode not in ("noiseless", "rates"):
        raise ValueError(f"mode must be 'noiseless' or 'rates', got {mode!r}")
    p = make_plan(d, config)
    report = MonteCarloReport(config, d, mode, seed_base,
                              power_grid_db=tuple(power_grid_db) if mode == "rates" else ())
    for k in range(trials):
        seed = seed_base + k
        entry = {"trial": k, "seed": seed}
        try:
            ch = deactivate(sample(config, p.t, seed), p.relay_dims_per_use)
            design = synthesize(p, ch, seed, rtol)
            if mode == "noiseless":
                r = run_noiseless(design, seed, tol=tol)
                entry.update(recovered=r.recovered, max_error=r.max_error,
                             recovery_error=r.recovery_error, relay_error=r.relay_error)
                if not r.recovered:
                    entry["failed_directions"] = r.failed_directions
            else:
                r = estimate_rates(design, power_grid_db)
                entry.update(slope=r.slope, rate_points=r.rate_points)
        except (SynthesisError, SimulationError) as exc:
            entry["error"] = str(exc)
            entry["recovered"] = False
        report.trials.append(entry)
    return report
