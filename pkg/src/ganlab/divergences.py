"""Distribution distances: KL, JS, discrete earth mover's, 1-D Wasserstein.

Conventions, fixed once for the whole package:
  * everything is computed in natural log; DivergenceValue converts to bits
    on request,
  * 0 * log(0/q) = 0, and p > 0 where q = 0 yields +inf as a first-class
    value, never an exception,
  * discrete earth mover's distance lives on unit-spaced integer bins, so
    moving one unit of mass between adjacent bins costs 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .distributions import Gaussian1D, Histogram, log_pdf, support_grid

BRUTEFORCE_MASS_LIMIT = 12


@dataclass(frozen=True)
class DivergenceValue:
    """Nonnegative divergence, possibly +inf, tagged with its log unit."""

    value: float
    unit: str = "nats"

    def __post_init__(self):
        if self.unit not in ("nats", "bits"):
            raise ValueError(f"unknown unit {self.unit!r}")
        if self.value < 0:
            raise ValueError("divergences are nonnegative")

    @property
    def nats(self) -> float:
        return self.value if self.unit == "nats" else self.value * math.log(2.0)

    @property
    def bits(self) -> float:
        return self.value / math.log(2.0) if self.unit == "nats" else self.value


@dataclass(frozen=True)
class TransportPlan:
    """Dirt movements (from_bin, to_bin, amount) between two histograms.

    Mass that stays in place is implied, not listed, so identical
    histograms get an empty plan.  Rows are the source histogram, columns
    the target; cost is sum(amount * |from - to|).
    """

    moves: tuple[tuple[int, int, float], ...]
    cost: float

    def __post_init__(self):
        if any(amount < 0 for _, _, amount in self.moves):
            raise ValueError("move amounts must be >= 0")
        recomputed = sum(amount * abs(i - j) for i, j, amount in self.moves)
        if abs(recomputed - self.cost) > 1e-9:
            raise ValueError("cost does not match the listed moves")

    def check_marginals(self, source: Histogram, target: Histogram) -> None:
        """Verify the plan transforms source into target exactly."""
        n = len(source.masses)
        out = np.zeros(n)
        inflow = np.zeros(n)
        for i, j, amount in self.moves:
            out[i] += amount
            inflow[j] += amount
        stays = np.asarray(source.masses) - out
        if np.any(stays < -1e-9):
            raise ValueError("plan moves more mass out of a bin than it holds")
        landed = stays + inflow
        if np.max(np.abs(landed - np.asarray(target.masses))) > 1e-9:
            raise ValueError("plan does not reproduce the target masses")


def _probabilities(p) -> np.ndarray:
    masses = p.masses if isinstance(p, Histogram) else p
    arr = np.asarray(masses, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("expected a flat nonempty probability vector")
    if np.any(arr < 0):
        raise ValueError("probabilities must be >= 0")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1 within 1e-9")
    return arr


def kl_discrete(p, q) -> DivergenceValue:
    """sum p_i log(p_i / q_i) in nats; +inf when p has mass where q has none."""
    pa, qa = _probabilities(p), _probabilities(q)
    if pa.shape != qa.shape:
        raise ValueError("p and q must have the same length")
    support = pa > 0.0
    if np.any(support & (qa == 0.0)):
        return DivergenceValue(math.inf)
    total = float(np.sum(pa[support] * np.log(pa[support] / qa[support])))
    return DivergenceValue(max(total, 0.0))


def js_discrete(p, q) -> DivergenceValue:
    """0.5 KL(p||m) + 0.5 KL(q||m) with m = (p+q)/2; always finite."""
    pa, qa = _probabilities(p), _probabilities(q)
    if pa.shape != qa.shape:
        raise ValueError("p and q must have the same length")
    m = 0.5 * (pa + qa)
    value = 0.5 * kl_discrete(pa, m).nats + 0.5 * kl_discrete(qa, m).nats
    return DivergenceValue(value)


def kl_continuous(p: Gaussian1D, q: Gaussian1D, grid: np.ndarray | None = None) -> DivergenceValue:
    """Trapezoid quadrature of p(x) log(p(x)/q(x)); +inf if q vanishes on p's support."""
    if grid is None:
        grid = support_grid(p, q)
    lp = log_pdf(p, grid)
    lq = log_pdf(q, grid)
    px = np.exp(lp)
    live = px > 0.0
    if np.any(live & np.isneginf(lq)):
        return DivergenceValue(math.inf)
    integrand = np.where(live, px * (lp - lq), 0.0)
    return DivergenceValue(max(float(np.trapezoid(integrand, grid)), 0.0))


def js_continuous(p: Gaussian1D, q: Gaussian1D, grid: np.ndarray | None = None) -> DivergenceValue:
    """Continuous JS by quadrature against the mixture density (p+q)/2."""
    if grid is None:
        grid = support_grid(p, q)
    lp = log_pdf(p, grid)
    lq = log_pdf(q, grid)
    lm = np.logaddexp(lp, lq) - math.log(2.0)
    px, qx = np.exp(lp), np.exp(lq)
    half_p = np.where(px > 0.0, px * (lp - lm), 0.0)
    half_q = np.where(qx > 0.0, qx * (lq - lm), 0.0)
    value = 0.5 * float(np.trapezoid(half_p, grid)) + 0.5 * float(np.trapezoid(half_q, grid))
    return DivergenceValue(max(value, 0.0))


def em_recurrence(p: Histogram, q: Histogram) -> tuple[float, tuple[float, ...]]:
    """Earth mover's distance on unit-spaced bins via the carry recurrence.

    delta_0 = 0, delta_{i+1} = delta_i + p_i - q_i; the distance is
    sum |delta_i| over i = 1..n.  Returns (distance, (delta_1..delta_n)).
    """
    if len(p.masses) != len(q.masses):
        raise ValueError("histograms must have the same length")
    if abs(p.total() - q.total()) > 1e-9:
        raise ValueError("earth mover's distance requires equal total mass")
    deltas = []
    carry = 0.0
    for pm, qm in zip(p.masses, q.masses):
        carry += pm - qm
        deltas.append(carry)
    return float(sum(abs(d) for d in deltas)), tuple(deltas)


def _integer_masses(h: Histogram) -> tuple[int, ...]:
    rounded = tuple(round(m) for m in h.masses)
    if any(abs(m - r) > 1e-9 for m, r in zip(h.masses, rounded)):
        raise ValueError("brute-force transport needs integer masses")
    return rounded


def em_bruteforce(p: Histogram, q: Histogram) -> tuple[float, TransportPlan]:
    """Exact minimum over all integer transport plans, with a witness.

    Exhaustive (memoized row-by-row) search over every nonnegative integer
    matrix with row sums p and column sums q; tractable only for tiny
    instances, which is all this oracle exists for.
    """
    pm, qm = _integer_masses(p), _integer_masses(q)
    if len(pm) != len(qm):
        raise ValueError("histograms must have the same length")
    if sum(pm) != sum(qm):
        raise ValueError("earth mover's distance requires equal total mass")
    if sum(pm) > BRUTEFORCE_MASS_LIMIT:
        raise ValueError(f"instance too large: total mass > {BRUTEFORCE_MASS_LIMIT}")

    n = len(qm)

    @lru_cache(maxsize=None)
    def best(i: int, cols: tuple[int, ...]) -> tuple[float, tuple[int, ...]]:
        if i == len(pm):
            return 0.0, ()
        rows = []
        _row_fills(pm[i], cols, 0, [0] * n, rows)
        best_cost, best_row = math.inf, None
        for row in rows:
            here = sum(a * abs(i - j) for j, a in enumerate(row) if a)
            rest, _ = best(i + 1, tuple(c - a for c, a in zip(cols, row)))
            if here + rest < best_cost:
                best_cost, best_row = here + rest, row
        return best_cost, best_row

    cost, _ = best(0, qm)
    moves = []
    cols = qm
    for i in range(len(pm)):
        _, row = best(i, cols)
        for j, amount in enumerate(row):
            if amount and i != j:
                moves.append((i, j, float(amount)))
        cols = tuple(c - a for c, a in zip(cols, row))
    best.cache_clear()
    plan = TransportPlan(tuple(moves), float(cost))
    plan.check_marginals(p, q)
    return float(cost), plan


def _row_fills(remaining: int, caps: tuple[int, ...], j: int, row: list[int], out: list):
    """All ways to split `remaining` over columns j.. within the caps."""
    if j == len(caps) - 1:
        if remaining <= caps[j]:
            row[j] = remaining
            out.append(tuple(row))
            row[j] = 0
        return
    tail = sum(caps[j + 1:])
    for a in range(max(0, remaining - tail), min(remaining, caps[j]) + 1):
        row[j] = a
        _row_fills(remaining - a, caps, j + 1, row, out)
        row[j] = 0


def wasserstein_1d(samples_a, samples_b) -> float:
    """Sorted-matching estimate (1/n) sum |a_(i) - b_(i)| of the 1-D distance."""
    a = np.sort(np.asarray(samples_a, dtype=np.float64))
    b = np.sort(np.asarray(samples_b, dtype=np.float64))
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("expected flat sample arrays")
    if a.size != b.size:
        raise ValueError("sample counts must match")
    if a.size < 1:
        raise ValueError("need at least one sample per side")
    return float(np.mean(np.abs(a - b)))


def parallel_lines_table(theta: float) -> dict[str, float]:
    """Distances between the unit segments at x = 0 and x = theta.

    The segments overlap only at theta = 0, where every distance vanishes;
    otherwise KL blows up, JS saturates at log 2, and only the Wasserstein
    distance varies smoothly (= theta).
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if theta == 0.0:
        return {"kl_pq": 0.0, "kl_qp": 0.0, "js": 0.0, "w": 0.0}
    return {"kl_pq": math.inf, "kl_qp": math.inf, "js": math.log(2.0), "w": theta}
