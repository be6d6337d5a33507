"""Empirical deviation probabilities of running averages.

``exact_window_mass`` sums the measure of every n-cylinder whose running
average of the observable lands in an open window, by dynamic programming
over word states with a value-indexed mass table.  When the observable's
values sit on a common rational lattice the sums are binned exactly and the
window test is decided in exact rational arithmetic, so the result carries
zero slack; otherwise values are quantised to bins of width delta/100 and the
mass near the window edges is reported as slack (the true open-window mass
lies in [mass, mass + slack]).

``sample_paths`` estimates the same probability by seeded Monte Carlo and is
bit-reproducible: the generator is numpy's default PCG64 and states are drawn
by inverse CDF against cumulative transition rows, so a fixed seed fixes the
entire draw sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import Infeasible, ModelMismatch, ValidationError
from .potentials import Potential
from .sft import state_graph
from .transfer import MarkovMeasure, integrate, refine_measure

#: memory budget for the DP mass table
DP_BUDGET_BYTES = 2 * 1024**3
#: largest denominator attempted when reconstructing a value lattice
LATTICE_MAX_DEN = 10**6
#: bins per window half-width in the quantised fallback
BINS_PER_DELTA = 100


@dataclass(frozen=True)
class WindowMass:
    """Mass of {running average in (p - delta, p + delta)} at horizon n.

    ``log_rate`` is log(mass)/n (-inf for zero mass).  ``slack`` is 0 for the
    exact lattice method; for the binned method it is the mass that may fall
    either side of the window edges, and for Monte Carlo the half-width of a
    95% normal interval.
    """

    n: int
    p: float
    delta: float
    mass: float
    log_rate: float
    method: str
    slack: float


def _log_rate(mass: float, n: int) -> float:
    return math.log(mass) / n if mass > 0.0 else -math.inf


def _edge_data(mu: MarkovMeasure, psi: Potential):
    """Markov chain refined so every edge determines one observable value;
    returns (measure, edges) with edges as (u, v, value, probability)."""
    if not mu.tm.same_space(psi.tm) or mu.theta != psi.theta:
        raise ModelMismatch("measure and observable live over different shift spaces")
    k = max(mu.k, psi.r - 1, 1)
    mu = refine_measure(mu, k)
    _, _, raw = state_graph(mu.tm, k)
    edges = []
    for u, v, overlap in raw:
        p_uv = float(mu.P[u, v])
        if p_uv > 0.0:
            edges.append((u, v, psi.table[overlap[: psi.r]], p_uv))
    return mu, edges


def _lattice_units(values):
    """Integer representation (ints, common_denominator) of the values when
    they reconstruct to rationals with denominator <= LATTICE_MAX_DEN."""
    fracs = []
    for v in values:
        fr = Fraction(v).limit_denominator(LATTICE_MAX_DEN)
        if abs(v - float(fr)) > 1e-12 * max(1.0, abs(v)):
            return None
        fracs.append(fr)
    den = 1
    for fr in fracs:
        den = den * fr.denominator // math.gcd(den, fr.denominator)
        if den > 10**9:
            return None
    ints = [int(fr.numerator * (den // fr.denominator)) for fr in fracs]
    return ints, den


def _dp_masses(size: int, edges_int, pi: np.ndarray, n: int, n_keys: int) -> np.ndarray:
    """Mass per (final aggregate key), summing over end states; key axis is
    the integer-valued running total of edge steps."""
    if size * n_keys * 8 > DP_BUDGET_BYTES:
        raise Infeasible(
            f"DP table of {size} states x {n_keys} keys exceeds the 2 GiB budget; "
            "use the Monte Carlo estimator"
        )
    cur = np.zeros((size, n_keys))
    cur[:, 0] = pi
    for _ in range(n):
        nxt = np.zeros((size, n_keys))
        for u, v, step, p_uv in edges_int:
            if step == 0:
                nxt[v, :] += p_uv * cur[u, :]
            else:
                nxt[v, step:] += p_uv * cur[u, : n_keys - step]
        cur = nxt
    return cur.sum(axis=0)


def exact_window_mass(
    mu: MarkovMeasure, psi: Potential, n: int, p: float, delta: float
) -> WindowMass:
    """Measure of the set of points whose n-step running average of psi lies
    in the open window (p - delta, p + delta)."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if delta <= 0.0:
        raise ValidationError(f"delta must be positive, got {delta}")
    mu, edges = _edge_data(mu, psi)
    values = [e[2] for e in edges]

    lattice = _lattice_units(values)
    if lattice is not None:
        ints, den = lattice
        offset = min(ints)
        rel = [i - offset for i in ints]
        g = 0
        for r_val in rel:
            g = math.gcd(g, r_val)
        g = g or 1
        steps = [r_val // g for r_val in rel]
        n_keys = n * max(steps) + 1
        try:
            masses = _dp_masses(
                mu.size,
                [(u, v, s, pr) for (u, v, _, pr), s in zip(edges, steps)],
                mu.pi,
                n,
                n_keys,
            )
        except Infeasible:
            lattice = None
        if lattice is not None:
            # window edges are reconstructed like the values: an edge within
            # float noise of a simple rational is treated as exactly on it,
            # so the open window excludes that lattice atom
            lo = (Fraction(p) - Fraction(delta)).limit_denominator(LATTICE_MAX_DEN) * n
            hi = (Fraction(p) + Fraction(delta)).limit_denominator(LATTICE_MAX_DEN) * n
            mass = 0.0
            for key in range(n_keys):
                if masses[key] == 0.0:
                    continue
                total = Fraction(g * key + n * offset, den)
                if lo < total < hi:  # open window decided exactly
                    mass += float(masses[key])
            return WindowMass(
                n=n, p=p, delta=delta, mass=mass, log_rate=_log_rate(mass, n),
                method="exact_dp", slack=0.0,
            )

    # quantised fallback: per-step rounding drifts the average by at most
    # half a bin, so edge bands of that width are reported as slack
    width = delta / BINS_PER_DELTA
    quant = [round(v / width) for v in values]
    offset = min(quant)
    rel = [qv - offset for qv in quant]
    n_keys = n * max(rel) + 1 if rel else 1
    masses = _dp_masses(
        mu.size,
        [(u, v, s, pr) for (u, v, _, pr), s in zip(edges, rel)],
        mu.pi,
        n,
        n_keys,
    )
    half = width / 2.0
    mass = 0.0
    slack = 0.0
    for key in range(n_keys):
        m = float(masses[key])
        if m == 0.0:
            continue
        avg = (key + n * offset) * width / n
        if p - delta + half < avg < p + delta - half:
            mass += m
        elif p - delta - half <= avg <= p - delta + half or p + delta - half <= avg <= p + delta + half:
            slack += m
    return WindowMass(
        n=n, p=p, delta=delta, mass=mass, log_rate=_log_rate(mass, n),
        method="binned_dp", slack=slack,
    )


@dataclass(frozen=True, eq=False)
class LdpScan:
    """Fixed-window decay scan with its theoretical reference level.

    ``reference`` is minus the smallest rate-function value over the closed
    window: the limit the per-n log rates approach from below as the horizon
    grows.  Only fixed-window trends are reported; the iterated
    shrinking-window limit is out of reach at finite n.
    """

    entries: tuple
    reference: float
    psi_mean: float

    @property
    def log_rates(self) -> tuple:
        return tuple(e.log_rate for e in self.entries)

    def increasing_from(self, n_from: int) -> bool:
        rates = [e.log_rate for e in self.entries if e.n >= n_from]
        return all(b > a for a, b in zip(rates, rates[1:]))


def window_reference(mu: MarkovMeasure, psi: Potential, rate_fn, p: float, delta: float):
    """(-min rate over the closed window, mean of psi).  The rate function is
    convex with its zero at the mean, so the window minimum sits at the mean
    when covered and at the nearer window edge otherwise."""
    psi_mean = integrate(mu, psi)
    if p - delta <= psi_mean <= p + delta:
        min_rate = 0.0
    else:
        endpoint = p + delta if psi_mean > p + delta else p - delta
        min_rate = rate_fn(endpoint).value
    return -min_rate, psi_mean


def ldp_scan(
    mu: MarkovMeasure, psi: Potential, rate_fn, n_list, p: float, delta: float
) -> LdpScan:
    """Exact window masses over a horizon list against -min(rate) on the
    window.  ``rate_fn`` maps a level to a rate-function evaluation."""
    entries = tuple(exact_window_mass(mu, psi, int(n), p, delta) for n in n_list)
    reference, psi_mean = window_reference(mu, psi, rate_fn, p, delta)
    return LdpScan(entries=entries, reference=reference, psi_mean=psi_mean)


def sample_paths(
    mu: MarkovMeasure,
    psi: Potential,
    n: int,
    trials: int,
    seed: int,
    p: float,
    delta: float,
) -> WindowMass:
    """Monte Carlo estimate of the window mass.

    Paths start from the stationary vector and step through the transition
    rows; all draws are uniform doubles from ``numpy.random.default_rng``
    (PCG64) consumed in a fixed order, so identical seeds give bit-identical
    results.  ``slack`` is the 95% normal half-width.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    mu, edges = _edge_data(mu, psi)
    size = mu.size
    value_matrix = np.zeros((size, size))
    for u, v, val, _ in edges:
        value_matrix[u, v] = val

    rng = np.random.default_rng(seed)
    cum_pi = np.cumsum(mu.pi)
    cum_P = np.cumsum(mu.P, axis=1)
    states = np.minimum(np.searchsorted(cum_pi, rng.random(trials)), size - 1)
    sums = np.zeros(trials)
    for _ in range(n):
        draws = rng.random(trials)
        rows = cum_P[states]
        nxt = np.minimum((rows <= draws[:, None]).sum(axis=1), size - 1)
        sums += value_matrix[states, nxt]
        states = nxt
    avgs = sums / n
    hits = int(np.count_nonzero((avgs > p - delta) & (avgs < p + delta)))
    mass = hits / trials
    slack = 1.96 * math.sqrt(mass * (1.0 - mass) / trials)
    return WindowMass(
        n=n, p=p, delta=delta, mass=mass, log_rate=_log_rate(mass, n),
        method="monte_carlo", slack=slack,
    )
