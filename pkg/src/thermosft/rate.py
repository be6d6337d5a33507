"""Pressure, tilted pressure curves and the deviation rate function.

The rate function at p is the supremum over q of
``p*q - (pressure(phi + q*psi) - pressure(phi))``.  Working with the pressure
difference rather than assuming the base pressure is exactly zero makes the
objective vanish identically at q = 0 and keeps the maximisation immune to
the ~1e-13 residual a normalised potential carries in floats.  The objective
is concave with monotone derivative, so a sign-change bracket plus bisection
is sound; a finite-difference Newton polish sharpens the maximiser at the
end (robustness first, speed second).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelMismatch, NoConvergence, ValidationError
from .potentials import Potential, affine_combine, require_not_constant
from .transfer import build_transfer_matrix, equilibrium_measure, integrate, solve_potential

#: |dGamma/dq| at which the maximiser is accepted
TOL_GRAD = 1e-10
#: distance to a domain endpoint treated as "at the boundary"
TOL_END = 1e-9
#: bisection step cap (each step is one eigen-solve)
MAX_BISECTIONS = 300
#: Newton polish steps after bisection
NEWTON_STEPS = 8
#: tilt sweep cap for boundary levels, where the maximiser runs away and the
#: tilted matrices approach a periodic structure the solver cannot handle
BOUNDARY_Q_CAP = 20.0


def tilt_eval(phi: Potential, psi: Potential, q: float) -> tuple:
    """(log pressure, mean of psi under the tilted equilibrium state) for the
    potential phi + q*psi."""
    f_q = affine_combine(phi, psi, q)
    k = max(1, f_q.r - 1, psi.r)
    T, sol = solve_potential(f_q, k_min=k)
    pi = sol.h * sol.nu
    pi = pi / pi.sum()
    mean = float(sum(pi[i] * psi.table[w[: psi.r]] for i, w in enumerate(T.state_words)))
    return sol.log_lambda, mean


def _check_normalized(phi: Potential, tol: float = 1e-6) -> None:
    T = build_transfer_matrix(phi)
    err = float(np.max(np.abs(T.apply(np.ones(T.size)) - 1.0)))
    if err > tol:
        raise ModelMismatch(
            f"potential is not normalised (unit row action violated by {err:.3e})"
        )


def pressure(f: Potential) -> float:
    """Log of the Perron eigenvalue of the exact transfer matrix."""
    _, sol = solve_potential(f)
    return sol.log_lambda


@dataclass(frozen=True)
class PressureCurve:
    """Tilted pressures and their exact derivatives along a q-grid."""

    q_grid: tuple
    pressures: tuple
    derivatives: tuple

    def second_differences(self) -> list:
        out = []
        for i in range(1, len(self.q_grid) - 1):
            h1 = self.q_grid[i] - self.q_grid[i - 1]
            h2 = self.q_grid[i + 1] - self.q_grid[i]
            out.append(
                (self.pressures[i + 1] - self.pressures[i]) / h2
                - (self.pressures[i] - self.pressures[i - 1]) / h1
            )
        return out

    @property
    def is_convex(self) -> bool:
        return all(d >= -1e-9 for d in self.second_differences())

    @property
    def derivatives_nondecreasing(self) -> bool:
        return all(b >= a - 1e-9 for a, b in zip(self.derivatives, self.derivatives[1:]))


def pressure_curve(phi: Potential, psi: Potential, q_grid) -> PressureCurve:
    """Pressure of phi + q*psi along a sorted grid together with the exact
    derivative (the mean of psi under the tilted equilibrium state)."""
    _check_normalized(phi)
    grid = tuple(float(q) for q in q_grid)
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValidationError("q grid must be sorted ascending")
    pressures = []
    derivatives = []
    for q in grid:
        pr, mean = tilt_eval(phi, psi, q)
        pressures.append(pr)
        derivatives.append(mean)
    return PressureCurve(q_grid=grid, pressures=tuple(pressures), derivatives=tuple(derivatives))


def gamma(phi: Potential, psi: Potential, p: float, q: float) -> tuple:
    """(objective, derivative) of the rate maximisation at tilt q.

    The objective is p*q minus the pressure increment from q = 0, so it is 0
    at q = 0 by construction; the derivative is p minus the tilted mean.
    """
    base = pressure(phi)
    if q == 0.0:
        _, mean = tilt_eval(phi, psi, 0.0)
        return 0.0, p - mean
    pr, mean = tilt_eval(phi, psi, q)
    return p * q - (pr - base), p - mean


@dataclass(frozen=True)
class RateValue:
    """Rate-function evaluation.

    status: interior (finite value, vanishing derivative at q_star),
    mean_zero (p is the typical mean, value 0), boundary (p at a domain
    endpoint within tolerance; value is a certified lower bound), outside
    (p outside the domain; value is +inf).
    """

    p: float
    value: float
    q_star: float | None
    status: str
    iterations: int


def rate_function(phi: Potential, psi: Potential, p: float, spread=None) -> RateValue:
    """Deviation rate at p via safeguarded concave maximisation.

    Refuses observables whose cycle-mean spread is below tolerance; p outside
    the open spread interval reports +inf, p at an endpoint reports a lower
    bound.  Inside, the derivative is bracketed by doubling, bisected to
    TOL_GRAD and polished with finite-difference Newton steps.
    """
    _check_normalized(phi)
    if spread is None:
        spread = require_not_constant(psi)
    if p < spread.min_mean - TOL_END or p > spread.max_mean + TOL_END:
        return RateValue(p=p, value=math.inf, q_star=None, status="outside", iterations=0)
    at_boundary = (
        abs(p - spread.min_mean) <= TOL_END or abs(p - spread.max_mean) <= TOL_END
    )

    base = pressure(phi)
    evals = [1]

    def dgamma(q: float) -> float:
        evals[0] += 1
        _, mean = tilt_eval(phi, psi, q)
        return p - mean

    def gamma_at(q: float) -> float:
        if q == 0.0:
            return 0.0
        evals[0] += 1
        pr, _ = tilt_eval(phi, psi, q)
        return p * q - (pr - base)

    d0 = dgamma(0.0)
    if abs(d0) <= TOL_GRAD:
        return RateValue(p=p, value=0.0, q_star=0.0, status="mean_zero", iterations=evals[0])

    direction = 1.0 if d0 > 0.0 else -1.0
    if at_boundary:
        # the supremum runs away along q; a short sweep gives a certified
        # lower bound without driving the solver into the periodic limit
        best_gamma = 0.0
        q_hi = direction
        while abs(q_hi) <= BOUNDARY_Q_CAP:
            try:
                best_gamma = max(best_gamma, gamma_at(q_hi))
            except NoConvergence:
                break
            q_hi *= 2.0
        return RateValue(
            p=p, value=best_gamma, q_star=None, status="boundary", iterations=evals[0]
        )

    q_cap = 700.0 / max(psi.sup_norm, 1e-12)
    q_lo = 0.0
    q_hi = direction
    best_gamma = 0.0
    while True:
        if abs(q_hi) > q_cap:
            # derivative never changed sign inside the overflow-safe window:
            # numerically p sits at the edge of the reachable means
            value = max(best_gamma, gamma_at(math.copysign(q_cap, direction)))
            return RateValue(
                p=p, value=value, q_star=None, status="boundary", iterations=evals[0]
            )
        try:
            d_hi = dgamma(q_hi)
        except NoConvergence:
            # tilt drove the matrix into its periodic limit before the sign
            # change: numerically indistinguishable from a boundary level
            return RateValue(
                p=p, value=best_gamma, q_star=None, status="boundary", iterations=evals[0]
            )
        if (d0 > 0.0 and d_hi < 0.0) or (d0 < 0.0 and d_hi > 0.0):
            break
        best_gamma = max(best_gamma, gamma_at(q_hi))
        q_lo = q_hi
        q_hi *= 2.0

    # bisection on the monotone (decreasing) derivative: positive at a, negative at b
    a, b = (q_lo, q_hi) if q_lo < q_hi else (q_hi, q_lo)
    q_star = 0.5 * (a + b)
    d_star = dgamma(q_star)
    for _ in range(MAX_BISECTIONS):
        if abs(d_star) <= TOL_GRAD or (b - a) <= 1e-14 * max(1.0, abs(b)):
            break
        if d_star > 0.0:
            a = q_star
        else:
            b = q_star
        q_star = 0.5 * (a + b)
        d_star = dgamma(q_star)

    # Newton polish with finite-difference curvature
    for _ in range(NEWTON_STEPS):
        if abs(d_star) <= TOL_GRAD:
            break
        h = 1e-6 * max(1.0, abs(q_star))
        curv = (dgamma(q_star + h) - dgamma(q_star - h)) / (2.0 * h)
        if curv >= 0.0:
            break
        q_next = q_star - d_star / curv
        if not a <= q_next <= b:
            break
        d_next = dgamma(q_next)
        if abs(d_next) >= abs(d_star):
            break
        q_star, d_star = q_next, d_next

    value = gamma_at(q_star)
    return RateValue(p=p, value=value, q_star=q_star, status="interior", iterations=evals[0])


def entropy(f: Potential) -> float:
    """Entropy of the equilibrium state: pressure minus the mean of f."""
    pr = pressure(f)
    mu = equilibrium_measure(f, k=max(1, f.r - 1))
    return pr - integrate(mu, f)
