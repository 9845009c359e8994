"""Membership test for the full set of optimal two-bidder mechanisms.

A mechanism is optimal iff its thresholds stay inside an affine envelope
anchored at the optimal reserves, with slope equal to the rival's optimal
multiplier; in the high-means regime the upper branch of the envelope is an
equality, in the low-means regime monotonicity and mutual inversion take
over above the reserves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import solve
from .core import GridMechanism, Instance
from .errors import DomainError
from .solve import Regime

TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    condition: int
    bidder: int
    rival_value: float
    threshold: float
    bound: float

    def describe(self) -> str:
        return (f"condition {self.condition}: p_{self.bidder}"
                f"({self.rival_value:.6g}) = {self.threshold:.6g} "
                f"vs bound {self.bound:.6g}")


def _eval_nodes(mech: GridMechanism, i: int, rstar: np.ndarray,
                vmax: float) -> np.ndarray:
    rival = 1 - i
    nodes = np.concatenate([mech.coords[rival],
                            [0.0, rstar[rival], vmax]])
    return np.unique(np.clip(nodes, 0.0, vmax))


def member(mech: GridMechanism, instance: Instance,
           tol: float = TOL) -> tuple[bool, list[Violation]]:
    """Does the mechanism achieve the optimal worst-case revenue?

    Returns the verdict plus every violated envelope condition with a witness.
    """
    if instance.n != 2:
        raise DomainError("optimal-set characterization covers two bidders")
    vmax = instance.common_vmax()
    sol = solve.optimal_reserves(instance)
    lam = sol.lambda_star
    rstar = sol.reserves_canonical
    violations: list[Violation] = []

    high = sol.regime is Regime.HIGH_MEANS
    lower_cond, upper_cond = (2, 3) if high else (1, 2)
    for i in (0, 1):
        rival = 1 - i
        slope = lam[rival]                      # rival multiplier is the slope
        nodes = _eval_nodes(mech, i, rstar, vmax)
        for w in nodes:
            p = mech.threshold(i, [w])
            lower = rstar[i] + slope * (w - rstar[rival])
            if p < lower - tol:
                violations.append(Violation(lower_cond, i, float(w), p,
                                            float(lower)))
            if w <= rstar[rival] + tol:
                upper = (lam[0] * rstar[0] + lam[1] * rstar[1]
                         - slope * w) / lam[i]
                if p > upper + tol:
                    violations.append(Violation(upper_cond, i, float(w), p,
                                                float(upper)))
            if high and w >= rstar[rival] - tol and abs(p - lower) > tol:
                violations.append(Violation(1, i, float(w), p, float(lower)))

    if sol.regime is Regime.LOW_MEANS:
        for i in (0, 1):
            rival = 1 - i
            nodes = _eval_nodes(mech, i, rstar, vmax)
            above = nodes[nodes >= rstar[rival] - tol]
            vals = np.array([mech.threshold(i, [w]) for w in above])
            drops = np.flatnonzero(vals[1:] < vals[:-1] - tol)
            for k in drops:
                violations.append(Violation(3, i, float(above[k + 1]),
                                            float(vals[k + 1]), float(vals[k])))
        violations.extend(_inverse_violations(mech, rstar, vmax, tol))

    return (len(violations) == 0), violations


def _inverse_violations(mech: GridMechanism, rstar: np.ndarray, vmax: float,
                        tol: float) -> list[Violation]:
    """Where p_rival strictly increases above the reserves, the two threshold
    functions must invert each other."""
    out: list[Violation] = []
    for i in (0, 1):
        rival = 1 - i
        # Strict increase of p_rival over bidder i's own value axis.
        own_nodes = np.unique(np.concatenate([mech.coords[i],
                                              [rstar[i], vmax]]))
        own_nodes = own_nodes[(own_nodes >= rstar[i] - tol)
                              & (own_nodes <= vmax + tol)]
        for a, bnd in zip(own_nodes[:-1], own_nodes[1:]):
            pa = mech.threshold(rival, [a])
            pb = mech.threshold(rival, [bnd])
            if pb - pa <= tol:
                continue
            for frac in (0.25, 0.5, 0.75):
                x = a + frac * (bnd - a)
                image = mech.threshold(rival, [x])
                back = mech.threshold(i, [image])
                if abs(back - x) > tol:
                    out.append(Violation(4, i, float(image), float(back),
                                         float(x)))
                    break
    return out
