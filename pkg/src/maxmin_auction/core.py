"""Domain types: problem instances, mechanisms, and their evaluation.

A deterministic dominant-strategy mechanism is represented either by per-bidder
affine scores (:class:`LinearScoreAuction`) or by threshold tables on a product
grid (:class:`GridMechanism`).  Bidders are indexed 0..n-1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError, FeasibilityError

COMP_TOL = 1e-12


def _as_tuple(x, n: int) -> tuple[float, ...]:
    arr = np.broadcast_to(np.asarray(x, dtype=float), (n,))
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class Instance:
    """Problem data: bidder count, per-bidder means, per-bidder upper bounds."""

    n: int
    means: tuple[float, ...]
    vmax: tuple[float, ...]

    def __init__(self, n: int, means, vmax):
        if n < 2:
            raise DomainError("at least two bidders required")
        if np.asarray(means).size not in (1, n) or np.asarray(vmax).size not in (1, n):
            raise DomainError("means and vmax must have length n (or be scalar)")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "means", _as_tuple(means, n))
        object.__setattr__(self, "vmax", _as_tuple(vmax, n))
        for m, v in zip(self.means, self.vmax):
            if not (np.isfinite(m) and np.isfinite(v)):
                raise DomainError("means and bounds must be finite")
            if not (0.0 < m < v):
                raise DomainError(f"need 0 < mean < upper bound, got {m}, {v}")

    @property
    def mean_vector(self) -> np.ndarray:
        return np.asarray(self.means)

    @property
    def vmax_vector(self) -> np.ndarray:
        return np.asarray(self.vmax)

    def common_vmax(self) -> float:
        if max(self.vmax) - min(self.vmax) > COMP_TOL:
            raise DomainError("operation requires equal upper bounds")
        return self.vmax[0]


def drop(values: Sequence[float], i: int) -> np.ndarray:
    """Values of all bidders except i, in increasing index order."""
    v = np.asarray(values, dtype=float)
    return np.delete(v, i)


@dataclass(frozen=True)
class LinearScoreAuction:
    """Affine-score mechanism: the highest nonnegative score wins.

    ``excluded[i]`` means bidder i can never win; her score is never compared.
    """

    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    vmax: tuple[float, ...]
    excluded: tuple[bool, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        n = len(self.alphas)
        if self.excluded is None:
            object.__setattr__(self, "excluded", tuple(False for _ in range(n)))
        if not (len(self.betas) == len(self.vmax) == len(self.excluded) == n):
            raise DomainError("parameter lengths disagree")
        for i in range(n):
            if self.excluded[i]:
                continue
            if self.alphas[i] < 0 or self.betas[i] <= 0:
                raise DomainError("scores need alpha >= 0 and beta > 0")

    @property
    def n(self) -> int:
        return len(self.alphas)

    def included(self) -> list[int]:
        return [i for i in range(self.n) if not self.excluded[i]]

    def score(self, i: int, v_i: float) -> float:
        if self.excluded[i]:
            raise DomainError(f"bidder {i} is excluded; score undefined")
        if not (-COMP_TOL <= v_i <= self.vmax[i] + COMP_TOL):
            raise DomainError(f"value {v_i} outside [0, {self.vmax[i]}]")
        return self.betas[i] * v_i - self.alphas[i]

    def reserve(self, i: int) -> float:
        """Lowest value with nonnegative score (the generalized reserve)."""
        if self.excluded[i]:
            return self.vmax[i]
        return min(self.alphas[i] / self.betas[i], self.vmax[i])

    def allocate(self, v: Sequence[float]) -> Optional[int]:
        """Winner index, or None if every score is negative.

        Ties at the top score go to the lowest index; a zero top score still
        wins (granting at indifference never hurts revenue).
        """
        best, winner = 0.0, None
        for i in self.included():
            s = self.score(i, v[i])
            if winner is None:
                if s >= 0.0:
                    best, winner = s, i
            elif s > best:
                best, winner = s, i
        return winner

    def threshold(self, i: int, v_others: Sequence[float]) -> float:
        """Minimal winning value for bidder i against rival values ``v_others``.

        ``v_others`` lists the other bidders' values in increasing index order.
        """
        if self.excluded[i]:
            return self.vmax[i]
        rivals = [j for j in range(self.n) if j != i]
        best = 0.0
        for j, w in zip(rivals, v_others):
            if not self.excluded[j]:
                best = max(best, self.score(j, w))
        p = (self.alphas[i] + best) / self.betas[i]
        return float(min(max(p, 0.0), self.vmax[i]))

    def payment(self, v: Sequence[float]) -> np.ndarray:
        """Per-bidder transfers at profile v: the winner pays her threshold."""
        t = np.zeros(self.n)
        winner = self.allocate(v)
        if winner is not None:
            t[winner] = self.threshold(winner, drop(v, winner))
        return t


def corner_hitting(r: Sequence[float], vmax) -> LinearScoreAuction:
    """Auction whose included bidders all have maximal score one.

    Bidder i gets slope 1/(vmax_i - r_i) and intercept r_i/(vmax_i - r_i);
    a bidder with r_i == vmax_i is excluded outright.
    """
    r = np.asarray(r, dtype=float)
    vm = np.broadcast_to(np.asarray(vmax, dtype=float), r.shape)
    alphas, betas, excluded = [], [], []
    for ri, vi in zip(r, vm):
        if not (0.0 <= ri <= vi):
            raise DomainError(f"reserve {ri} outside [0, {vi}]")
        if vi - ri <= COMP_TOL:
            alphas.append(float(ri))
            betas.append(1.0)
            excluded.append(True)
        else:
            alphas.append(float(ri / (vi - ri)))
            betas.append(float(1.0 / (vi - ri)))
            excluded.append(False)
    return LinearScoreAuction(tuple(alphas), tuple(betas),
                              tuple(float(v) for v in vm), tuple(excluded))


@dataclass(frozen=True)
class SupplyViolation:
    node: tuple[int, ...]
    values: tuple[float, ...]
    bidders: tuple[int, ...]


@dataclass(frozen=True)
class GridMechanism:
    """Thresholds tabulated on per-bidder coordinate grids.

    ``coords[i]`` is strictly increasing and covers [0, vmax_i] with both
    endpoints present.  ``thresholds[i]`` has one axis per rival bidder
    (in increasing index order) and holds p_i on the rival grid; between
    nodes p_i is evaluated by multilinear interpolation.
    """

    coords: tuple[np.ndarray, ...]
    thresholds: tuple[np.ndarray, ...]

    def __init__(self, coords, thresholds):
        coords = tuple(np.asarray(c, dtype=float) for c in coords)
        n = len(coords)
        tables = []
        for i, (c, t) in enumerate(zip(coords, thresholds)):
            if len(c) < 2 or np.any(np.diff(c) <= 0) or abs(c[0]) > COMP_TOL:
                raise DomainError("coordinates must increase strictly from 0")
            shape = tuple(len(coords[j]) for j in range(n) if j != i)
            t = np.asarray(t, dtype=float).reshape(shape)
            if np.any(t < -COMP_TOL) or np.any(t > c[-1] + COMP_TOL):
                raise DomainError("thresholds must lie in [0, vmax]")
            tables.append(t)
        if len(thresholds) != n:
            raise DomainError("one threshold table per bidder required")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "thresholds", tuple(tables))

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def vmax(self) -> tuple[float, ...]:
        return tuple(float(c[-1]) for c in self.coords)

    def threshold(self, i: int, v_others: Sequence[float]) -> float:
        """p_i at rival values ``v_others`` by multilinear interpolation."""
        axes = [self.coords[j] for j in range(self.n) if j != i]
        return _multilinear(self.thresholds[i], axes, np.asarray(v_others, float))

    def allocate(self, v: Sequence[float]) -> Optional[int]:
        strict = [i for i in range(self.n)
                  if v[i] > self.threshold(i, drop(v, i)) + COMP_TOL]
        if len(strict) > 1:
            raise FeasibilityError(f"two strict winners {strict} at {tuple(v)}")
        if strict:
            return strict[0]
        for i in range(self.n):
            if v[i] >= self.threshold(i, drop(v, i)) - COMP_TOL:
                return i
        return None

    def payment(self, v: Sequence[float]) -> np.ndarray:
        t = np.zeros(self.n)
        winner = self.allocate(v)
        if winner is not None:
            t[winner] = self.threshold(winner, drop(v, winner))
        return t


Mechanism = Union[LinearScoreAuction, GridMechanism]


def _multilinear_batch(table: np.ndarray, axes: list[np.ndarray],
                       points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of ``table`` at many points at once."""
    pts = np.atleast_2d(points)
    idx, weights = [], []
    for k, c in enumerate(axes):
        x = np.clip(pts[:, k], c[0], c[-1])
        j = np.clip(np.searchsorted(c, x, side="right") - 1, 0, len(c) - 2)
        idx.append(j)
        weights.append((x - c[j]) / (c[j + 1] - c[j]))
    out = np.zeros(pts.shape[0])
    for corner in itertools.product((0, 1), repeat=len(axes)):
        w = np.ones(pts.shape[0])
        sel = []
        for k, bit in enumerate(corner):
            w = w * (weights[k] if bit else 1.0 - weights[k])
            sel.append(idx[k] + bit)
        out += w * table[tuple(sel)]
    return out


def _multilinear(table: np.ndarray, axes: list[np.ndarray], point: np.ndarray) -> float:
    """Multilinear interpolation of ``table`` on the product of ``axes``."""
    idx = []
    weights = []
    for c, x in zip(axes, point):
        x = min(max(float(x), c[0]), c[-1])
        k = int(np.searchsorted(c, x, side="right") - 1)
        k = min(max(k, 0), len(c) - 2)
        h = c[k + 1] - c[k]
        w = (x - c[k]) / h
        idx.append(k)
        weights.append(w)
    total = 0.0
    for corner in itertools.product((0, 1), repeat=len(axes)):
        w = 1.0
        for d, bit in enumerate(corner):
            w *= weights[d] if bit else 1.0 - weights[d]
        if w:
            total += w * float(table[tuple(k + bit for k, bit in zip(idx, corner))])
    return total


def score(lsa: LinearScoreAuction, i: int, v_i: float) -> float:
    return lsa.score(i, v_i)


def allocate(mech: Mechanism, v: Sequence[float]) -> Optional[int]:
    return mech.allocate(v)


def threshold(mech: Mechanism, i: int, v_others: Sequence[float]) -> float:
    return mech.threshold(i, v_others)


def payment(mech: Mechanism, v: Sequence[float]) -> np.ndarray:
    return mech.payment(v)


def revenue(mech: Mechanism, v: Sequence[float]) -> float:
    """Total transfer collected at profile v."""
    return float(np.sum(mech.payment(v)))


def check_feasible(mech: GridMechanism) -> Optional[SupplyViolation]:
    """Scan the product grid for profiles where two bidders strictly win."""
    n = mech.n
    grids = np.meshgrid(*mech.coords, indexing="ij")
    wins = np.zeros(grids[0].shape, dtype=int)
    for i in range(n):
        wins += grids[i] > np.expand_dims(mech.thresholds[i], axis=i) + COMP_TOL
    bad = np.argwhere(wins >= 2)
    if bad.size == 0:
        return None
    node = tuple(int(k) for k in bad[0])
    values = tuple(float(mech.coords[i][node[i]]) for i in range(n))
    bidders = tuple(i for i in range(n)
                    if values[i] > mech.threshold(i, drop(values, i)) + COMP_TOL)
    return SupplyViolation(node=node, values=values, bidders=bidders)


def grid_from_lsa(lsa: LinearScoreAuction, coords) -> GridMechanism:
    """Tabulate an affine-score mechanism's thresholds on the given grids."""
    coords = [np.asarray(c, dtype=float) for c in coords]
    n = lsa.n
    tables = []
    for i in range(n):
        axes = [coords[j] for j in range(n) if j != i]
        shape = tuple(len(a) for a in axes)
        t = np.empty(shape)
        for node in itertools.product(*(range(s) for s in shape)):
            w = [axes[d][k] for d, k in enumerate(node)]
            t[node] = lsa.threshold(i, w)
        tables.append(t)
    return GridMechanism(coords, tables)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite-support joint value distribution: Nature's strategies."""

    atoms: np.ndarray   # (k, n) value vectors
    probs: np.ndarray   # (k,) nonnegative, summing to one

    def __init__(self, atoms, probs, vmax=None):
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        probs = np.asarray(probs, dtype=float)
        if atoms.shape[0] != probs.shape[0]:
            raise DomainError("one probability per atom required")
        if np.any(probs < -1e-12):
            raise DomainError("negative probability")
        if abs(float(probs.sum()) - 1.0) > 1e-12:
            raise DomainError("probabilities must sum to one")
        if np.any(atoms < -1e-12):
            raise DomainError("atom outside the box")
        if vmax is not None:
            vm = np.broadcast_to(np.asarray(vmax, dtype=float), atoms.shape[1:])
            if np.any(atoms > vm + 1e-12):
                raise DomainError("atom outside the box")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    def mean(self) -> np.ndarray:
        return self.probs @ self.atoms

    def expected_revenue(self, mech: Mechanism) -> float:
        return float(sum(p * revenue(mech, a)
                         for a, p in zip(self.atoms, self.probs)))
