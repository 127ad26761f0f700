"""Per-page action sets, their facet systems, and linear maximization.

A discrete page's admissible outlink rows are the uniform distributions on
obligatory-plus-activated link sets (plus the no-link fallback row when
nothing is obligatory).  Their convex hull has a closed-form facet system
with one record per coordinate plus the simplex equation, regardless of
how many subsets the hull covers.  Skeleton pages use a box-with-simplex
set instead.  Both sets admit an exact linear maximizer: a sort-and-grow
greedy for the uniform family, water filling for the box.

Facet systems exist in two frames: outlink space (rows of S) and chain
space (rows of P, after damping and teleport are applied).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import Infeasible

SEPARATION_TOL = 1e-12


@dataclass(frozen=True)
class Atom:
    """One linear relation ``sum_k coef[k] * x[idx[k]]  rel  rhs``."""

    idx: tuple
    coef: tuple
    rel: str  # "=", "<=", ">="
    rhs: float

    def value(self, x):
        return float(sum(c * x[i] for i, c in zip(self.idx, self.coef)))

    def violation(self, x):
        v = self.value(x)
        if self.rel == "=":
            return abs(v - self.rhs)
        if self.rel == "<=":
            return max(0.0, v - self.rhs)
        return max(0.0, self.rhs - v)

    def describe(self):
        terms = []
        for i, c in zip(self.idx, self.coef):
            if c == 1.0:
                terms.append(f"x[{i}]")
            elif c == -1.0:
                terms.append(f"-x[{i}]")
            else:
                terms.append(f"{c:g}*x[{i}]")
        lhs = " + ".join(terms).replace("+ -", "- ") if terms else "0"
        return f"{lhs} {self.rel} {self.rhs:g}"


@dataclass(frozen=True)
class Facet:
    """One facet record; two-sided bounds keep both atoms in one record."""

    atoms: tuple


@dataclass(frozen=True)
class FacetSystem:
    """Facet records of one page's action set, plus the simplex equation.

    ``space`` is ``"S"`` for outlink rows and ``"P"`` for chain rows.
    The simplex equation is the last facet; every other atom touches at
    most two coordinates.
    """

    num_pages: int
    facets: tuple
    space: str = "S"

    @property
    def constraint_count(self):
        return len(self.facets)

    def atoms(self):
        for f in self.facets:
            yield from f.atoms


@dataclass(frozen=True)
class SeparationResult:
    violated: bool
    magnitude: float
    atom: Optional[Atom]

    @property
    def description(self):
        return self.atom.describe() if self.atom is not None else "inside"


@dataclass(frozen=True)
class DiscreteUniform:
    """Uniform rows on obligatory-plus-activated supports.

    When ``obligatory`` is empty the no-link row (the dangling teleport
    vector) is an admissible action as well.
    """

    obligatory: tuple
    facultative: tuple
    no_link_row: np.ndarray
    num_pages: int
    space: str = "S"
    damping: Optional[float] = None
    teleport: Optional[np.ndarray] = None

    def damped(self, damping, teleport):
        return DiscreteUniform(self.obligatory, self.facultative,
                               self.no_link_row, self.num_pages,
                               space="P", damping=damping, teleport=teleport)


@dataclass(frozen=True)
class BoxSimplex:
    """Rows with per-coordinate bounds and unit total mass."""

    lower: np.ndarray
    upper: np.ndarray
    space: str = "S"

    def damped(self, damping, teleport):
        return BoxSimplex(damping * self.lower + (1.0 - damping) * teleport,
                          damping * self.upper + (1.0 - damping) * teleport,
                          space="P")


@dataclass(frozen=True)
class MaximizeResult:
    """Maximizer of a linear objective over one action set.

    ``support`` is the obligatory-plus-activated set for a uniform row
    and ``None`` for the no-link row or a box row.
    """

    value: float
    row: np.ndarray
    support: Optional[tuple]


def facets_discrete(obligatory, facultative, dangling_teleport, num_pages):
    """Facet system of the convex hull of a discrete page's actions.

    Parameters
    ----------
    obligatory, facultative : sequences of int
        The page's link partition; everything else is forbidden.
    dangling_teleport : ndarray
        Fallback row used when no link is kept.
    num_pages : int

    Returns
    -------
    FacetSystem
        Outlink-space system with exactly ``num_pages + 1`` records.

    Notes
    -----
    Three shapes arise.  With an obligatory anchor the hull is a product
    of segments ``0 <= x[j] <= x[anchor]`` over facultative coordinates.
    Without obligatory links the no-link row joins the hull: if the
    fallback puts mass on some forbidden coordinate the hull is a simplex
    with the fallback row as apex, otherwise it is the plain probability
    simplex on the facultative coordinates.
    """
    obligatory = tuple(sorted(int(j) for j in obligatory))
    facultative = tuple(sorted(int(j) for j in facultative))
    members = set(obligatory) | set(facultative)
    forbidden = [j for j in range(num_pages) if j not in members]
    facets = []

    if obligatory:
        anchor = obligatory[0]
        for j in forbidden:
            facets.append(Facet((Atom((j,), (1.0,), "=", 0.0),)))
        for j in obligatory[1:]:
            facets.append(Facet((Atom((j, anchor), (1.0, -1.0), "=", 0.0),)))
        for j in facultative:
            facets.append(Facet((Atom((j,), (1.0,), ">=", 0.0),
                                 Atom((j, anchor), (1.0, -1.0), "<=", 0.0))))
        facets.append(Facet((Atom((anchor,), (1.0,), ">=", 0.0),)))
    else:
        z = dangling_teleport
        massed = [j for j in forbidden if z[j] > 0.0]
        if massed:
            anchor = massed[0]
            ratio = 1.0 / float(z[anchor])
            for j in forbidden:
                if j == anchor:
                    continue
                facets.append(Facet((Atom((j, anchor),
                                          (1.0, -float(z[j]) * ratio), "=", 0.0),)))
            for j in facultative:
                facets.append(Facet((Atom((j, anchor),
                                          (1.0, -float(z[j]) * ratio), ">=", 0.0),)))
            facets.append(Facet((Atom((anchor,), (1.0,), ">=", 0.0),)))
        else:
            for j in forbidden:
                facets.append(Facet((Atom((j,), (1.0,), "=", 0.0),)))
            for j in facultative:
                facets.append(Facet((Atom((j,), (1.0,), ">=", 0.0),)))

    facets.append(Facet((Atom(tuple(range(num_pages)),
                              (1.0,) * num_pages, "=", 1.0),)))
    return FacetSystem(num_pages, tuple(facets), space="S")


def facets_box(lower, upper):
    """Facet system of a box-with-simplex set, in outlink space."""
    n = lower.size
    facets = []
    for j in range(n):
        atoms = [Atom((j,), (1.0,), ">=", float(lower[j]))]
        if upper[j] < 1.0:
            atoms.append(Atom((j,), (1.0,), "<=", float(upper[j])))
        facets.append(Facet(tuple(atoms)))
    facets.append(Facet((Atom(tuple(range(n)), (1.0,) * n, "=", 1.0),)))
    return FacetSystem(n, tuple(facets), space="S")


def apply_damping(system, damping, teleport):
    """Rewrite a facet system from outlink space to chain space.

    Substitutes ``x = (y - (1 - damping) * teleport) / damping`` into
    every atom: a relation ``a.x rel b`` becomes ``a.y rel damping * b +
    (1 - damping) * a.teleport``.  The simplex equation maps to itself.
    """
    if system.space != "S":
        raise ValueError("system is already in chain space")
    out = []
    for facet in system.facets:
        atoms = []
        for a in facet.atoms:
            shift = sum(c * float(teleport[i]) for i, c in zip(a.idx, a.coef))
            atoms.append(Atom(a.idx, a.coef, a.rel,
                              damping * a.rhs + (1.0 - damping) * shift))
        out.append(Facet(tuple(atoms)))
    return FacetSystem(system.num_pages, tuple(out), space="P")


def separate(system, x, tol=SEPARATION_TOL):
    """Check membership of ``x``; report the most violated constraint.

    Returns
    -------
    SeparationResult
        ``violated`` is False when every atom holds within ``tol``;
        otherwise ``atom`` is the worst-violated relation and
        ``magnitude`` its violation.
    """
    worst, worst_atom = 0.0, None
    for atom in system.atoms():
        v = atom.violation(x)
        if v > worst:
            worst, worst_atom = v, atom
    if worst <= tol:
        return SeparationResult(False, worst, None)
    return SeparationResult(True, worst, worst_atom)


def greedy_uniform_support(base_sum, base_count, candidates, scores):
    """Grow a uniform-average support while the next score beats the mean.

    ``candidates`` must be sorted by descending score.  The strict
    comparison leaves equal-valued candidates out, so the returned
    support is the smallest one attaining the best average.
    Returns ``(picked_count, average)``.
    """
    total, m, k = base_sum, base_count, 0
    if m == 0:
        if not candidates:
            raise ValueError("no obligatory links and no candidates")
        total, m, k = scores[0], 1, 1
    while k < len(candidates) and total / m < scores[k]:
        total += scores[k]
        m += 1
        k += 1
    return k, total / m


def linear_maximize(action_set, objective):
    """Maximize ``row . objective`` over one page's action set.

    Parameters
    ----------
    action_set : DiscreteUniform or BoxSimplex
    objective : ndarray
        Dense score per target page, in the set's own frame.

    Returns
    -------
    MaximizeResult

    Raises
    ------
    Infeasible
        For a box whose bounds admit no probability row.
    """
    if isinstance(action_set, BoxSimplex):
        return _maximize_box(action_set, objective)
    if action_set.space == "P":
        inner = DiscreteUniform(action_set.obligatory, action_set.facultative,
                                action_set.no_link_row, action_set.num_pages)
        alpha, z = action_set.damping, action_set.teleport
        res = linear_maximize(inner, objective)
        row = alpha * res.row + (1.0 - alpha) * z
        value = alpha * res.value + (1.0 - alpha) * float(np.dot(z, objective))
        return MaximizeResult(value, row, res.support)

    obligatory = action_set.obligatory
    facultative = action_set.facultative
    n = action_set.num_pages
    cand = sorted(facultative, key=lambda j: (-objective[j], j))
    scores = [float(objective[j]) for j in cand]
    base_sum = float(sum(objective[j] for j in obligatory))

    if not obligatory and not facultative:
        z = action_set.no_link_row
        return MaximizeResult(float(np.dot(z, objective)), np.asarray(z, dtype=float), None)

    if obligatory:
        k, avg = greedy_uniform_support(base_sum, len(obligatory), cand, scores)
    else:
        k, avg = greedy_uniform_support(0.0, 0, cand, scores)
        z = action_set.no_link_row
        no_link = float(np.dot(z, objective))
        if no_link > avg:
            return MaximizeResult(no_link, np.asarray(z, dtype=float), None)

    support = tuple(sorted(set(obligatory) | set(cand[:k])))
    row = np.zeros(n)
    row[list(support)] = 1.0 / len(support)
    return MaximizeResult(avg, row, support)


def _maximize_box(box, objective):
    lower, upper = box.lower, box.upper
    slack = 1.0 - float(lower.sum())
    if slack < -1e-12:
        raise Infeasible("box lower bounds exceed unit mass")
    if float(upper.sum()) < 1.0 - 1e-12:
        raise Infeasible("box upper bounds cannot reach unit mass")
    x = lower.astype(np.float64).copy()
    if slack > 0.0:
        order = np.lexsort((np.arange(objective.size), -objective))
        for j in order:
            room = float(upper[j] - lower[j])
            if room <= 0.0:
                continue
            take = min(room, slack)
            x[j] += take
            slack -= take
            if slack <= 1e-15:
                break
    return MaximizeResult(float(np.dot(x, objective)), x, None)
