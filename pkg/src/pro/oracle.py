"""Slow reference computations used to check the optimizers.

Everything here takes the dumb route on purpose: stationary measures
come from a dense linear solve, optima from full enumeration of the
activation patterns, derivatives from symmetric differences.  None of
it shares code with the value-iteration path, so agreement between the
two is evidence, not tautology.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (BudgetExceeded, Infeasible, SingularSystem, StepTooLarge,
                     TooLarge, ValidationError)
from .graph import DiscreteChoice, Strategy

DEFAULT_MAX_FACULTATIVE = 20
HARD_CAP = 24
STATIONARY_CAP = 500


@dataclass(frozen=True)
class EnumerationBudget:
    """Cap on total facultative links a brute-force run will accept."""

    max_facultative: int = DEFAULT_MAX_FACULTATIVE

    def __post_init__(self):
        if not 0 <= self.max_facultative <= HARD_CAP:
            raise ValidationError(
                f"enumeration budget must lie in [0, {HARD_CAP}]")


@dataclass(frozen=True)
class BruteForceEntry:
    """One enumerated activation pattern: concatenated bits, income, feasibility."""

    bits: tuple
    value: float
    feasible: bool


@dataclass(frozen=True)
class BruteForceResult:
    """Best feasible activation pattern found by full enumeration.

    ``table`` is filled only on request; patterns are enumerated in
    lexicographic order of the concatenated per-page bit vectors, and
    ties keep the earliest pattern.
    """

    value: float
    strategy: Strategy
    table: Optional[tuple]


def enumerate_discrete_actions(obligatory, facultative, no_link_row, budget=None):
    """All outlink rows of one discrete page, in bit-vector order.

    Bits align with the ascending facultative targets; the all-zero
    pattern comes first.  For a page without obligatory links that
    pattern is the no-link row.

    Returns
    -------
    list of (bits, row)
    """
    budget = budget or EnumerationBudget()
    obligatory = tuple(int(j) for j in obligatory)
    facultative = tuple(int(j) for j in facultative)
    if len(facultative) > budget.max_facultative:
        raise BudgetExceeded(
            f"{len(facultative)} facultative links exceed the budget "
            f"{budget.max_facultative}")
    n = np.asarray(no_link_row).size
    out = []
    for bits in itertools.product((0, 1), repeat=len(facultative)):
        support = list(obligatory) + [j for j, b in zip(facultative, bits) if b]
        if support:
            row = np.zeros(n)
            row[support] = 1.0 / len(support)
        else:
            row = np.asarray(no_link_row, dtype=float).copy()
        out.append((bits, row))
    return out


def exact_stationary(p):
    """Stationary measure of a dense chain by direct linear solve.

    Replaces the last balance equation with the normalization and
    verifies the result to within ``1e-12``.

    Raises
    ------
    TooLarge
        Beyond the dense cap of 500 pages.
    SingularSystem
        When the solve fails or the residual check does not pass, which
        signals a chain without a unique stationary measure.
    """
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    if n > STATIONARY_CAP:
        raise TooLarge(f"dense stationary solve is capped at {STATIONARY_CAP} pages")
    a = (np.eye(n) - p).T
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if float(np.abs(pi - pi @ p).max()) > 1e-12 or float(pi.min()) < -1e-12:
        raise SingularSystem("stationary residual check failed")
    return pi


def chain_utility(p, pi, rewards):
    """Income ``sum_ij pi[i] P[i, j] r[i, j]`` of a dense chain."""
    p = np.asarray(p, dtype=float)
    rbar = rewards.base.copy()
    delta = rewards.delta
    if delta.nnz:
        rows = np.repeat(np.arange(p.shape[0]), delta.row_counts())
        rbar += np.bincount(rows, weights=p[rows, delta.indices] * delta.data,
                            minlength=p.shape[0])
    return float(np.dot(pi, rbar))


def _dense_rows(weights, n):
    # base broadcast plus scattered per-link part, one dense row per page
    rows = np.repeat(weights.base[:, None], n, axis=1)
    delta = weights.delta
    if delta.nnz:
        ii = np.repeat(np.arange(n), delta.row_counts())
        rows[ii, delta.indices] += delta.data
    return rows


def brute_force_optimum(instance, budget=None, keep_table=False):
    """Enumerate every activation pattern; return the best feasible one.

    Parameters
    ----------
    instance : WebGraphInstance
        Discrete pages only.
    budget : EnumerationBudget, optional
    keep_table : bool
        Also return the full pattern table (costly for large budgets).

    Raises
    ------
    ValidationError
        If the instance has weight-constrained pages.
    BudgetExceeded
        If the total facultative count exceeds the budget.
    Infeasible
        If no pattern satisfies the coupling rows.
    """
    budget = budget or EnumerationBudget()
    if instance.skeletons:
        raise ValidationError("enumeration handles discrete pages only")
    n = instance.num_pages
    if n > STATIONARY_CAP:
        raise TooLarge(f"brute force is capped at {STATIONARY_CAP} pages")
    if instance.fac_indices.size > budget.max_facultative:
        raise BudgetExceeded(
            f"{instance.fac_indices.size} facultative links exceed the budget "
            f"{budget.max_facultative}")
    alpha = instance.damping
    z = instance.teleport
    hang = instance.dangling_teleport

    page_rows, page_bits, fac_lists = [], [], []
    for i in range(n):
        acts = enumerate_discrete_actions(instance.obligatory_of(i),
                                          instance.facultative_of(i), hang, budget)
        page_rows.append(np.stack([row for _, row in acts]))
        page_bits.append([bits for bits, _ in acts])
        fac_lists.append([int(j) for j in instance.facultative_of(i)])
    counts = np.array([len(b) for b in page_bits], dtype=np.int64)
    strides = np.ones(n, dtype=np.int64)
    for i in range(n - 2, -1, -1):
        strides[i] = strides[i + 1] * counts[i + 1]
    total = int(strides[0] * counts[0])

    rdense = _dense_rows(instance.rewards, n)
    c_rows = [_dense_rows(c.weights, n) for c in instance.coupling]
    c_bounds = np.array([c.bound for c in instance.coupling])
    # per page, income of each action row against a weight row:
    #   sum_j (alpha * S_aj + (1 - alpha) * z_j) * weight_j
    def per_action(weight_rows):
        return [alpha * page_rows[i] @ weight_rows[i]
                + (1.0 - alpha) * float(np.dot(z, weight_rows[i]))
                for i in range(n)]
    r_act = per_action(rdense)
    c_act = [per_action(cr) for cr in c_rows]

    eye = np.eye(n)
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    best_value, best_index = -math.inf, -1
    any_feasible = False
    table = [] if keep_table else None
    chunk = 1024
    for start in range(0, total, chunk):
        ids = np.arange(start, min(start + chunk, total), dtype=np.int64)
        sel = (ids[:, None] // strides[None, :]) % counts[None, :]
        m = ids.size
        s = np.empty((m, n, n))
        for i in range(n):
            s[:, i, :] = page_rows[i][sel[:, i]]
        p = alpha * s + (1.0 - alpha) * z[None, None, :]
        a = np.swapaxes(eye[None, :, :] - p, 1, 2).copy()
        a[:, -1, :] = 1.0
        pis = np.linalg.solve(a, np.tile(rhs, (m, 1))[:, :, None])[:, :, 0]
        resid = np.abs(pis - np.einsum("bi,bij->bj", pis, p)).max()
        if float(resid) > 1e-10:
            raise SingularSystem("stationary residual check failed in a batch")
        rb = np.empty((m, n))
        for i in range(n):
            rb[:, i] = r_act[i][sel[:, i]]
        values = (pis * rb).sum(axis=1)
        feas = np.ones(m, dtype=bool)
        for k in range(len(instance.coupling)):
            ck = np.empty((m, n))
            for i in range(n):
                ck[:, i] = c_act[k][i][sel[:, i]]
            feas &= (pis * ck).sum(axis=1) <= c_bounds[k] + 1e-9
        if table is not None:
            for row in range(m):
                bits = tuple(b for i in range(n) for b in page_bits[i][sel[row, i]])
                table.append(BruteForceEntry(bits, float(values[row]), bool(feas[row])))
        if np.any(feas):
            any_feasible = True
            masked = np.where(feas, values, -math.inf)
            arg = int(np.argmax(masked))
            if masked[arg] > best_value:
                best_value = float(masked[arg])
                best_index = start + arg
    if not any_feasible:
        raise Infeasible("no activation pattern satisfies the coupling rows")

    sel = [(best_index // int(strides[i])) % int(counts[i]) for i in range(n)]
    choices = {}
    for i in range(n):
        if fac_lists[i]:
            bits = page_bits[i][sel[i]]
            choices[i] = DiscreteChoice(tuple(j for j, b in zip(fac_lists[i], bits) if b))
    return BruteForceResult(best_value, Strategy(choices),
                            tuple(table) if table is not None else None)


def finite_diff_directional(p, rewards, direction, step):
    """Symmetric difference quotient of income along a row-change direction.

    ``direction`` must have zero row sums so the perturbed matrices stay
    stochastic; both of them must stay nonnegative.

    Raises
    ------
    ValidationError
        If a row of ``direction`` does not sum to zero.
    StepTooLarge
        If a perturbed chain leaves the admissible set.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(direction, dtype=float)
    if float(np.abs(q.sum(axis=1)).max()) > 1e-9:
        raise ValidationError("direction rows must sum to zero")
    lo = p - step * q
    hi = p + step * q
    if float(lo.min()) < 0.0 or float(hi.min()) < 0.0:
        raise StepTooLarge("perturbed chain has a negative entry")
    u_hi = chain_utility(hi, exact_stationary(hi), rewards)
    u_lo = chain_utility(lo, exact_stationary(lo), rewards)
    return (u_hi - u_lo) / (2.0 * step)
