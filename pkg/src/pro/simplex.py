"""Dense two-phase tableau simplex.

Small and deterministic rather than fast: Dantzig pricing with a switch
to Bland's rule after a degenerate stretch, so cycling cannot occur,
and a basic (vertex) solution is always returned.  Problem sizes here
are a few thousand variables at most, which a dense tableau handles
comfortably.
"""

from __future__ import annotations

import numpy as np

from .errors import Infeasible, ProError, Unbounded

_PIVOT_TOL = 1e-9
_DEGENERATE_SWITCH = 60


def _pivot(tableau, obj, basis, row, col):
    piv = tableau[row, col]
    tableau[row] /= piv
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    obj -= obj[col] * tableau[row]
    basis[row] = col


def _run(tableau, obj, basis, allowed, max_pivots):
    """Pivot until optimal; returns 'optimal' or 'unbounded'."""
    bland = False
    streak = 0
    basis_arr = basis
    for _ in range(max_pivots):
        rc = obj[:-1]
        if bland:
            cand = np.flatnonzero(allowed & (rc < -_PIVOT_TOL))
            if cand.size == 0:
                return "optimal"
            col = int(cand[0])
        else:
            masked = np.where(allowed, rc, 0.0)
            col = int(np.argmin(masked))
            if masked[col] >= -_PIVOT_TOL:
                return "optimal"
        colvals = tableau[:, col]
        pos = colvals > _PIVOT_TOL
        if not np.any(pos):
            return "unbounded"
        ratios = np.where(pos, tableau[:, -1] / np.where(pos, colvals, 1.0), np.inf)
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12)
        row = int(ties[np.argmin(np.asarray(basis_arr)[ties])])
        if best <= 1e-12:
            streak += 1
            if streak >= _DEGENERATE_SWITCH:
                bland = True
        else:
            streak = 0
        _pivot(tableau, obj, basis, row, col)
    raise ProError("simplex pivot limit reached")


def solve_dense_lp(objective, a_eq=None, b_eq=None, a_ub=None, b_ub=None,
                   maximize=False, max_pivots=None):
    """Solve a dense linear program; returns ``(x, value)``.

    Parameters
    ----------
    objective : ndarray
    a_eq, b_eq : equality rows ``a_eq @ x == b_eq``
    a_ub, b_ub : inequality rows ``a_ub @ x <= b_ub``
    maximize : bool
        Sense of the objective; the returned value follows it.

    Raises
    ------
    Infeasible, Unbounded
    """
    c_in = np.asarray(objective, dtype=float)
    nvars = c_in.size
    a_eq = np.zeros((0, nvars)) if a_eq is None else np.asarray(a_eq, dtype=float)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    a_ub = np.zeros((0, nvars)) if a_ub is None else np.asarray(a_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    m_eq, m_ub = a_eq.shape[0], a_ub.shape[0]
    m = m_eq + m_ub
    nslack = m_ub
    nart = m  # worst case; unused artificial columns stay out of the basis
    ntot = nvars + nslack + nart

    tableau = np.zeros((m, ntot + 1))
    tableau[:m_eq, :nvars] = a_eq
    tableau[:m_eq, -1] = b_eq
    tableau[m_eq:, :nvars] = a_ub
    tableau[m_eq:, -1] = b_ub
    for i in range(m_ub):
        tableau[m_eq + i, nvars + i] = 1.0
    neg = tableau[:, -1] < 0.0
    tableau[neg] *= -1.0

    basis = np.empty(m, dtype=np.int64)
    art_used = np.zeros(m, dtype=bool)
    for i in range(m):
        slack_col = nvars + (i - m_eq) if i >= m_eq else -1
        if slack_col >= 0 and tableau[i, slack_col] == 1.0:
            basis[i] = slack_col
        else:
            col = nvars + nslack + i
            tableau[i, col] = 1.0
            basis[i] = col
            art_used[i] = True

    if max_pivots is None:
        max_pivots = 5000 + 20 * (m + ntot)

    # phase 1: price the artificial columns only
    c1 = np.zeros(ntot + 1)
    c1[nvars + nslack:ntot] = 1.0
    obj = c1.copy()
    for i in range(m):
        if c1[basis[i]] != 0.0:
            obj -= c1[basis[i]] * tableau[i]
    allowed = np.ones(ntot, dtype=bool)
    status = _run(tableau, obj, basis, allowed, max_pivots)
    if status != "optimal" or -obj[-1] > 1e-7:
        raise Infeasible("no feasible point satisfies the constraints")

    # drive basic artificials out where a structural pivot exists
    art_start = nvars + nslack
    for i in range(m):
        if basis[i] >= art_start:
            cols = np.flatnonzero(np.abs(tableau[i, :art_start]) > _PIVOT_TOL)
            if cols.size:
                _pivot(tableau, obj, basis, i, int(cols[0]))

    # phase 2 with the real objective; artificial columns stay shut out
    c2 = np.zeros(ntot + 1)
    c2[:nvars] = -c_in if maximize else c_in
    obj = c2.copy()
    for i in range(m):
        if c2[basis[i]] != 0.0:
            obj -= c2[basis[i]] * tableau[i]
    allowed = np.ones(ntot, dtype=bool)
    allowed[art_start:] = False
    status = _run(tableau, obj, basis, allowed, max_pivots)
    if status == "unbounded":
        raise Unbounded("objective is unbounded over the feasible set")

    x = np.zeros(ntot)
    x[basis] = np.maximum(tableau[:, -1], 0.0)
    value = float(np.dot(c_in, x[:nvars]))
    return x[:nvars].copy(), value
