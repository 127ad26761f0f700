"""Shared builders for the test suite.

Hand-written tiny instances with known optima, seeded random instance
generators at several scales, a dense vertex enumerator for small facet
systems, and an exact utility evaluator that goes through the direct
linear-algebra route rather than the solver under test.
"""

import itertools

import numpy as np

from pro.graph import Rewards, WebGraphInstance, load_instance
from pro.oracle import chain_utility, exact_stationary
from pro.sparse import index_csr


def two_page_doc():
    """Two controlled pages, four optional links, per-link income."""
    return {
        "num_pages": 2,
        "damping": 0.85,
        "teleport": [0.5, 0.5],
        "obligatory": [],
        "facultative": [[0, 0], [0, 1], [1, 0], [1, 1]],
        "rewards": {"type": "per_link", "default": 0.0,
                    "entries": [[0, 0, 1.0], [0, 1, 10.0],
                                [1, 0, 2.0], [1, 1, 2.0]]},
    }


def two_page_coupled_doc():
    """Same graph, income only on visits to page 1, visit-share budget.

    The budget row charges -1 per visit to page 0 and +1 per visit to
    page 1 with bound 0, so feasibility means page 1 is visited no more
    often than page 0.
    """
    doc = two_page_doc()
    doc["rewards"] = {"type": "per_page", "values": [0.0, 1.0]}
    doc["coupling"] = [{"per_page": [-1.0, 1.0], "bound": 0.0}]
    return doc


def two_page_instance():
    return load_instance(two_page_doc())


def two_page_coupled_instance():
    return load_instance(two_page_coupled_doc())


def random_discrete_doc(rng, n_max=8, fac_budget=14, reward_kind="per_link",
                        damping=None):
    """Random discrete instance within the small-oracle regime.

    Total facultative link count stays below ``fac_budget`` so full
    enumeration stays cheap; rewards are uniform in [-1, 1].
    """
    n = int(rng.integers(2, n_max + 1))
    if damping is None:
        damping = float(rng.uniform(0.3, 0.95))
    teleport = rng.random(n) + 0.05
    teleport /= teleport.sum()

    links = set()
    obligatory = []
    for i in range(n):
        if rng.random() < 0.45:
            for j in rng.choice(n, size=int(rng.integers(1, 3)), replace=False):
                if (i, int(j)) not in links:
                    links.add((i, int(j)))
                    obligatory.append([i, int(j)])
    facultative = []
    budget = int(rng.integers(0, fac_budget + 1))
    for _ in range(4 * budget):
        if len(facultative) == budget:
            break
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n))
        if (i, j) not in links:
            links.add((i, j))
            facultative.append([i, j])

    if reward_kind == "per_link":
        entries = [[i, j, float(rng.uniform(-1.0, 1.0))]
                   for i in range(n) for j in range(n)]
        rewards = {"type": "per_link", "default": 0.0, "entries": entries}
    else:
        rewards = {"type": "per_page",
                   "values": [float(x) for x in rng.uniform(-1.0, 1.0, size=n)]}

    doc = {
        "num_pages": n,
        "damping": damping,
        "teleport": [float(x) for x in teleport],
        "obligatory": obligatory,
        "facultative": facultative,
        "rewards": rewards,
    }
    if rng.random() < 0.3:
        hang = rng.random(n)
        hang[rng.integers(0, n)] = 0.0
        hang /= hang.sum()
        doc["dangling_teleport"] = [float(x) for x in hang]
    return doc


def random_discrete_instance(rng, **kw):
    return load_instance(random_discrete_doc(rng, **kw))


def random_continuous_doc(rng, n_max=30):
    """Random instance whose every page carries a weight skeleton."""
    n = int(rng.integers(3, n_max + 1))
    damping = float(rng.uniform(0.5, 0.9))
    teleport = rng.random(n) + 0.05
    teleport /= teleport.sum()
    skeleton = []
    for i in range(n):
        q = rng.random(n) * (rng.random(n) < 0.6)
        if q.sum() <= 0.0:
            q[int(rng.integers(0, n))] = 1.0
        q /= q.sum()
        banned = []
        if rng.random() < 0.3:
            banned = [int(j) for j in rng.choice(n, size=2, replace=False)]
        skeleton.append({"page": i, "q": [float(x) for x in q],
                         "mu": float(rng.uniform(0.3, 0.9)),
                         "banned": banned})
    return {
        "num_pages": n,
        "damping": damping,
        "teleport": [float(x) for x in teleport],
        "obligatory": [],
        "facultative": [],
        "rewards": {"type": "per_page",
                    "values": [float(x) for x in rng.uniform(-1.0, 1.0, size=n)]},
        "skeleton": skeleton,
    }


def add_active_coupling(doc, rng, slack=None):
    """Attach one coupling row whose bound bites but stays attainable.

    The bound is placed between the minimum attainable spending and the
    spending of the unconstrained optimum, so the constraint is active
    for small ``slack`` yet a feasible strategy always exists.
    """
    from pro.chain import stationary, utility_from_chain
    from pro.graph import build_transition
    from pro.solver_local import SolverConfig, value_iterate

    inst = load_instance(doc)
    n = inst.num_pages
    weights = Rewards.per_page(rng.uniform(-1.0, 1.0, size=n))

    _, strat_max = value_iterate(inst, SolverConfig(tol=1e-10))
    trans = build_transition(inst, strat_max)
    spend_at_opt = utility_from_chain(trans, stationary(trans, tol=1e-12).pi,
                                      weights)

    flipped = inst.local_only(weights.scaled(-1.0))
    _, strat_min = value_iterate(flipped, SolverConfig(tol=1e-10))
    trans_min = build_transition(inst, strat_min)
    spend_min = utility_from_chain(trans_min,
                                   stationary(trans_min, tol=1e-12).pi, weights)

    if slack is None:
        slack = float(rng.uniform(0.25, 0.75))
    bound = spend_min + slack * max(spend_at_opt - spend_min, 0.0)
    out = dict(doc)
    out["coupling"] = [{"per_page": [float(x) for x in weights.base],
                       "bound": float(bound)}]
    return out


def exact_utility(instance, strategy):
    """Income of a strategy's chain via direct linear algebra."""
    from pro.graph import build_transition

    trans = build_transition(instance, strategy)
    pi = exact_stationary(trans.dense_p())
    return chain_utility(trans.dense_p(), pi, instance.rewards)


def random_box_row(rng, lower, upper):
    """Random feasible point of a box-with-simplex set."""
    x = lower.astype(float).copy()
    slack = 1.0 - float(x.sum())
    order = rng.permutation(lower.size)
    for j in order:
        room = float(upper[j] - x[j])
        if room <= 0.0 or slack <= 0.0:
            continue
        take = min(room, slack) * float(rng.random())
        x[j] += take
        slack -= take
    for j in order:  # close any remainder deterministically
        room = float(upper[j] - x[j])
        take = min(room, slack)
        x[j] += take
        slack -= take
        if slack <= 1e-15:
            break
    return x


def random_strategy(rng, instance):
    """Random admissible strategy: link subsets and feasible skeleton rows."""
    from pro.graph import ContinuousChoice, DiscreteChoice, Strategy

    alpha = instance.damping
    z = instance.teleport
    choices = {}
    for page in instance.controlled_pages:
        sk = instance.skeleton_by_page.get(page)
        if sk is None:
            fac = instance.facultative_of(page)
            keep = tuple(int(j) for j in fac if rng.random() < 0.5)
            choices[page] = DiscreteChoice(keep)
        else:
            srow = random_box_row(rng, sk.lower(), sk.upper())
            choices[page] = ContinuousChoice(alpha * srow + (1.0 - alpha) * z)
    return Strategy(choices)


def power_law_instance(n, n_controlled, fac_each, seed, damping=0.85,
                       reward_frac=0.01):
    """Synthetic web instance assembled directly from CSR arrays.

    Out-degrees follow a clipped zipf law and link targets are drawn
    with polynomially decaying popularity, so both degree tails are
    heavy.  ``n_controlled`` random pages each receive ``fac_each``
    facultative candidates on top of the obligatory layer, and a
    ``reward_frac`` share of pages pays a positive per-page reward.
    Duplicate draws collapse, so realized link counts sit slightly
    below the nominal products.
    """
    rng = np.random.default_rng(seed)
    deg = 5 + np.minimum(rng.zipf(2.5, n), 495)
    src = np.repeat(np.arange(n, dtype=np.int64), deg)
    pop = (np.arange(n) + 1.0) ** -0.6
    cum = np.cumsum(pop / pop.sum())
    dst = np.searchsorted(cum, rng.random(src.size)).astype(np.int64)
    np.minimum(dst, n - 1, out=dst)
    okey = np.unique(src * n + dst)
    controlled = rng.choice(n, n_controlled, replace=False).astype(np.int64)
    fsrc = np.repeat(controlled, fac_each)
    fdst = rng.integers(0, n, fsrc.size, dtype=np.int64)
    fkey = np.unique(fsrc * n + fdst)
    fkey = fkey[~np.isin(fkey, okey)]
    o_indptr, o_idx = index_csr(n, n, np.stack([okey // n, okey % n], axis=1))
    f_indptr, f_idx = index_csr(n, n, np.stack([fkey // n, fkey % n], axis=1))
    values = np.zeros(n)
    paid = rng.choice(n, max(1, int(reward_frac * n)), replace=False)
    values[paid] = rng.uniform(0.5, 1.5, paid.size)
    z = np.full(n, 1.0 / n)
    return WebGraphInstance(
        num_pages=n, damping=damping, teleport=z, dangling_teleport=z,
        obl_indptr=o_indptr, obl_indices=o_idx,
        fac_indptr=f_indptr, fac_indices=f_idx,
        rewards=Rewards.per_page(values))


def facet_vertices(system, tol=1e-8):
    """Vertices of a facet system by exhaustive basis enumeration.

    Collects the equality rows, then tries every subset of inequality
    rows large enough to pin the remaining degrees of freedom.  Bases
    are solved in batches; solutions must satisfy every constraint.
    """
    n = system.num_pages
    eq_rows, eq_rhs, ub_rows, ub_rhs = [], [], [], []
    for atom in system.atoms():
        row = np.zeros(n)
        row[list(atom.idx)] = atom.coef
        if atom.rel == "=":
            eq_rows.append(row)
            eq_rhs.append(atom.rhs)
        elif atom.rel == "<=":
            ub_rows.append(row)
            ub_rhs.append(atom.rhs)
        else:
            ub_rows.append(-row)
            ub_rhs.append(-atom.rhs)
    eq = np.array(eq_rows, dtype=float).reshape(len(eq_rows), n)
    erhs = np.array(eq_rhs, dtype=float)
    ub = np.array(ub_rows, dtype=float).reshape(len(ub_rows), n)
    urhs = np.array(ub_rhs, dtype=float)
    rank_eq = int(np.linalg.matrix_rank(eq)) if eq.size else 0
    free = n - rank_eq
    if eq.shape[0] != rank_eq:
        return _facet_vertices_lstsq(eq, erhs, ub, urhs, free, tol)
    combos = list(itertools.combinations(range(ub.shape[0]), free))
    blocks = []
    for lo in range(0, len(combos), 16384):
        chunk = combos[lo:lo + 16384]
        part = np.asarray(chunk, dtype=np.intp).reshape(len(chunk), free)
        mats = np.empty((part.shape[0], n, n))
        mats[:, :rank_eq, :] = eq
        mats[:, rank_eq:, :] = ub[part]
        rhs = np.empty((part.shape[0], n))
        rhs[:, :rank_eq] = erhs
        rhs[:, rank_eq:] = urhs[part]
        sign, _ = np.linalg.slogdet(mats)
        keep = sign != 0
        if not keep.any():
            continue
        xs = np.linalg.solve(mats[keep], rhs[keep][:, :, None])[:, :, 0]
        good = np.ones(xs.shape[0], dtype=bool)
        if eq.size:
            good &= np.abs(xs @ eq.T - erhs).max(axis=1) <= tol
        if ub.size:
            good &= (xs @ ub.T - urhs).max(axis=1) <= tol
        blocks.append(xs[good])
    found = np.concatenate(blocks) if blocks else np.zeros((0, n))
    return _dedupe_rows(found, 10 * tol)


def _facet_vertices_lstsq(eq, erhs, ub, urhs, free, tol):
    """Slow path for redundant equality rows: least squares per basis."""
    n = eq.shape[1]
    found = []
    for combo in itertools.combinations(range(ub.shape[0]), free):
        mat = np.vstack([eq, ub[list(combo)]])
        rhs = np.concatenate([erhs, urhs[list(combo)]])
        if np.linalg.matrix_rank(mat) < n:
            continue
        x = np.linalg.lstsq(mat, rhs, rcond=None)[0]
        if np.abs(mat @ x - rhs).max() > tol:
            continue
        if eq.size and np.abs(eq @ x - erhs).max() > tol:
            continue
        if ub.size and (ub @ x - urhs).max() > tol:
            continue
        found.append(x)
    stack = np.array(found).reshape(len(found), n)
    return _dedupe_rows(stack, 10 * tol)


def _dedupe_rows(points, spacing):
    """Collapse near-duplicate rows; keeps first representatives."""
    if points.shape[0] == 0:
        return []
    # grid collapse first; a straddled cell boundary leaves at most a
    # few extra survivors for the pairwise pass below to merge
    _, first = np.unique(np.round(points / spacing), axis=0,
                         return_index=True)
    kept = []
    for k in sorted(first):
        x = points[k]
        if kept and np.abs(np.array(kept) - x).max(axis=1).min() <= spacing:
            continue
        kept.append(x)
    return kept


def same_point_set(first, second, tol=1e-8):
    """Set equality of two point lists under sup-norm matching."""
    if len(first) != len(second):
        return False
    if len(first) == 0:
        return True
    a = np.asarray(first, dtype=float).reshape(len(first), -1)
    b = np.asarray(second, dtype=float).reshape(len(second), -1)
    close = np.zeros((a.shape[0], b.shape[0]), dtype=bool)
    for lo in range(0, a.shape[0], 256):
        block = a[lo:lo + 256]
        close[lo:lo + 256] = (np.abs(block[:, None, :] - b[None, :, :])
                              .max(axis=2) <= tol)
    if not (close.any(axis=1).all() and close.any(axis=0).all()):
        return False
    if (close.sum(axis=1) == 1).all() and (close.sum(axis=0) == 1).all():
        return True
    used = np.zeros(b.shape[0], dtype=bool)
    for i in range(a.shape[0]):  # ambiguous overlaps: greedy matching
        hits = np.flatnonzero(close[i] & ~used)
        if hits.size == 0:
            return False
        used[hits[0]] = True
    return True
