"""Discrete Lorentz-Wasserstein transport between finitely supported measures.

The linear program maximizes ``sum pi_ij tau(x_i, y_j)^p`` over couplings
supported on causal pairs. Non-causal arcs are removed from the program, so
the ``-inf`` cost never enters as a big number.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components, maximum_bipartite_matching

from . import spacetimes as stm
from .errors import DomainError, InfeasibleError
from .sampler import CausalSample

DEFAULT_P = 0.5
MARGINAL_TOL = 1e-12
CERT_TOL = 1e-9
BRUTE_FORCE_CAP = 8
EXHAUSTIVE_CYCLE_CAP = 4
SAMPLED_CYCLES = 100_000


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure on a subset of a sample's events."""

    support: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=int).reshape(-1)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if sup.size != m.size or sup.size == 0:
            raise DomainError("support and masses must be non-empty and of equal length")
        if np.unique(sup).size != sup.size:
            raise DomainError("support indices must be distinct")
        if np.any(m <= 0):
            raise DomainError("masses must be positive")
        if abs(m.sum() - 1.0) > 1e-9:
            raise DomainError(f"masses sum to {m.sum()}, expected 1")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "masses", m)

    @classmethod
    def uniform(cls, support) -> "DiscreteMeasure":
        sup = np.asarray(support, dtype=int).reshape(-1)
        return cls(sup, np.full(sup.size, 1.0 / sup.size))

    @classmethod
    def from_weights(cls, support, weights) -> "DiscreteMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(support, w / w.sum())

    def __len__(self):
        return self.support.size


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse coupling: rows of ``entries`` are ``(i, j, mass)`` in sample indices."""

    entries: list
    value: float
    p: float
    feasible: bool
    timelike: bool
    certificate: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        """``sum mass * tau^p`` (the value before the ``1/p`` root)."""
        if not self.feasible:
            return -math.inf
        return self.value ** self.p

    def to_dict(self) -> dict:
        return {"entries": [[int(i), int(j), float(m)] for i, j, m in self.entries],
                "value": self.value if math.isfinite(self.value) else "-inf",
                "p": self.p, "feasible": self.feasible, "timelike": self.timelike,
                "certificate": self.certificate}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check_p(p):
    if not 0 < p <= 1:
        raise DomainError(f"p must lie in (0, 1], got {p}")


def _infeasible(p, reason):
    return TransportPlan([], -math.inf, p, False, False, {"reason": reason})


def _cost_blocks(sample, mu, nu, p):
    T = sample.tau_between(mu.support, nu.support)
    C = sample.causal_between(mu.support, nu.support)
    return T, C, np.where(C, T ** p, -np.inf)


def causal_coupling_exists(C: np.ndarray, a: np.ndarray, b: np.ndarray) -> bool:
    """Is there a coupling of ``a`` and ``b`` supported on the ``True`` entries of ``C``?"""
    n, m = C.shape
    if not C.any():
        return False
    if n == m and np.allclose(a, 1.0 / n) and np.allclose(b, 1.0 / m):
        match = maximum_bipartite_matching(csr_matrix(C.astype(np.int8)), perm_type="column")
        return bool(np.all(match >= 0))
    rows, cols = np.nonzero(C)
    A, rhs = _marginal_system(rows, cols, n, m, a, b)
    res = linprog(np.zeros(rows.size), A_eq=A, b_eq=rhs, bounds=(0, None), method="highs-ds")
    return res.status == 0


def _marginal_system(rows, cols, n, m, a, b):
    k = rows.size
    data = np.ones(2 * k)
    r = np.concatenate([rows, n + cols])
    c = np.concatenate([np.arange(k), np.arange(k)])
    A = coo_matrix((data, (r, c)), shape=(n + m, k)).tocsr()
    return A, np.concatenate([a, b])


def _peel(rows, cols, support, n, m, a, b):
    """Exact masses on a forest support by repeatedly fixing leaf arcs."""
    arcs = [k for k in support]
    mass = np.zeros(len(rows))
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    left = set(arcs)
    deg_r = np.zeros(n, int)
    deg_c = np.zeros(m, int)
    for k in left:
        deg_r[rows[k]] += 1
        deg_c[cols[k]] += 1
    while left:
        progressed = False
        for k in sorted(left):
            i, j = rows[k], cols[k]
            if deg_r[i] == 1:
                val = ra[i]
            elif deg_c[j] == 1:
                val = rb[j]
            else:
                continue
            mass[k] = val
            ra[i] -= val
            rb[j] -= val
            deg_r[i] -= 1
            deg_c[j] -= 1
            left.discard(k)
            progressed = True
        if not progressed:
            return None
    return mass


def _solve_lp(rows, cols, cost, n, m, a, b, extra=None):
    A, rhs = _marginal_system(rows, cols, n, m, a, b)
    kw = {}
    if extra is not None:
        kw["A_ub"], kw["b_ub"] = extra
    return linprog(-cost, A_eq=A, b_eq=rhs, bounds=(0, None), method="highs-ds", **kw)


def _certificate(rows, cols, cost, mass, duals, n, m, a, b, objective):
    u, v = duals[:n], duals[n:]
    # linprog minimizes -cost: feasibility reads u_i + v_j <= -c_ij; flip signs
    u, v = -u, -v
    reduced = cost - u[rows] - v[cols]
    dual_obj = float(u @ a + v @ b)
    row_err = np.abs(np.bincount(rows, mass, n) - a).max()
    col_err = np.abs(np.bincount(cols, mass, m) - b).max()
    return {"max_reduced_cost": float(reduced.max()), "duality_gap": abs(dual_obj - objective),
            "marginal_error": float(max(row_err, col_err)),
            "row_potential": u.tolist(), "col_potential": v.tolist()}


def solve_lp_optimal(sample: CausalSample, mu: DiscreteMeasure, nu: DiscreteMeasure,
                     p: float = DEFAULT_P, *, tie_break: bool = True) -> TransportPlan:
    """Maximize ``sum pi tau^p`` over causal couplings of ``mu`` and ``nu``.

    Returns a plan with ``value = (sum pi tau^p)^(1/p)``; when no causal
    coupling exists the plan is infeasible with value ``-inf``. Among optimal
    plans, a second program prefers mass on arcs with small ``(i, j)`` rank.
    """
    _check_p(p)
    T, C, _ = _cost_blocks(sample, mu, nu, p)
    n, m = C.shape
    a, b = mu.masses, nu.masses
    if not causal_coupling_exists(C, a, b):
        return _infeasible(p, "no causal coupling")
    rows, cols = np.nonzero(C)
    cost = T[rows, cols] ** p
    res = _solve_lp(rows, cols, cost, n, m, a, b)
    if res.status != 0:
        return _infeasible(p, f"solver status {res.status}: {res.message}")
    best = -res.fun
    duals = res.eqlin.marginals
    x = res.x
    if tie_break:
        # every optimal plan lives on arcs that are tight for the optimal duals
        u, v = -duals[:n], -duals[n:]
        tight = np.flatnonzero(cost - u[rows] - v[cols] >= -1e-10 * max(1.0, abs(best)))
        r2, c2 = rows[tight], cols[tight]
        rank = (r2 * m + c2 + 1.0) / (n * m)
        res2 = linprog(rank, A_eq=_marginal_system(r2, c2, n, m, a, b)[0],
                       b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs-ds")
        if res2.status == 0:
            x = np.zeros(rows.size)
            x[tight] = res2.x
    support = np.flatnonzero(x > 1e-14)
    mass = _peel(rows, cols, support, n, m, a, b)
    if mass is None or np.any(mass < -1e-12):
        mass = np.where(x > 1e-14, x, 0.0)
    mass = np.maximum(mass, 0.0)
    objective = float(mass @ cost)
    cert = _certificate(rows, cols, cost, mass, duals, n, m, a, b, objective)
    if cert["max_reduced_cost"] > CERT_TOL or cert["duality_gap"] > CERT_TOL * max(1.0, abs(objective)):
        # phase-two plan drifted; fall back to the phase-one vertex
        support = np.flatnonzero(res.x > 1e-14)
        mass = _peel(rows, cols, support, n, m, a, b)
        if mass is None:
            mass = np.where(res.x > 1e-14, res.x, 0.0)
        mass = np.maximum(mass, 0.0)
        objective = float(mass @ cost)
        cert = _certificate(rows, cols, cost, mass, duals, n, m, a, b, objective)
    keep = np.flatnonzero(mass > 0)
    entries = [(int(mu.support[rows[k]]), int(nu.support[cols[k]]), float(mass[k])) for k in keep]
    timelike = bool(np.all(T[rows[keep], cols[keep]] > 0))
    cert["optimal"] = cert["max_reduced_cost"] <= CERT_TOL and cert["duality_gap"] <= CERT_TOL * max(1.0, abs(objective))
    return TransportPlan(entries, max(objective, 0.0) ** (1.0 / p), p, True, timelike, cert)


def _permutations(n):
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64)


def brute_force_optimal(sample: CausalSample, mu: DiscreteMeasure, nu: DiscreteMeasure,
                        p: float = DEFAULT_P) -> TransportPlan:
    """Exact optimum for uniform equal-size measures by enumerating permutations.

    Birkhoff's theorem puts an optimum at a permutation; ties go to the first
    permutation in lexicographic order.
    """
    _check_p(p)
    n = len(mu)
    if n != len(nu) or n > BRUTE_FORCE_CAP:
        raise DomainError(f"brute force needs equal sizes <= {BRUTE_FORCE_CAP}")
    if not (np.allclose(mu.masses, 1.0 / n) and np.allclose(nu.masses, 1.0 / n)):
        raise DomainError("brute force needs uniform masses")
    T, C, cost = _cost_blocks(sample, mu, nu, p)
    perms = _permutations(n)
    totals = cost[np.arange(n), perms].sum(axis=1)
    k = int(np.argmax(totals))
    if not np.isfinite(totals[k]):
        return _infeasible(p, "no causal permutation")
    perm = perms[k]
    entries = [(int(mu.support[i]), int(nu.support[perm[i]]), 1.0 / n) for i in range(n)]
    objective = float(totals[k]) / n
    timelike = bool(np.all(T[np.arange(n), perm] > 0))
    return TransportPlan(entries, objective ** (1.0 / p), p, True, timelike, {"method": "enumeration"})


@dataclass(frozen=True)
class CycleAudit:
    """Outcome of a cyclical monotonicity audit."""

    monotone: bool
    checked: int
    exhaustive: bool
    witness: tuple | None = None
    gain: float = 0.0

    def __bool__(self):
        return self.monotone


def _pair_cost(sample, I, J, p):
    T = sample.tau_between(I, J)
    C = sample.causal_between(I, J)
    return np.where(C, T ** p, -np.inf)


def check_cyclical_monotonicity(plan: TransportPlan, sample: CausalSample, max_cycle: int = 4,
                                *, seed: int = 0, tol: float = 1e-12) -> CycleAudit:
    """Search for support pairs ``(x_k, y_k)`` whose cyclic reshuffle increases ``sum tau^p``."""
    if not plan.feasible:
        raise DomainError("cannot audit an infeasible plan")
    pairs = [(i, j) for i, j, _ in plan.entries]
    k = len(pairs)
    if k < 2 or max_cycle < 2:
        return CycleAudit(True, 0, True)
    xs = np.array([i for i, _ in pairs])
    ys = np.array([j for _, j in pairs])
    # cost[a, b] = tau(x_a, y_b)^p
    cost = _pair_cost(sample, xs, ys, plan.p)
    own = np.diag(cost)
    scale = max(1.0, float(np.max(np.abs(own[np.isfinite(own)]), initial=0.0)))
    checked = 0
    exhaustive = max_cycle <= EXHAUSTIVE_CYCLE_CAP
    lengths = range(2, min(max_cycle, k) + 1)

    def audit(cyc):
        cyc = np.asarray(cyc)
        before = own[cyc].sum(axis=1)
        after = cost[np.roll(cyc, -1, axis=1), cyc].sum(axis=1)
        gain = after - before
        return gain

    for L in lengths:
        if exhaustive:
            # fix the smallest element first to skip rotations of one cycle
            combos = []
            for first in range(k):
                rest = [q for q in range(first + 1, k)]
                for tail in itertools.permutations(rest, L - 1):
                    combos.append((first,) + tail)
                    if len(combos) >= 50_000:
                        res = _report(audit(combos), combos, scale, tol)
                        checked += len(combos)
                        if res is not None:
                            return CycleAudit(False, checked, True, res[0], res[1])
                        combos = []
            if combos:
                res = _report(audit(combos), combos, scale, tol)
                checked += len(combos)
                if res is not None:
                    return CycleAudit(False, checked, True, res[0], res[1])
        else:
            rng = np.random.default_rng(seed)
            per = SAMPLED_CYCLES // len(lengths)
            cyc = np.argsort(rng.random((per, k)), axis=1)[:, :L]
            res = _report(audit(cyc), cyc, scale, tol)
            checked += per
            if res is not None:
                return CycleAudit(False, checked, False, res[0], res[1])
    return CycleAudit(True, checked, exhaustive)


def _report(gain, cycles, scale, tol):
    gain = np.where(np.isnan(gain), -np.inf, gain)
    worst = int(np.argmax(gain))
    if gain[worst] > tol * scale:
        return tuple(int(c) for c in np.asarray(cycles)[worst]), float(gain[worst])
    return None


def displacement(plan: TransportPlan, sample: CausalSample, t: float):
    """Push each plan entry to the ``t``-intermediate point of its geodesic.

    Returns ``(new_sample, measure)``; coincident images are merged.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if not plan.feasible or not plan.timelike:
        raise DomainError("displacement needs a feasible plan with all pairs chronological")
    I = np.array([e[0] for e in plan.entries])
    J = np.array([e[1] for e in plan.entries])
    M = np.array([e[2] for e in plan.entries])
    X, Y = sample.points[I], sample.points[J]
    if t == 0.0:
        Z = X.copy()
    elif t == 1.0:
        Z = Y.copy()
    else:
        Z = stm.geodesic_array(sample.st, X, Y, t)
    uniq, inverse = np.unique(Z, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    masses = np.bincount(inverse, M, uniq.shape[0])
    masses = masses / masses.sum()
    new = CausalSample(sample.st, uniq, masses, sample.seed)
    return new, DiscreteMeasure(np.arange(uniq.shape[0]), masses)


def lp_value(sample, mu, nu, p=DEFAULT_P) -> float:
    return solve_lp_optimal(sample, mu, nu, p, tie_break=False).value


def plan_components(plan: TransportPlan):
    """Connected components of the plan's support graph over sample indices."""
    I = np.array([e[0] for e in plan.entries], dtype=int)
    J = np.array([e[1] for e in plan.entries], dtype=int)
    nodes = np.unique(np.concatenate([I, J]))
    pos = {int(v): k for k, v in enumerate(nodes)}
    r = np.array([pos[int(i)] for i in I])
    c = np.array([pos[int(j)] for j in J])
    g = coo_matrix((np.ones(r.size), (r, c)), shape=(nodes.size, nodes.size))
    ncomp, labels = connected_components(g, directed=False)
    return nodes, labels, ncomp


def require_coupling(sample, mu, nu):
    C = sample.causal_between(mu.support, nu.support)
    if not causal_coupling_exists(C, mu.masses, nu.masses):
        raise InfeasibleError("no causal coupling between the two measures")
