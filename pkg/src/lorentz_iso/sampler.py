"""Poisson-style sprinkling of regions and Monte Carlo volume estimates.

Points are drawn by rejection against an analytic bound of the volume density
on the enclosing coordinate box. Each run splits ``n`` over ``workers``
substreams seeded by ``(seed, worker_index)``; the thread count (environment
variable ``LORENTZ_ISO_THREADS``) only changes how substreams are scheduled,
never the result.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import spacetimes as stm
from .errors import DegenerateRegionError, DomainError
from .spacetimes import AchronalSetDescriptor, Event, SpacetimeDescriptor

MIN_ACCEPTANCE = 1e-4
THREADS_ENV = "LORENTZ_ISO_THREADS"


@dataclass(frozen=True, eq=False)
class RegionDescriptor:
    """Coordinate box intersected with the spacetime and a list of named constraints.

    Constraint entries are dicts with a ``kind``:

    * ``all``: no constraint.
    * ``tau_band``: ``lo < tau_V(x) < hi`` for the set ``set``.
    * ``cone_region``: ``x`` lies on a maximizing segment from ``V`` to ``S``.
    * ``ball``: Euclidean chart ball with ``center`` and ``radius``.
    """

    st: SpacetimeDescriptor
    bounds: tuple
    predicate: tuple = field(default_factory=tuple)

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.shape != (self.st.dim, 2) or np.any(~np.isfinite(b)) or np.any(b[:, 1] <= b[:, 0]):
            raise DomainError(f"bounds must be {self.st.dim} finite increasing (lo, hi) pairs")
        object.__setattr__(self, "bounds", tuple(tuple(map(float, row)) for row in b))
        object.__setattr__(self, "predicate", tuple(dict(p) for p in self.predicate))

    @property
    def box(self) -> np.ndarray:
        return np.asarray(self.bounds, dtype=float)

    @property
    def box_volume(self) -> float:
        b = self.box
        return float(np.prod(b[:, 1] - b[:, 0]))

    def indicator(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        b = self.box
        ok = np.all((X >= b[:, 0]) & (X <= b[:, 1]), axis=-1) & stm.contains(self.st, X)
        for entry in self.predicate:
            if not np.any(ok):
                break
            ok &= _evaluate(self.st, entry, X)
        return ok

    def to_dict(self) -> dict:
        return {"st": self.st.to_dict(), "bounds": [list(r) for r in self.bounds],
                "predicate": [stm._plain(p) for p in self.predicate]}

    @classmethod
    def from_dict(cls, d) -> "RegionDescriptor":
        return cls(SpacetimeDescriptor.from_dict(d["st"]), d["bounds"], d.get("predicate", ()))


def _evaluate(st, entry, X):
    kind = entry.get("kind", "all")
    if kind == "all":
        return np.ones(X.shape[:-1], dtype=bool)
    if kind == "tau_band":
        tv = stm.tau_signed_array(st, entry["set"], X)
        return (tv > entry.get("lo", -math.inf)) & (tv < entry.get("hi", math.inf))
    if kind == "cone_region":
        from .localization import cone_region_indicator
        return cone_region_indicator(st, entry["V"], entry["S"], X)
    if kind == "ball":
        c = np.asarray(entry["center"], dtype=float)
        return np.linalg.norm(X - c, axis=-1) <= entry["radius"]
    raise DomainError(f"unknown region constraint {kind!r}")


def tau_band(V: AchronalSetDescriptor, lo: float = -math.inf, hi: float = math.inf) -> dict:
    return {"kind": "tau_band", "set": V.to_dict(), "lo": lo, "hi": hi}


def cone_region(V: AchronalSetDescriptor, S: AchronalSetDescriptor) -> dict:
    return {"kind": "cone_region", "V": V.to_dict(), "S": S.to_dict()}


@dataclass(frozen=True, eq=False)
class CausalSample:
    """Weighted events of one spacetime; tau and causal matrices are computed on demand."""

    st: SpacetimeDescriptor
    points: np.ndarray
    weights: np.ndarray
    seed: int | None = None
    volume_stderr: float = 0.0

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[1] != self.st.dim or pts.shape[0] != w.size:
            raise DomainError("points and weights do not match")
        if np.any(w <= 0):
            raise DomainError("weights must be positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.shape[0]

    @property
    def events(self) -> list:
        return [Event(self.st.kind, tuple(p)) for p in self.points]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    @cached_property
    def tau_matrix(self) -> np.ndarray:
        T = stm.tau_array(self.st, self.points[:, None, :], self.points[None, :, :])
        T = np.where(T < stm.TAU_FLOOR, 0.0, T)
        T.setflags(write=False)
        return T

    @cached_property
    def causal_matrix(self) -> np.ndarray:
        C = stm.causal_array(self.st, self.points[:, None, :], self.points[None, :, :])
        C = C | (self.tau_matrix > 0)
        C.setflags(write=False)
        return C

    def tau_between(self, I, J) -> np.ndarray:
        """tau from points ``I`` to points ``J`` without building the full matrix."""
        P = self.points
        T = stm.tau_array(self.st, P[np.asarray(I)][:, None, :], P[np.asarray(J)][None, :, :])
        return np.where(T < stm.TAU_FLOOR, 0.0, T)

    def causal_between(self, I, J) -> np.ndarray:
        P = self.points
        C = stm.causal_array(self.st, P[np.asarray(I)][:, None, :], P[np.asarray(J)][None, :, :])
        return C | (self.tau_between(I, J) > 0)

    def subset(self, idx) -> "CausalSample":
        idx = np.asarray(idx)
        return CausalSample(self.st, self.points[idx], self.weights[idx], self.seed)

    @staticmethod
    def concat(samples) -> "CausalSample":
        samples = list(samples)
        st = samples[0].st
        if any(s.st != st for s in samples):
            raise DomainError("cannot merge samples of different spacetimes")
        return CausalSample(st, np.vstack([s.points for s in samples]),
                            np.concatenate([s.weights for s in samples]), samples[0].seed)

    def to_jsonl(self) -> str:
        """Header line with the spacetime and seed, then one event per line."""
        lines = [json.dumps({"st": self.st.to_dict(), "seed": self.seed, "n": len(self)}, sort_keys=True)]
        for p, w in zip(self.points, self.weights):
            lines.append(json.dumps({"coords": [float(c) for c in p], "weight": float(w)}))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "CausalSample":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        head, body = rows[0], rows[1:]
        st = SpacetimeDescriptor.from_dict(head["st"])
        pts = np.array([r["coords"] for r in body], dtype=float).reshape(-1, st.dim)
        w = np.array([r["weight"] for r in body], dtype=float)
        return cls(st, pts, w, head.get("seed"))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _substreams(seed: int, workers: int):
    return [np.random.default_rng(np.random.SeedSequence([int(seed), w])) for w in range(workers)]


def _split(n: int, workers: int):
    base, extra = divmod(n, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def _rejection_worker(region: RegionDescriptor, count: int, rng, rho_max: float, batch: int):
    b = region.box
    lo, width = b[:, 0], b[:, 1] - b[:, 0]
    accepted, trials, have = [], 0, 0
    while have < count:
        U = lo + width * rng.random((batch, b.shape[0]))
        keep = region.indicator(U)
        dens = np.zeros(batch)
        if np.any(keep):
            dens[keep] = stm.volume_density(region.st, U[keep])
        keep &= rng.random(batch) * rho_max < dens
        pos = np.flatnonzero(keep)
        need = count - have
        if pos.size >= need:
            # trials counted up to the last accept actually used
            accepted.append(U[pos[:need]])
            trials += int(pos[need - 1]) + 1
            have = count
            break
        accepted.append(U[pos])
        trials += batch
        have += pos.size
        if trials >= 10 * batch and have / trials < MIN_ACCEPTANCE:
            raise DegenerateRegionError(
                f"rejection acceptance {have / trials:.2e} below {MIN_ACCEPTANCE:g}")
    return np.vstack(accepted), trials


def sprinkle(region: RegionDescriptor, n: int, seed: int, *, workers: int = 1,
             batch: int = 65536) -> CausalSample:
    """Draw ``n`` points from the normalized volume measure of ``region``.

    Every point carries weight ``volume / n``; the volume is the rejection
    estimate ``box_volume * rho_max * accepted / trials`` (exact when the
    region is the whole box with unit density).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    rho_max = stm.density_bound(region.st, region.box)
    if not rho_max > 0:
        raise DegenerateRegionError("volume density vanishes on the box")
    counts = _split(n, workers)
    rngs = _substreams(seed, workers)
    jobs = [(region, c, r, rho_max, min(batch, max(1024, 4 * c))) for c, r in zip(counts, rngs)]
    with ThreadPoolExecutor(max_workers=min(_threads(), workers)) as pool:
        results = list(pool.map(lambda job: _rejection_worker(*job), jobs))
    pts = np.vstack([r[0] for r in results])
    trials = sum(r[1] for r in results)
    if _trivial_region(region):
        volume, stderr = region.box_volume, 0.0
    else:
        acc = n / trials
        volume = region.box_volume * rho_max * acc
        stderr = volume * math.sqrt(max(1.0 - acc, 0.0) / n)
    return CausalSample(region.st, pts, np.full(n, volume / n), seed, stderr)


def _trivial_region(region: RegionDescriptor) -> bool:
    st = region.st
    flat = st.kind == "minkowski"
    return flat and all(p.get("kind", "all") == "all" for p in region.predicate)


def estimate_volume(region: RegionDescriptor, n: int, seed: int, *, workers: int = 1):
    """Monte Carlo integral of the volume density over ``region``: ``(value, stderr)``."""
    if n < 2:
        raise DomainError("n must be >= 2")
    rngs = _substreams(seed, workers)
    b = region.box
    lo, width = b[:, 0], b[:, 1] - b[:, 0]
    sums, sq = 0.0, 0.0
    hits = 0
    for count, rng in zip(_split(n, workers), rngs):
        done = 0
        while done < count:
            k = min(200_000, count - done)
            U = lo + width * rng.random((k, b.shape[0]))
            inside = region.indicator(U)
            f = np.zeros(k)
            if np.any(inside):
                f[inside] = stm.volume_density(region.st, U[inside])
            sums += float(np.sum(f))
            sq += float(np.sum(f * f))
            hits += int(np.count_nonzero(inside))
            done += k
    if hits == 0:
        raise DegenerateRegionError("no Monte Carlo point fell inside the region")
    mean = sums / n
    var = max(sq / n - mean * mean, 0.0)
    vol = region.box_volume
    return vol * mean, vol * math.sqrt(var / (n - 1))


def bounding_box(points, pad: float = 0.0) -> list:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    lo, hi = P.min(axis=0), P.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    return [[float(a - pad * s), float(b + pad * s)] for a, b, s in zip(lo, hi, span)]
