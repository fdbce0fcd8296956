"""Command-line runner: ``lorentz-iso <subcommand> [--config PATH] [flags]``.

Every subcommand writes ``<subcommand>.json`` and ``<subcommand>.csv`` into
``--out``. Exit status is 0 when every report passes, 1 when one fails and 2
on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import spacetimes as stm
from .coefficients import CurvatureParams
from .errors import ConfigError, LorentzIsoError
from .report import reports_to_csv, reports_to_json
from .sampler import RegionDescriptor, sprinkle

MIN_SAMPLES = 100
DEFAULT_EPS = [0.04, 0.02, 0.01]
SEEDED = {"sprinkle", "transport", "localize", "content", "verify-isoperimetry",
          "verify-monotonicity", "verify-brunn-minkowski"}


@dataclass
class RunConfig:
    spacetime: stm.SpacetimeDescriptor | None = None
    V: stm.AchronalSetDescriptor | None = None
    S: stm.AchronalSetDescriptor | None = None
    curvature: CurvatureParams | None = None
    n_samples: int = 10_000
    seed: int | None = None
    eps_grid: list = field(default_factory=lambda: list(DEFAULT_EPS))
    output: str = "."
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < MIN_SAMPLES:
            raise ConfigError(f"n_samples must be an integer >= {MIN_SAMPLES}")
        if self.seed is not None and int(self.seed) != self.seed:
            raise ConfigError("seed must be an integer")
        if not self.eps_grid or any(not e > 0 for e in self.eps_grid):
            raise ConfigError("eps_grid must hold positive values")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {"spacetime", "V", "S", "curvature", "n_samples", "seed", "eps_grid", "output"}
        try:
            st = stm.SpacetimeDescriptor.from_dict(d["spacetime"]) if d.get("spacetime") else None
            V = stm.AchronalSetDescriptor.from_dict(d["V"]) if d.get("V") else None
            S = stm.AchronalSetDescriptor.from_dict(d["S"]) if d.get("S") else None
            cp = CurvatureParams.from_dict(d["curvature"]) if d.get("curvature") else None
        except (KeyError, TypeError, ValueError, LorentzIsoError) as exc:
            raise ConfigError(f"invalid descriptor in config: {exc}") from exc
        return cls(st, V, S, cp, d.get("n_samples", 10_000), d.get("seed"),
                   list(d.get("eps_grid", DEFAULT_EPS)), d.get("output", "."),
                   {k: v for k, v in d.items() if k not in known})


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--n", type=int, help="sample count (dimension n for verify-sharpness)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--K", type=float)
    common.add_argument("--N", type=float)
    common.add_argument("--p", type=float)
    common.add_argument("--a", type=float)
    common.add_argument("--t-grid", type=float, nargs="+", dest="t_grid")

    parser = argparse.ArgumentParser(prog="lorentz-iso", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("sprinkle", "transport", "localize", "content", "verify-isoperimetry",
                 "verify-monotonicity", "verify-brunn-minkowski", "verify-sharpness"):
        sub.add_parser(name, parents=[common])
    sch = sub.add_parser("verify-schwarzschild", parents=[common])
    sch.add_argument("--m", type=float)
    sch.add_argument("--slab", type=float, nargs=2, metavar=("A", "B"))
    sch.add_argument("--r0", type=float, nargs="+")
    return parser


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.n is not None and args.command != "verify-sharpness":
        data["n_samples"] = args.n
    if args.out is not None:
        data["output"] = args.out
    cfg = RunConfig.from_dict(data)
    if args.K is not None or args.N is not None:
        base = cfg.curvature or CurvatureParams(0.0, float(cfg.spacetime.dim) if cfg.spacetime else 2.0)
        try:
            cfg.curvature = CurvatureParams(args.K if args.K is not None else base.K,
                                            args.N if args.N is not None else base.N)
        except LorentzIsoError as exc:
            raise ConfigError(str(exc)) from exc
    for key in ("p", "a", "t_grid", "m", "slab", "r0"):
        val = getattr(args, key, None)
        if val is not None:
            cfg.extra[key] = val
    if args.command == "verify-sharpness" and args.n is not None:
        cfg.extra["n"] = args.n
    if args.command in SEEDED and cfg.seed is None:
        raise ConfigError(f"{args.command} needs a seed (--seed or config 'seed')")
    return cfg


# ---------------------------------------------------------------------------
# subcommand pipelines; each returns (json_text, csv_text, reports)


def _region(cfg, st, default):
    bounds = cfg.extra.get("region", default)
    if bounds is None:
        raise ConfigError("config needs 'region': list of (lo, hi) chart bounds")
    try:
        return RegionDescriptor(st, bounds, cfg.extra.get("predicate", ()))
    except LorentzIsoError as exc:
        raise ConfigError(f"invalid region: {exc}") from exc


def _need(value, what):
    if value is None:
        raise ConfigError(f"config needs '{what}'")
    return value


def _params(cfg, st):
    return cfg.curvature or CurvatureParams(0.0, float(st.dim))


def run_sprinkle(cfg):
    st = cfg.spacetime or stm.minkowski(2)
    region = _region(cfg, st, [[0.0, 1.0]] * st.dim)
    sample = sprinkle(region, cfg.n_samples, cfg.seed)
    payload = {"spacetime": st.to_dict(), "region": region.to_dict(), "seed": cfg.seed,
               "n": len(sample), "volume": sample.total_mass, "volume_stderr": sample.volume_stderr,
               "points": sample.points.tolist(), "weights": sample.weights.tolist()}
    rows = [",".join([f"x{k}" for k in range(st.dim)] + ["weight"])]
    rows += [",".join(repr(float(c)) for c in p) + "," + repr(float(w))
             for p, w in zip(sample.points, sample.weights)]
    return json.dumps(payload, sort_keys=True), "\n".join(rows) + "\n", []


def run_transport(cfg):
    from .report import VerificationReport
    from .transport import DiscreteMeasure, check_cyclical_monotonicity, solve_lp_optimal

    st = cfg.spacetime or stm.minkowski(2)
    region = _region(cfg, st, [[0.0, 1.0]] * st.dim)
    size = int(cfg.extra.get("size", 8))
    sample = sprinkle(region, 2 * size, cfg.seed)
    order = np.argsort(sample.points[:, -1], kind="stable")
    mu = DiscreteMeasure.uniform(order[:size])
    nu = DiscreteMeasure.uniform(order[size:])
    p = float(cfg.extra.get("p", 0.5))
    plan = solve_lp_optimal(sample, mu, nu, p)
    reports = []
    if plan.feasible:
        cert = plan.certificate
        gap = abs(cert.get("duality_gap", 0.0))
        reports.append(VerificationReport("lp_certificate", gap, 0.0, -gap, 1e-9, 0.0,
                                          {"max_reduced_cost": cert.get("max_reduced_cost")}))
        audit = check_cyclical_monotonicity(plan, sample, 4, seed=cfg.seed)
        reports.append(VerificationReport("cyclical_monotonicity", audit.gain, 0.0, -audit.gain, 0.0, 0.0,
                                          {"checked": audit.checked, "exhaustive": audit.exhaustive}))
    payload = {"plan": plan.to_dict(), "points": sample.points.tolist(),
               "mu": mu.support.tolist(), "nu": nu.support.tolist(), "seed": cfg.seed,
               "reports": [r.to_dict() for r in reports]}
    rows = ["i,j,mass"] + [f"{int(i)},{int(j)},{float(m)!r}" for i, j, m in plan.entries]
    return json.dumps(payload, sort_keys=True), "\n".join(rows) + "\n", reports


def run_localize(cfg):
    from .localization import build_ray_decomposition, check_cd_density, check_mcp_bound
    from .verify import point_future_region

    st = cfg.spacetime or stm.cone(2, aperture=2.0)
    V = cfg.V or stm.point(*([0.0] * st.dim))
    if "region" in cfg.extra:
        region = _region(cfg, st, None)
    else:
        region = point_future_region(st, V, float(cfg.extra.get("T", 2.5)))
    params = _params(cfg, st)
    dec = build_ray_decomposition(st, V, region, cfg.n_samples, bins=int(cfg.extra.get("bins", 16)),
                                  seed=cfg.seed, params=params)
    reports = [check_cd_density(dec, params), check_mcp_bound(dec, params)]
    for r in reports:
        r.metadata.pop("table", None)
    payload = dec.to_dict()
    payload["reports"] = [r.to_dict() for r in reports]
    rows = ["ray,q,s,h"]
    for k, (ray, q) in enumerate(zip(dec.rays, dec.q_weights)):
        rows += [f"{k},{float(q)!r},{float(s)!r},{float(h)!r}" for s, h in zip(ray.s, ray.h)]
    return json.dumps(payload, sort_keys=True), "\n".join(rows) + "\n", reports


def run_content(cfg):
    from .content import future_content, past_content

    st = _need(cfg.spacetime, "spacetime")
    A = _need(cfg.S, "S")
    window = _region(cfg, st, None) if "region" in cfg.extra else None
    fn = past_content if cfg.extra.get("side") == "past" else future_content
    est = fn(st, A, window, cfg.eps_grid, cfg.n_samples, cfg.seed)
    rows = ["eps,value,stderr"] + [f"{e!r},{v!r},{s!r}" for e, v, s in est.per_eps]
    return est.to_json(), "\n".join(rows) + "\n", []


def run_isoperimetry(cfg):
    from .verify import check_isoperimetric

    a = float(cfg.extra.get("a", 1.0))
    st = cfg.spacetime or stm.cone(2, a=a)
    V = cfg.V or stm.point(*([0.0] * st.dim))
    S = cfg.S or stm.hyperboloid(1.0)
    rep = check_isoperimetric(st, V, S, _params(cfg, st), cfg.n_samples, cfg.seed,
                              eps_grid=cfg.eps_grid[-2:])
    return None, None, [rep]


def run_monotonicity(cfg):
    from .verify import check_monotonicity

    st = cfg.spacetime or stm.cone(2, aperture=float(cfg.extra.get("a", 2.0)))
    V = cfg.V or stm.point(*([0.0] * st.dim))
    grid = cfg.extra.get("t_grid") or list(np.linspace(0.5, 2.0, 10))
    region = _region(cfg, st, None) if "region" in cfg.extra else None
    return None, None, check_monotonicity(st, V, _params(cfg, st), grid, cfg.n_samples, cfg.seed,
                                          region=region, direction=cfg.extra.get("direction", "future"))


def run_schwarzschild(cfg):
    from .verify import check_schwarzschild_bound

    m = float(cfg.extra.get("m", 1.0))
    a, b = cfg.extra.get("slab", [0.0, 1.0])
    r0 = cfg.extra.get("r0") or list(np.linspace(0, 2 * m, 52)[1:-1])
    return None, None, check_schwarzschild_bound(m, float(a), float(b), r0)


def run_brunn_minkowski(cfg):
    from .verify import check_brunn_minkowski

    st = cfg.spacetime or stm.minkowski(2)
    A0 = np.asarray(cfg.extra.get("A0_box", [[-0.25, 0.25], [0.0, 0.5]]), dtype=float)
    A1 = np.asarray(cfg.extra.get("A1_box", [[-0.25, 0.25], [1.5, 2.0]]), dtype=float)
    both = np.vstack([A0[None], A1[None]])
    lo, hi = both[:, :, 0].min(axis=0), both[:, :, 1].max(axis=0)
    pad = 0.1 * (hi - lo)
    region = _region(cfg, st, np.column_stack([lo - pad, hi + pad]).tolist())
    sample = sprinkle(region, cfg.n_samples, cfg.seed)
    P = sample.points
    inside = lambda B: np.flatnonzero(np.all((P >= B[:, 0]) & (P <= B[:, 1]), axis=1))
    t = float(cfg.extra.get("t", 0.5))
    rep = check_brunn_minkowski(sample, inside(A0), inside(A1), t, _params(cfg, st),
                                float(cfg.extra.get("p", 0.5)), seed=cfg.seed)
    return None, None, [rep]


def run_sharpness(cfg):
    from .verify import check_claim_sharp_identity

    n = int(cfg.extra.get("n", 2))
    a = float(cfg.extra.get("a", 1.0))
    return None, None, [check_claim_sharp_identity(n, a)]


PIPELINES = {
    "sprinkle": run_sprinkle,
    "transport": run_transport,
    "localize": run_localize,
    "content": run_content,
    "verify-isoperimetry": run_isoperimetry,
    "verify-monotonicity": run_monotonicity,
    "verify-schwarzschild": run_schwarzschild,
    "verify-brunn-minkowski": run_brunn_minkowski,
    "verify-sharpness": run_sharpness,
}


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        json_text, csv_text, reports = PIPELINES[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LorentzIsoError as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if json_text is None:
        json_text, csv_text = reports_to_json(reports), reports_to_csv(reports)
    os.makedirs(cfg.output, exist_ok=True)
    stem = os.path.join(cfg.output, args.command)
    _write_atomic(stem + ".json", json_text if json_text.endswith("\n") else json_text + "\n")
    _write_atomic(stem + ".csv", csv_text)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: lhs={r.lhs:.6g} rhs={r.rhs:.6g} slack={r.slack:.3g} tol={r.tolerance:.3g}")
    if failed:
        print(f"{len(failed)} of {len(reports)} reports failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
