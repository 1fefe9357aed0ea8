"""Batch runner: ``superrep <experiment> --config FILE [--set key=value ...] --out DIR``.

Each run writes ``manifest.json`` (resolved configuration, defaulted keys,
versions and every check with its tolerance and provenance), one CSV table
and ``timing.json``.  The manifest carries no wall-clock data so identical
configurations give byte-identical manifests.

Exit status: 0 when every check passes, 1 when one fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import dyadic, entropy, finite_market, passage, pricing
from .pricing import format_number

OUT_ENV = "SUPERREP_OUT"
EXPERIMENTS = ("dyadic-gap", "entropy-check", "finite-duality", "passage-law", "mc-pair")

DEFAULTS = {
    "dyadic-gap": {"c": 10.0, "N": 1000, "k": 1.0, "claim": "f", "phi": "power2", "entropy_cap": None},
    "entropy-check": {"phi": "power2", "lambda0": 0.5, "lambda1": 2.0, "grid": [1e-3, 1e3, 61], "triples": 200, "seed": 0},
    "finite-duality": {"instances": 100, "m": 8, "J": 4, "seed": 0, "market": None, "claim": None},
    "passage-law": {"mu": 1.5, "b": -math.log(2.0), "a": [1.0, 2.0, 2.5, 2.0 * math.sqrt(2.0), 3.0, 4.0], "t_values": [0.25, 1.0, 2.0, 5.0]},
    "mc-pair": {"a": 3.0, "c1": 0.5, "c2": 2.0, "paths": 100_000, "seed": 0, "h": 0.01, "T": 64.0, "chunk_size": 16_384, "workers": 1},
}
# list-valued entries of these keys define a Cartesian sweep
SWEEP_KEYS = {"dyadic-gap": ("claim", "k", "c", "N"), "mc-pair": ("a",)}


class ConfigError(ValueError):
    pass


@dataclass
class Check:
    name: str
    value: object
    expected: object
    tolerance: float | None
    provenance: str  # paper | derived | trivial
    passed: bool

    def to_dict(self):
        return {k: _jsonable(v) for k, v in self.__dict__.items()}


@dataclass
class RunResult:
    checks: list = field(default_factory=list)
    columns: tuple = ()
    rows: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def check(self, name, value, expected, tol, provenance, passed=None):
        if passed is None:
            passed = _close(value, expected, tol)
        self.checks.append(Check(name, value, expected, tol, provenance, bool(passed)))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def _close(v, e, tol) -> bool:
    if isinstance(e, bool) or isinstance(e, str):
        return v == e
    if math.isinf(e):
        return v == e
    return abs(v - e) <= tol


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return v
    return v


# --------------------------------------------------------------------------
# configuration


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(experiment: str, config: dict | None, overrides: list[str]) -> tuple[dict, list[str]]:
    """Merge defaults, JSON fields and ``--set`` overrides; returns ``(params, defaulted_keys)``."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown value {experiment!r}")
    config = dict(config or {})
    named = config.pop("experiment", experiment)
    if named != experiment:
        raise ConfigError(f"experiment: config names {named!r}, command line {experiment!r}")
    params = dict(config.pop("parameters", {}))
    params.update(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, val = item.split("=", 1)
        params[key.strip()] = parse_value(val)
    defaults = DEFAULTS[experiment]
    unknown = sorted(set(params) - set(defaults) - {"output_path"})
    if unknown:
        raise ConfigError(f"{unknown[0]}: not a parameter of {experiment}")
    defaulted = sorted(k for k in defaults if k not in params)
    merged = {k: params.get(k, v) for k, v in defaults.items()}
    if "output_path" in params:
        merged["output_path"] = params["output_path"]
    return merged, defaulted


def sweep_points(experiment: str, params: dict) -> list[dict]:
    keys = [k for k in SWEEP_KEYS.get(experiment, ()) if isinstance(params.get(k), list)]
    if not keys:
        return [params]
    out = []
    for combo in itertools.product(*(params[k] for k in keys)):
        p = dict(params)
        p.update(zip(keys, combo))
        out.append(p)
    return out


def _num(params, key, kind=float, positive=False):
    try:
        v = kind(params[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {params[key]!r}") from None
    if positive and not v > 0:
        raise ConfigError(f"{key}: must be positive")
    return v


# --------------------------------------------------------------------------
# experiments


def run_dyadic_gap(params: dict) -> RunResult:
    res = RunResult(columns=pricing.GapReport.CSV_COLUMNS)
    for p in sweep_points("dyadic-gap", params):
        c, N, k = _num(p, "c"), _num(p, "N", int, True), _num(p, "k", float, True)
        kind = str(p["claim"])
        try:
            h = dyadic.make_claim(kind, N, k)
            spec = entropy.entropy_from_name(str(p["phi"]))
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"claim/phi: {exc}") from None
        rep = pricing.gap_report(h, c, N, spec)
        if p["entropy_cap"] is not None:
            rep.dual_MPhi = pricing.dual_price_MPhi(h, spec, N, float(p["entropy_cap"]))
        res.rows.append(rep.row())
        tag = f"{kind}[k={format_number(k)},c={format_number(c)},N={N}]"
        # the binding level is n = N: x >= k v1(N) - c/N, floored at 0 by the middle threshold
        if kind in ("f", "kf"):
            res.check(f"primal {tag}", rep.primal.price, max(k - c / N, 0.0), 1e-9, "derived")
        elif kind in ("x1", "X1"):
            res.check(f"primal {tag}", rep.primal.price, max(k * N - c / N, 0.0), 1e-9, "derived")
        if kind in ("f", "kf", "x1", "X1"):
            res.check(f"dual_m1 {tag}", rep.dual_M1.value, 0.0, 0.0, "paper")
        res.check(f"weak duality {tag}", rep.gap, 0.0, pricing.WEAK_DUALITY_TOL, "paper", rep.gap >= -pricing.WEAK_DUALITY_TOL)
    return res


def run_entropy_check(params: dict) -> RunResult:
    res = RunResult(columns=("check", "value", "finite", "converged", "exact"))
    try:
        spec = entropy.entropy_from_name(str(params["phi"]))
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"phi: {exc}") from None
    lo, hi, num = params["grid"]
    ys = np.geomspace(float(lo), float(hi), int(num))
    g = entropy.check_growth_condition(spec, float(params["lambda0"]), float(params["lambda1"]), ys)
    res.rows.append(("growth_alpha", g.alpha, g.holds, True, False))
    res.check(f"growth condition {spec.label}", g.holds, True, None, "derived")
    res.check(f"convexity {spec.label}", entropy.check_convexity(spec), True, None, "paper")

    e21 = entropy.example21()
    q1 = dyadic.unit_atom_measure(1, 1).entropy(e21)
    res.rows.append(("unit_atom_Q1", q1.value, q1.finite, q1.converged, q1.exact))
    res.check("infinite entropy at unit atom (phi(0) = inf)", q1.value, math.inf, None, "paper", (not q1.finite) and q1.exact)
    q0 = dyadic.example21_q0().entropy(e21)
    res.rows.append(("exp_tail_Q0", q0.value, q0.finite, q0.converged, q0.exact))
    res.check("finite entropy with exponential tail", q0.finite and q0.converged, True, None, "paper")

    rng = np.random.default_rng(int(params["seed"]))
    p2 = entropy.power(2)
    fails = 0
    n_inf = 0
    for _ in range(int(params["triples"])):
        chk = _random_triple(rng, p2)
        fails += not (chk.iff_holds and chk.convex_ok)
        n_inf += not (chk.finite0 and chk.finite1)
    res.rows.append(("mixture_iff_failures", fails, True, True, False))
    res.extra["mixture_infinite_instances"] = n_inf
    res.check("mixture entropy finite iff both ends finite", fails, 0, 0, "paper")
    return res


def _random_triple(rng, spec):
    N = int(rng.integers(2, 30))
    ends = [dyadic.heavy_tail_measure(N, rng) if rng.random() < 0.3 else dyadic.random_measure(N, rng, 0.3) for _ in range(2)]
    return dyadic.mixture_entropy_check(ends[0], ends[1], float(rng.uniform(0.01, 0.99)), spec)


def run_finite_duality(params: dict) -> RunResult:
    res = RunResult(columns=("instance_id", "primal", "dual", "gap", "attained"))
    if params["market"] is not None:
        mk = params["market"]
        market = finite_market.FiniteMarket.load(mk) if isinstance(mk, str) else finite_market.FiniteMarket.from_dict(mk)
        f = np.asarray(params["claim"] if params["claim"] is not None else np.zeros(market.m), dtype=float)
        instances = [(market, f)]
    else:
        rng = np.random.default_rng(int(params["seed"]))
        m_max, j_max = _num(params, "m", int, True), _num(params, "J", int)
        instances = []
        for _ in range(int(params["instances"])):
            market = finite_market.random_market(rng, int(rng.integers(1, m_max + 1)), int(rng.integers(0, j_max + 1)))
            instances.append((market, rng.normal(size=market.m) * 3.0))
    worst, all_attained, empty = 0.0, True, 0
    for i, (market, f) in enumerate(instances):
        try:
            r = finite_market.abstract_price(market, f)
        except finite_market.EmptyPolar:
            empty += 1
            res.rows.append((i, "nan", "nan", "nan", "N1 empty"))
            continue
        worst = max(worst, abs(r.gap))
        all_attained &= r.is_minimum
        res.rows.append((i, r.primal, r.dual, r.gap, r.is_minimum))
    res.extra["n1_empty_instances"] = empty
    res.check("max |primal - dual|", worst, 0.0, finite_market.DUALITY_TOL, "paper")
    res.check("minimum attained", all_attained, True, None, "paper")
    return res


def run_passage_law(params: dict) -> RunResult:
    res = RunResult(columns=("a", "estimate", "se", "classification"))
    spec = passage.PassageSpec(_num(params, "mu"), _num(params, "b"))
    atom = passage.atom_mass(spec)
    res.extra["atom"] = atom
    integral, _ = passage.density_integral(spec)
    res.extra["density_integral"] = integral
    res.check("density integral + atom", integral + atom, 1.0, 1e-8, "paper")
    if spec == passage.TILTED_TAU:
        res.check("atom mass", atom, 0.875, 1e-12, "paper")
    for row in passage.sandwich_check(params["t_values"]):
        res.check(f"sandwich t={format_number(row.t)}", row.value, None, 1e-8, "paper", row.ok)
    a_values = params["a"] if isinstance(params["a"], list) else [params["a"]]
    for a in a_values:
        h2 = passage.h2_criterion(float(a))
        est = h2.limit if h2.limit is not None else h2.growth_rate
        res.rows.append((float(a), est, 0.0, h2.classification))
        res.check(f"h2 classification a={format_number(float(a))}", h2.classification == "finite", h2.criterion, None, "paper")
        res.check(f"h2 growth rate a={format_number(float(a))}", h2.growth_rate, h2.analytic_rate, 0.05, "derived")
    return res


def run_mc_pair(params: dict) -> RunResult:
    res = RunResult(columns=("a", "estimate", "se", "classification"))
    a_values = params["a"] if isinstance(params["a"], list) else [params["a"]]
    for a in a_values:
        spec = passage.StoppedPairSpec(float(a), _num(params, "c1"), _num(params, "c2"))
        try:
            mc = passage.McConfig(
                seed=int(params["seed"]), paths=int(params["paths"]), h=float(params["h"]), T=float(params["T"]),
                chunk_size=int(params["chunk_size"]), workers=int(params["workers"]),
            )
        except passage.DomainError as exc:
            raise ConfigError(f"mc configuration: {exc}") from None
        est = passage.simulate_stopped_pair(spec, mc)
        tag = f"a={format_number(float(a))}"
        for name in ("E_P_Xinf", "E_Q_Xinf", "E_P_Yinf", "E_P_f", "E_Q_Sinf", "E_Q_w2", "sigma_hit"):
            e = getattr(est, name)
            res.rows.append((float(a), e.mean, e.se, name))
        res.extra[tag] = est.to_dict()
        res.check(f"E_P[X_inf] < 1 {tag}", est.E_P_Xinf.ci99[1], 1.0, None, "paper", est.E_P_Xinf.ci99[1] < 1.0)
        res.check(f"E_P[X_inf] vs quadrature {tag}", est.E_P_Xinf.mean, passage.expected_x_inf(spec), 4 * est.E_P_Xinf.se, "derived")
        res.check(f"E_Q[X_inf] = 1 {tag}", est.E_Q_Xinf.mean, 1.0, passage.Z99 * est.E_Q_Xinf.se, "paper")
        res.check(f"E_P[Y_inf] = 1 {tag}", est.E_P_Yinf.mean, 1.0, passage.Z99 * est.E_P_Yinf.se, "paper")
        res.check(f"E_Q[S_inf] = 0 {tag}", est.E_Q_Sinf.mean, 0.0, passage.Z99 * est.E_Q_Sinf.se, "paper")
        p_hit = 1.0 - passage.atom_mass(spec.sigma_spec)
        res.check(f"sigma hit frequency {tag}", est.sigma_hit.mean, p_hit, passage.Z99 * est.sigma_hit.se, "derived")
    return res


RUNNERS = {
    "dyadic-gap": run_dyadic_gap,
    "entropy-check": run_entropy_check,
    "finite-duality": run_finite_duality,
    "passage-law": run_passage_law,
    "mc-pair": run_mc_pair,
}


# --------------------------------------------------------------------------
# outputs


def versions() -> dict:
    return {"superrep": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            vals = row.values() if isinstance(row, dict) else row
            w.writerow([format_number(v) for v in vals])


def run(experiment: str, params: dict, defaulted: list[str], out_dir: Path) -> tuple[dict, RunResult]:
    t0 = time.perf_counter()
    result = RUNNERS[experiment](params)
    elapsed = time.perf_counter() - t0
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_name = f"{experiment}.csv"
    write_csv(out_dir / csv_name, result.columns, result.rows)
    manifest = {
        "experiment": experiment,
        "config": _jsonable(params),
        "defaulted": defaulted,
        "versions": versions(),
        "checks": [c.to_dict() for c in result.checks],
        "results": _jsonable(result.extra),
        "outputs": [csv_name],
        "status": "pass" if result.ok else "fail",
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    (out_dir / "timing.json").write_text(json.dumps({"wall_clock_seconds": elapsed}) + "\n")
    return manifest, result


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="superrep", description="Super-replication duality experiments.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", type=Path, help="JSON configuration file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a configuration field (JSON value)")
    ap.add_argument("--out", type=Path, help=f"output directory (default: ${OUT_ENV} or ./superrep-out)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        config = json.loads(args.config.read_text()) if args.config else {}
        if not isinstance(config, dict):
            raise ConfigError("config: top level must be a JSON object")
        params, defaulted = resolve_config(args.experiment, config, args.overrides)
        out = args.out or Path(params.get("output_path") or os.environ.get(OUT_ENV) or "superrep-out")
        manifest, result = run(args.experiment, params, defaulted, Path(out))
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        ap.error(str(exc))  # exits with status 2
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}")
    print(f"{manifest['status']}: {len(result.checks)} checks, outputs in {out}")
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
