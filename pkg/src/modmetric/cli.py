"""Command-line runner: ``modmetric run --config cfg.json --out DIR`` and ``modmetric generate KIND``.

Exit codes: 0 pass, 2 fail with witness, 3 inconclusive, 1 usage or IO error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__, fixtures, gauges, report, topology, xreal
from .compactness import cauchy_equivalence, compactness_verdict, epsilon_net
from .core.axioms import check_modular_axioms, check_phi_convexity
from .core.family import ModularFamily, build
from .core.spaces import LambdaGrid, PointSpace
from .orlicz import integrands, kr
from .report import DiagnosticReport

EXIT_PASS, EXIT_USAGE, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3
EXPERIMENTS = ("axioms", "gauges", "topology_compare", "delta2", "cauchy", "nets", "kr", "fuzzy", "adequacy")
_STATUS_EXIT = {report.PASS: EXIT_PASS, report.FAIL: EXIT_FAIL, report.INCONCLUSIVE: EXIT_INCONCLUSIVE}


class ConfigError(ValueError):
    """Schema violation; ``path`` is the dotted location of the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class Config:
    """Typed access to a config object with field paths in error messages."""

    def __init__(self, data: dict, base: Path, path: str = "config"):
        if not isinstance(data, dict):
            raise ConfigError(path, "expected an object")
        self.data = data
        self.base = base
        self.path = path

    def _where(self, key: str) -> str:
        return f"{self.path}.{key}"

    def has(self, key: str) -> bool:
        return key in self.data

    def raw(self, key: str, default: Any = None) -> Any:
        return self.data.get(key, default)

    def sub(self, key: str) -> "Config":
        if key not in self.data:
            raise ConfigError(self._where(key), "missing")
        return Config(self.data[key], self.base, self._where(key))

    def number(self, key: str, default: Optional[float] = None, positive: bool = False) -> float:
        if key not in self.data:
            if default is None:
                raise ConfigError(self._where(key), "missing")
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(self._where(key), f"expected a number, got {v!r}")
        if positive and not v > 0:
            raise ConfigError(self._where(key), "must be positive")
        return float(v)

    def integer(self, key: str, default: Optional[int] = None, minimum: int = 0) -> int:
        if key not in self.data:
            if default is None:
                raise ConfigError(self._where(key), "missing")
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(self._where(key), f"expected an integer, got {v!r}")
        if v < minimum:
            raise ConfigError(self._where(key), f"must be >= {minimum}")
        return v

    def numbers(self, key: str, default: Optional[List[float]] = None, positive: bool = False) -> List[float]:
        if key not in self.data:
            if default is None:
                raise ConfigError(self._where(key), "missing")
            return list(default)
        v = self.data[key]
        if not isinstance(v, list) or not v or not all(isinstance(t, (int, float)) and not isinstance(t, bool)
                                                       for t in v):
            raise ConfigError(self._where(key), "expected a nonempty list of numbers")
        if positive and min(v) <= 0:
            raise ConfigError(self._where(key), "entries must be positive")
        return [float(t) for t in v]

    def file(self, key: str) -> Path:
        v = self.data.get(key)
        if not isinstance(v, str):
            raise ConfigError(self._where(key), "expected a path string")
        p = Path(v)
        p = p if p.is_absolute() else self.base / p
        if not p.exists():
            raise FileNotFoundError(f"{self._where(key)}: {p} does not exist")
        return p


# inputs


def _space(cfg: Config, seed: int) -> PointSpace:
    if not cfg.has("space"):
        return fixtures.step_space()
    s = cfg.sub("space")
    if s.has("path"):
        return fixtures.load_space(s.file("path"))
    if s.has("random"):
        r = s.sub("random")
        return fixtures.random_metric(r.integer("n", minimum=1), seed, r.integer("dim", 2, minimum=1),
                                      r.number("min_separation", 0.0))
    if s.has("fixture"):
        if s.raw("fixture") != "step":
            raise ConfigError(s._where("fixture"), "only 'step' is a named space")
        return fixtures.step_space()
    try:
        return fixtures.space_from_dict(s.data)
    except (ValueError, TypeError) as exc:
        raise ConfigError(s.path, str(exc)) from exc


def _modular(cfg: Config, space: PointSpace) -> ModularFamily:
    spec = cfg.raw("modular", {"kind": "scaled", "g": "power", "p": 1})
    if not isinstance(spec, dict):
        raise ConfigError("config.modular", "expected an object")
    try:
        return build(spec, space)
    except (KeyError, ValueError) as exc:
        raise ConfigError("config.modular", str(exc)) from exc


def _grid(cfg: Config, key: str = "lambda_grid", lo: float = 1e-3, hi: float = 1e3,
          per_decade: int = 4) -> LambdaGrid:
    if not cfg.has(key):
        return LambdaGrid.per_decade(lo, hi, per_decade)
    g = cfg.sub(key)
    if g.has("values"):
        return LambdaGrid.from_values(g.numbers("values", positive=True))
    return LambdaGrid.per_decade(g.number("lo", lo, True), g.number("hi", hi, True),
                                 g.integer("per_decade", per_decade, minimum=1))


def _phi(name: Optional[str]):
    if name is None:
        return None
    table = {"identity": gauges.IDENTITY, "square": gauges.SQUARE}
    if name not in table:
        raise ConfigError("config.phi", f"unknown phi {name!r}")
    return table[name]


def _traces(cfg: Config, n: int, seed: int) -> List[List[int]]:
    if cfg.has("traces"):
        tr = cfg.raw("traces")
        if not isinstance(tr, list) or not all(isinstance(t, list) and t for t in tr):
            raise ConfigError("config.traces", "expected a list of nonempty index lists")
        for k, t in enumerate(tr):
            if any(not isinstance(i, int) or not 0 <= i < n for i in t):
                raise ConfigError(f"config.traces[{k}]", "indices must be point indices")
        return [list(t) for t in tr]
    g = cfg.sub("generate_traces") if cfg.has("generate_traces") else Config({}, cfg.base, "config.generate_traces")
    seqs = fixtures.delta2_scaled_sequences(PointSpace(tuple(str(i) for i in range(n))), g.integer("count", 10, 1),
                                            seed, g.integer("length", 12, 4))
    return [pts for pts, _ in seqs]


# experiments

Tables = Dict[str, str]


def _matrix_csv(values: np.ndarray) -> str:
    return "".join(",".join(xreal.fmt(v) for v in row) + "\n" for row in np.asarray(values, dtype=float))


def exp_axioms(cfg: Config, seed: int) -> Tuple[DiagnosticReport, Tables]:
    w = _modular(cfg, _space(cfg, seed))
    grid = _grid(cfg)
    tol = cfg.number("tol", 1e-9, True)
    rep = check_modular_axioms(w, grid, tol)
    phi = _phi(cfg.raw("phi"))
    if rep.passed and phi is not None:
        rep = check_phi_convexity(w, phi, grid, tol)
    return rep, {}


def exp_gauges(cfg: Config, seed: int) -> Tuple[DiagnosticReport, Tables]:
    w = _modular(cfg, _space(cfg, seed))
    tol = cfg.number("tol", gauges.TOL, True)
    names = cfg.raw("gauges", ["d0", "dstar"])
    if not isinstance(names, list) or any(g not in gauges.GAUGES for g in names):
        raise ConfigError("config.gauges", f"entries must be among {sorted(gauges.GAUGES)}")
    phi = _phi(cfg.raw("phi"))
    mats = {}
    for g in names:
        if g in ("d0_phi", "d1_phi") and phi is None:
            raise ConfigError("config.phi", f"gauge {g} needs phi")
        mats[g] = gauges.gauge_matrix(w, g, phi, tol=tol)
    tables = {f"{g}.csv": _matrix_csv(m.values) for g, m in mats.items()}
    evidence = {g: {"values": m.values, "violations": m.meta["violations"], "flags": m.meta["flags"]}
                for g, m in mats.items()}
    for g, m in mats.items():
        if m.meta["violations"]:
            return report.failed("gauges", {"gauge": g, **m.meta["violations"][0]}, "pseudometric axiom violated",
                                 **evidence), tables
    if "d0" in mats and "dstar" in mats:
        d0, ds = mats["d0"].values, mats["dstar"].values
        lo, hi = np.minimum(ds, np.sqrt(ds)), np.maximum(ds, np.sqrt(ds))
        bad = np.argwhere((d0 < lo - 1e-8) | (d0 > hi + 1e-8))
        if len(bad):
            i, j = (int(v) for v in bad[0])
            return report.failed("gauges", {"sandwich": [i, j], "d0": d0[i, j], "dstar": ds[i, j]},
                                 "d0 outside the d* sandwich", **evidence), tables
    return report.passed("gauges", "gauges are pseudometrics", **evidence), tables


def exp_topology_compare(cfg: Config, seed: int) -> Tuple[DiagnosticReport, Tables]:
    w = _modular(cfg, _space(cfg, seed))
    n_max = cfg.integer("n_max", 8, 1)
    radii = cfg.numbers("radii", [1.0, 0.5, 0.25, 0.125], positive=True)
    compose_max = cfg.integer("composition_n", 16, 1)
    for n in range(1, compose_max + 1):
        comp = topology.composition_check(w, n)
        if not comp.passed:
            return comp, {}
    metr = topology.metrize_uniformity(w, n_max)
    d0 = gauges.gauge_matrix(w, "d0")
    verdict = topology.refinement_compare(metr, d0, radii)
    tables = {"metrized.csv": _matrix_csv(metr.values), "d0.csv": _matrix_csv(d0.values)}
    ev = {"verdict": verdict.to_dict(), "n_max": n_max, "radii": radii, "composition_checked_to": compose_max}
    if verdict.direction == topology.MUTUAL:
        return report.passed("topology_compare", "uniform and d0 balls refine each other", **ev), tables
    return report.failed("topology_compare", verdict.witnesses[0], f"verdict {verdict.direction}", **ev), tables


def exp_delta2(cfg: Config, seed: int) -> Tuple[DiagnosticReport, Tables]:
    horizon = cfg.integer("horizon", 10, 3)
    tol = cfg.number("tol", 1e-9, True)
    if cfg.raw("fixture") == "step":
        w, seqs, lambdas = fixtures.delta2_step_fixture(cfg.integer("length", 20, 4))
        lambdas = cfg.numbers("lambdas", lambdas, positive=True)
    else:
        w = _modular(cfg, _space(cfg, seed))
        lambdas = cfg.numbers("lambdas", [1.0, 0.5, 0.25], positive=True)
        g = cfg.sub("generate") if cfg.has("generate") else Config({}, cfg.base, "config.generate")
        seqs = fixtures.delta2_scaled_sequences(w.space, g.integer("count", 20, 1), seed, g.integer("length", 12, 4))
    return topology.delta2_diagnostic(w, seqs, lambdas, horizon, tol), {}


def exp_cauchy(cfg: Config, seed: int) -> Tuple[DiagnosticReport, Tables]:
    w = _modular(cfg, _space(cfg, seed))
    n_max = cfg.integer("n_max", 8, 1)
    rows, reps = [], []
    for k, tr in enumerate(_traces(cfg, w.n, seed)):
        r = cauchy_equivalence(tr, w, n_max)
        reps.append(r)
        c = r.evidence["classification"]
        rows.append(f"{k},{int(c['v_cauchy'])},{int(c['d0_cauchy'])},{int(c['dstar_cauchy'])}\n")
    table = {"classification.csv": "trace,v_cauchy,d0_cauchy,dstar_cauchy\n" + "".join(rows)}
    ev = {"traces": [r.to_dict() for r in reps]}
    bad = next((k for k, r in enumerate(reps) if not r.passed), None)
    if bad is not None:
        return report.failed("cauchy", {"trace": bad, **reps[bad].witness}, "Cauchy notions disagree", **ev), table
    return report.passed("cauchy", "all traces classified consistently", **ev), table


def exp_nets(cfg: Config, seed: int) -> Tuple[DiagnosticReport, Tables]:
    space = _space(cfg, seed)
    eps = sorted(cfg.numbers("epsilons", [0.5, 0.25, 0.1], positive=True), reverse=True)
    w = _modular(cfg, space) if cfg.has("modular") else None
    metric = gauges.gauge_matrix(w, "d0") if w is not None else gauges.DistanceMatrix(space.distance, "input")
    traces = _traces(cfg, space.n, seed) if (cfg.has("traces") or cfg.has("generate_traces")) else []
    rep = compactness_verdict(metric, w, eps, traces, min_separated=cfg.integer("min_separated", 8, 1))
    lines = ["epsilon,center,member\n"]
    for e in eps:
        net = epsilon_net(metric, e)
        lines += [f"{e!r},{v},{k}\n" for k, v in sorted(net.assignment.items())]
    return rep, {"nets.csv": "".join(lines)}


def _family_input(cfg: Config, seed: int):
    f = cfg.sub("family")
    if f.has("csv"):
        return fixtures.load_family(f.file("csv"), f.file("omega") if f.has("omega") else None)
    kind = f.raw("generate")
    if kind == "lipschitz":
        vals = f.numbers("values", list(np.linspace(0.0, 1.0, 11)))
        return fixtures.lipschitz(f.integer("n", 64, 1), vals)
    if kind == "rademacher":
        return fixtures.rademacher(f.integer("m", 16, 1), f.integer("n", 64, 2))
    if kind == "zero":
        return np.zeros((1, f.integer("n", 64, 1))), fixtures.DiscreteMeasureSpace.uniform_grid(f.integer("n", 64, 1))
    raise ConfigError("config.family", "needs 'csv' or 'generate' in {lipschitz, rademacher, zero}")


def exp_kr(cfg: Config, seed: int) -> Tuple[DiagnosticReport, Tables]:
    a, omega = _family_input(cfg, seed)
    spec = cfg.raw("integrand", {"kind": "lp", "p": 2})
    try:
        phi = integrands.build_integrand(spec)
    except (KeyError, ValueError) as exc:
        raise ConfigError("config.integrand", str(exc)) from exc
    eps = cfg.numbers("epsilons", [0.1], positive=True)
    grid = _grid(cfg, lo=1e-6, hi=1e6, per_decade=48).values
    delta = cfg.number("delta", positive=True) if cfg.has("delta") else None
    rep = kr.kr_compactness(a, phi, omega, eps, lambda_grid=grid, delta=delta)
    return rep, {"net.csv": kr.net_table_csv(rep)}


def exp_fuzzy(cfg: Config, seed: int) -> Tuple[DiagnosticReport, Tables]:
    space = _space(cfg, seed)
    ts = cfg.numbers("ts", [0.5, 1.0, 2.0], positive=True)
    rs = cfg.numbers("rs", [0.1, 0.25, 0.5, 0.75], positive=True)
    if max(rs) >= 1:
        raise ConfigError("config.rs", "radii must lie in (0, 1)")
    d = gauges.DistanceMatrix(space.distance, "input")
    v = topology.fuzzy_refinement(d, ts, rs)
    tables = {f"fuzzy_t{t!r}.csv": _matrix_csv(topology.fuzzy_from_metric(d, t)) for t in ts}
    if v.direction == topology.MUTUAL:
        return report.passed("fuzzy", "fuzzy and metric balls refine each other", verdict=v.to_dict()), tables
    return report.failed("fuzzy", v.witnesses[0], f"verdict {v.direction}", verdict=v.to_dict()), tables


def exp_adequacy(cfg: Config, seed: int) -> Tuple[DiagnosticReport, Tables]:
    space = _space(cfg, seed)
    subset = cfg.raw("subset", list(range(space.n)))
    if not isinstance(subset, list) or not subset or any(not isinstance(i, int) or not 0 <= i < space.n
                                                         for i in subset):
        raise ConfigError("config.subset", "expected a nonempty list of point indices")
    tol = cfg.number("tol", 1e-12, True)
    worst, pair = topology.adequacy_defect(space.distance, subset, per_pair=True)
    ev = {"defect": worst, "subset": sorted(set(subset)), "tol": tol}
    tables = {"defect.csv": _matrix_csv(pair)}
    if worst <= tol:
        return report.passed("adequacy", "the subset recovers every distance", **ev), tables
    i, j = (int(v) for v in np.unravel_index(int(np.argmax(pair)), pair.shape))
    return report.failed("adequacy", {"x1": i, "x2": j, "defect": float(pair[i, j])},
                         "the subset does not recover every distance", **ev), tables


RUNNERS: Dict[str, Callable[[Config, int], Tuple[DiagnosticReport, Tables]]] = {
    "axioms": exp_axioms,
    "gauges": exp_gauges,
    "topology_compare": exp_topology_compare,
    "delta2": exp_delta2,
    "cauchy": exp_cauchy,
    "nets": exp_nets,
    "kr": exp_kr,
    "fuzzy": exp_fuzzy,
    "adequacy": exp_adequacy,
}


def _dump(obj) -> str:
    return json.dumps(xreal.encode(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def run(config_path, out_dir, seed: Optional[int] = None, experiment: Optional[str] = None,
        quiet: bool = True) -> int:
    """Run one experiment; write ``report.json``, ``metadata.json`` and CSV tables into ``out_dir``."""
    config_path = Path(config_path)
    data = json.loads(config_path.read_text())
    cfg = Config(data, config_path.parent)
    name = experiment or cfg.raw("experiment")
    if name not in RUNNERS:
        raise ConfigError("config.experiment", f"expected one of {list(EXPERIMENTS)}, got {name!r}")
    seed = cfg.integer("seed", 0) if seed is None else int(seed)
    if seed < 0:
        raise ConfigError("seed", "must be nonnegative")
    rep, tables = RUNNERS[name](cfg, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(_dump({"experiment": name, "seed": seed, "report": rep.to_dict()}))
    for fname, text in sorted(tables.items()):
        (out / fname).write_text(text)
    meta = {"timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(), "version": __version__,
            "config": str(config_path), "tables": sorted(tables)}
    (out / "metadata.json").write_text(_dump(meta))
    if not quiet:
        print(f"{name}: {rep.status} {rep.message}")
    return _STATUS_EXIT[rep.status]


def generate(kind: str, out_dir, seed: int = 0, params: Optional[Dict[str, str]] = None) -> List[Path]:
    """Write a deterministic fixture; returns the written paths."""
    params = dict(params or {})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def take(key, cast, default):
        try:
            return cast(params.pop(key)) if key in params else default
        except ValueError as exc:
            raise ConfigError(f"param.{key}", str(exc)) from exc

    if kind == "random_metric":
        space = fixtures.random_metric(take("n", int, 6), seed, take("dim", int, 2), take("min_separation", float, 0.0))
        written = [out / "space.json"]
        written[0].write_text(_dump(fixtures.space_to_dict(space)))
    elif kind == "step":
        written = [out / "space.json"]
        written[0].write_text(_dump(fixtures.space_to_dict(fixtures.step_space())))
    elif kind in ("rademacher", "lipschitz"):
        if kind == "rademacher":
            a, omega = fixtures.rademacher(take("m", int, 16), take("n", int, 64))
        else:
            a, omega = fixtures.lipschitz(take("n", int, 64), np.linspace(0.0, 1.0, take("count", int, 11)))
        written = list(fixtures.save_family(out / f"{kind}.csv", a, omega))
    else:
        raise ConfigError("kind", f"unknown fixture kind {kind!r}")
    if params:
        raise ConfigError(f"param.{sorted(params)[0]}", "unknown parameter")
    return written


def _params(items: List[str]) -> Dict[str, str]:
    out = {}
    for it in items:
        if "=" not in it:
            raise ConfigError("param", f"expected key=value, got {it!r}")
        k, v = it.split("=", 1)
        out[k] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modmetric", description="Finite-resolution experiments on modular metrics.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True, help="JSON config path")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--experiment", choices=EXPERIMENTS, help="override the config experiment")
    r.add_argument("--quiet", action="store_true", help="suppress the summary line")
    g = sub.add_parser("generate", help="write a fixture")
    g.add_argument("kind", choices=["random_metric", "step", "rademacher", "lipschitz"])
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "run":
            return run(args.config, args.out, args.seed, args.experiment, args.quiet)
        paths = generate(args.kind, args.out, args.seed, _params(args.param))
        for path in paths:
            print(path)
        return EXIT_PASS
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (report.PreconditionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
