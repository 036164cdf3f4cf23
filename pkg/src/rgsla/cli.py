"""Command-line interface: ``rgsla {gen,attack,train,homophily,bound}``.

Every subcommand accepts ``--plan FILE``, an INI-style file with
``key = value`` lines under ``[data]``, ``[attack]``, ``[run]``, ``[train]``
and ``[bound]`` sections. Command-line flags override plan values.

Exit codes: 0 success, 2 validation error, 3 numeric divergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .attacks import ATTACK_KINDS, AttackSpec, attack_budget
from .bounds import (
    BoundParams,
    generalization_gap_bound,
    inf_norm,
    modal_degree,
    neighbour_lists,
    rademacher_lower_bound,
    trc_upper_bound,
    two_to_inf_norm,
)
from .errors import DivergenceError, ValidationError
from .graph import Graph, homophily_ratios, normalize_adjacency, sbm_generate
from .io import load_graph, load_weighted_edges, save_graph, save_weighted_edges
from .trainer import TrainConfig, run_rgsla, train_plain_gcn

log = logging.getLogger("rgsla")

EXIT_OK, EXIT_VALIDATION, EXIT_DIVERGENCE, EXIT_IO = 0, 2, 3, 4
METHODS = ("plain_gcn", "rgsla")
RESULT_COLUMNS = ["method", "attack", "rate", "seed", "accuracy", "l_gnn", "l_ss", "l_align", "wall_ms"]
HIST_BINS = 10


def fmt(x) -> str:
    return repr(float(x))


# -- plan handling -----------------------------------------------------------

class Plan:
    """Section/key lookup over an optional plan file."""

    def __init__(self, path: str | None = None):
        self.parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise FileNotFoundError(f"plan file not found: {p}")
            try:
                self.parser.read(p, encoding="utf-8")
            except configparser.Error as exc:
                raise ValidationError(f"malformed plan file {p}: {exc}") from exc
        self.base = Path(path).parent if path else Path(".")

    def get(self, section: str, key: str, override=None, default=None):
        if override is not None:
            return override
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        return default

    def section(self, name: str) -> dict:
        return dict(self.parser.items(name)) if self.parser.has_section(name) else {}

    def path(self, section: str, key: str, override=None, default=None):
        value = self.get(section, key, override, None)
        if value is None:
            return default
        if override is None and not Path(value).is_absolute():
            return self.base / value
        return Path(value)


def parse_floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(",", " ").split()]


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {text!r}")


def train_config_from(values: dict, seed: int | None = None) -> TrainConfig:
    """Build a TrainConfig from string key/values; theta1..theta3 are accepted."""
    values = dict(values)
    thetas = {k: float(values.pop(k)) for k in ("theta1", "theta2", "theta3") if k in values}
    values.pop("epochs", None)
    kinds = {f.name: f.type for f in fields(TrainConfig)}
    kwargs = {}
    for key, raw in values.items():
        if key not in kinds:
            raise ValidationError(f"unknown training option {key!r}")
        t = str(kinds[key])
        if "bool" in t:
            kwargs[key] = parse_bool(raw)
        elif key == "proj_dim":
            kwargs[key] = None if str(raw).lower() in ("", "none") else int(raw)
        elif "int" in t:
            kwargs[key] = int(raw)
        elif "float" in t:
            kwargs[key] = float(raw)
        else:
            kwargs[key] = str(raw)
    if thetas:
        missing = {"theta1", "theta2", "theta3"} - set(thetas)
        if missing:
            raise ValidationError(f"theta form needs all of theta1..theta3; missing {sorted(missing)}")
        clash = {"gamma1", "gamma2", "lambda1"} & set(kwargs)
        if clash:
            raise ValidationError(f"give either theta1..theta3 or {sorted(clash)}, not both")
        cfg = TrainConfig.from_thetas(thetas["theta1"], thetas["theta2"], thetas["theta3"], **kwargs)
    else:
        cfg = TrainConfig(**kwargs)
    return cfg if seed is None else replace(cfg, seed=seed)


def parse_set(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# -- data ----------------------------------------------------------------------

SBM_DEFAULTS = {
    "sizes": "30,30",
    "p_in": "0.2",
    "p_out": "0.05",
    "dim": "16",
    "informative": "1",
    "separation": "0.25",
    "noise_sd": "0.1",
    "train_frac": "0.1",
    "seed": "0",
}


def synthetic_graph(opts: dict) -> Graph:
    o = {**SBM_DEFAULTS, **{k: v for k, v in opts.items() if v is not None}}
    sizes = [int(v) for v in parse_floats(o["sizes"])]
    dim, informative = int(o["dim"]), int(o["informative"])
    if not 1 <= informative <= dim:
        raise ValidationError("need 1 <= informative <= dim")
    sep = float(o["separation"])
    # two blocks: +sep / -sep on the informative coordinates;
    # more blocks: block b gets +sep on its own cyclic window of coordinates
    means = np.zeros((len(sizes), dim))
    for b in range(len(sizes)):
        if len(sizes) == 2:
            means[b, :informative] = sep if b == 0 else -sep
        else:
            means[b, (b * informative + np.arange(informative)) % dim] = sep
    return sbm_generate(sizes, float(o["p_in"]), float(o["p_out"]), means,
                        float(o["noise_sd"]), int(o["seed"]), float(o["train_frac"]))


def load_data(plan: Plan, data_override: str | None) -> Graph:
    path = plan.path("data", "path", data_override)
    if path is not None:
        return load_graph(path)
    if plan.get("data", "source") == "synthetic" or plan.section("data"):
        return synthetic_graph({k: v for k, v in plan.section("data").items() if k != "source"})
    raise ValidationError("no dataset given: pass --data DIR or a plan with a [data] section")


# -- train ---------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    method: str
    attack: str
    rate: float
    seed: int
    cfg: TrainConfig
    epochs: int


@dataclass
class ExperimentPlan:
    graph: Graph
    attack: str
    rates: list
    methods: list
    cfg: TrainConfig
    repeats: int
    base_seed: int
    epochs: int
    out: Path
    timing: bool = False
    jobs: int = 1
    save_learned: bool = True
    cells: list = field(default_factory=list)

    def __post_init__(self):
        if self.repeats < 1:
            raise ValidationError("repeats must be at least 1")
        if self.attack not in ATTACK_KINDS:
            raise ValidationError(f"attack kind must be one of {ATTACK_KINDS}")
        for r in self.rates:
            if not 0.0 <= r <= 0.5:
                raise ValidationError(f"rate {r} outside [0, 0.5]")
        for m in self.methods:
            if m not in METHODS:
                raise ValidationError(f"unknown method {m!r}; expected one of {METHODS}")
        self.cells = [
            Cell(m, self.attack, r, self.base_seed + k, replace(self.cfg, seed=self.base_seed + k), self.epochs)
            for m in self.methods for r in self.rates for k in range(self.repeats)
        ]


def run_cell(graph: Graph, cell: Cell):
    poisoned = graph.with_adjacency(AttackSpec(cell.attack, cell.rate, cell.seed).apply(graph))
    if cell.method == "plain_gcn":
        report = train_plain_gcn(poisoned, cell.cfg.lr, cell.epochs, cell.cfg.hidden, cell.seed)
    else:
        report = run_rgsla(poisoned, cell.cfg)
    return report


def _cell_summary(args):
    graph, cell = args
    report = run_cell(graph, cell)
    learned = report.adjacency if cell.method == "rgsla" else None
    return report.test_accuracy, report.final, report.wall_ms, learned


def execute_plan(plan: ExperimentPlan) -> Path:
    plan.out.mkdir(parents=True, exist_ok=True)
    work = [(plan.graph, c) for c in plan.cells]
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            results = list(pool.map(_cell_summary, work))
    else:
        results = [_cell_summary(w) for w in work]

    path = plan.out / "results.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(RESULT_COLUMNS)
        for cell, (acc, final, wall, learned) in zip(plan.cells, results):
            writer.writerow([cell.method, cell.attack, fmt(cell.rate), cell.seed, fmt(acc),
                             fmt(final["l_gnn"]), fmt(final["l_ss"]), fmt(final["l_align"]),
                             fmt(wall if plan.timing else 0.0)])
            if learned is not None and plan.save_learned:
                name = f"{cell.attack}_rate{cell.rate:g}_seed{cell.seed}.tsv"
                save_weighted_edges(learned, plan.out / "learned" / name)
    return path


def cmd_train(args) -> int:
    plan = Plan(args.plan)
    graph = load_data(plan, args.data)
    train_opts = {**plan.section("train"), **parse_set(args.set)}
    cfg = train_config_from(train_opts)
    default_epochs = cfg.outer_iters * cfg.structure_inner * cfg.gcn_inner
    rates = parse_floats(plan.get("attack", "rates", args.rates, "0"))
    methods = [m.strip() for m in str(plan.get("run", "methods", args.methods, "plain_gcn,rgsla")).split(",") if m.strip()]
    exp = ExperimentPlan(
        graph=graph,
        attack=plan.get("attack", "kind", args.attack_kind, "feature_difference"),
        rates=rates,
        methods=methods,
        cfg=cfg,
        repeats=int(plan.get("run", "repeats", args.repeats, 1)),
        base_seed=int(plan.get("run", "seed", args.seed, 0)),
        epochs=int(train_opts.get("epochs", default_epochs)),
        out=plan.path("run", "out", args.out, Path("results")),
        timing=parse_bool(plan.get("run", "timing", args.timing, False)),
        jobs=int(plan.get("run", "jobs", args.jobs, 1)),
        save_learned=parse_bool(plan.get("run", "save_learned", None, True)),
    )
    path = execute_plan(exp)
    print(f"wrote {len(exp.cells)} rows to {path}")
    return EXIT_OK


# -- attack --------------------------------------------------------------------

def cmd_attack(args) -> int:
    plan = Plan(args.plan)
    graph = load_data(plan, args.data)
    spec = AttackSpec(
        kind=plan.get("attack", "kind", args.kind, "feature_difference"),
        rate=float(plan.get("attack", "rate", args.rate, 0.0)),
        seed=int(plan.get("attack", "seed", args.seed, 0)),
    )
    out = plan.path("run", "out", args.out, None)
    if out is None:
        raise ValidationError("attack needs --out DIR")
    poisoned = spec.apply(graph)
    changed = int(np.triu(poisoned != graph.adjacency, 1).sum())
    save_graph(graph.with_adjacency(poisoned), out)
    manifest = {
        "kind": spec.kind,
        "rate": spec.rate,
        "seed": spec.seed,
        "clean_edges": graph.num_edges,
        "budget": attack_budget(graph.adjacency, spec.rate),
        "pairs_changed": changed,
    }
    (Path(out) / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    print(f"{spec.kind} rate={spec.rate}: changed {changed} pairs -> {out}")
    return EXIT_OK


# -- homophily -----------------------------------------------------------------

def histogram(values: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(values, bins=HIST_BINS, range=(0.0, 1.0))
    return counts


def cmd_homophily(args) -> int:
    plan = Plan(args.plan)
    graph = load_data(plan, args.data)
    learned_path = plan.path("homophily", "learned", args.learned, None)
    out = plan.path("run", "out", args.out, Path("."))
    out.mkdir(parents=True, exist_ok=True)

    raw = homophily_ratios(graph)
    learned = None
    if learned_path is not None:
        learned = homophily_ratios(graph, load_weighted_edges(learned_path, graph.n))

    with (out / "homophily.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["node", "r_raw", "r_learned"])
        for j in range(graph.n):
            writer.writerow([j, fmt(raw[j]), "" if learned is None else fmt(learned[j])])

    edges = np.arange(HIST_BINS + 1) / HIST_BINS
    raw_counts = histogram(raw)
    learned_counts = histogram(learned) if learned is not None else None
    with (out / "homophily_hist.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(["bin_low", "bin_high", "count_raw", "count_learned"])
        for b in range(HIST_BINS):
            writer.writerow([fmt(edges[b]), fmt(edges[b + 1]), int(raw_counts[b]),
                             "" if learned_counts is None else int(learned_counts[b])])

    summary = f"mean r_raw={raw.mean():.4f}"
    if learned is not None:
        summary += f" mean r_learned={learned.mean():.4f}"
    print(summary)
    return EXIT_OK


# -- bound ---------------------------------------------------------------------

def bound_report(graph: Graph, opts: dict) -> dict:
    A_norm = normalize_adjacency(graph.adjacency)
    X = graph.features
    m = int(opts.get("m") or graph.num_labeled)
    modal = parse_bool(opts.get("modal_degree", False))
    neighbours = neighbour_lists(A_norm)
    q = modal_degree(neighbours) if modal else len(neighbours[0])
    params = BoundParams(
        R=float(opts.get("r", 1.0)),
        D=float(opts.get("d", 1.0)),
        lipschitz=float(opts.get("lipschitz", 1.0)),
        m=m,
        n=graph.n,
        q=q,
        B=None if opts.get("b") in (None, "") else float(opts["b"]),
        beta=float(opts.get("beta", 1.0)),
        omega=float(opts.get("omega", 1.0)),
        K=int(opts.get("k", 2)),
    )
    delta = float(opts.get("delta", 0.05))
    lower = rademacher_lower_bound(A_norm, X, params, modal_subgraph=modal)
    trc = trc_upper_bound(A_norm, X, params)
    return {
        "n": graph.n,
        "m": m,
        "q": q,
        "B": float(np.max(np.linalg.norm(X, axis=1))) if params.B is None else params.B,
        "norm_S_inf": inf_norm(A_norm),
        "norm_SX_2_inf": two_to_inf_norm(A_norm @ X),
        "c1": params.c1,
        "c2": params.c2,
        "c3": params.c3(graph.d),
        "rademacher_lower_bound": lower,
        "trc_upper_bound": trc,
        "generalization_gap_bound": generalization_gap_bound(trc, params, delta),
    }


def cmd_bound(args) -> int:
    plan = Plan(args.plan)
    graph = load_data(plan, args.data)
    opts = plan.section("bound")
    for key in ("r", "d", "lipschitz", "b", "beta", "omega", "k", "m", "delta"):
        value = getattr(args, f"bound_{key}")
        if value is not None:
            opts[key] = value
    if args.modal_degree:
        opts["modal_degree"] = True
    report = bound_report(graph, opts)
    lines = [f"{k}\t{v if isinstance(v, int) else fmt(v)}" for k, v in report.items()]
    print("\n".join(lines))
    out = plan.path("run", "out", args.out, None)
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["quantity", "value"])
            for k, v in report.items():
                writer.writerow([k, v if isinstance(v, int) else fmt(v)])
    return EXIT_OK


# -- gen -----------------------------------------------------------------------

def cmd_gen(args) -> int:
    plan = Plan(args.plan)
    opts = {k: v for k, v in plan.section("data").items() if k not in ("source", "path")}
    for key in SBM_DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            opts[key] = value
    out = plan.path("run", "out", args.out, None)
    if out is None:
        raise ValidationError("gen needs --out DIR")
    graph = synthetic_graph(opts)
    save_graph(graph, out)
    print(f"wrote SBM graph n={graph.n} edges={graph.num_edges} -> {out}")
    return EXIT_OK


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgsla", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--plan", help="INI plan file")
        if data:
            p.add_argument("--data", help="graph directory")
        p.add_argument("--out", help="output location")

    p = sub.add_parser("gen", help="write a synthetic SBM graph directory")
    common(p, data=False)
    p.add_argument("--sizes")
    p.add_argument("--p-in", dest="p_in")
    p.add_argument("--p-out", dest="p_out")
    p.add_argument("--dim")
    p.add_argument("--informative")
    p.add_argument("--separation")
    p.add_argument("--noise-sd", dest="noise_sd")
    p.add_argument("--train-frac", dest="train_frac")
    p.add_argument("--seed")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("attack", help="poison a graph's structure")
    common(p)
    p.add_argument("--kind", choices=ATTACK_KINDS)
    p.add_argument("--rate", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("train", help="run a method x rate x seed sweep, write results.csv")
    common(p)
    p.add_argument("--attack-kind", dest="attack_kind", choices=ATTACK_KINDS)
    p.add_argument("--rates", help="comma-separated perturbation rates")
    p.add_argument("--methods", help="comma-separated subset of plain_gcn,rgsla")
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--timing", action="store_const", const=True,
                   help="record wall-clock time (makes results.csv run-dependent)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="training option override, e.g. gamma1=0.01 or theta2=0.1")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("homophily", help="per-node same-label neighbour ratios")
    common(p)
    p.add_argument("--learned", help="weighted edge file of a learned adjacency")
    p.set_defaults(func=cmd_homophily)

    p = sub.add_parser("bound", help="evaluate the Rademacher bounds on a graph")
    common(p)
    for key, help_ in (("r", "Frobenius bound on W1"), ("d", "spectral bound on W2"),
                       ("lipschitz", "activation Lipschitz constant"),
                       ("b", "max feature row norm (default: computed)"),
                       ("beta", "bias norm bound"), ("omega", "weight inf-norm bound"),
                       ("k", "layer count"), ("m", "labelled nodes (default: train mask)"),
                       ("delta", "confidence level")):
        flag = {"r": "--R", "d": "--D", "b": "--B", "k": "--K"}.get(key, f"--{key}")
        p.add_argument(flag, dest=f"bound_{key}", help=help_)
    p.add_argument("--modal-degree", action="store_true",
                   help="restrict the lower bound to nodes of the modal degree")
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DivergenceError as exc:
        print(f"error: numeric divergence in {exc.term}: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (OSError, ValueError) as exc:
        code = EXIT_IO if isinstance(exc, OSError) else EXIT_VALIDATION
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
