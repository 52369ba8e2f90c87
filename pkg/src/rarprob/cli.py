"""Command line entry point: validate, analyze, tree and oracle subcommands.

Exit codes: 0 success, 1 internal analysis error, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from . import analysis, integration
from .geometry.rational import to_fraction, to_q
from .model import GoalSpecification, ModelError, RarModel, enroll, load_model, validate
from .oracle import StrategySearchConfig, can_reach
from .stochastic import FoldedNormal

log = logging.getLogger("rarprob")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2
PHASES = ("flowpipe", "refinement", "extraction", "integration")


@dataclass
class AnalysisReport:
    model: str
    p_max: float
    e_stat: float
    e_inf: float
    n_traces: int
    tree_size: int
    d_r: int
    timings: dict
    config: dict
    sample_domain: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    reference: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "AnalysisReport":
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        return cls.from_dict(json.loads(text))

    def to_text(self) -> str:
        lines = [
            f"model          {self.model}",
            f"p_max          {self.p_max:.6f}",
            f"e_stat         {self.e_stat:.3e}",
            f"e_inf          {self.e_inf:.3e}",
            f"goal traces    {self.n_traces}",
            f"tree size      {self.tree_size}",
            f"delays         {self.d_r}",
            "times [s]      " + "  ".join(f"{k}={self.timings[k]:.3f}" for k in PHASES),
            "config         " + " ".join(f"{k}={v}" for k, v in self.config.items()),
        ]
        if self.sample_domain:
            lines.append("sample domain")
            for i, piece in enumerate(self.sample_domain):
                lines.append(f"  piece {i} (trace {piece['trace']}):")
                lines.extend("    " + c for c in piece["constraints"])
        for key, val in self.reference.items():
            lines.append(f"reference {key}: {val}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines)


def _sigma_variants(names) -> dict:
    table = {"1": 1.0, "sqrt2": math.sqrt(2.0), "2": 2.0}
    return {n: table[n] for n in names if n in table}


def reference_values(m: RarModel) -> dict:
    """Optional comparison values declared in the model metadata.

    ``sample_domain_lower_bound`` b together with a single folded-normal clock
    asks for the closed form P(X >= b) under each listed sigma reading.
    """
    md = m.metadata or {}
    out: dict = {}
    if "reference_p_max" in md:
        out["published_p_max"] = md["reference_p_max"]
    if "sample_domain_lower_bound" in md and len(m.var_r) == 1:
        dist = m.distr[m.var_r[0]]
        if isinstance(dist, FoldedNormal):
            b = float(md["sample_domain_lower_bound"])
            out["closed_form"] = float(dist.sf(b))
            forms = {}
            for name, s in _sigma_variants(md.get("sigma_variants", [])).items():
                forms[f"sigma={name}"] = float(FoldedNormal(dist.mu, s).sf(b))
            if forms:
                out["closed_form_sigma_variants"] = forms
    return out


@dataclass
class AnalyzeOptions:
    goal: Optional[Sequence[str]] = None
    goal_locations: Optional[Sequence[str]] = None
    t_max: Optional[str] = None
    t_int: float = 100.0
    samples: int = 100_000
    seed: int = 0
    passes: int = integration.DEFAULT_PASSES
    integrator: str = "vegas"
    jump_bound: int = 50
    bounds: dict = field(default_factory=dict)


def resolve_goal(m: RarModel, opts: AnalyzeOptions) -> GoalSpecification:
    if opts.goal is None and opts.goal_locations is None:
        if m.goal is None:
            raise ModelError("no goal in the model file and none given on the command line")
        return m.goal
    constraints = opts.goal if opts.goal is not None else (m.goal.text if m.goal else ())
    locs = opts.goal_locations
    if locs is None and m.goal is not None:
        locs = m.goal.goal_locations
    return GoalSpecification.parse(locs, constraints, m.var_c)


def run_analyze(model_path, opts: Optional[AnalyzeOptions] = None, model: Optional[RarModel] = None) -> AnalysisReport:
    opts = opts or AnalyzeOptions()
    m = model if model is not None else load_model(model_path)
    problems = validate(m)
    if problems:
        raise ModelError("model is not well-formed:\n" + "\n".join(f"  {p}" for p in problems))
    goal = resolve_goal(m, opts)
    em = enroll(m, opts.bounds or None, opts.t_max)
    timings = dict.fromkeys(PHASES, 0.0)

    t0 = time.perf_counter()
    tree = analysis.forward_flowpipe(em, opts.jump_bound)
    traces = analysis.collect_goal_traces(tree, goal, em)
    timings["flowpipe"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    refinements = [analysis.refine_trace(tree, tr, em) for tr in traces]
    timings["refinement"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pieces = [analysis.extract_sample_domain(r, em) for r in refinements]
    domain = analysis.union_sample_domains(pieces, [tr.index for tr in traces], em.d_r)
    timings["extraction"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    res = integration.integrate_union(
        domain, em.joint_density(), opts.t_int, opts.samples, opts.seed, opts.passes, opts.integrator
    )
    timings["integration"] = time.perf_counter() - t0

    delay_names = [d.name for d in em.delays]
    config = {
        "t_max": None if em.t_max is None else str(to_fraction(em.t_max)),
        "t_int": opts.t_int,
        "samples": opts.samples,
        "seed": opts.seed,
        "passes": res.passes,
        "integrator": opts.integrator,
        "partitions": res.partitions,
        "jump_bound": opts.jump_bound,
        "expiration_bounds": dict(em.expiration_bound),
    }
    return AnalysisReport(
        model=m.name,
        p_max=res.p_max,
        e_stat=res.e_stat,
        e_inf=res.e_inf,
        n_traces=len(traces),
        tree_size=len(tree),
        d_r=em.d_r,
        timings=timings,
        config=config,
        sample_domain=[
            {"trace": i, "constraints": p.to_text(delay_names).splitlines()[1:]}
            for p, i in zip(domain.pieces, domain.provenance)
        ],
        warnings=list(tree.warnings),
        reference=reference_values(m),
    )


# --------------------------------------------------------------------------- argparse
def _bounds(items) -> dict:
    out = {}
    for it in items or ():
        name, _, val = it.partition("=")
        if not name or not val.isdigit():
            raise ModelError(f"--bound expects clock=count, got {it!r}")
        out[name] = int(val)
    return out


def _add_model_args(p):
    p.add_argument("model", help="model file (JSON)")
    p.add_argument("--goal", action="append", help="goal constraint, e.g. 'x - y <= 3/2' (repeatable)")
    p.add_argument("--goal-locations", help="comma separated goal locations ('*' for all)")
    p.add_argument("--tmax", help="time bound; adds a global clock unless the model names one")
    p.add_argument("--bound", action="append", metavar="CLOCK=N", help="expiration bound override")
    p.add_argument("--jump-bound", type=int, default=50)
    p.add_argument("--output", choices=["text", "json"], default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rarprob", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check structural well-formedness")
    p.add_argument("model")
    p.add_argument("--output", choices=["text", "json"], default="text")

    p = sub.add_parser("analyze", help="compute the maximal prophetic reachability probability")
    _add_model_args(p)
    p.add_argument("--tint", type=float, default=100.0, help="integration box edge")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--passes", type=int, default=integration.DEFAULT_PASSES)
    p.add_argument("--integrator", choices=["vegas", "plain"], default="vegas")

    p = sub.add_parser("tree", help="dump the forward reach tree")
    _add_model_args(p)

    p = sub.add_parser("oracle", help="search a scheduler for one fixed sample vector")
    _add_model_args(p)
    p.add_argument("--sample", required=True, help="comma separated delay values")
    p.add_argument("--delta", default="1/20", help="time grid step")
    p.add_argument("--rate-grid", type=int, default=3)
    p.add_argument("--init-grid", type=int, default=5)
    p.add_argument("--max-jumps", type=int, default=20)
    p.add_argument("--budget", type=int, default=200_000)
    return ap


def _options(args) -> AnalyzeOptions:
    locs = None
    if args.goal_locations:
        locs = [s.strip() for s in args.goal_locations.split(",") if s.strip()]
    kw = dict(goal=args.goal, goal_locations=locs, t_max=args.tmax, jump_bound=args.jump_bound,
              bounds=_bounds(args.bound))
    if args.command == "analyze":
        kw.update(t_int=args.tint, samples=args.samples, seed=args.seed, passes=args.passes,
                  integrator=args.integrator)
    return AnalyzeOptions(**kw)


def _cmd_validate(args) -> int:
    m = load_model(args.model)
    problems = validate(m)
    if args.output == "json":
        print(json.dumps({"model": m.name, "valid": not problems, "violations": [asdict(v) for v in problems]},
                         indent=2))
    elif problems:
        for v in problems:
            print(v)
    else:
        print(f"{m.name}: ok")
    return EXIT_INPUT if problems else EXIT_OK


def _cmd_analyze(args) -> int:
    rep = run_analyze(args.model, _options(args))
    print(rep.to_json() if args.output == "json" else rep.to_text())
    return EXIT_OK


def _prepare(args):
    m = load_model(args.model)
    problems = validate(m)
    if problems:
        raise ModelError("model is not well-formed:\n" + "\n".join(f"  {p}" for p in problems))
    opts = _options(args)
    return m, resolve_goal(m, opts), enroll(m, opts.bounds or None, opts.t_max), opts


def _cmd_tree(args) -> int:
    m, goal, em, opts = _prepare(args)
    tree = analysis.forward_flowpipe(em, opts.jump_bound)
    doc = tree.to_dict()
    doc["goal_nodes"] = [t.goal_node for t in analysis.collect_goal_traces(tree, goal, em)]
    if args.output == "json":
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    for n in doc["nodes"]:
        jump = "" if n["jump"] is None else f" via {n['jump']['kind']} {n['jump']['label']}"
        mark = " [goal]" if n["id"] in doc["goal_nodes"] else ""
        print(f"node {n['id']} {n['location']} parent={n['parent']}{jump}{mark}")
        for c in n["constraints"]:
            print(f"    {c}")
    for w in doc["warnings"]:
        print(f"warning: {w}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    m, goal, em, _ = _prepare(args)
    try:
        sample = [to_q(s.strip()) for s in args.sample.split(",")]
        delta = to_q(args.delta)
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelError(f"bad number: {exc}") from None
    cfg = StrategySearchConfig(delta, args.rate_grid, args.init_grid, args.max_jumps, budget=args.budget)
    res = can_reach(em, goal, sample, cfg)
    if res.inconclusive:
        log.warning("search budget exhausted; reporting unreachable")
    doc = {"reachable": res.reachable, "inconclusive": res.inconclusive, "expansions": res.expansions,
           "delays": [d.name for d in em.delays], "witness": res.witness}
    if args.output == "json":
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    print(f"reachable: {res.reachable}" + (" (inconclusive)" if res.inconclusive else ""))
    for st in res.witness:
        print(f"  {st['location']} at {st['valuation']} rate {st['rate']} wait {st['delay']:g} -> {st['action']}")
    return EXIT_OK


COMMANDS = {"validate": _cmd_validate, "analyze": _cmd_analyze, "tree": _cmd_tree, "oracle": _cmd_oracle}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ModelError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except analysis.InternalConsistencyError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - anything else is our fault
        log.debug("unhandled", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
