"""Command-line front end.

Subcommands: gadget-verify, map, z, sample, bias, threshold, report-check.
Exit codes: 0 success, 1 usage or parse error, 2 work budget refused,
3 identity check failed or oracle cross-check mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import report as rep
from .armodel import ArModel, MarkovModel, ModelError, ancestral_sample, load_markov, sequence_probability
from .biaslab import BiasReport, Instance, ReferenceUnavailable, exact_reference, run_experiment
from .constraints import ConstraintAutomaton, ConstraintError, compile_constraint, parse_constraint
from .decoders import DecoderConfig, MaskedSampler, RejectionSampler, beam_decode, greedy_decode
from .dynprog import ContinuationTable, Infeasible, TableTooLarge, UnboundedConstraint
from .gadget import GADGET_VOCAB, DimacsError, EnumerationLimit, build_gadget, parse_dimacs
from .oracle import (DEFAULT_BUDGET, BudgetExceeded, HorizonRequired, certificate_check, exact_conditional,
                     exact_map, threshold_witness)
from .rng import trial_rngs
from .verify import verify_gadget

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Options loadable from a JSON file with ``--config``; command-line flags win."""

    model: str | None = None
    model_kind: str = "markov"
    constraint: str | None = None
    engine: str | None = None
    beam_width: int | None = None
    max_attempts: int | None = None
    max_steps: int | None = None
    horizon: int | None = None
    trials: int | None = None
    count: int | None = None
    n: int | None = None
    tau: str | None = None
    seed: int | None = None
    budget: int | None = None
    output: str | None = None
    format: str | None = None

    def __post_init__(self):
        if self.model_kind not in ("markov", "dimacs"):
            raise UsageError(f"model_kind must be 'markov' or 'dimacs', not {self.model_kind!r}")
        if self.beam_width is not None and self.engine not in (None, "beam"):
            raise UsageError("beam_width only applies to the beam engine")
        if self.max_attempts is not None and self.engine not in (None, "rejection"):
            raise UsageError("max_attempts only applies to the rejection engine")
        for key in ("beam_width", "max_attempts", "max_steps", "horizon", "trials", "count"):
            value = getattr(self, key)
            if value is not None and value < 1:
                raise UsageError(f"{key} must be >= 1")

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        return cls(**data)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------- inputs


def _apply_config(args) -> None:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.load(args.config)
        for key, value in asdict(cfg).items():
            if value is None or key == "model_kind":
                continue
            if key == "model":
                if args.model is None and args.dimacs is None:
                    setattr(args, "dimacs" if cfg.model_kind == "dimacs" else "model", value)
            elif key == "engine" and hasattr(args, "decoder"):
                if args.decoder is None:
                    args.decoder = value
            elif getattr(args, key, None) is None and hasattr(args, key):
                setattr(args, key, value)
    defaults = {"seed": 0, "budget": DEFAULT_BUDGET, "format": "json", "count": 10, "trials": 10_000,
                "engine": getattr(args, "default_engine", None), "decoder": "masked-ancestral"}
    for key, value in defaults.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def _load_model(args) -> tuple[ArModel, dict]:
    if args.model and args.dimacs:
        raise UsageError("give --model or --dimacs, not both")
    if args.model:
        return load_markov(_read(args.model)), {"model": args.model, "model_kind": "markov"}
    if args.dimacs:
        return build_gadget(parse_dimacs(_read(args.dimacs))), {"model": args.dimacs, "model_kind": "dimacs"}
    raise UsageError("a model is required (--model FILE or --dimacs FILE)")


def _load_constraint(args, model: ArModel, required: bool) -> tuple[ConstraintAutomaton | None, dict]:
    if not args.constraint:
        if required:
            raise UsageError("a constraint file is required (--constraint FILE)")
        return None, {}
    parsed = parse_constraint(_read(args.constraint), model.vocab)
    return compile_constraint(parsed, model.vocab), {"constraint": args.constraint}


def _inputs(args, *extra: dict) -> dict:
    out = {"seed": args.seed, "budget": args.budget}
    for e in extra:
        out.update(e)
    return out


def _need_markov(model: ArModel, engine: str) -> MarkovModel:
    if not isinstance(model, MarkovModel):
        raise UsageError(f"engine {engine!r} needs a Markov model (--model)")
    return model


def _seq(model: ArModel, x) -> str | None:
    return None if x is None else model.vocab.render(x)


# ---------------------------------------------------------------- commands


def cmd_gadget_verify(args) -> tuple[dict, int]:
    formula = parse_dimacs(_read(args.dimacs_path))
    v = verify_gadget(formula, args.budget)
    vocab = GADGET_VOCAB
    res = {
        "num_vars": v.num_vars,
        "num_clauses": v.num_clauses,
        "satisfiable": v.satisfiable,
        "model_count": v.model_count,
        "map_sequence": vocab.render(v.map_sequence),
        "map_decides_sat": v.map_decides_sat,
        "z_length": v.num_vars + 1,
        "z_counts_models": v.z_counts_models,
        "unary_check": v.unary_check,
        "threshold": v.threshold,
        "threshold_witness": None if v.threshold_witness is None else vocab.render(v.threshold_witness),
        "threshold_check": v.threshold_check,
        "certificate_valid": v.certificate_valid,
        "passed": v.passed,
    }
    rep.rational(v.map_probability, "map_probability", res)
    rep.rational(v.z, "z", res)
    rep.rational(v.unary_optimum, "unary_optimum", res)
    rep.rational(v.threshold_tau, "threshold_tau", res)
    res["z_times_2m"] = str(v.z * 2**v.num_vars)
    inputs = _inputs(args, {"dimacs": args.dimacs_path})
    return rep.make_report("gadget-verify", inputs, res), EXIT_OK if v.passed else EXIT_CHECK


def cmd_map(args) -> tuple[dict, int]:
    model, mi = _load_model(args)
    con, ci = _load_constraint(args, model, required=args.engine != "oracle")
    engine = args.engine
    if engine == "oracle":
        found = exact_map(model, args.horizon, con, args.budget)
        seq, prob = (found.sequence, found.probability) if found else (None, None)
    elif engine == "dynprog":
        found = ContinuationTable(_need_markov(model, engine), con).viterbi()
        seq, prob = (found.sequence, found.probability) if found else (None, None)
    else:
        if engine == "greedy":
            out = greedy_decode(model, con, args.max_steps)
        else:
            out = beam_decode(model, con, args.beam_width, args.max_steps)
        seq, prob = out.sequence, out.probability
    if args.check_oracle and engine != "oracle":
        ref = exact_map(model, args.horizon, con, args.budget)
        ref_pair = (ref.sequence, ref.probability) if ref else (None, None)
        if ref_pair != (seq, prob):
            raise CheckFailed(f"oracle MAP {_seq(model, ref_pair[0])} ({ref_pair[1]}) differs from "
                              f"{engine} {_seq(model, seq)} ({prob})")
    res = {"engine": engine, "feasible": seq is not None, "sequence": _seq(model, seq)}
    rep.rational(prob, "probability", res)
    if args.check_oracle:
        res["oracle_checked"] = True
    inputs = _inputs(args, mi, ci, {"horizon": args.horizon})
    return rep.make_report("map", inputs, res), EXIT_OK


def cmd_z(args) -> tuple[dict, int]:
    model, mi = _load_model(args)
    con, ci = _load_constraint(args, model, required=True)
    if args.engine == "dynprog":
        z = ContinuationTable(_need_markov(model, "dynprog"), con).z
    else:
        cond = exact_conditional(model, con, args.horizon, args.budget)
        z = cond.normalizer if cond else Fraction(0)
    if args.check_oracle and args.engine != "oracle":
        cond = exact_conditional(model, con, args.horizon, args.budget)
        ref = cond.normalizer if cond else Fraction(0)
        if ref != z:
            raise CheckFailed(f"oracle Z {ref} differs from dynprog Z {z}")
    res = {"engine": args.engine}
    rep.rational(z, "z", res)
    if args.check_oracle:
        res["oracle_checked"] = True
    return rep.make_report("z", _inputs(args, mi, ci, {"horizon": args.horizon}), res), EXIT_OK


def cmd_sample(args) -> tuple[dict, int]:
    model, mi = _load_model(args)
    engine = args.engine
    con, ci = _load_constraint(args, model, required=engine != "ancestral")
    samples = []
    rngs = trial_rngs(args.seed, args.count)
    if engine == "ancestral":
        steps = args.max_steps or args.horizon
        if steps is None:
            raise UsageError("ancestral sampling needs --max-steps")
        for rng in rngs:
            x = ancestral_sample(model, rng, steps)
            samples.append({"status": "ok" if x else "overflow", "sequence": _seq(model, x)})
    elif engine == "exact":
        table = ContinuationTable(_need_markov(model, engine), con)
        for rng in rngs:
            samples.append({"status": "ok", "sequence": _seq(model, table.sample(rng))})
    elif engine == "rejection":
        sampler = RejectionSampler(model, con, args.max_steps)
        for rng in rngs:
            out = sampler.sample(rng, args.max_attempts or 1000)
            samples.append({"status": out.status, "sequence": _seq(model, out.sequence), "attempts": out.attempts})
    else:
        sampler = MaskedSampler(model, con, args.max_steps)
        for rng in rngs:
            out = sampler.sample(rng)
            samples.append({"status": out.status, "sequence": _seq(model, out.sequence)})
    if args.check_oracle and con is not None:
        cond = exact_conditional(model, con, args.horizon, args.budget)
        support = {model.vocab.render(x) for x, _ in cond.support} if cond else set()
        bad = [s["sequence"] for s in samples if s["sequence"] is not None and s["sequence"] not in support]
        if bad:
            raise CheckFailed(f"sampled sequence {bad[0]!r} is outside the oracle's feasible support")
    res = {"engine": engine, "samples": samples,
           "num_ok": sum(s["status"] == "ok" for s in samples)}
    if args.check_oracle:
        res["oracle_checked"] = True
    inputs = _inputs(args, mi, ci, {"count": args.count, "max_steps": args.max_steps})
    return rep.make_report("sample", inputs, res), EXIT_OK


def bias_result(r: BiasReport) -> dict:
    res = {
        "decoder": r.decoder,
        "reference_engine": r.reference_engine,
        "exact_support_size": r.exact_support_size,
        "samples_requested": r.samples_requested,
        "samples_feasible": r.samples_feasible,
        "dead_ends": r.dead_ends,
        "rejections": r.rejections,
        "exhausted": r.exhausted,
        "kl_empirical_to_exact": r.kl_empirical_to_exact,
        "kl_defined": r.kl_defined,
        "table": [],
    }
    rep.rational(r.z, "z", res)
    rep.rational(r.coverage, "coverage", res)
    rep.rational(r.tv_distance, "tv_distance", res)
    for row in r.table:
        d = {"sequence": row.sequence, "count": row.count}
        rep.rational(row.exact, "exact", d)
        rep.rational(row.empirical, "empirical", d)
        res["table"].append(d)
    return res


def cmd_bias(args) -> tuple[dict, int]:
    model, mi = _load_model(args)
    con, ci = _load_constraint(args, model, required=True)
    kind = args.decoder
    try:
        dec = DecoderConfig(
            kind,
            beam_width=args.beam_width,
            max_attempts=args.max_attempts or (1000 if kind == "rejection" else None),
            max_steps=args.max_steps,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    name = args.name or Path(mi["model"]).stem + "+" + Path(ci["constraint"]).stem
    inst = Instance(name, model, con, args.horizon)
    reference = exact_reference(inst, args.budget)
    if args.check_oracle and reference[2] != "oracle":
        cond = exact_conditional(model, con, args.horizon, args.budget)
        if cond is None or cond.as_dict() != reference[0]:
            raise CheckFailed("dynprog conditional law differs from the oracle's")
    r = run_experiment(inst, dec, args.trials, args.seed, args.budget, reference)
    res = bias_result(r)
    if args.check_oracle:
        res["oracle_checked"] = True
    inputs = _inputs(args, mi, ci, {"instance": name, "trials": args.trials, "horizon": args.horizon})
    return rep.make_report("bias", inputs, res), EXIT_OK


def cmd_threshold(args) -> tuple[dict, int]:
    model, mi = _load_model(args)
    if args.n is None or args.tau is None:
        raise UsageError("threshold needs --n and --tau")
    try:
        tau = Fraction(args.tau)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--tau must be a rational like 1/4, not {args.tau!r}") from None
    witness = threshold_witness(model, args.n, tau, args.horizon, args.budget)
    cert = certificate_check(model, witness, tau) if witness is not None else None
    res = {"n": args.n, "result": witness is not None, "witness": _seq(model, witness),
           "certificate_valid": cert}
    rep.rational(tau, "tau", res)
    if witness is not None:
        rep.rational(sequence_probability(model, witness), "witness_probability", res)
    return rep.make_report("threshold", _inputs(args, mi, {"horizon": args.horizon}), res), EXIT_OK


def cmd_report_check(args) -> tuple[dict | None, int]:
    doc = rep.read_report(_read(args.report_path))
    print(f"ok: {doc['command']} report, schema {doc['schema']} v{doc['version']}")
    return None, EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    shared = _Parser(add_help=False)
    shared.add_argument("--seed", type=int, help="root seed (default 0)")
    shared.add_argument("--budget", type=int, help=f"oracle work budget in visited prefixes (default {DEFAULT_BUDGET})")
    shared.add_argument("--format", choices=("json", "csv"), help="structured JSON report or CSV table")
    shared.add_argument("--output", "-o", help="write the report here instead of stdout")
    shared.add_argument("--config", help="JSON experiment configuration")

    src = _Parser(add_help=False)
    src.add_argument("--model", help="Markov model file")
    src.add_argument("--dimacs", help="DIMACS CNF file; uses the SAT gadget model")
    src.add_argument("--constraint", help="constraint file")
    src.add_argument("--horizon", type=int, help="enumeration horizon for the oracle")
    src.add_argument("--max-steps", dest="max_steps", type=int)
    src.add_argument("--check-oracle", action="store_true", help="cross-check the result with brute-force enumeration")

    p = _Parser(prog="arexact", description="Exact and heuristic constrained inference for autoregressive models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gadget-verify", parents=[shared], help="check the SAT/#SAT gadget identities on a CNF")
    g.add_argument("dimacs_path")
    g.set_defaults(func=cmd_gadget_verify)

    m = sub.add_parser("map", parents=[shared, src], help="most probable (feasible) sequence")
    m.add_argument("--engine", choices=("oracle", "dynprog", "greedy", "beam"))
    m.add_argument("--beam-width", dest="beam_width", type=int)
    m.set_defaults(func=cmd_map, default_engine="oracle")

    z = sub.add_parser("z", parents=[shared, src], help="constrained normalization constant")
    z.add_argument("--engine", choices=("oracle", "dynprog"))
    z.set_defaults(func=cmd_z, default_engine="oracle")

    s = sub.add_parser("sample", parents=[shared, src], help="draw sequences")
    s.add_argument("--engine", choices=("exact", "ancestral", "rejection", "masked-ancestral"))
    s.add_argument("--count", type=int)
    s.add_argument("--max-attempts", dest="max_attempts", type=int)
    s.set_defaults(func=cmd_sample, default_engine="exact")

    b = sub.add_parser("bias", parents=[shared, src], help="empirical law of a decoder vs the exact conditional")
    b.add_argument("--decoder", choices=("greedy", "beam", "rejection", "masked-ancestral", "exact"),
                   help="decoder to measure (default masked-ancestral)")
    b.add_argument("--beam-width", dest="beam_width", type=int)
    b.add_argument("--max-attempts", dest="max_attempts", type=int)
    b.add_argument("--trials", type=int)
    b.add_argument("--name", help="instance name recorded in the report")
    b.set_defaults(func=cmd_bias)

    t = sub.add_parser("threshold", parents=[shared, src], help="MAP-threshold decision with certificate")
    t.add_argument("--n", type=int)
    t.add_argument("--tau")
    t.set_defaults(func=cmd_threshold)

    r = sub.add_parser("report-check", help="validate a report produced by this tool")
    r.add_argument("report_path")
    r.set_defaults(func=cmd_report_check)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command != "report-check":
            _apply_config(args)
        doc, code = args.func(args)
    except UsageError as exc:
        print(f"arexact: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DimacsError, ModelError, ConstraintError, rep.ReportError) as exc:
        print(f"arexact: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, EnumerationLimit, TableTooLarge) as exc:
        print(f"arexact: refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ReferenceUnavailable as exc:
        print(f"arexact: refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET if exc.over_budget else EXIT_USAGE
    except (UnboundedConstraint, HorizonRequired, Infeasible, ValueError) as exc:
        print(f"arexact: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckFailed as exc:
        print(f"arexact: oracle cross-check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    if doc is not None:
        text = rep.to_csv(doc) if args.format == "csv" else rep.dumps(doc)
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        if code == EXIT_CHECK:
            print("arexact: identity check failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
