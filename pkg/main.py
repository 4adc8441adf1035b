import argparse
import io
import json
import logging
import os
import random
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError

from engine import DEFAULT_EPS, bd_fixpoint, distinguishing_formula, eval_formula, logical_distance, partition_refinement
from formulas import format_formula, parse_formula
from generators import random_coalgebra
from harness import SUITE_NAMES, fig1_document, run_suite
from models import ConfigError, DistanceMatrixDocument, InputError, QhmError, RunConfig, StructuralError
from quantale import q_check_k_decomp, q_validate, quantale_by_name, quantale_from_descriptor
from result_cache import ResultCache
from systems import Coalgebra, dump_coalgebra, load_coalgebra, parse_functor, validate_coalgebra
from vcat import validate_vcat, vcat_from_document

load_dotenv()

logger = logging.getLogger(__name__)

COMMANDS = ("validate", "bd", "ld", "distinguish", "eval", "bisim", "check", "gen")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qhm",
        description="Behavioural distances, quantitative modal logic and Stone-Weierstraß checks on finite coalgebras.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("suite", nargs="?", help=f"suite for 'check': {', '.join(SUITE_NAMES)}")
    parser.add_argument("--in", dest="inputs", action="append", default=[], help="input JSON document")
    parser.add_argument("--quantale")
    parser.add_argument("--functor")
    parser.add_argument("--backend", default="lp", choices=("lp", "enum"))
    parser.add_argument("--eps", default=str(DEFAULT_EPS))
    parser.add_argument("--grid", default="1/16", help="value grid for enumerated lifted distances")
    parser.add_argument("--formula-grid", dest="formula_grid", default="1/8",
                        help="value grid for formula constants in ld and distinguish")
    parser.add_argument("--depth", type=int, default=2)
    parser.add_argument("--width", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trials", type=int, default=50)
    parser.add_argument("--states", type=int, default=4)
    parser.add_argument("--op", dest="closure_op", default="id")
    parser.add_argument("--formula")
    parser.add_argument("--pair", nargs=2)
    parser.add_argument("--budget", type=int, default=5000)
    parser.add_argument("--max-iter", dest="max_iter", type=int, default=1000)
    parser.add_argument("--epsilon", default="1/10", help="ε for the fig1 template")
    parser.add_argument("--format", dest="output_format", default="json", choices=("json", "csv"))
    parser.add_argument("--out")
    parser.add_argument("--replay", type=int)
    parser.add_argument("--log-level", default=os.getenv("LOG_LEVEL", "INFO"))
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {key: value for key, value in vars(args).items() if key != "log_level"}
    values["max_states"] = int(os.getenv("QHM_MAX_STATES", "64"))
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError("Invalid run configuration", witness=[err["msg"] for err in e.errors()])


# Input

def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"Input file {path} does not exist")
    except json.JSONDecodeError as e:
        raise StructuralError(f"Input file {path} is not valid JSON: {e.msg}", witness=[e.lineno, e.colno])


def _single_input(config: RunConfig) -> Any:
    if len(config.inputs) != 1:
        raise ConfigError(f"'{config.command}' needs exactly one --in document")
    return _read_json(config.inputs[0])


def load_input_coalgebra(config: RunConfig) -> Coalgebra:
    raw = _single_input(config)
    if isinstance(raw, dict) and raw.get("template") == "fig1":
        raw = fig1_document(config.epsilon)
    return load_coalgebra(raw, max_states=config.max_states)


# Commands

def cmd_validate(config: RunConfig) -> Dict[str, Any]:
    if not config.inputs:
        if not config.quantale:
            raise ConfigError("'validate' needs --in or --quantale")
        q = quantale_by_name(config.quantale)
        report = q_validate(q).model_dump()
        if q.is_finite and len(q.elements()) <= 8:
            report["k_decomposition"] = q_check_k_decomp(q).model_dump()
        return report
    raw = _single_input(config)
    if "functor" in raw:
        if raw.get("template") == "fig1":
            raw = fig1_document(config.epsilon)
        c = load_coalgebra(raw, max_states=config.max_states)
        return validate_coalgebra(c, config.backend, config.grid).model_dump()
    if "matrix" in raw:
        return validate_vcat(vcat_from_document(raw)).model_dump()
    q = quantale_from_descriptor(raw, validate=False)
    return q_validate(q).model_dump()


def cmd_bd(config: RunConfig, cache: Optional[ResultCache] = None) -> DistanceMatrixDocument:
    c = load_input_coalgebra(config)
    cache = cache or ResultCache()
    params = {"backend": config.backend, "eps": str(config.eps), "grid": str(config.grid), "max_iter": config.max_iter}

    def compute() -> DistanceMatrixDocument:
        return bd_fixpoint(c, backend=config.backend, eps=config.eps, max_iter=config.max_iter,
                           grid=config.grid).to_document()

    return cache.cached_distance(dump_coalgebra(c), params, compute)


def cmd_ld(config: RunConfig) -> Dict[str, Any]:
    c = load_input_coalgebra(config)
    matrix, basis = logical_distance(c, depth=config.depth, width=config.width, grid=config.formula_grid)
    return {
        "matrix": matrix.to_document().model_dump(),
        "basis": [format_formula(phi, c.quantale) for phi in basis],
    }


def cmd_distinguish(config: RunConfig) -> Dict[str, Any]:
    if not config.pair:
        raise ConfigError("'distinguish' needs --pair X Y")
    c = load_input_coalgebra(config)
    x, y = config.pair
    formula, gap = distinguishing_formula(c, x, y, budget=config.budget, depth=config.depth, width=config.width,
                                        grid=config.formula_grid)
    return {
        "states": [x, y],
        "formula": format_formula(formula, c.quantale),
        "depth": formula.depth,
        "gap": c.quantale.render_value(gap),
    }


def cmd_eval(config: RunConfig) -> Dict[str, Any]:
    if not config.formula:
        raise ConfigError("'eval' needs --formula")
    c = load_input_coalgebra(config)
    q = c.quantale
    predicate = eval_formula(parse_formula(config.formula, q), c)
    return {
        "formula": config.formula,
        "values": {state: q.render_value(u) for state, u in zip(c.states, predicate.values)},
        "nonexpansive": predicate.nonexpansive,
    }


def cmd_bisim(config: RunConfig) -> Dict[str, Any]:
    c = load_input_coalgebra(config)
    return {"classes": partition_refinement(c)}


def cmd_check(config: RunConfig) -> Dict[str, Any]:
    if not config.suite:
        raise ConfigError(f"'check' needs a suite: {', '.join(SUITE_NAMES)}")
    return run_suite(config).model_dump()


def cmd_gen(config: RunConfig) -> Dict[str, Any]:
    if not config.functor:
        raise ConfigError("'gen' needs --functor")
    if config.states < 1 or config.states > config.max_states:
        raise ConfigError(f"--states must lie in 1..{config.max_states}")
    c = random_coalgebra(parse_functor(config.functor), config.states, random.Random(config.seed))
    return dump_coalgebra(c)


HANDLERS = {
    "validate": cmd_validate,
    "bd": cmd_bd,
    "ld": cmd_ld,
    "distinguish": cmd_distinguish,
    "eval": cmd_eval,
    "bisim": cmd_bisim,
    "check": cmd_check,
    "gen": cmd_gen,
}


# Output

def _matrix_frame(document: Dict[str, Any]) -> pd.DataFrame:
    return pd.DataFrame(document["matrix"], index=document["states"], columns=document["states"])


def render(result: Any, output_format: str) -> str:
    if hasattr(result, "model_dump"):
        result = result.model_dump()
    if output_format == "csv":
        document = result.get("matrix") if isinstance(result.get("matrix"), dict) else result
        if "states" not in document:
            raise ConfigError("CSV output is available for distance matrices only")
        buffer = io.StringIO()
        _matrix_frame(document).to_csv(buffer)
        return buffer.getvalue()
    return json.dumps(result, indent=2, sort_keys=True, default=str) + "\n"


def _passed(result: Any) -> bool:
    if isinstance(result, dict):
        for key in ("passed", "valid"):
            if key in result:
                return bool(result[key])
    return True


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO), stream=sys.stderr)
    try:
        config = build_config(args)
        result = HANDLERS[config.command](config)
        text = render(result, config.output_format)
    except ConfigError as e:
        logger.error(f"Configuration error: {e.detail}")
        print(json.dumps(e.to_payload(), sort_keys=True), file=sys.stderr)
        return 2
    except QhmError as e:
        logger.error(f"{args.command} failed: {e.detail}")
        print(json.dumps(e.to_payload(), sort_keys=True, default=str), file=sys.stderr)
        return 1
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0 if _passed(result if isinstance(result, dict) else result.model_dump()) else 1


if __name__ == "__main__":
    raise SystemExit(main())
