"""Command-line front end: run modules with taint, or run the benchmark
harnesses.

Exit codes: 0 completed, 1 file/usage error, 2 decode/validate/link or call
setup error, 3 policy termination, 4 trap.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import ExitStack

from . import bench
from .errors import DecodeError, LinkError, ValidationError
from .interp import instantiate
from .loader import Module, decode_module
from .ops import F32, F64, I32, I64
from .policy import LogLevel, TaintPolicy, TraceSink
from .taint import PropagationConfig, TaintMode
from .validate import validate_subset

EXIT_FILE_ERROR = 1
EXIT_MODULE_ERROR = 2


def _load(path: str) -> Module:
    with open(path, "rb") as fh:
        data = fh.read()
    return validate_subset(decode_module(data))


def _parse_numeric(text: str, t: str, pos: int):
    try:
        if t in (I32, I64):
            return int(text, 0)
        return float(text)
    except ValueError:
        raise ValueError(f"argument {pos} must be a {t} literal, got {text!r}") from None


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _make_config(args) -> PropagationConfig:
    mode = TaintMode.PROBABILISTIC if args.mode == "prob" else TaintMode.BASIC
    return PropagationConfig(mode, args.prob_bits, args.seed)


def cmd_run(args) -> int:
    module = _load(args.module)
    ent = module.exports.get(args.export)
    if ent is None or ent[0] != "func":
        print(f"error: no function export {args.export!r}", file=sys.stderr)
        return EXIT_MODULE_ERROR
    sig = module.signature_of(ent[1])
    if len(args.args) != len(sig.params):
        print(f"error: {args.export} takes {len(sig.params)} arguments, "
              f"got {len(args.args)}", file=sys.stderr)
        return EXIT_MODULE_ERROR
    call_args = [_parse_numeric(text, t, i)
                 for i, (text, t) in enumerate(zip(args.args, sig.params))]
    call_args += args.taints

    policy = TaintPolicy(args.policy, LogLevel.FULL if args.log == "full"
                         else LogLevel.RETURNS_ONLY)
    with ExitStack() as stack:
        stream = None
        if args.trace == "-":
            stream = sys.stderr
        elif args.trace:
            stream = stack.enter_context(open(args.trace, "w"))
        sink = TraceSink(stream, policy.log_level)
        inst = instantiate(module, _make_config(args), policy, trace=sink)
        stack.callback(inst.close)
        results, status = inst.invoke(args.export, call_args)
        for i, r in enumerate(results):
            print(f"result[{i}] = {_format_value(r.value)} : {r.type} taint 0x{r.taint:x}")
        if args.dump_shadow:
            inst.dump_shadow()
        _report_status(status)
        return status.exit_code


def _report_status(status) -> None:
    from .policy import Outcome
    if status.outcome is Outcome.COMPLETED:
        print("status: completed", file=sys.stderr)
    elif status.outcome is Outcome.POLICY_TERMINATED:
        print(f"status: policy terminated (flags 0x{status.violating_flags:x})",
              file=sys.stderr)
    else:
        where = f" in function {status.trap_func}" if status.trap_func is not None else ""
        at = f" at offset {status.trap_offset}" if status.trap_offset is not None else ""
        print(f"status: trapped: {status.trap_kind}{where}{at}", file=sys.stderr)


def _out_stream(stack: ExitStack, path: str | None):
    if path and path != "-":
        return stack.enter_context(open(path, "w"))
    return sys.stdout


def cmd_bench_overhead(args) -> int:
    module = _load(args.module) if args.module else _fixture_module("args100.wasm")
    types = [args.type] if args.type != "all" else [I32, I64, F32, F64]
    with ExitStack() as stack:
        out = _out_stream(stack, args.out)
        for t in types:
            point = bench.overhead(module, t, args.iterations, seed=args.seed)
            out.write(json.dumps(point.as_record()) + "\n")
    return 0


def cmd_bench_lifetime(args) -> int:
    module = _load(args.module) if args.module else _fixture_module("hash.wasm")
    report = bench.lifetime(
        module, export=args.export, probability_bits=args.prob_bits,
        stride=args.stride, iterations=args.iterations, seed=args.seed,
        flags=args.flags)
    with ExitStack() as stack:
        report.to_csv(_out_stream(stack, args.out))
    return 0


def cmd_bench_chain(args) -> int:
    survival = bench.chain_survival(
        args.steps, args.prob, args.iterations,
        probability_bits=args.prob_bits, seed=args.seed)
    record = {
        "steps": args.steps,
        "p": args.prob,
        "iterations": args.iterations,
        "survival": survival,
        "expected": args.prob ** args.steps,
    }
    print(json.dumps(record))
    return 0


def cmd_bench_kernels(args) -> int:
    points = bench.kernels(
        _fixture_module("factorial.wasm"),
        _fixture_module("hash.wasm"),
        _fixture_module("memfill.wasm"),
        args.iterations)
    for point in points:
        print(json.dumps(point.as_record()))
    return 0


def _fixture_module(name: str) -> Module:
    return validate_subset(decode_module(bench.fixture_bytes(name)))


def _label_word(text: str) -> int:
    return int(text, 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wasmtaint",
        description="Run WebAssembly modules under dynamic taint tracking.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one exported function")
    run.add_argument("module", help="path to a .wasm file")
    run.add_argument("export", help="name of the exported function")
    run.add_argument("args", nargs="*", help="numeric arguments (use -- before negatives)")
    run.add_argument("--taints", nargs="*", type=_label_word, default=[],
                     metavar="WORD", help="taint labels per parameter; extras discarded")
    run.add_argument("--mode", choices=["basic", "prob"], default="basic")
    run.add_argument("--prob-bits", type=int, default=8)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--policy", type=_label_word, default=0,
                     metavar="MASK", help="terminate when returned flags hit this mask")
    run.add_argument("--log", choices=["returns", "full"], default="returns")
    run.add_argument("--trace", metavar="PATH", help="JSON-lines trace file ('-' = stderr)")
    run.add_argument("--dump-shadow", action="store_true",
                     help="append shadow map contents to the trace after the run")
    run.set_defaults(fn=cmd_run)

    b = sub.add_parser("bench", help="benchmark harnesses")
    bsub = b.add_subparsers(dest="bench_command", required=True)

    ov = bsub.add_parser("overhead", help="taint-suffix cost on 100-argument no-ops")
    ov.add_argument("--module", help="override the packaged args100.wasm")
    ov.add_argument("--type", choices=[I32, I64, F32, F64, "all"], default="all")
    ov.add_argument("--iterations", type=int, default=2000)
    ov.add_argument("--seed", type=int, default=0)
    ov.add_argument("--out", metavar="PATH")
    ov.set_defaults(fn=cmd_bench_overhead)

    lt = bsub.add_parser("lifetime", help="taint survival through the hash kernel")
    lt.add_argument("--module", help="override the packaged hash.wasm")
    lt.add_argument("--export", default="hash")
    lt.add_argument("--stride", type=int, default=1,
                    help="numerator grid stride (1 = every probability)")
    lt.add_argument("--iterations", type=int, default=100_000)
    lt.add_argument("--seed", type=int, default=0)
    lt.add_argument("--prob-bits", type=int, default=8)
    lt.add_argument("--flags", type=_label_word, default=0x1)
    lt.add_argument("--out", metavar="PATH", help="CSV output (default stdout)")
    lt.set_defaults(fn=cmd_bench_lifetime)

    ch = bsub.add_parser("chain", help="synthetic chain with closed-form expectation")
    ch.add_argument("--steps", type=int, required=True)
    ch.add_argument("--prob", type=float, required=True)
    ch.add_argument("--iterations", type=int, default=100_000)
    ch.add_argument("--seed", type=int, default=0)
    ch.add_argument("--prob-bits", type=int, default=8)
    ch.set_defaults(fn=cmd_bench_chain)

    kn = bsub.add_parser("kernels", help="tainted vs untainted timing on fixture kernels")
    kn.add_argument("--iterations", type=int, default=200)
    kn.set_defaults(fn=cmd_bench_kernels)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FILE_ERROR
    except (DecodeError, ValidationError, LinkError, LookupError, TypeError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MODULE_ERROR


if __name__ == "__main__":
    sys.exit(main())
