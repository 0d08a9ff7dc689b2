"""Benchmark harnesses: taint-injection overhead, probabilistic taint
lifetime through the hash kernel, and the analytic synthetic chain.

All harnesses are deterministic given a seed: grid points derive their
instance seed as ``seed + point_index`` and their input stream from the
point's numerator, so reports are reproducible bit for bit regardless of
how points might be scheduled.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from importlib import resources

from .interp import instantiate
from .loader import Module
from .ops import F32, F64, I32, I64
from .taint import LABEL_BITS, PropagationConfig, RandomSource, TaintMode, propagate_binop


def fixture_bytes(name: str) -> bytes:
    """Read a packaged fixture module (e.g. ``hash.wasm``)."""
    return (resources.files("wasmtaint") / "fixtures" / name).read_bytes()


@dataclass(frozen=True)
class LifetimePoint:
    m: int           # probability numerator
    p: float         # m / (2**n - 1)
    iterations: int
    tainted: int     # outputs that kept nonzero flags
    fraction: float  # tainted / iterations, exact


@dataclass
class LifetimeReport:
    probability_bits: int
    iterations: int
    seed: int
    points: list[LifetimePoint]

    def to_csv(self, stream) -> None:
        stream.write("m,p,iterations,tainted,fraction\n")
        for pt in self.points:
            stream.write(f"{pt.m},{pt.p!r},{pt.iterations},{pt.tainted},{pt.fraction!r}\n")


def lifetime(module: Module, *, export: str = "hash", probability_bits: int = 8,
             stride: int = 1, iterations: int = 100_000, seed: int = 0,
             flags: int = 0x1) -> LifetimeReport:
    """Fraction of outputs that keep taint flags, per propagation
    probability.

    Runs ``export`` on random inputs whose argument carries ``flags`` with
    probability m/(2**n - 1), for every numerator m on the stride grid (the
    top numerator is always included so the p=1 endpoint is present).
    """
    top = (1 << probability_bits) - 1
    grid = list(range(0, top + 1, max(1, stride)))
    if grid[-1] != top:
        grid.append(top)
    shift = LABEL_BITS - probability_bits
    points = []
    for index, m in enumerate(grid):
        cfg = PropagationConfig(TaintMode.PROBABILISTIC, probability_bits, seed + index)
        inst = instantiate(module, cfg)
        label = (m << shift) | flags
        inputs = random.Random(seed * 1000003 + m)
        tainted = 0
        for _ in range(iterations):
            results, status = inst.invoke(export, [inputs.getrandbits(32), label])
            if not status:
                raise RuntimeError(f"benchmark function failed: {status}")
            if results[0].taint:
                tainted += 1
        inst.close()
        points.append(LifetimePoint(m, m / top, iterations, tainted, tainted / iterations))
    return LifetimeReport(probability_bits, iterations, seed, points)


def chain_survival(steps: int, p: float, iterations: int = 100_000, *,
                   probability_bits: int = 8, seed: int = 0, flags: int = 0x1) -> float:
    """Survival fraction of a taint pushed through ``steps`` sequential
    binary operations against fresh untainted operands.

    Each step keeps the taint alive with probability p, so the closed-form
    expectation is p**steps.
    """
    cfg = PropagationConfig(TaintMode.PROBABILISTIC, probability_bits, seed)
    rng = RandomSource(seed)
    m = round(p * cfg.max_numerator)
    start = ((m << (LABEL_BITS - probability_bits)) | flags) if flags else 0
    survived = 0
    for _ in range(iterations):
        label = start
        remaining = steps
        while remaining and label:
            label = propagate_binop(label, 0, False, cfg, rng)
            remaining -= 1
        if label:
            survived += 1
    return survived / iterations


@dataclass(frozen=True)
class OverheadPoint:
    value_type: str
    arg_count: int
    iterations: int
    untainted_ns_per_call: float
    tainted_ns_per_call: float
    ratio: float

    def as_record(self) -> dict:
        return {
            "type": self.value_type,
            "args": self.arg_count,
            "iterations": self.iterations,
            "untainted_ns_per_call": round(self.untainted_ns_per_call, 1),
            "tainted_ns_per_call": round(self.tainted_ns_per_call, 1),
            "ratio": round(self.ratio, 4),
        }


_OVERHEAD_ARGS = {
    I32: lambda n: list(range(n)),
    I64: lambda n: [i << 32 for i in range(n)],
    F32: lambda n: [float(i) for i in range(n)],
    F64: lambda n: [i * 0.5 for i in range(n)],
}


def _time_invokes(inst, export: str, args: list, iterations: int) -> float:
    invoke = inst.invoke
    warmup = max(1, iterations // 10)
    for _ in range(warmup):
        invoke(export, args)
    t0 = time.perf_counter()
    for _ in range(iterations):
        invoke(export, args)
    return (time.perf_counter() - t0) / iterations * 1e9


def overhead(module: Module, value_type: str = I32, iterations: int = 2000,
             arg_count: int = 100, seed: int = 0) -> OverheadPoint:
    """Cost of passing a full taint suffix to a ``arg_count``-parameter
    no-op, versus passing no suffix at all."""
    cfg = PropagationConfig(rng_seed=seed)
    inst = instantiate(module, cfg)
    export = f"noop_{value_type}"
    plain = _OVERHEAD_ARGS[value_type](arg_count)
    labels = [(i % 31) + 1 for i in range(arg_count)]
    bare = _time_invokes(inst, export, plain, iterations)
    tainted = _time_invokes(inst, export, plain + labels, iterations)
    inst.close()
    return OverheadPoint(value_type, arg_count, iterations, bare, tainted, tainted / bare)


@dataclass(frozen=True)
class KernelPoint:
    name: str
    iterations: int
    untainted_ns_per_call: float
    tainted_ns_per_call: float
    ratio: float

    def as_record(self) -> dict:
        return {
            "kernel": self.name,
            "iterations": self.iterations,
            "untainted_ns_per_call": round(self.untainted_ns_per_call, 1),
            "tainted_ns_per_call": round(self.tainted_ns_per_call, 1),
            "ratio": round(self.ratio, 4),
        }


def kernels(factorial: Module, hash_module: Module, memfill: Module,
            iterations: int = 200) -> list[KernelPoint]:
    """Tainted-vs-untainted timing over the three fixture kernels."""
    out = []
    cases = [
        ("factorial", factorial, "fac", [12], [12, 0x1]),
        ("hash", hash_module, "hash", [0xDEADBEEF], [0xDEADBEEF, 0x1]),
        ("memfill", memfill, "fill", [64, 256, 7], [64, 256, 7, 0, 0, 0x2]),
    ]
    for name, module, export, plain, tainted_args in cases:
        inst = instantiate(module, PropagationConfig())
        bare = _time_invokes(inst, export, plain, iterations)
        tainted = _time_invokes(inst, export, tainted_args, iterations)
        inst.close()
        out.append(KernelPoint(name, iterations, bare, tainted, tainted / bare))
    return out
