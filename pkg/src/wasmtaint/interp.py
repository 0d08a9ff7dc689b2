"""Stack-machine interpreter executing the supported wasm subset over
tainted values.

Every runtime value carries a taint label. Numeric opcodes combine labels
per the propagation algebra (comparisons drop taint, unops copy it,
non-comparison binops merge it); loads and stores go through the per-byte
shadow map; locals, globals, and wasm-to-wasm calls carry labels unchanged.
Taint enters from outside through signature overloading: an invocation's
argument list is a numeric prefix matching the signature followed by an
optional suffix of raw label words, one per parameter, surplus words
discarded.

Values are held in canonical form: i32/i64 as unsigned bit patterns, floats
as Python floats with f32 quantized. The interpreter runs two parallel
stacks (values and labels) per frame; control flow runs on jump targets
precomputed by the validator.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    TRAP_OOB,
    TRAP_STACK_EXHAUSTED,
    TRAP_UNREACHABLE,
    LinkError,
    Trap,
)
from .loader import PAGE_SIZE, Module
from .ops import F32, I32, I64, MASK32, MASK64, _f32, opcode_name
from .policy import TaintPolicy, TerminationStatus, TraceSink, check_host_return
from .shadow import ShadowMemory
from .taint import (
    LABEL_BITS,
    PropagationConfig,
    RandomSource,
    TaintMode,
    _combine_prob,
    normalize_label,
)
from .validate import (
    K_BINOP,
    K_BR,
    K_BR_IF,
    K_CALL,
    K_CMP1,
    K_CMP2,
    K_CONST,
    K_DROP,
    K_GLOBAL_GET,
    K_GLOBAL_SET,
    K_GOTO,
    K_IF,
    K_LOAD,
    K_LOCAL_GET,
    K_LOCAL_SET,
    K_LOCAL_TEE,
    K_MEMGROW,
    K_MEMSIZE,
    K_RETURN,
    K_SELECT,
    K_STORE,
    K_UNOP,
    K_UNREACHABLE,
)

MAX_CALL_DEPTH = 400
HARD_MAX_PAGES = 65536  # 4 GiB


@dataclass(frozen=True, slots=True)
class TaintedValue:
    """A wasm numeric value paired with its taint label."""

    type: str  # "i32" | "i64" | "f32" | "f64"
    value: int | float
    taint: int = 0


class _Func:
    __slots__ = ("index", "sig", "nparams", "local_types", "code", "host")

    def __init__(self, index, sig, local_types=(), code=None, host=None):
        self.index = index
        self.sig = sig
        self.nparams = len(sig.params)
        self.local_types = local_types
        self.code = code
        self.host = host


def _coerce_arg(v, t: str, pos: int):
    if t == I32:
        if isinstance(v, float):
            raise TypeError(f"parameter {pos} expects i32, got float")
        return v & MASK32
    if t == I64:
        if isinstance(v, float):
            raise TypeError(f"parameter {pos} expects i64, got float")
        return v & MASK64
    if t == F32:
        return _f32(float(v))
    return float(v)


class Instance:
    """One instantiated module: code, linear memory, shadow map, globals,
    propagation config, RNG state, policy, and trace sink.

    Single-threaded: at most one invocation may be active at a time.
    Closing the instance clears the shadow map; a closed instance cannot be
    invoked.
    """

    def __init__(self, module: Module, config: PropagationConfig, policy: TaintPolicy,
                 funcs: list[_Func], memory: bytearray | None, max_pages: int,
                 trace: TraceSink):
        self.module = module
        self.config = config
        self.policy = policy
        self.rng = RandomSource(config.rng_seed)
        self.memory = memory
        self.max_pages = max_pages
        self.shadow = ShadowMemory()
        self.globals: list[int | float] = [g.init for g in module.globals]
        self.global_taints: list[int] = [0] * len(module.globals)
        self.trace = trace
        self._funcs = funcs
        self._closed = False
        self._depth = 0

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        """Tear down the instance; clears the shadow map exactly once."""
        if not self._closed:
            self._closed = True
            self.shadow.clear()

    @property
    def closed(self) -> bool:
        return self._closed

    def __enter__(self) -> "Instance":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- host boundary -----------------------------------------------------

    def invoke(self, export_name: str, args=()) -> tuple[list[TaintedValue], TerminationStatus]:
        """Call an exported function with signature-overloaded taint.

        ``args`` is the numeric prefix (one entry per parameter) followed by
        an optional taint suffix of raw label words; missing labels mean
        untainted, surplus labels are discarded. Returns the results and the
        policy verdict; traps are reported in the status, leaving memory and
        shadow intact for inspection.
        """
        if self._closed:
            raise RuntimeError("instance is closed")
        ent = self.module.exports.get(export_name)
        if ent is None or ent[0] != "func":
            raise LookupError(f"unknown function export {export_name!r}")
        f = self._funcs[ent[1]]
        params = f.sig.params
        n = len(params)
        if len(args) < n:
            raise TypeError(f"{export_name} takes {n} numeric arguments, got {len(args)}")
        avals = [_coerce_arg(args[i], params[i], i) for i in range(n)]
        cfg = self.config
        ataints = []
        for i in range(n):
            j = n + i
            if j < len(args):
                w = args[j]
                if isinstance(w, float):
                    raise TypeError(f"taint label {i} must be an integer word")
                ataints.append(normalize_label(w, cfg))
            else:
                ataints.append(0)
        self._depth = 0
        try:
            rvals, rtaints = self._call(f, avals, ataints)
        except Trap as trap:
            return [], TerminationStatus.trapped(trap)
        results = [TaintedValue(t, v, tl)
                   for t, v, tl in zip(f.sig.results, rvals, rtaints)]
        status = check_host_return(results, self.policy, cfg, self.trace)
        return results, status

    def memory_grow(self, delta_pages: int) -> int:
        """Grow linear memory; returns the previous page count or -1 when
        growth exceeds the limit. The shadow map needs no resizing."""
        mem = self.memory
        if mem is None:
            return -1
        old = len(mem) // PAGE_SIZE
        if old + delta_pages > self.max_pages:
            return -1
        mem.extend(bytes(delta_pages * PAGE_SIZE))
        return old

    def dump_shadow(self) -> None:
        """Write the sorted (address, label) pairs into the trace stream."""
        self.trace.shadow_dump(self.shadow.dump())

    # -- execution ---------------------------------------------------------

    def _call(self, f: _Func, avals: list, ataints: list) -> tuple[list, list]:
        if f.host is not None:
            return self._call_host(f, avals, ataints)
        if self._depth >= MAX_CALL_DEPTH:
            raise Trap(TRAP_STACK_EXHAUSTED)
        self._depth += 1
        try:
            for t in f.local_types:
                avals.append(0 if (t == I32 or t == I64) else 0.0)
                ataints.append(0)
            return self._run(f, avals, ataints)
        finally:
            self._depth -= 1

    def _call_host(self, f: _Func, avals: list, ataints: list) -> tuple[list, list]:
        targs = [TaintedValue(t, v, tl)
                 for t, v, tl in zip(f.sig.params, avals, ataints)]
        res = f.host(targs)
        if res is None:
            res = []
        elif isinstance(res, TaintedValue):
            res = [res]
        if len(res) != len(f.sig.results):
            raise LinkError(
                f"host function returned {len(res)} values, signature has {len(f.sig.results)}")
        rvals, rtaints = [], []
        cfg = self.config
        for tv, t in zip(res, f.sig.results):
            if tv.type != t:
                raise LinkError(f"host function returned {tv.type}, signature wants {t}")
            rvals.append(_coerce_arg(tv.value, t, 0))
            rtaints.append(normalize_label(tv.taint, cfg))
        return rvals, rtaints

    def _run(self, f: _Func, lvals: list, ltaints: list) -> tuple[list, list]:
        code = f.code
        mem = self.memory
        shadow = self.shadow
        shadow_entries = shadow.entries
        cfg = self.config
        basic = cfg.mode is TaintMode.BASIC
        shift = LABEL_BITS - cfg.probability_bits
        topm = cfg.max_numerator
        draw = self.rng.draw
        funcs = self._funcs
        gvals = self.globals
        gtaints = self.global_taints
        tr = self.trace if (self.trace.full and self.trace.stream is not None) else None

        vs: list = []  # value stack
        ts: list = []  # taint stack
        pc = 0
        off = 0
        try:
            while True:
                k, a, b, off, opc = code[pc]
                pc += 1
                if k == K_LOCAL_GET:
                    vs.append(lvals[a])
                    ts.append(ltaints[a])
                    if tr:
                        tr.op(f.index, off, "local.get", [], ts[-1])
                elif k == K_CONST:
                    vs.append(a)
                    ts.append(0)
                    if tr:
                        tr.op(f.index, off, opcode_name(opc), [], 0)
                elif k == K_BINOP:
                    y = vs.pop()
                    t2 = ts.pop()
                    x = vs[-1]
                    t1 = ts[-1]
                    vs[-1] = a(x, y)
                    if basic:
                        ts[-1] = t1 | t2
                    elif t1 | t2:
                        ts[-1] = _combine_prob(t1, t2, shift, topm, draw)
                    else:
                        ts[-1] = 0
                    if tr:
                        tr.op(f.index, off, opcode_name(opc), [t1, t2], ts[-1])
                elif k == K_UNOP:
                    vs[-1] = a(vs[-1])
                    # taint passes through unchanged
                    if tr:
                        tr.op(f.index, off, opcode_name(opc), [ts[-1]], ts[-1])
                elif k == K_CMP2:
                    y = vs.pop()
                    t2 = ts.pop()
                    vs[-1] = a(vs[-1], y)
                    t1 = ts[-1]
                    ts[-1] = 0
                    if tr:
                        tr.op(f.index, off, opcode_name(opc), [t1, t2], 0)
                elif k == K_CMP1:
                    vs[-1] = a(vs[-1])
                    t1 = ts[-1]
                    ts[-1] = 0
                    if tr:
                        tr.op(f.index, off, opcode_name(opc), [t1], 0)
                elif k == K_LOCAL_TEE:
                    lvals[a] = vs[-1]
                    ltaints[a] = ts[-1]
                    if tr:
                        tr.op(f.index, off, "local.tee", [ts[-1]], ts[-1])
                elif k == K_LOCAL_SET:
                    lvals[a] = vs.pop()
                    ltaints[a] = ts.pop()
                    if tr:
                        tr.op(f.index, off, "local.set", [ltaints[a]], None)
                elif k == K_BR_IF:
                    c = vs.pop()
                    ts.pop()  # condition taint is not control-propagated
                    if tr:
                        tr.op(f.index, off, "br_if", [], None)
                    if c:
                        h, keep = b
                        if len(vs) > h + keep:
                            del vs[h:len(vs) - keep]
                            del ts[h:len(ts) - keep]
                        pc = a
                elif k == K_IF:
                    c = vs.pop()
                    ts.pop()
                    if tr:
                        tr.op(f.index, off, "if", [], None)
                    if not c:
                        pc = a
                elif k == K_GOTO:
                    pc = a
                elif k == K_BR:
                    h, keep = b
                    if len(vs) > h + keep:
                        del vs[h:len(vs) - keep]
                        del ts[h:len(ts) - keep]
                    pc = a
                    if tr:
                        tr.op(f.index, off, "br", [], None)
                elif k == K_LOAD:
                    w, fn = a
                    ea = vs[-1] + b
                    if ea + w > len(mem):
                        raise Trap(TRAP_OOB, off, f.index)
                    vs[-1] = fn(mem, ea)
                    # address taint is indirect flow: dropped, not merged
                    tl = shadow.read_range(ea, w, cfg) if shadow_entries else 0
                    ts[-1] = tl
                    if tr:
                        tr.op(f.index, off, opcode_name(opc), [], tl)
                        tr.memory_taint(f.index, off, opcode_name(opc), ea, w, tl)
                elif k == K_STORE:
                    w, fn = a
                    v = vs.pop()
                    tv = ts.pop()
                    ea = vs.pop() + b
                    ts.pop()
                    if ea + w > len(mem):
                        raise Trap(TRAP_OOB, off, f.index)
                    fn(mem, ea, v)
                    if tv or shadow_entries:
                        shadow.taint_range(ea, w, tv)
                    if tr:
                        tr.op(f.index, off, opcode_name(opc), [tv], None)
                        tr.memory_taint(f.index, off, opcode_name(opc), ea, w, tv)
                elif k == K_CALL:
                    g = funcs[a]
                    np = g.nparams
                    if np:
                        cut = len(vs) - np
                        avals = vs[cut:]
                        del vs[cut:]
                        ataints = ts[cut:]
                        del ts[cut:]
                    else:
                        avals = []
                        ataints = []
                    if tr:
                        tr.call(f.index, off, a)
                    rv, rt = self._call(g, avals, ataints)
                    vs.extend(rv)
                    ts.extend(rt)
                elif k == K_RETURN:
                    if a == 0:
                        rv, rt = [], []
                    else:
                        rv = vs[-a:]
                        rt = ts[-a:]
                    if tr:
                        tr.ret(f.index, rt)
                    return rv, rt
                elif k == K_SELECT:
                    c = vs.pop()
                    ts.pop()  # condition taint dropped
                    v2 = vs.pop()
                    t2 = ts.pop()
                    if not c:
                        vs[-1] = v2
                        ts[-1] = t2
                    if tr:
                        tr.op(f.index, off, "select", [ts[-1]], ts[-1])
                elif k == K_DROP:
                    vs.pop()
                    ts.pop()
                    if tr:
                        tr.op(f.index, off, "drop", [], None)
                elif k == K_GLOBAL_GET:
                    vs.append(gvals[a])
                    ts.append(gtaints[a])
                    if tr:
                        tr.op(f.index, off, "global.get", [], ts[-1])
                elif k == K_GLOBAL_SET:
                    gvals[a] = vs.pop()
                    gtaints[a] = ts.pop()
                    if tr:
                        tr.op(f.index, off, "global.set", [gtaints[a]], None)
                elif k == K_MEMSIZE:
                    vs.append(len(mem) // PAGE_SIZE)
                    ts.append(0)
                    if tr:
                        tr.op(f.index, off, "memory.size", [], 0)
                elif k == K_MEMGROW:
                    delta = vs[-1]
                    old = self.memory_grow(delta)
                    vs[-1] = old & MASK32
                    ts[-1] = 0
                    if tr:
                        tr.op(f.index, off, "memory.grow", [], 0)
                elif k == K_UNREACHABLE:
                    raise Trap(TRAP_UNREACHABLE, off, f.index)
                else:  # pragma: no cover - kinds are exhaustive
                    raise AssertionError(f"bad exec kind {k}")
        except Trap as trap:
            if trap.offset is None:
                trap.offset = off
                trap.func_index = f.index
            raise


def instantiate(module: Module, config: PropagationConfig | None = None,
                policy: TaintPolicy | None = None, host=None,
                trace: TraceSink | None = None) -> Instance:
    """Build an executable instance of a validated module.

    ``host`` maps (module name, field name) to a callable taking a list of
    :class:`TaintedValue` and returning the declared results. Memory is
    allocated at its initial size and data segments are copied in untainted;
    globals initialize untainted; the start function, if any, runs last.
    """
    config = config or PropagationConfig()
    policy = policy or TaintPolicy()
    trace = trace or TraceSink(level=policy.log_level)
    host = host or {}

    funcs: list[_Func] = []
    for i, (mod_name, field_name, sig) in enumerate(module.imports):
        fn = host.get((mod_name, field_name))
        if fn is None:
            raise LinkError(f"unresolved import {mod_name}.{field_name} {sig}")
        funcs.append(_Func(i, sig, host=fn))
    nimp = len(module.imports)
    for i, body in enumerate(module.functions):
        if body.exec_code is None:
            raise ValueError("module has not been validated")
        sig = module.types[body.type_index]
        funcs.append(_Func(nimp + i, sig, body.locals, body.exec_code))

    memory = None
    max_pages = 0
    if module.memories:
        spec = module.memories[0]
        memory = bytearray(spec.initial_pages * PAGE_SIZE)
        max_pages = min(spec.max_pages if spec.max_pages is not None else HARD_MAX_PAGES,
                        HARD_MAX_PAGES)

    inst = Instance(module, config, policy, funcs, memory, max_pages, trace)

    for offset, data in module.data_segments:
        if memory is None or offset + len(data) > len(memory):
            raise LinkError(f"data segment [{offset}, {offset + len(data)}) out of bounds")
        memory[offset:offset + len(data)] = data

    if module.start is not None:
        try:
            inst._call(funcs[module.start], [], [])
        except Trap as trap:
            raise LinkError(f"start function trapped: {trap}") from trap
    return inst


# Spec-shaped free functions over the instance methods.

def invoke(inst: Instance, export_name: str, args=()):
    return inst.invoke(export_name, args)


def memory_grow(inst: Instance, delta_pages: int) -> int:
    return inst.memory_grow(delta_pages)
