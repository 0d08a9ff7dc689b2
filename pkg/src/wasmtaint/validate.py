"""Subset validation and body compilation.

Every function body is type-checked with the standard wasm algorithm
(operand stack of value types, control stack with unreachable polymorphism)
and, in the same pass, flattened into an executable form: structured control
is resolved to absolute jump targets with precomputed unwind heights, so the
interpreter needs no runtime label stack. Opcodes outside the supported
subset are rejected here with the opcode byte and function index.
"""

from __future__ import annotations

from .errors import ValidationError
from .loader import FunctionBody, FunctionSignature, Module
from .ops import BINOP, CMP1, CMP2, CONST_TYPES, I32, LOADS, OPS, STORES, UNOP

# Executable instruction kinds. An exec instruction is the tuple
# (kind, a, b, source byte offset, original opcode).
K_UNREACHABLE = 0
K_IF = 1          # a = jump target when condition is zero
K_GOTO = 2        # a = jump target
K_BR = 3          # a = jump target, b = (unwind height, values kept)
K_BR_IF = 4       # like K_BR, conditional on popped i32
K_RETURN = 5      # a = result arity
K_CALL = 6        # a = function index
K_DROP = 7
K_SELECT = 8
K_LOCAL_GET = 9   # a = local index
K_LOCAL_SET = 10
K_LOCAL_TEE = 11
K_GLOBAL_GET = 12
K_GLOBAL_SET = 13
K_CONST = 14      # a = value
K_CMP1 = 15       # a = value function
K_CMP2 = 16
K_UNOP = 17
K_BINOP = 18
K_LOAD = 19       # a = (width, load fn), b = static offset
K_STORE = 20      # a = (width, store fn), b = static offset
K_MEMSIZE = 21
K_MEMGROW = 22

_NUMERIC_KINDS = {CMP1: K_CMP1, CMP2: K_CMP2, UNOP: K_UNOP, BINOP: K_BINOP}


class _Ctrl:
    __slots__ = ("kind", "results", "height", "unreachable", "target", "patches", "else_site")

    def __init__(self, kind, results, height, target=-1, else_site=-1):
        self.kind = kind
        self.results = results
        self.height = height
        self.unreachable = False
        self.target = target
        self.patches: list[int] = []
        self.else_site = else_site


def validate_subset(module: Module) -> Module:
    """Type-check every body against the supported opcode subset and attach
    compiled code. Returns the same module."""
    for i, body in enumerate(module.functions):
        func_index = module.num_imports + i
        sig = module.types[body.type_index]
        try:
            body.exec_code = _compile_body(module, body, sig)
        except ValidationError as e:
            if e.func_index is None:
                raise ValidationError(str(e), func_index) from None
            raise
    if module.start is not None:
        sig = module.signature_of(module.start)
        if sig.params or sig.results:
            raise ValidationError("start function must have empty signature")
    return module


def _compile_body(module: Module, body: FunctionBody, sig: FunctionSignature) -> tuple:
    local_types = sig.params + body.locals
    nfuncs = module.num_imports + len(module.functions)
    has_memory = bool(module.memories)

    vals: list[str | None] = []
    ctrls = [_Ctrl("func", sig.results, 0)]
    out: list[list] = []

    def fail(msg):
        raise ValidationError(msg)

    def pop(expect=None):
        c = ctrls[-1]
        if len(vals) == c.height:
            if c.unreachable:
                return expect
            fail("stack underflow")
        t = vals.pop()
        if expect is not None and t is not None and t != expect:
            fail(f"type mismatch: expected {expect}, got {t}")
        return t if t is not None else expect

    def set_unreachable():
        c = ctrls[-1]
        del vals[c.height:]
        c.unreachable = True

    def close_frame(c):
        for t in reversed(c.results):
            pop(t)
        if len(vals) != c.height:
            fail("values remain on stack at end of block")
        del vals[c.height:]

    def emit(kind, a=None, b=None, off=0, opc=0):
        out.append([kind, a, b, off, opc])

    for opc, a, b, off in body.instrs:
        if opc == 0x0B:  # end
            c = ctrls[-1]
            close_frame(c)
            ctrls.pop()
            if c.kind == "if":
                if c.results:
                    fail("if without else cannot produce a value")
                out[c.else_site][1] = len(out)
            for site in c.patches:
                out[site][1] = len(out)
            if not ctrls:
                emit(K_RETURN, len(sig.results), None, off, opc)
                break
            vals.extend(c.results)
        elif opc in OPS:
            name, cls, ins, outt, fn = OPS[opc]
            for t in reversed(ins):
                pop(t)
            vals.append(outt)
            emit(_NUMERIC_KINDS[cls], fn, None, off, opc)
        elif opc == 0x20:  # local.get
            if a >= len(local_types):
                fail(f"local index {a} out of range")
            vals.append(local_types[a])
            emit(K_LOCAL_GET, a, None, off, opc)
        elif opc == 0x21:  # local.set
            if a >= len(local_types):
                fail(f"local index {a} out of range")
            pop(local_types[a])
            emit(K_LOCAL_SET, a, None, off, opc)
        elif opc == 0x22:  # local.tee
            if a >= len(local_types):
                fail(f"local index {a} out of range")
            pop(local_types[a])
            vals.append(local_types[a])
            emit(K_LOCAL_TEE, a, None, off, opc)
        elif opc == 0x23:  # global.get
            if a >= len(module.globals):
                fail(f"global index {a} out of range")
            vals.append(module.globals[a].type)
            emit(K_GLOBAL_GET, a, None, off, opc)
        elif opc == 0x24:  # global.set
            if a >= len(module.globals):
                fail(f"global index {a} out of range")
            if not module.globals[a].mutable:
                fail(f"global {a} is immutable")
            pop(module.globals[a].type)
            emit(K_GLOBAL_SET, a, None, off, opc)
        elif opc in CONST_TYPES:
            vals.append(CONST_TYPES[opc])
            emit(K_CONST, a, None, off, opc)
        elif opc in LOADS:
            if not has_memory:
                fail("load without a memory")
            name, width, outt, fn = LOADS[opc]
            if (1 << a) > width:
                fail(f"alignment 2**{a} larger than access width {width}")
            pop(I32)
            vals.append(outt)
            emit(K_LOAD, (width, fn), b, off, opc)
        elif opc in STORES:
            if not has_memory:
                fail("store without a memory")
            name, width, int_, fn = STORES[opc]
            if (1 << a) > width:
                fail(f"alignment 2**{a} larger than access width {width}")
            pop(int_)
            pop(I32)
            emit(K_STORE, (width, fn), b, off, opc)
        elif opc == 0x02:  # block
            results = () if a is None else (a,)
            ctrls.append(_Ctrl("block", results, len(vals)))
        elif opc == 0x03:  # loop
            results = () if a is None else (a,)
            ctrls.append(_Ctrl("loop", results, len(vals), target=len(out)))
        elif opc == 0x04:  # if
            pop(I32)
            results = () if a is None else (a,)
            emit(K_IF, None, None, off, opc)
            ctrls.append(_Ctrl("if", results, len(vals), else_site=len(out) - 1))
        elif opc == 0x05:  # else
            c = ctrls[-1]
            if c.kind != "if":
                fail("else outside if")
            close_frame(c)
            emit(K_GOTO, None, None, off, opc)
            c.patches.append(len(out) - 1)
            out[c.else_site][1] = len(out)
            c.kind = "else"
            c.unreachable = False
        elif opc in (0x0C, 0x0D):  # br / br_if
            if a >= len(ctrls):
                fail(f"branch depth {a} out of range")
            if opc == 0x0D:
                pop(I32)
            c = ctrls[-1 - a]
            label_types = () if c.kind == "loop" else c.results
            for t in reversed(label_types):
                pop(t)
            kind = K_BR if opc == 0x0C else K_BR_IF
            emit(kind, None, (c.height, len(label_types)), off, opc)
            if c.kind == "loop":
                out[-1][1] = c.target
            else:
                c.patches.append(len(out) - 1)
            if opc == 0x0C:
                set_unreachable()
            else:
                vals.extend(label_types)
        elif opc == 0x0F:  # return
            for t in reversed(sig.results):
                pop(t)
            emit(K_RETURN, len(sig.results), None, off, opc)
            set_unreachable()
        elif opc == 0x10:  # call
            if a >= nfuncs:
                fail(f"call target {a} out of range")
            callee = module.signature_of(a)
            for t in reversed(callee.params):
                pop(t)
            vals.extend(callee.results)
            emit(K_CALL, a, None, off, opc)
        elif opc == 0x1A:  # drop
            pop()
            emit(K_DROP, None, None, off, opc)
        elif opc == 0x1B:  # select
            pop(I32)
            t2 = pop()
            t1 = pop()
            if t1 is not None and t2 is not None and t1 != t2:
                fail(f"select operands differ: {t1} vs {t2}")
            vals.append(t1 if t1 is not None else t2)
            emit(K_SELECT, None, None, off, opc)
        elif opc == 0x00:  # unreachable
            emit(K_UNREACHABLE, None, None, off, opc)
            set_unreachable()
        elif opc == 0x01:  # nop
            pass
        elif opc in (0x3F, 0x40):  # memory.size / memory.grow
            if not has_memory:
                fail("memory instruction without a memory")
            if opc == 0x40:
                pop(I32)
            vals.append(I32)
            emit(K_MEMSIZE if opc == 0x3F else K_MEMGROW, None, None, off, opc)
        else:
            fail(f"unsupported opcode 0x{opc:02x}")

    return tuple(tuple(ins) for ins in out)
