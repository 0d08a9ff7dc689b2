"""Binary module decoding for the executed wasm subset (MVP, version 1).

Decoding understands the full MVP opcode grammar so it can parse any
instruction's immediates; restricting bodies to the supported subset is the
validator's job. Every decode error names the byte offset it occurred at.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import DecodeError
from .ops import CONST_TYPES, F32, F64, I32, I64

MAGIC = b"\x00\x61\x73\x6d"
VERSION = b"\x01\x00\x00\x00"

PAGE_SIZE = 65536

VAL_TYPES = {0x7F: I32, 0x7E: I64, 0x7D: F32, 0x7C: F64}

SEC_CUSTOM = 0
SEC_TYPE = 1
SEC_IMPORT = 2
SEC_FUNCTION = 3
SEC_TABLE = 4
SEC_MEMORY = 5
SEC_GLOBAL = 6
SEC_EXPORT = 7
SEC_START = 8
SEC_ELEMENT = 9
SEC_CODE = 10
SEC_DATA = 11

EXPORT_KINDS = {0: "func", 1: "table", 2: "memory", 3: "global"}

# Decoded instruction: (opcode, immediate a, immediate b, byte offset).
Instr = tuple


@dataclass(frozen=True)
class FunctionSignature:
    params: tuple[str, ...]
    results: tuple[str, ...]

    def __str__(self) -> str:
        p = ", ".join(self.params)
        r = ", ".join(self.results)
        return f"({p}) -> ({r})"


@dataclass(frozen=True)
class MemorySpec:
    initial_pages: int
    max_pages: int | None = None


@dataclass(frozen=True)
class GlobalSpec:
    type: str
    mutable: bool
    init: int | float  # constant initializer value, canonical representation


@dataclass
class FunctionBody:
    type_index: int
    locals: tuple[str, ...]  # declared locals, excluding params
    instrs: list[Instr]
    body_offset: int
    # Filled in by the validator: flattened executable code.
    exec_code: tuple | None = None


@dataclass
class Module:
    types: list[FunctionSignature] = field(default_factory=list)
    imports: list[tuple[str, str, FunctionSignature]] = field(default_factory=list)
    functions: list[FunctionBody] = field(default_factory=list)
    memories: list[MemorySpec] = field(default_factory=list)
    globals: list[GlobalSpec] = field(default_factory=list)
    exports: dict[str, tuple[str, int]] = field(default_factory=dict)
    start: int | None = None
    data_segments: list[tuple[int, bytes]] = field(default_factory=list)

    @property
    def num_imports(self) -> int:
        return len(self.imports)

    def signature_of(self, func_index: int) -> FunctionSignature:
        """Signature in the function index space (imports first)."""
        if func_index < len(self.imports):
            return self.imports[func_index][2]
        return self.types[self.functions[func_index - len(self.imports)].type_index]


class _Reader:
    __slots__ = ("data", "pos", "end")

    def __init__(self, data: bytes, pos: int = 0, end: int | None = None):
        self.data = data
        self.pos = pos
        self.end = len(data) if end is None else end

    def eof(self) -> bool:
        return self.pos >= self.end

    def u8(self) -> int:
        if self.pos >= self.end:
            raise DecodeError("unexpected end of input", self.pos)
        b = self.data[self.pos]
        self.pos += 1
        return b

    def take(self, n: int) -> bytes:
        if self.pos + n > self.end:
            raise DecodeError("unexpected end of input", self.pos)
        b = self.data[self.pos:self.pos + n]
        self.pos += n
        return b

    def uleb(self, bits: int = 32) -> int:
        start = self.pos
        result = 0
        shift = 0
        while True:
            b = self.u8()
            result |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                break
            if shift >= bits + 7:
                raise DecodeError(f"LEB128 overflow for u{bits}", start)
        if result >> bits:
            raise DecodeError(f"LEB128 overflow for u{bits}", start)
        return result

    def sleb(self, bits: int) -> int:
        start = self.pos
        result = 0
        shift = 0
        while True:
            b = self.u8()
            result |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                break
            if shift >= bits + 7:
                raise DecodeError(f"LEB128 overflow for s{bits}", start)
        if b & 0x40:
            result |= -1 << shift
        lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
        if not lo <= result <= hi:
            raise DecodeError(f"LEB128 overflow for s{bits}", start)
        return result

    def f32(self) -> float:
        return struct.unpack("<f", self.take(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def name(self) -> str:
        n = self.uleb()
        start = self.pos
        raw = self.take(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise DecodeError("invalid UTF-8 in name", start) from None

    def valtype(self) -> str:
        pos = self.pos
        b = self.u8()
        t = VAL_TYPES.get(b)
        if t is None:
            raise DecodeError(f"invalid value type 0x{b:02x}", pos)
        return t


def decode_module(data: bytes) -> Module:
    """Decode a wasm binary into a structurally valid :class:`Module`.

    Rejects anything outside the artifact's structural subset: tables,
    element segments, non-function imports, multiple memories.
    """
    if data[:4] != MAGIC:
        raise DecodeError("bad magic number", 0)
    if data[4:8] != VERSION:
        raise DecodeError("unsupported wasm version", 4)
    r = _Reader(data, 8)

    mod = Module()
    func_type_indices: list[int] = []
    last_section = 0
    while not r.eof():
        sec_pos = r.pos
        sec_id = r.u8()
        size = r.uleb()
        payload_start = r.pos
        if payload_start + size > len(data):
            raise DecodeError("section extends past end of module", sec_pos)
        if sec_id > SEC_DATA:
            raise DecodeError(f"unknown section id {sec_id}", sec_pos)
        if sec_id == SEC_TABLE:
            raise DecodeError("table section not supported", sec_pos)
        if sec_id == SEC_ELEMENT:
            raise DecodeError("element section not supported", sec_pos)
        if sec_id != SEC_CUSTOM:
            if sec_id <= last_section:
                raise DecodeError(f"section id {sec_id} out of order", sec_pos)
            last_section = sec_id
        body = _Reader(data, payload_start, payload_start + size)
        if sec_id == SEC_TYPE:
            _decode_types(body, mod)
        elif sec_id == SEC_IMPORT:
            _decode_imports(body, mod)
        elif sec_id == SEC_FUNCTION:
            for _ in range(body.uleb()):
                pos = body.pos
                ti = body.uleb()
                if ti >= len(mod.types):
                    raise DecodeError(f"type index {ti} out of range", pos)
                func_type_indices.append(ti)
        elif sec_id == SEC_MEMORY:
            _decode_memories(body, mod)
        elif sec_id == SEC_GLOBAL:
            _decode_globals(body, mod)
        elif sec_id == SEC_EXPORT:
            _decode_exports(body, mod, len(func_type_indices))
        elif sec_id == SEC_START:
            mod.start = body.uleb()
        elif sec_id == SEC_CODE:
            _decode_code(body, mod, func_type_indices)
        elif sec_id == SEC_DATA:
            _decode_data(body, mod)
        if sec_id != SEC_CUSTOM and body.pos != body.end:
            raise DecodeError("section size mismatch", body.pos)
        r.pos = payload_start + size

    if len(mod.functions) != len(func_type_indices):
        raise DecodeError("function and code section counts differ", len(data))
    nfuncs = len(mod.imports) + len(mod.functions)
    for name, (kind, idx) in mod.exports.items():
        limit = {"func": nfuncs, "memory": len(mod.memories), "global": len(mod.globals)}[kind]
        if idx >= limit:
            raise DecodeError(f"export {name!r} index {idx} out of range", len(data))
    if mod.start is not None and mod.start >= nfuncs:
        raise DecodeError(f"start function index {mod.start} out of range", len(data))
    return mod


def _decode_types(r: _Reader, mod: Module) -> None:
    for _ in range(r.uleb()):
        pos = r.pos
        if r.u8() != 0x60:
            raise DecodeError("expected function type tag 0x60", pos)
        params = tuple(r.valtype() for _ in range(r.uleb()))
        results = tuple(r.valtype() for _ in range(r.uleb()))
        if len(results) > 1:
            raise DecodeError("multiple results not supported", pos)
        mod.types.append(FunctionSignature(params, results))


def _decode_imports(r: _Reader, mod: Module) -> None:
    for _ in range(r.uleb()):
        module_name = r.name()
        field_name = r.name()
        pos = r.pos
        kind = r.u8()
        if kind != 0:
            raise DecodeError(f"unsupported import kind {kind} (only functions)", pos)
        ti = r.uleb()
        if ti >= len(mod.types):
            raise DecodeError(f"type index {ti} out of range", pos)
        mod.imports.append((module_name, field_name, mod.types[ti]))


def _decode_memories(r: _Reader, mod: Module) -> None:
    count = r.uleb()
    if count > 1:
        raise DecodeError("at most one memory is allowed", r.pos)
    for _ in range(count):
        pos = r.pos
        flags = r.u8()
        if flags not in (0, 1):
            raise DecodeError(f"invalid limits flags 0x{flags:02x}", pos)
        initial = r.uleb()
        maximum = r.uleb() if flags == 1 else None
        if maximum is not None and initial > maximum:
            raise DecodeError("memory initial size exceeds maximum", pos)
        mod.memories.append(MemorySpec(initial, maximum))


def _const_init(r: _Reader, expect: str):
    pos = r.pos
    opc = r.u8()
    t = CONST_TYPES.get(opc)
    if t is None:
        raise DecodeError("initializer must be a single constant", pos)
    if t != expect:
        raise DecodeError(f"initializer type {t} does not match {expect}", pos)
    if t == I32:
        v = r.sleb(32) & 0xFFFFFFFF
    elif t == I64:
        v = r.sleb(64) & 0xFFFFFFFFFFFFFFFF
    elif t == F32:
        v = r.f32()
    else:
        v = r.f64()
    endpos = r.pos
    if r.u8() != 0x0B:
        raise DecodeError("initializer must end with 0x0b", endpos)
    return v


def _decode_globals(r: _Reader, mod: Module) -> None:
    for _ in range(r.uleb()):
        t = r.valtype()
        pos = r.pos
        mut = r.u8()
        if mut not in (0, 1):
            raise DecodeError(f"invalid mutability flag {mut}", pos)
        mod.globals.append(GlobalSpec(t, bool(mut), _const_init(r, t)))


def _decode_exports(r: _Reader, mod: Module, num_local_funcs: int) -> None:
    for _ in range(r.uleb()):
        name = r.name()
        pos = r.pos
        kind_byte = r.u8()
        kind = EXPORT_KINDS.get(kind_byte)
        if kind is None or kind == "table":
            raise DecodeError(f"unsupported export kind {kind_byte}", pos)
        if name in mod.exports:
            raise DecodeError(f"duplicate export name {name!r}", pos)
        mod.exports[name] = (kind, r.uleb())


def _decode_code(r: _Reader, mod: Module, func_type_indices: list[int]) -> None:
    count = r.uleb()
    if count != len(func_type_indices):
        raise DecodeError("function and code section counts differ", r.pos)
    for i in range(count):
        size = r.uleb()
        body_start = r.pos
        body = _Reader(r.data, body_start, body_start + size)
        local_types: list[str] = []
        for _ in range(body.uleb()):
            pos = body.pos
            n = body.uleb()
            t = body.valtype()
            if len(local_types) + n > 50000:
                raise DecodeError("too many locals", pos)
            local_types.extend([t] * n)
        instrs = _decode_instrs(body)
        if body.pos != body.end:
            raise DecodeError("function body size mismatch", body.pos)
        mod.functions.append(
            FunctionBody(func_type_indices[i], tuple(local_types), instrs, body_start)
        )
        r.pos = body_start + size


def _decode_data(r: _Reader, mod: Module) -> None:
    for _ in range(r.uleb()):
        pos = r.pos
        memidx = r.uleb()
        if memidx != 0:
            raise DecodeError(f"data segment memory index {memidx} out of range", pos)
        offset = _const_init(r, I32)
        n = r.uleb()
        mod.data_segments.append((offset, bytes(r.take(n))))


# Immediate grammar tags for the MVP opcode space.
_NO_IMM = frozenset(
    [0x00, 0x01, 0x05, 0x0B, 0x0F, 0x1A, 0x1B]
    + list(range(0x45, 0xC0))
)
_ONE_U32 = frozenset([0x0C, 0x0D, 0x10, 0x20, 0x21, 0x22, 0x23, 0x24])
_BLOCK = frozenset([0x02, 0x03, 0x04])
_MEMARG = frozenset(list(range(0x28, 0x3F)))


def _decode_instrs(r: _Reader) -> list[Instr]:
    """Decode a body's instruction sequence, ending at the closing 0x0b."""
    out: list[Instr] = []
    depth = 0
    while True:
        off = r.pos
        opc = r.u8()
        a = b = None
        if opc in _NO_IMM:
            if opc == 0x0B:
                if depth == 0:
                    out.append((opc, None, None, off))
                    return out
                depth -= 1
        elif opc in _ONE_U32:
            a = r.uleb()
        elif opc in _BLOCK:
            pos = r.pos
            bt = r.u8()
            if bt != 0x40 and bt not in VAL_TYPES:
                raise DecodeError(f"invalid block type 0x{bt:02x}", pos)
            a = None if bt == 0x40 else VAL_TYPES[bt]
            depth += 1
        elif opc in _MEMARG:
            a = r.uleb()  # alignment exponent
            b = r.uleb()  # offset
        elif opc == 0x41:
            a = r.sleb(32) & 0xFFFFFFFF
        elif opc == 0x42:
            a = r.sleb(64) & 0xFFFFFFFFFFFFFFFF
        elif opc == 0x43:
            a = r.f32()
        elif opc == 0x44:
            a = r.f64()
        elif opc == 0x0E:  # br_table: parseable, rejected by the validator
            a = [r.uleb() for _ in range(r.uleb())]
            b = r.uleb()
        elif opc == 0x11:  # call_indirect
            a = r.uleb()
            b = r.u8()
        elif opc in (0x3F, 0x40):  # memory.size/grow reserved byte
            pos = r.pos
            if r.u8() != 0:
                raise DecodeError("nonzero reserved byte", pos)
        else:
            raise DecodeError(f"unknown opcode 0x{opc:02x}", off)
        out.append((opc, a, b, off))
