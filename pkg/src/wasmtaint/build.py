"""Minimal wasm (MVP) module assembler.

Backs the checked-in fixture corpus and the tests that need one-off modules
(single-opcode functions, taint round-trips). Emits only what the decoder
accepts: types, function imports, one memory, globals, exports, start,
code, data.
"""

from __future__ import annotations

import struct

from .ops import F32, F64, I32, I64

_TYPE_BYTES = {I32: 0x7F, I64: 0x7E, F32: 0x7D, F64: 0x7C}
_BLOCK_EMPTY = 0x40


def uleb(n: int) -> bytes:
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def sleb(n: int) -> bytes:
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if (n == 0 and not b & 0x40) or (n == -1 and b & 0x40):
            out.append(b)
            return bytes(out)
        out.append(b | 0x80)


class Code:
    """Instruction writer for one function body."""

    def __init__(self):
        self.buf = bytearray()

    def raw(self, *bts: int) -> "Code":
        self.buf.extend(bts)
        return self

    def op(self, opcode: int) -> "Code":
        self.buf.append(opcode)
        return self

    def i32_const(self, v: int) -> "Code":
        v &= 0xFFFFFFFF
        if v >= 0x80000000:
            v -= 0x100000000
        self.buf.append(0x41)
        self.buf.extend(sleb(v))
        return self

    def i64_const(self, v: int) -> "Code":
        v &= 0xFFFFFFFFFFFFFFFF
        if v >= 0x8000000000000000:
            v -= 0x10000000000000000
        self.buf.append(0x42)
        self.buf.extend(sleb(v))
        return self

    def f32_const(self, v: float) -> "Code":
        self.buf.append(0x43)
        self.buf.extend(struct.pack("<f", v))
        return self

    def f64_const(self, v: float) -> "Code":
        self.buf.append(0x44)
        self.buf.extend(struct.pack("<d", v))
        return self

    def const(self, t: str, v) -> "Code":
        return {I32: self.i32_const, I64: self.i64_const,
                F32: self.f32_const, F64: self.f64_const}[t](v)

    def local_get(self, i: int) -> "Code":
        self.buf.append(0x20)
        self.buf.extend(uleb(i))
        return self

    def local_set(self, i: int) -> "Code":
        self.buf.append(0x21)
        self.buf.extend(uleb(i))
        return self

    def local_tee(self, i: int) -> "Code":
        self.buf.append(0x22)
        self.buf.extend(uleb(i))
        return self

    def global_get(self, i: int) -> "Code":
        self.buf.append(0x23)
        self.buf.extend(uleb(i))
        return self

    def global_set(self, i: int) -> "Code":
        self.buf.append(0x24)
        self.buf.extend(uleb(i))
        return self

    def call(self, func_index: int) -> "Code":
        self.buf.append(0x10)
        self.buf.extend(uleb(func_index))
        return self

    def block(self, result: str | None = None) -> "Code":
        self.buf.extend((0x02, _TYPE_BYTES[result] if result else _BLOCK_EMPTY))
        return self

    def loop(self, result: str | None = None) -> "Code":
        self.buf.extend((0x03, _TYPE_BYTES[result] if result else _BLOCK_EMPTY))
        return self

    def if_(self, result: str | None = None) -> "Code":
        self.buf.extend((0x04, _TYPE_BYTES[result] if result else _BLOCK_EMPTY))
        return self

    def else_(self) -> "Code":
        self.buf.append(0x05)
        return self

    def end(self) -> "Code":
        self.buf.append(0x0B)
        return self

    def br(self, depth: int) -> "Code":
        self.buf.append(0x0C)
        self.buf.extend(uleb(depth))
        return self

    def br_if(self, depth: int) -> "Code":
        self.buf.append(0x0D)
        self.buf.extend(uleb(depth))
        return self

    def ret(self) -> "Code":
        self.buf.append(0x0F)
        return self

    def drop(self) -> "Code":
        self.buf.append(0x1A)
        return self

    def select(self) -> "Code":
        self.buf.append(0x1B)
        return self

    def mem(self, opcode: int, align: int = 0, offset: int = 0) -> "Code":
        self.buf.append(opcode)
        self.buf.extend(uleb(align))
        self.buf.extend(uleb(offset))
        return self

    def memory_size(self) -> "Code":
        self.buf.extend((0x3F, 0x00))
        return self

    def memory_grow(self) -> "Code":
        self.buf.extend((0x40, 0x00))
        return self


class ModuleBuilder:
    def __init__(self):
        self._types: list[tuple[tuple, tuple]] = []
        self._imports: list[tuple[str, str, int]] = []
        self._funcs: list[tuple[int, tuple, bytes]] = []
        self._memory: tuple[int, int | None] | None = None
        self._globals: list[tuple[str, bool, object]] = []
        self._exports: list[tuple[str, int, int]] = []
        self._start: int | None = None
        self._data: list[tuple[int, bytes]] = []

    def type_index(self, params, results) -> int:
        key = (tuple(params), tuple(results))
        try:
            return self._types.index(key)
        except ValueError:
            self._types.append(key)
            return len(self._types) - 1

    def import_func(self, module: str, name: str, params=(), results=()) -> int:
        if self._funcs:
            raise ValueError("imports must be added before functions")
        self._imports.append((module, name, self.type_index(params, results)))
        return len(self._imports) - 1

    def func(self, params=(), results=(), locals=(), code: Code | bytes = b"",
             export: str | None = None) -> int:
        """Add a function; the body must not include the trailing end."""
        body = bytes(code.buf if isinstance(code, Code) else code) + b"\x0b"
        ti = self.type_index(params, results)
        self._funcs.append((ti, tuple(locals), body))
        index = len(self._imports) + len(self._funcs) - 1
        if export:
            self._exports.append((export, 0, index))
        return index

    def memory(self, initial_pages: int, max_pages: int | None = None,
               export: str | None = None) -> None:
        self._memory = (initial_pages, max_pages)
        if export:
            self._exports.append((export, 2, 0))

    def global_(self, t: str, mutable: bool, init, export: str | None = None) -> int:
        self._globals.append((t, mutable, init))
        if export:
            self._exports.append((export, 3, len(self._globals) - 1))
        return len(self._globals) - 1

    def start(self, func_index: int) -> None:
        self._start = func_index

    def data(self, offset: int, payload: bytes) -> None:
        self._data.append((offset, payload))

    def build(self) -> bytes:
        out = bytearray(b"\x00\x61\x73\x6d\x01\x00\x00\x00")

        def section(sec_id: int, payload: bytes) -> None:
            out.append(sec_id)
            out.extend(uleb(len(payload)))
            out.extend(payload)

        if self._types:
            p = bytearray(uleb(len(self._types)))
            for params, results in self._types:
                p.append(0x60)
                p.extend(uleb(len(params)))
                p.extend(_TYPE_BYTES[t] for t in params)
                p.extend(uleb(len(results)))
                p.extend(_TYPE_BYTES[t] for t in results)
            section(1, bytes(p))

        if self._imports:
            p = bytearray(uleb(len(self._imports)))
            for module, name, ti in self._imports:
                for s in (module, name):
                    enc = s.encode("utf-8")
                    p.extend(uleb(len(enc)))
                    p.extend(enc)
                p.append(0x00)
                p.extend(uleb(ti))
            section(2, bytes(p))

        if self._funcs:
            p = bytearray(uleb(len(self._funcs)))
            for ti, _, _ in self._funcs:
                p.extend(uleb(ti))
            section(3, bytes(p))

        if self._memory is not None:
            initial, maximum = self._memory
            p = bytearray(uleb(1))
            if maximum is None:
                p.append(0x00)
                p.extend(uleb(initial))
            else:
                p.append(0x01)
                p.extend(uleb(initial))
                p.extend(uleb(maximum))
            section(5, bytes(p))

        if self._globals:
            p = bytearray(uleb(len(self._globals)))
            for t, mutable, init in self._globals:
                p.append(_TYPE_BYTES[t])
                p.append(1 if mutable else 0)
                p.extend(Code().const(t, init).end().buf)
            section(6, bytes(p))

        if self._exports:
            p = bytearray(uleb(len(self._exports)))
            for name, kind, index in self._exports:
                enc = name.encode("utf-8")
                p.extend(uleb(len(enc)))
                p.extend(enc)
                p.append(kind)
                p.extend(uleb(index))
            section(7, bytes(p))

        if self._start is not None:
            section(8, uleb(self._start))

        if self._funcs:
            p = bytearray(uleb(len(self._funcs)))
            for _, local_types, body in self._funcs:
                groups: list[tuple[int, str]] = []
                for t in local_types:
                    if groups and groups[-1][1] == t:
                        groups[-1] = (groups[-1][0] + 1, t)
                    else:
                        groups.append((1, t))
                entry = bytearray(uleb(len(groups)))
                for n, t in groups:
                    entry.extend(uleb(n))
                    entry.append(_TYPE_BYTES[t])
                entry.extend(body)
                p.extend(uleb(len(entry)))
                p.extend(entry)
            section(10, bytes(p))

        if self._data:
            p = bytearray(uleb(len(self._data)))
            for offset, payload in self._data:
                p.append(0x00)
                p.extend(Code().i32_const(offset).end().buf)
                p.extend(uleb(len(payload)))
                p.extend(payload)
            section(11, bytes(p))

        return bytes(out)
