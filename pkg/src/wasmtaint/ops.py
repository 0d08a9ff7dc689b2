"""Numeric opcode tables: value semantics and taint classification.

Each supported numeric opcode maps to its operand/result types, the class
driving taint propagation (comparison, unary, binary), and a function
computing the value exactly per the wasm MVP rules. Integers are carried as
canonical unsigned bit patterns; f32 values are quantized to single
precision after every producing operation.
"""

from __future__ import annotations

import math
import struct

from .errors import (
    TRAP_BAD_CONVERSION,
    TRAP_DIV_ZERO,
    TRAP_INT_OVERFLOW,
    Trap,
)

I32 = "i32"
I64 = "i64"
F32 = "f32"
F64 = "f64"

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

# Taint classes (Table-style): comparisons drop taint, unops copy it,
# binops OR it.
CMP1 = 0  # one-operand comparison (eqz)
CMP2 = 1  # two-operand comparison
UNOP = 2  # unary / conversion
BINOP = 3  # non-comparison binary

_pack = struct.pack
_unpack = struct.unpack

_NAN = float("nan")
_INF = float("inf")


def _s32(u: int) -> int:
    return u - 0x100000000 if u & 0x80000000 else u


def _s64(u: int) -> int:
    return u - 0x10000000000000000 if u & 0x8000000000000000 else u


def _f32(x: float) -> float:
    try:
        return _unpack("<f", _pack("<f", x))[0]
    except OverflowError:
        return _INF if x > 0 else -_INF


def _idiv_s(a: int, b: int) -> int:
    # Truncating signed division.
    if b == 0:
        raise Trap(TRAP_DIV_ZERO)
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _irem_s(a: int, b: int) -> int:
    if b == 0:
        raise Trap(TRAP_DIV_ZERO)
    r = abs(a) % abs(b)
    return r if a >= 0 else -r


def _fdiv(x: float, y: float) -> float:
    if y != 0.0:
        return x / y
    if x != x or y != y:
        return _NAN
    if x == 0.0:
        return _NAN
    sign = math.copysign(1.0, x) * math.copysign(1.0, y)
    return math.copysign(_INF, sign)


def _fmin(x: float, y: float) -> float:
    if x != x or y != y:
        return _NAN
    if x == y == 0.0:
        # -0 orders below +0
        return -0.0 if (math.copysign(1.0, x) < 0 or math.copysign(1.0, y) < 0) else 0.0
    return x if x < y else y


def _fmax(x: float, y: float) -> float:
    if x != x or y != y:
        return _NAN
    if x == y == 0.0:
        return 0.0 if (math.copysign(1.0, x) > 0 or math.copysign(1.0, y) > 0) else -0.0
    return x if x > y else y


def _round_kind(x: float, f) -> float:
    # ceil/floor/trunc/nearest preserving NaN, infinities, and signed zero.
    if x != x or x in (_INF, -_INF):
        return x
    r = float(f(x))
    if r == 0.0:
        return math.copysign(0.0, x)
    return r


def _nearest(x: float) -> float:
    # round() on floats is round-half-to-even, matching wasm "nearest".
    return _round_kind(x, round)


def _sqrt(x: float) -> float:
    if x != x:
        return _NAN
    if x < 0.0:
        return _NAN
    return math.sqrt(x)


def _clz(u: int, bits: int) -> int:
    return bits - u.bit_length()


def _ctz(u: int, bits: int) -> int:
    if u == 0:
        return bits
    return (u & -u).bit_length() - 1


def _rotl32(x: int, k: int) -> int:
    k &= 31
    return ((x << k) | (x >> (32 - k))) & MASK32


def _rotr32(x: int, k: int) -> int:
    k &= 31
    return ((x >> k) | (x << (32 - k))) & MASK32


def _rotl64(x: int, k: int) -> int:
    k &= 63
    return ((x << k) | (x >> (64 - k))) & MASK64


def _rotr64(x: int, k: int) -> int:
    k &= 63
    return ((x >> k) | (x << (64 - k))) & MASK64


def _trunc_to_int(x: float, lo: int, hi: int) -> int:
    if x != x:
        raise Trap(TRAP_BAD_CONVERSION)
    try:
        t = math.trunc(x)
    except (OverflowError, ValueError):
        raise Trap(TRAP_INT_OVERFLOW) from None
    if t < lo or t > hi:
        raise Trap(TRAP_INT_OVERFLOW)
    return t


# OPS[opcode] = (name, class, operand types, result type, value function).
OPS: dict[int, tuple[str, int, tuple[str, ...], str, object]] = {}


def _op(opc, name, kind, ins, out, fn):
    OPS[opc] = (name, kind, ins, out, fn)


# --- i32 comparisons (0x45-0x4f) ---
_op(0x45, "i32.eqz", CMP1, (I32,), I32, lambda x: 1 if x == 0 else 0)
_op(0x46, "i32.eq", CMP2, (I32, I32), I32, lambda x, y: 1 if x == y else 0)
_op(0x47, "i32.ne", CMP2, (I32, I32), I32, lambda x, y: 1 if x != y else 0)
_op(0x48, "i32.lt_s", CMP2, (I32, I32), I32, lambda x, y: 1 if _s32(x) < _s32(y) else 0)
_op(0x49, "i32.lt_u", CMP2, (I32, I32), I32, lambda x, y: 1 if x < y else 0)
_op(0x4A, "i32.gt_s", CMP2, (I32, I32), I32, lambda x, y: 1 if _s32(x) > _s32(y) else 0)
_op(0x4B, "i32.gt_u", CMP2, (I32, I32), I32, lambda x, y: 1 if x > y else 0)
_op(0x4C, "i32.le_s", CMP2, (I32, I32), I32, lambda x, y: 1 if _s32(x) <= _s32(y) else 0)
_op(0x4D, "i32.le_u", CMP2, (I32, I32), I32, lambda x, y: 1 if x <= y else 0)
_op(0x4E, "i32.ge_s", CMP2, (I32, I32), I32, lambda x, y: 1 if _s32(x) >= _s32(y) else 0)
_op(0x4F, "i32.ge_u", CMP2, (I32, I32), I32, lambda x, y: 1 if x >= y else 0)

# --- i64 comparisons (0x50-0x5a) ---
_op(0x50, "i64.eqz", CMP1, (I64,), I32, lambda x: 1 if x == 0 else 0)
_op(0x51, "i64.eq", CMP2, (I64, I64), I32, lambda x, y: 1 if x == y else 0)
_op(0x52, "i64.ne", CMP2, (I64, I64), I32, lambda x, y: 1 if x != y else 0)
_op(0x53, "i64.lt_s", CMP2, (I64, I64), I32, lambda x, y: 1 if _s64(x) < _s64(y) else 0)
_op(0x54, "i64.lt_u", CMP2, (I64, I64), I32, lambda x, y: 1 if x < y else 0)
_op(0x55, "i64.gt_s", CMP2, (I64, I64), I32, lambda x, y: 1 if _s64(x) > _s64(y) else 0)
_op(0x56, "i64.gt_u", CMP2, (I64, I64), I32, lambda x, y: 1 if x > y else 0)
_op(0x57, "i64.le_s", CMP2, (I64, I64), I32, lambda x, y: 1 if _s64(x) <= _s64(y) else 0)
_op(0x58, "i64.le_u", CMP2, (I64, I64), I32, lambda x, y: 1 if x <= y else 0)
_op(0x59, "i64.ge_s", CMP2, (I64, I64), I32, lambda x, y: 1 if _s64(x) >= _s64(y) else 0)
_op(0x5A, "i64.ge_u", CMP2, (I64, I64), I32, lambda x, y: 1 if x >= y else 0)

# --- f32 comparisons (0x5b-0x60); NaN compares false except ne ---
_op(0x5B, "f32.eq", CMP2, (F32, F32), I32, lambda x, y: 1 if x == y else 0)
_op(0x5C, "f32.ne", CMP2, (F32, F32), I32, lambda x, y: 1 if x != y else 0)
_op(0x5D, "f32.lt", CMP2, (F32, F32), I32, lambda x, y: 1 if x < y else 0)
_op(0x5E, "f32.gt", CMP2, (F32, F32), I32, lambda x, y: 1 if x > y else 0)
_op(0x5F, "f32.le", CMP2, (F32, F32), I32, lambda x, y: 1 if x <= y else 0)
_op(0x60, "f32.ge", CMP2, (F32, F32), I32, lambda x, y: 1 if x >= y else 0)

# --- f64 comparisons (0x61-0x66) ---
_op(0x61, "f64.eq", CMP2, (F64, F64), I32, lambda x, y: 1 if x == y else 0)
_op(0x62, "f64.ne", CMP2, (F64, F64), I32, lambda x, y: 1 if x != y else 0)
_op(0x63, "f64.lt", CMP2, (F64, F64), I32, lambda x, y: 1 if x < y else 0)
_op(0x64, "f64.gt", CMP2, (F64, F64), I32, lambda x, y: 1 if x > y else 0)
_op(0x65, "f64.le", CMP2, (F64, F64), I32, lambda x, y: 1 if x <= y else 0)
_op(0x66, "f64.ge", CMP2, (F64, F64), I32, lambda x, y: 1 if x >= y else 0)

# --- i32 unops (0x67-0x69) ---
_op(0x67, "i32.clz", UNOP, (I32,), I32, lambda x: _clz(x, 32))
_op(0x68, "i32.ctz", UNOP, (I32,), I32, lambda x: _ctz(x, 32))
_op(0x69, "i32.popcnt", UNOP, (I32,), I32, lambda x: x.bit_count())

# --- i32 binops (0x6a-0x78) ---
_op(0x6A, "i32.add", BINOP, (I32, I32), I32, lambda x, y: (x + y) & MASK32)
_op(0x6B, "i32.sub", BINOP, (I32, I32), I32, lambda x, y: (x - y) & MASK32)
_op(0x6C, "i32.mul", BINOP, (I32, I32), I32, lambda x, y: (x * y) & MASK32)


def _i32_div_s(x, y):
    a, b = _s32(x), _s32(y)
    if a == -0x80000000 and b == -1:
        raise Trap(TRAP_INT_OVERFLOW)
    return _idiv_s(a, b) & MASK32


def _i32_div_u(x, y):
    if y == 0:
        raise Trap(TRAP_DIV_ZERO)
    return x // y


def _i32_rem_s(x, y):
    return _irem_s(_s32(x), _s32(y)) & MASK32


def _i32_rem_u(x, y):
    if y == 0:
        raise Trap(TRAP_DIV_ZERO)
    return x % y


_op(0x6D, "i32.div_s", BINOP, (I32, I32), I32, _i32_div_s)
_op(0x6E, "i32.div_u", BINOP, (I32, I32), I32, _i32_div_u)
_op(0x6F, "i32.rem_s", BINOP, (I32, I32), I32, _i32_rem_s)
_op(0x70, "i32.rem_u", BINOP, (I32, I32), I32, _i32_rem_u)
_op(0x71, "i32.and", BINOP, (I32, I32), I32, lambda x, y: x & y)
_op(0x72, "i32.or", BINOP, (I32, I32), I32, lambda x, y: x | y)
_op(0x73, "i32.xor", BINOP, (I32, I32), I32, lambda x, y: x ^ y)
_op(0x74, "i32.shl", BINOP, (I32, I32), I32, lambda x, y: (x << (y & 31)) & MASK32)
_op(0x75, "i32.shr_s", BINOP, (I32, I32), I32, lambda x, y: (_s32(x) >> (y & 31)) & MASK32)
_op(0x76, "i32.shr_u", BINOP, (I32, I32), I32, lambda x, y: x >> (y & 31))
_op(0x77, "i32.rotl", BINOP, (I32, I32), I32, _rotl32)
_op(0x78, "i32.rotr", BINOP, (I32, I32), I32, _rotr32)

# --- i64 unops (0x79-0x7b) ---
_op(0x79, "i64.clz", UNOP, (I64,), I64, lambda x: _clz(x, 64))
_op(0x7A, "i64.ctz", UNOP, (I64,), I64, lambda x: _ctz(x, 64))
_op(0x7B, "i64.popcnt", UNOP, (I64,), I64, lambda x: x.bit_count())

# --- i64 binops (0x7c-0x8a) ---
_op(0x7C, "i64.add", BINOP, (I64, I64), I64, lambda x, y: (x + y) & MASK64)
_op(0x7D, "i64.sub", BINOP, (I64, I64), I64, lambda x, y: (x - y) & MASK64)
_op(0x7E, "i64.mul", BINOP, (I64, I64), I64, lambda x, y: (x * y) & MASK64)


def _i64_div_s(x, y):
    a, b = _s64(x), _s64(y)
    if a == -0x8000000000000000 and b == -1:
        raise Trap(TRAP_INT_OVERFLOW)
    return _idiv_s(a, b) & MASK64


def _i64_div_u(x, y):
    if y == 0:
        raise Trap(TRAP_DIV_ZERO)
    return x // y


def _i64_rem_s(x, y):
    return _irem_s(_s64(x), _s64(y)) & MASK64


def _i64_rem_u(x, y):
    if y == 0:
        raise Trap(TRAP_DIV_ZERO)
    return x % y


_op(0x7F, "i64.div_s", BINOP, (I64, I64), I64, _i64_div_s)
_op(0x80, "i64.div_u", BINOP, (I64, I64), I64, _i64_div_u)
_op(0x81, "i64.rem_s", BINOP, (I64, I64), I64, _i64_rem_s)
_op(0x82, "i64.rem_u", BINOP, (I64, I64), I64, _i64_rem_u)
_op(0x83, "i64.and", BINOP, (I64, I64), I64, lambda x, y: x & y)
_op(0x84, "i64.or", BINOP, (I64, I64), I64, lambda x, y: x | y)
_op(0x85, "i64.xor", BINOP, (I64, I64), I64, lambda x, y: x ^ y)
_op(0x86, "i64.shl", BINOP, (I64, I64), I64, lambda x, y: (x << (y & 63)) & MASK64)
_op(0x87, "i64.shr_s", BINOP, (I64, I64), I64, lambda x, y: (_s64(x) >> (y & 63)) & MASK64)
_op(0x88, "i64.shr_u", BINOP, (I64, I64), I64, lambda x, y: x >> (y & 63))
_op(0x89, "i64.rotl", BINOP, (I64, I64), I64, _rotl64)
_op(0x8A, "i64.rotr", BINOP, (I64, I64), I64, _rotr64)

# --- f32 unops (0x8b-0x91) ---
_op(0x8B, "f32.abs", UNOP, (F32,), F32, math.fabs)
_op(0x8C, "f32.neg", UNOP, (F32,), F32, lambda x: -x)
_op(0x8D, "f32.ceil", UNOP, (F32,), F32, lambda x: _round_kind(x, math.ceil))
_op(0x8E, "f32.floor", UNOP, (F32,), F32, lambda x: _round_kind(x, math.floor))
_op(0x8F, "f32.trunc", UNOP, (F32,), F32, lambda x: _round_kind(x, math.trunc))
_op(0x90, "f32.nearest", UNOP, (F32,), F32, _nearest)
_op(0x91, "f32.sqrt", UNOP, (F32,), F32, lambda x: _f32(_sqrt(x)))

# --- f32 binops (0x92-0x98) ---
_op(0x92, "f32.add", BINOP, (F32, F32), F32, lambda x, y: _f32(x + y))
_op(0x93, "f32.sub", BINOP, (F32, F32), F32, lambda x, y: _f32(x - y))
_op(0x94, "f32.mul", BINOP, (F32, F32), F32, lambda x, y: _f32(x * y))
_op(0x95, "f32.div", BINOP, (F32, F32), F32, lambda x, y: _f32(_fdiv(x, y)))
_op(0x96, "f32.min", BINOP, (F32, F32), F32, _fmin)
_op(0x97, "f32.max", BINOP, (F32, F32), F32, _fmax)
_op(0x98, "f32.copysign", BINOP, (F32, F32), F32, math.copysign)

# --- f64 unops (0x99-0x9f) ---
_op(0x99, "f64.abs", UNOP, (F64,), F64, math.fabs)
_op(0x9A, "f64.neg", UNOP, (F64,), F64, lambda x: -x)
_op(0x9B, "f64.ceil", UNOP, (F64,), F64, lambda x: _round_kind(x, math.ceil))
_op(0x9C, "f64.floor", UNOP, (F64,), F64, lambda x: _round_kind(x, math.floor))
_op(0x9D, "f64.trunc", UNOP, (F64,), F64, lambda x: _round_kind(x, math.trunc))
_op(0x9E, "f64.nearest", UNOP, (F64,), F64, _nearest)
_op(0x9F, "f64.sqrt", UNOP, (F64,), F64, _sqrt)

# --- f64 binops (0xa0-0xa6) ---
_op(0xA0, "f64.add", BINOP, (F64, F64), F64, lambda x, y: x + y)
_op(0xA1, "f64.sub", BINOP, (F64, F64), F64, lambda x, y: x - y)
_op(0xA2, "f64.mul", BINOP, (F64, F64), F64, lambda x, y: x * y)
_op(0xA3, "f64.div", BINOP, (F64, F64), F64, _fdiv)
_op(0xA4, "f64.min", BINOP, (F64, F64), F64, _fmin)
_op(0xA5, "f64.max", BINOP, (F64, F64), F64, _fmax)
_op(0xA6, "f64.copysign", BINOP, (F64, F64), F64, math.copysign)

# --- conversions (0xa7-0xbf), unary for taint purposes ---
_op(0xA7, "i32.wrap_i64", UNOP, (I64,), I32, lambda x: x & MASK32)
_op(0xA8, "i32.trunc_f32_s", UNOP, (F32,), I32,
    lambda x: _trunc_to_int(x, -0x80000000, 0x7FFFFFFF) & MASK32)
_op(0xA9, "i32.trunc_f32_u", UNOP, (F32,), I32, lambda x: _trunc_to_int(x, 0, MASK32))
_op(0xAA, "i32.trunc_f64_s", UNOP, (F64,), I32,
    lambda x: _trunc_to_int(x, -0x80000000, 0x7FFFFFFF) & MASK32)
_op(0xAB, "i32.trunc_f64_u", UNOP, (F64,), I32, lambda x: _trunc_to_int(x, 0, MASK32))
_op(0xAC, "i64.extend_i32_s", UNOP, (I32,), I64, lambda x: _s32(x) & MASK64)
_op(0xAD, "i64.extend_i32_u", UNOP, (I32,), I64, lambda x: x)
_op(0xAE, "i64.trunc_f32_s", UNOP, (F32,), I64,
    lambda x: _trunc_to_int(x, -0x8000000000000000, 0x7FFFFFFFFFFFFFFF) & MASK64)
_op(0xAF, "i64.trunc_f32_u", UNOP, (F32,), I64, lambda x: _trunc_to_int(x, 0, MASK64))
_op(0xB0, "i64.trunc_f64_s", UNOP, (F64,), I64,
    lambda x: _trunc_to_int(x, -0x8000000000000000, 0x7FFFFFFFFFFFFFFF) & MASK64)
_op(0xB1, "i64.trunc_f64_u", UNOP, (F64,), I64, lambda x: _trunc_to_int(x, 0, MASK64))
# i64 -> f32 goes through double rounding; the tie cases where that differs
# from direct rounding are not exercised here.
_op(0xB2, "f32.convert_i32_s", UNOP, (I32,), F32, lambda x: _f32(float(_s32(x))))
_op(0xB3, "f32.convert_i32_u", UNOP, (I32,), F32, lambda x: _f32(float(x)))
_op(0xB4, "f32.convert_i64_s", UNOP, (I64,), F32, lambda x: _f32(float(_s64(x))))
_op(0xB5, "f32.convert_i64_u", UNOP, (I64,), F32, lambda x: _f32(float(x)))
_op(0xB6, "f32.demote_f64", UNOP, (F64,), F32, _f32)
_op(0xB7, "f64.convert_i32_s", UNOP, (I32,), F64, lambda x: float(_s32(x)))
_op(0xB8, "f64.convert_i32_u", UNOP, (I32,), F64, float)
_op(0xB9, "f64.convert_i64_s", UNOP, (I64,), F64, lambda x: float(_s64(x)))
_op(0xBA, "f64.convert_i64_u", UNOP, (I64,), F64, float)
_op(0xBB, "f64.promote_f32", UNOP, (F32,), F64, lambda x: x)
_op(0xBC, "i32.reinterpret_f32", UNOP, (F32,), I32,
    lambda x: _unpack("<I", _pack("<f", x))[0])
_op(0xBD, "i64.reinterpret_f64", UNOP, (F64,), I64,
    lambda x: _unpack("<Q", _pack("<d", x))[0])
_op(0xBE, "f32.reinterpret_i32", UNOP, (I32,), F32,
    lambda x: _unpack("<f", _pack("<I", x))[0])
_op(0xBF, "f64.reinterpret_i64", UNOP, (I64,), F64,
    lambda x: _unpack("<d", _pack("<Q", x))[0])


# --- memory access descriptors ---

def _ld(fmt, mask=None):
    if mask is None:
        return lambda mem, ea: _unpack_from(fmt, mem, ea)[0]
    return lambda mem, ea: _unpack_from(fmt, mem, ea)[0] & mask


_unpack_from = struct.unpack_from
_pack_into = struct.pack_into

# LOADS[opcode] = (name, width, result type, fn(mem, ea)).
LOADS: dict[int, tuple[str, int, str, object]] = {
    0x28: ("i32.load", 4, I32, _ld("<I")),
    0x29: ("i64.load", 8, I64, _ld("<Q")),
    0x2A: ("f32.load", 4, F32, _ld("<f")),
    0x2B: ("f64.load", 8, F64, _ld("<d")),
    0x2C: ("i32.load8_s", 1, I32, _ld("<b", MASK32)),
    0x2D: ("i32.load8_u", 1, I32, _ld("<B")),
    0x2E: ("i32.load16_s", 2, I32, _ld("<h", MASK32)),
    0x2F: ("i32.load16_u", 2, I32, _ld("<H")),
    0x30: ("i64.load8_s", 1, I64, _ld("<b", MASK64)),
    0x31: ("i64.load8_u", 1, I64, _ld("<B")),
    0x32: ("i64.load16_s", 2, I64, _ld("<h", MASK64)),
    0x33: ("i64.load16_u", 2, I64, _ld("<H")),
    0x34: ("i64.load32_s", 4, I64, _ld("<i", MASK64)),
    0x35: ("i64.load32_u", 4, I64, _ld("<I")),
}


def _st8(mem, ea, v):
    mem[ea] = v & 0xFF


# STORES[opcode] = (name, width, value type, fn(mem, ea, v)).
STORES: dict[int, tuple[str, int, str, object]] = {
    0x36: ("i32.store", 4, I32, lambda mem, ea, v: _pack_into("<I", mem, ea, v)),
    0x37: ("i64.store", 8, I64, lambda mem, ea, v: _pack_into("<Q", mem, ea, v)),
    0x38: ("f32.store", 4, F32, lambda mem, ea, v: _pack_into("<f", mem, ea, v)),
    0x39: ("f64.store", 8, F64, lambda mem, ea, v: _pack_into("<d", mem, ea, v)),
    0x3A: ("i32.store8", 1, I32, _st8),
    0x3B: ("i32.store16", 2, I32, lambda mem, ea, v: _pack_into("<H", mem, ea, v & 0xFFFF)),
    0x3C: ("i64.store8", 1, I64, _st8),
    0x3D: ("i64.store16", 2, I64, lambda mem, ea, v: _pack_into("<H", mem, ea, v & 0xFFFF)),
    0x3E: ("i64.store32", 4, I64, lambda mem, ea, v: _pack_into("<I", mem, ea, v & MASK32)),
}

CONST_TYPES = {0x41: I32, 0x42: I64, 0x43: F32, 0x44: F64}

# Names for non-numeric opcodes, for diagnostics and traces.
MISC_NAMES = {
    0x00: "unreachable", 0x01: "nop", 0x02: "block", 0x03: "loop", 0x04: "if",
    0x05: "else", 0x0B: "end", 0x0C: "br", 0x0D: "br_if", 0x0E: "br_table",
    0x0F: "return", 0x10: "call", 0x11: "call_indirect", 0x1A: "drop",
    0x1B: "select", 0x20: "local.get", 0x21: "local.set", 0x22: "local.tee",
    0x23: "global.get", 0x24: "global.set", 0x3F: "memory.size",
    0x40: "memory.grow", 0x41: "i32.const", 0x42: "i64.const",
    0x43: "f32.const", 0x44: "f64.const",
}


def opcode_name(opc: int) -> str:
    if opc in OPS:
        return OPS[opc][0]
    if opc in LOADS:
        return LOADS[opc][0]
    if opc in STORES:
        return STORES[opc][0]
    return MISC_NAMES.get(opc, f"0x{opc:02x}")
