#!/usr/bin/env python3
"""Regenerate the checked-in fixture corpus under src/wasmtaint/fixtures/.

Builder-made fixtures (hash.wasm, args100.wasm, basics.wasm) are
deterministic. factorial.wasm and memfill.wasm are compiled from the C
sources in tools/csrc/ with clang's wasm32 target when available; the
checked-in binaries are kept otherwise.

Usage: python tools/make_fixtures.py [outdir]
"""

from __future__ import annotations

import shutil
import subprocess
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wasmtaint.build import Code, ModuleBuilder  # noqa: E402
from wasmtaint.ops import F32, F64, I32, I64  # noqa: E402

# Avalanche-hash parameters. One round is
#   x ^= x >> 16;  x *= c1;  x ^= x >> 13;  x *= c2;  x ^= x >> 16
# (8 binary ops), then a 4-op tail: x ^= x >> 15; x ^= x << 7.
# 337 rounds * 8 + 4 = 2700 non-comparison binary operations per call.
HASH_ROUNDS = 337
HASH_SHIFTS = (16, 13, 16)
HASH_MULTIPLIERS = (0x85EBCA6B, 0xC2B2AE35, 0x27D4EB2F, 0x165667B1, 0x9E3779B1, 0x45D9F3B3)
HASH_TAIL_SHR = 15
HASH_TAIL_SHL = 7


def hash_reference(x: int) -> int:
    """Pure-Python mirror of hash.wasm; wraps at 32 bits."""
    m = 0xFFFFFFFF
    x &= m
    k = len(HASH_MULTIPLIERS)
    s1, s2, s3 = HASH_SHIFTS
    for r in range(HASH_ROUNDS):
        x ^= x >> s1
        x = (x * HASH_MULTIPLIERS[r % k]) & m
        x ^= x >> s2
        x = (x * HASH_MULTIPLIERS[(r + 1) % k]) & m
        x ^= x >> s3
    x ^= x >> HASH_TAIL_SHR
    x ^= (x << HASH_TAIL_SHL) & m
    return x


def build_hash() -> bytes:
    b = ModuleBuilder()
    c = Code()
    c.local_get(0)

    def xorshift(shift_by: int, opcode: int) -> None:
        # stack: [x] -> [x ^ (x shift k)], scratch through local 0
        c.local_tee(0).local_get(0).i32_const(shift_by).op(opcode).op(0x73)

    def mul(const: int) -> None:
        c.i32_const(const).op(0x6C)

    k = len(HASH_MULTIPLIERS)
    s1, s2, s3 = HASH_SHIFTS
    for r in range(HASH_ROUNDS):
        xorshift(s1, 0x76)  # i32.shr_u
        mul(HASH_MULTIPLIERS[r % k])
        xorshift(s2, 0x76)
        mul(HASH_MULTIPLIERS[(r + 1) % k])
        xorshift(s3, 0x76)
    xorshift(HASH_TAIL_SHR, 0x76)
    xorshift(HASH_TAIL_SHL, 0x74)  # i32.shl
    b.func((I32,), (I32,), code=c, export="hash")
    return b.build()


def build_args100() -> bytes:
    b = ModuleBuilder()
    for t, name in ((I32, "noop_i32"), (I64, "noop_i64"), (F32, "noop_f32"), (F64, "noop_f64")):
        b.func((t,) * 100, (), code=Code(), export=name)
    return b.build()


def build_basics() -> bytes:
    b = ModuleBuilder()
    b.memory(1, 4, export="memory")
    b.func((I32,), (I32,), code=Code().local_get(0), export="id")
    b.func((I32, I32, I32), (I32,), code=Code().local_get(0), export="first")
    b.func((I32, I32, I32), (I32,), code=Code().local_get(1), export="second")
    b.func((I32, I32, I32), (I32,), code=Code().local_get(2), export="third")
    b.func((I32, I32), (I32,),
           code=Code().local_get(0).local_get(1).op(0x6A), export="add")
    b.func((I32, I32), (),
           code=Code().local_get(0).local_get(1).mem(0x36, 2, 0), export="store32")
    b.func((I32,), (I32,),
           code=Code().local_get(0).mem(0x28, 2, 0), export="load32")
    # eq(a, b): comparison firewall probe
    b.func((I32, I32), (I32,),
           code=Code().local_get(0).local_get(1).op(0x46), export="eq")
    b.func((F64, F64), (F64,),
           code=Code().local_get(0).local_get(1).op(0xA0), export="fadd")
    return b.build()


def compile_c(src: Path, out: Path, exports: list[str]) -> bool:
    clang = shutil.which("clang")
    if clang is None:
        return False
    cmd = [clang, "--target=wasm32", "-O1", "-nostdlib", "-Wl,--no-entry", "-Wl,--strip-all"]
    cmd += [f"-Wl,--export={e}" for e in exports]
    cmd += ["-o", str(out), str(src)]
    subprocess.run(cmd, check=True)
    return True


def main() -> int:
    root = Path(__file__).resolve().parent.parent
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else root / "src" / "wasmtaint" / "fixtures"
    outdir.mkdir(parents=True, exist_ok=True)

    (outdir / "hash.wasm").write_bytes(build_hash())
    (outdir / "args100.wasm").write_bytes(build_args100())
    (outdir / "basics.wasm").write_bytes(build_basics())
    print(f"wrote hash.wasm, args100.wasm, basics.wasm to {outdir}")

    csrc = root / "tools" / "csrc"
    if compile_c(csrc / "factorial.c", outdir / "factorial.wasm", ["fac"]):
        print("compiled factorial.wasm")
    else:
        print("clang not found; kept existing factorial.wasm")
    if compile_c(csrc / "memfill.c", outdir / "memfill.wasm", ["fill", "sum"]):
        print("compiled memfill.wasm")
    else:
        print("clang not found; kept existing memfill.wasm")
    return 0


if __name__ == "__main__":
    sys.exit(main())
