import sys
from pathlib import Path

import pytest

from wasmtaint import decode_module, instantiate, validate_subset
from wasmtaint.build import Code, ModuleBuilder

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent.parent / "src" / "wasmtaint" / "fixtures"


def load_fixture(name):
    return validate_subset(decode_module((FIXTURES / name).read_bytes()))


def op_module(opc: int) -> bytes:
    """One exported function 'f' wrapping a single numeric opcode."""
    from wasmtaint.ops import OPS
    _, _, ins, out, _ = OPS[opc]
    c = Code()
    for i in range(len(ins)):
        c.local_get(i)
    c.op(opc)
    b = ModuleBuilder()
    b.func(ins, (out,), code=c, export="f")
    return b.build()


def make_instance(wasm_bytes: bytes, *args, **kwargs):
    return instantiate(validate_subset(decode_module(wasm_bytes)), *args, **kwargs)


@pytest.fixture(scope="session")
def factorial_module():
    return load_fixture("factorial.wasm")


@pytest.fixture(scope="session")
def hash_module():
    return load_fixture("hash.wasm")


@pytest.fixture(scope="session")
def memfill_module():
    return load_fixture("memfill.wasm")


@pytest.fixture(scope="session")
def basics_module():
    return load_fixture("basics.wasm")


@pytest.fixture(scope="session")
def args100_module():
    return load_fixture("args100.wasm")
