"""WebAssembly interpretation with dynamic taint tracking.

Typical use::

    from wasmtaint import decode_module, validate_subset, instantiate

    module = validate_subset(decode_module(open("m.wasm", "rb").read()))
    inst = instantiate(module)
    results, status = inst.invoke("f", [5, 0x1])   # arg 5 tainted with 0x1
"""

from .errors import (
    DecodeError,
    LinkError,
    TaintEncodingError,
    Trap,
    ValidationError,
    WasmTaintError,
)
from .interp import Instance, TaintedValue, instantiate, invoke, memory_grow
from .loader import (
    FunctionSignature,
    GlobalSpec,
    MemorySpec,
    Module,
    decode_module,
)
from .policy import (
    LogLevel,
    Outcome,
    TaintPolicy,
    TerminationStatus,
    TraceSink,
    check_host_return,
)
from .shadow import ShadowMemory
from .taint import (
    PropagationConfig,
    RandomSource,
    TaintLabel,
    TaintMode,
    flags_of,
    normalize_label,
    probability_of,
    propagate_binop,
    propagate_unop,
    with_probability,
)
from .validate import validate_subset

__version__ = "0.1.0"

__all__ = [
    "DecodeError", "LinkError", "TaintEncodingError", "Trap", "ValidationError",
    "WasmTaintError",
    "Instance", "TaintedValue", "instantiate", "invoke", "memory_grow",
    "FunctionSignature", "GlobalSpec", "MemorySpec", "Module", "decode_module",
    "LogLevel", "Outcome", "TaintPolicy", "TerminationStatus", "TraceSink",
    "check_host_return",
    "ShadowMemory",
    "PropagationConfig", "RandomSource", "TaintLabel", "TaintMode",
    "flags_of", "normalize_label", "probability_of", "propagate_binop",
    "propagate_unop", "with_probability",
    "validate_subset",
    "load_module",
]


def load_module(path) -> Module:
    """Decode and validate a module from a ``.wasm`` file."""
    with open(path, "rb") as fh:
        return validate_subset(decode_module(fh.read()))
