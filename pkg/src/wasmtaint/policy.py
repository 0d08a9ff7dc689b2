"""Run policies and the structured trace stream.

A policy is a flag mask that aborts an invocation whenever a value whose
flags intersect the mask crosses the wasm-to-host boundary, plus a log
level. The trace is one JSON record per line with stable field names;
sequence numbers increase strictly within a run. Policy violations are
never suppressed, at either log level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .taint import PropagationConfig, flags_of


class LogLevel(Enum):
    RETURNS_ONLY = "returns"
    FULL = "full"


@dataclass(frozen=True)
class TaintPolicy:
    """``terminate_mask`` is matched against flag bits only; 0 never
    terminates."""

    terminate_mask: int = 0
    log_level: LogLevel = LogLevel.RETURNS_ONLY


class Outcome(Enum):
    COMPLETED = "completed"
    POLICY_TERMINATED = "policy_terminated"
    TRAPPED = "trapped"


# CLI exit codes per outcome.
EXIT_CODES = {Outcome.COMPLETED: 0, Outcome.POLICY_TERMINATED: 3, Outcome.TRAPPED: 4}


@dataclass(frozen=True)
class TerminationStatus:
    outcome: Outcome
    violating_flags: int = 0
    trap_kind: str | None = None
    trap_offset: int | None = None
    trap_func: int | None = None

    @classmethod
    def completed(cls) -> "TerminationStatus":
        return cls(Outcome.COMPLETED)

    @classmethod
    def policy_terminated(cls, flags: int) -> "TerminationStatus":
        return cls(Outcome.POLICY_TERMINATED, violating_flags=flags)

    @classmethod
    def trapped(cls, trap) -> "TerminationStatus":
        return cls(
            Outcome.TRAPPED,
            trap_kind=trap.kind,
            trap_offset=trap.offset,
            trap_func=trap.func_index,
        )

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.outcome]

    def __bool__(self) -> bool:
        return self.outcome is Outcome.COMPLETED


def _hex(label: int) -> str:
    return f"0x{label:x}"


class TraceSink:
    """JSON-lines event stream for one instance.

    At ``RETURNS_ONLY`` level only tainted host returns and policy
    violations are written; at ``FULL`` every event is. Write failures
    propagate to the caller, never silently dropped.
    """

    def __init__(self, stream=None, level: LogLevel = LogLevel.RETURNS_ONLY):
        self.stream = stream
        self.level = level
        self.seq = 0

    @property
    def full(self) -> bool:
        return self.level is LogLevel.FULL

    def _write(self, record: dict) -> None:
        if self.stream is None:
            return
        record["seq"] = self.seq
        self.seq += 1
        self.stream.write(json.dumps(record, separators=(",", ":")) + "\n")

    def op(self, func: int, offset: int, name: str, operands: list[int], result: int | None) -> None:
        if not self.full:
            return
        rec = {"kind": "op", "func": func, "offset": offset, "op": name,
               "operands": [_hex(t) for t in operands]}
        if result is not None:
            rec["result"] = _hex(result)
        self._write(rec)

    def call(self, func: int, offset: int, callee: int) -> None:
        if self.full:
            self._write({"kind": "call", "func": func, "offset": offset, "callee": callee})

    def ret(self, func: int, result_taints: list[int]) -> None:
        if self.full:
            self._write({"kind": "return", "func": func,
                         "results": [_hex(t) for t in result_taints]})

    def memory_taint(self, func: int, offset: int, name: str, addr: int, width: int,
                     label: int) -> None:
        if self.full:
            self._write({"kind": "memory_taint", "func": func, "offset": offset,
                         "op": name, "addr": addr, "width": width, "label": _hex(label)})

    def host_return(self, results) -> None:
        tainted = any(r.taint for r in results)
        if self.full or tainted:
            self._write({
                "kind": "host_return",
                "results": [{"type": r.type, "value": r.value, "taint": _hex(r.taint)}
                            for r in results],
            })

    def violation(self, flags: int, mask: int) -> None:
        # Violations are written at every level.
        self._write({"kind": "policy_violation", "flags": _hex(flags), "mask": _hex(mask)})

    def shadow_dump(self, pairs: list[tuple[int, int]]) -> None:
        for addr, label in pairs:
            self._write({"kind": "memory_taint", "op": "dump", "addr": addr,
                         "width": 1, "label": _hex(label)})


def check_host_return(results, policy: TaintPolicy, cfg: PropagationConfig,
                      sink: TraceSink) -> TerminationStatus:
    """Policy check applied exactly when control crosses wasm -> host.

    Emits the host-return event, and a policy-violation event before
    terminating. Only flag bits participate; probability bits never do.
    """
    sink.host_return(results)
    mask = policy.terminate_mask
    if mask:
        hit = 0
        for r in results:
            hit |= flags_of(r.taint, cfg) & mask
        if hit:
            sink.violation(hit, mask)
            return TerminationStatus.policy_terminated(hit)
    return TerminationStatus.completed()
