"""CLI behavior: exit codes, trace output, reproducibility."""

import json
import subprocess
import sys

import pytest

from conftest import FIXTURES

BASICS = str(FIXTURES / "basics.wasm")
FACTORIAL = str(FIXTURES / "factorial.wasm")
HASH = str(FIXTURES / "hash.wasm")


def run_cli(*args, **kwargs):
    return subprocess.run([sys.executable, "-m", "wasmtaint", *args],
                          capture_output=True, text=True, **kwargs)


def test_run_factorial():
    p = run_cli("run", FACTORIAL, "fac", "5")
    assert p.returncode == 0
    assert "result[0] = 120 : i32 taint 0x0" in p.stdout


def test_run_factorial_tainted():
    p = run_cli("run", FACTORIAL, "fac", "5", "--taints", "0x1")
    assert p.returncode == 0
    assert "result[0] = 120 : i32 taint 0x1" in p.stdout


def test_policy_exit_code():
    p = run_cli("run", BASICS, "id", "7", "--taints", "0x4", "--policy", "0x15")
    assert p.returncode == 3
    p = run_cli("run", BASICS, "id", "7", "--taints", "0x2", "--policy", "0x15")
    assert p.returncode == 0


def test_trap_exit_code():
    p = run_cli("run", BASICS, "load32", "65535")
    assert p.returncode == 4
    assert "trapped" in p.stderr


def test_missing_file_exit_code():
    p = run_cli("run", "no-such-module.wasm", "f")
    assert p.returncode == 1


def test_bad_module_exit_code(tmp_path):
    bad = tmp_path / "bad.wasm"
    bad.write_bytes(b"\x00\x61\x73\x6d\x02\x00\x00\x00")
    p = run_cli("run", str(bad), "f")
    assert p.returncode == 2
    assert "error" in p.stderr


def test_unknown_export_exit_code():
    p = run_cli("run", BASICS, "nope")
    assert p.returncode == 2


def test_arity_check():
    p = run_cli("run", BASICS, "first", "1", "2")
    assert p.returncode == 2
    assert "takes 3 arguments" in p.stderr


def test_trace_written(tmp_path):
    trace = tmp_path / "t.jsonl"
    p = run_cli("run", BASICS, "add", "2", "3", "--taints", "0x1", "0x2",
                "--log", "full", "--trace", str(trace))
    assert p.returncode == 0
    recs = [json.loads(line) for line in trace.read_text().splitlines()]
    assert any(r.get("op") == "i32.add" for r in recs)
    assert recs[-1]["kind"] == "host_return"


def test_run_deterministic_with_seed(tmp_path):
    t1, t2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    args = ("run", HASH, "hash", "123", "--taints", "0xFF000001",
            "--mode", "prob", "--seed", "42", "--log", "full")
    p1 = run_cli(*args, "--trace", str(t1))
    p2 = run_cli(*args, "--trace", str(t2))
    assert p1.returncode == p2.returncode == 0
    assert p1.stdout == p2.stdout
    assert t1.read_bytes() == t2.read_bytes()
    assert t1.stat().st_size > 0


def test_bench_lifetime_deterministic(tmp_path):
    c1, c2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ("bench", "lifetime", "--stride", "127", "--iterations", "80", "--seed", "5")
    assert run_cli(*args, "--out", str(c1)).returncode == 0
    assert run_cli(*args, "--out", str(c2)).returncode == 0
    assert c1.read_bytes() == c2.read_bytes()
    rows = c1.read_text().splitlines()
    assert rows[0] == "m,p,iterations,tainted,fraction"


def test_bench_chain_output():
    p = run_cli("bench", "chain", "--steps", "10", "--prob", "0.5",
                "--iterations", "2000", "--seed", "3")
    assert p.returncode == 0
    rec = json.loads(p.stdout)
    assert rec["steps"] == 10
    assert 0.0 <= rec["survival"] <= 1.0
    assert rec["expected"] == pytest.approx(0.5 ** 10)


def test_bench_overhead_structure():
    p = run_cli("bench", "overhead", "--type", "i32", "--iterations", "60")
    assert p.returncode == 0
    rec = json.loads(p.stdout)
    assert set(rec) == {"type", "args", "iterations", "untainted_ns_per_call",
                        "tainted_ns_per_call", "ratio"}


def test_dump_shadow(tmp_path):
    trace = tmp_path / "t.jsonl"
    p = run_cli("run", BASICS, "store32", "100", "7", "--taints", "0", "0x2",
                "--trace", str(trace), "--dump-shadow")
    assert p.returncode == 0
    recs = [json.loads(line) for line in trace.read_text().splitlines()]
    dumps = [r for r in recs if r["kind"] == "memory_taint"]
    assert [d["addr"] for d in dumps] == [100, 101, 102, 103]


def test_float_literal_for_i32_param_rejected():
    p = run_cli("run", BASICS, "add", "2.5", "3")
    assert p.returncode == 2
    assert "i32 literal" in p.stderr


def test_f64_args_through_cli():
    p = run_cli("run", BASICS, "fadd", "2.5", "0.25", "--taints", "0x0", "0x8")
    assert p.returncode == 0
    assert "result[0] = 2.75 : f64 taint 0x8" in p.stdout
