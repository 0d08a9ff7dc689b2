"""Acceptance suite: one test per release criterion, at full scale.

Each test prints one [PASS] line on success (visible with ``pytest -s`` or
in captured output); a failure reads as [FAIL] via the assertion message.
Statistical gates use frozen seeds, binomial 3-sigma tolerances, and
closed-form oracles computed from the encoded (quantized) probabilities.
"""

import json
import math
import random
import subprocess
import sys

from conftest import FIXTURES, make_instance, op_module

from wasmtaint import (
    LogLevel,
    Outcome,
    PropagationConfig,
    RandomSource,
    TaintMode,
    TaintPolicy,
    TraceSink,
    flags_of,
    instantiate,
    propagate_binop,
)
from wasmtaint import bench
from wasmtaint.build import Code, ModuleBuilder
from wasmtaint.ops import BINOP, CMP1, CMP2, F32, F64, I32, I64, OPS, UNOP
from oracles import ByteShadow, factorial_ref, hash_ref

BASIC = PropagationConfig()

_SAFE_OPERANDS = {I32: (25, 7), I64: (25, 7), F32: (2.5, -1.25), F64: (2.5, -1.25)}
_TAINT_COMBOS = [(0x0, 0x0), (0x1, 0x0), (0x0, 0x2), (0x1, 0x2)]


def _run_cli(*args):
    return subprocess.run([sys.executable, "-m", "wasmtaint", *args],
                          capture_output=True, text=True)


def test_criterion_01_table1_conformance():
    """Every supported numeric opcode, against the class rules, exactly."""
    checked = 0
    for opc, (name, cls, ins, out, _) in sorted(OPS.items()):
        inst = make_instance(op_module(opc))
        values = [_SAFE_OPERANDS[t][i] for i, t in enumerate(ins)]
        baseline = None
        for t1, t2 in _TAINT_COMBOS:
            taints = [t1, t2][:len(ins)]
            res, status = inst.invoke("f", values + taints)
            assert status.outcome is Outcome.COMPLETED, (name, status)
            r = res[0]
            if baseline is None:
                baseline = r.value
            assert r.value == baseline, f"{name}: taint perturbed the value"
            if cls in (CMP1, CMP2):
                want = 0
            elif cls == UNOP:
                want = taints[0]
            else:
                assert cls == BINOP
                want = taints[0] | (taints[1] if len(taints) > 1 else 0)
            assert r.taint == want, f"{name}: taint {r.taint:#x}, want {want:#x}"
        inst.close()
        checked += 1
    assert checked == len(OPS) == 123
    print(f"\n[PASS] criterion 1: Table-1 conformance over {checked} numeric opcodes "
          f"x {len(_TAINT_COMBOS)} taint combinations (exact)")


def test_criterion_02_signature_overloading(basics_module):
    """The three canonical call shapes, including the discarded surplus label."""
    inst = instantiate(basics_module)
    picks = ("first", "second", "third")

    for export in picks:
        res, _ = inst.invoke(export, [50, 100, 200])
        assert res[0].taint == 0x0

    got = [inst.invoke(e, [50, 100, 200, 0x000000F0])[0][0].taint for e in picks]
    assert got == [0x000000F0, 0x0, 0x0]

    args = [1, 2, 3, 0x1, 0x2, 0x4, 0x8]
    got = [inst.invoke(e, args)[0][0].taint for e in picks]
    assert got == [0x1, 0x2, 0x4]  # the 0x8 is discarded
    inst.close()
    print("\n[PASS] criterion 2: signature overloading reproduces all three "
          "call examples exactly, surplus label discarded")


def _memops_module():
    b = ModuleBuilder()
    b.memory(1, export="memory")
    for name, store_op, load_op, vt in (
            ("1", 0x3A, 0x2D, I32), ("2", 0x3B, 0x2F, I32),
            ("4", 0x36, 0x28, I32), ("8", 0x37, 0x29, I64)):
        b.func((I32, vt), (),
               code=Code().local_get(0).local_get(1).mem(store_op, 0, 0),
               export=f"store{name}")
        b.func((I32,), (vt,),
               code=Code().local_get(0).mem(load_op, 0, 0),
               export=f"load{name}")
    return b.build()


def test_criterion_03_shadow_oracle_equivalence():
    """1e4 randomized mixed-width store/load ops == per-byte reference model."""
    module = _memops_module()
    total_ops = 10_000
    sequences = 4
    rng = random.Random(0xC3)
    loads_checked = 0
    for seq in range(sequences):
        inst = make_instance(module)
        model = ByteShadow(65536)
        for _ in range(total_ops // sequences):
            width = rng.choice((1, 2, 4, 8))
            addr = rng.randrange(65536 - 8)
            if rng.random() < 0.55:
                label = 0 if rng.random() < 0.3 else rng.getrandbits(32) or 1
                value = rng.getrandbits(8 * width)
                inst.invoke(f"store{width}", [addr, value, 0, label])
                model.store(addr, width, label)
            else:
                res, _ = inst.invoke(f"load{width}", [addr])
                want = model.load_basic(addr, width)
                assert res[0].taint == want, f"load{width}@{addr}"
                loads_checked += 1
        assert len(inst.shadow) == model.count()
        inst.close()
    print(f"\n[PASS] criterion 3: {total_ops} randomized store/load ops match the "
          f"per-byte model exactly ({loads_checked} loads checked)")


def test_criterion_04_probabilistic_distribution():
    """5x5 probability grid, 1e5 trials/point, 3-sigma binomial bands; exact
    max-probability carry on every nonzero outcome."""
    cfg = PropagationConfig(TaintMode.PROBABILISTIC, 8)
    trials = 100_000
    numerators = [0, 64, 128, 191, 255]  # p = 0, .251, .502, .749, 1.0
    for m1 in numerators:
        for m2 in numerators:
            rng = RandomSource(1000 + m1 * 256 + m2)
            t1 = (m1 << 24) | 0x1
            t2 = (m2 << 24) | 0x2
            counts = {0x0: 0, 0x1: 0, 0x2: 0, 0x3: 0}
            expected_m = max(m1, m2)
            for _ in range(trials):
                got = propagate_binop(t1, t2, False, cfg, rng)
                flags = flags_of(got, cfg)
                counts[flags] += 1
                if flags:
                    assert got >> 24 == expected_m, "max-probability carry broke"
                else:
                    assert got == 0
            p1, p2 = m1 / 255, m2 / 255
            expect = {0x3: p1 * p2, 0x1: p1 * (1 - p2),
                      0x2: (1 - p1) * p2, 0x0: (1 - p1) * (1 - p2)}
            for flags, p in expect.items():
                sigma = math.sqrt(p * (1 - p) / trials)
                diff = abs(counts[flags] / trials - p)
                assert diff <= 3 * sigma + 1e-12, (
                    f"m1={m1} m2={m2} outcome {flags:#x}: "
                    f"freq {counts[flags]/trials:.5f} vs {p:.5f} (3s={3*sigma:.5f})")
    print("\n[PASS] criterion 4: four-outcome frequencies within 3 sigma on the "
          "5x5 grid at 1e5 trials/point; max-probability carry exact")


def test_criterion_05_synthetic_chain_lifetime():
    """Survival through N sequential binops == p_enc**N within 3 sigma."""
    iterations = 100_000
    for steps in (10, 50, 200):
        assert bench.chain_survival(steps, 1.0, iterations, seed=41) == 1.0
        assert bench.chain_survival(steps, 0.0, iterations, seed=41) == 0.0
        for p in (0.5, 0.8, 0.95):
            p_enc = round(p * 255) / 255
            want = p_enc ** steps
            got = bench.chain_survival(steps, p, iterations, seed=41)
            sigma = math.sqrt(want * (1 - want) / iterations)
            assert abs(got - want) <= 3 * sigma + 1e-12, (
                f"N={steps} p={p}: survival {got} vs {want:.3e} (3s={3*sigma:.3e})")
    print("\n[PASS] criterion 5: synthetic-chain survival matches the p**N "
          "closed form within 3 sigma for N in {10,50,200}; endpoints exact")


def test_criterion_06_hash_lifetime_shape(hash_module):
    """Lifetime curve at 8-bit resolution: monotone within 3-sigma bands,
    endpoints exactly 0% and 100%; kernel runs 2700 binops per call."""
    # dynamic binop count, verified through a full trace
    class Counter:
        def __init__(self):
            self.binops = 0

        def write(self, line):
            rec = json.loads(line)
            if rec.get("kind") == "op" and rec.get("op") in _BINOP_NAMES:
                self.binops += 1

    counter = Counter()
    inst = instantiate(hash_module, BASIC, TaintPolicy(0, LogLevel.FULL),
                       trace=TraceSink(counter, LogLevel.FULL))
    inst.invoke("hash", [0xDEADBEEF])
    inst.close()
    assert abs(counter.binops - 2700) <= 27, counter.binops  # within 1%

    report = bench.lifetime(hash_module, stride=51, iterations=10_000, seed=0)
    points = report.points
    assert [pt.m for pt in points] == [0, 51, 102, 153, 204, 255]
    assert points[0].fraction == 0.0, "p=0 endpoint must be exactly 0%"
    assert points[-1].fraction == 1.0, "p=1 endpoint must be exactly 100%"
    for a, b in zip(points, points[1:]):
        sig_a = math.sqrt(max(a.fraction * (1 - a.fraction), 0) / a.iterations)
        sig_b = math.sqrt(max(b.fraction * (1 - b.fraction), 0) / b.iterations)
        assert b.fraction >= a.fraction - 3 * (sig_a + sig_b), (
            f"curve not monotone: f({a.m})={a.fraction} > f({b.m})={b.fraction}")
    print(f"\n[PASS] criterion 6: hash lifetime curve monotone within 3-sigma "
          f"bands over {len(points)} probabilities x 1e4 runs, endpoints exact; "
          f"kernel executes {counter.binops} binops")


_BINOP_NAMES = {name for name, cls, *_ in OPS.values() if cls == BINOP}


def test_criterion_07_value_semantics_equivalence(factorial_module, hash_module):
    """Fixture return values bit-identical to pure reimplementations for 1e3
    random inputs, tainted and untainted."""
    rng = random.Random(0x5EED)
    fac = instantiate(factorial_module)
    inputs = [rng.randrange(0, 250) for _ in range(900)]
    inputs += [0, 1, 2, 12, 13, 34]
    inputs += [rng.getrandbits(32) | 0x80000000 for _ in range(94)]  # negatives
    assert len(inputs) == 1000
    for n in inputs:
        want = factorial_ref(n)
        r, _ = fac.invoke("fac", [n])
        assert r[0].value == want, f"fac({n}) untainted"
        r, _ = fac.invoke("fac", [n, 0x1])
        assert r[0].value == want, f"fac({n}) tainted"
    fac.close()

    h = instantiate(hash_module)
    for _ in range(1000):
        x = rng.getrandbits(32)
        want = hash_ref(x)
        r, _ = h.invoke("hash", [x])
        assert r[0].value == want, f"hash({x}) untainted"
        r, _ = h.invoke("hash", [x, 0x1])
        assert r[0].value == want, f"hash({x}) tainted"
        assert r[0].taint == 0x1  # basic mode: taint of x survives the mixing
    h.close()
    print("\n[PASS] criterion 7: factorial and hash bit-identical to pure "
          "reimplementations over 1e3 random inputs each, with and without taint")


def test_criterion_08_policy_termination():
    """Mask 0x15 terminates on flags 0x1/0x4/0x10/0x5, completes on
    0x2/0x8/0x0; verified through CLI exit codes."""
    basics = str(FIXTURES / "basics.wasm")
    for flags, want_exit in ((0x1, 3), (0x4, 3), (0x10, 3), (0x5, 3),
                             (0x2, 0), (0x8, 0), (0x0, 0)):
        p = _run_cli("run", basics, "id", "9",
                     "--taints", hex(flags), "--policy", "0x15")
        assert p.returncode == want_exit, (
            f"flags {flags:#x}: exit {p.returncode}, want {want_exit}\n{p.stderr}")
    print("\n[PASS] criterion 8: mask 0x15 terminates/completes on the exact "
          "flag sets, verified via CLI exit codes")


def test_criterion_09_overhead_microbenchmark(args100_module):
    """100-argument taint-insertion experiment runs for every numeric type;
    ratio sane, report structure deterministic."""
    keys = None
    ratios = {}
    for t in (I32, I64, F32, F64):
        point = bench.overhead(args100_module, t, iterations=400)
        rec = point.as_record()
        if keys is None:
            keys = list(rec)
        assert list(rec) == keys, "report structure changed between types"
        assert rec["ratio"] >= 0.9, f"{t}: ratio {rec['ratio']}"
        ratios[t] = rec["ratio"]
    again = bench.overhead(args100_module, I32, iterations=400).as_record()
    assert list(again) == keys, "report structure not deterministic"
    pretty = ", ".join(f"{t}={ratios[t]:.2f}x" for t in ratios)
    print(f"\n[PASS] criterion 9: overhead benchmark ran for all types ({pretty}); "
          f"structure deterministic, ratios >= 0.9")


def test_criterion_10_determinism(tmp_path):
    """Identical CLI arguments (incl. --seed) give byte-identical traces and
    reports."""
    hash_path = str(FIXTURES / "hash.wasm")
    t1, t2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    run_args = ("run", hash_path, "hash", "12345", "--taints", "0xCC000001",
                "--mode", "prob", "--seed", "42", "--log", "full")
    p1 = _run_cli(*run_args, "--trace", str(t1))
    p2 = _run_cli(*run_args, "--trace", str(t2))
    assert p1.returncode == p2.returncode == 0
    assert p1.stdout == p2.stdout
    assert t1.read_bytes() == t2.read_bytes() and t1.stat().st_size > 0

    c1, c2 = tmp_path / "a.csv", tmp_path / "b.csv"
    bench_args = ("bench", "lifetime", "--stride", "85", "--iterations", "300",
                  "--seed", "7")
    assert _run_cli(*bench_args, "--out", str(c1)).returncode == 0
    assert _run_cli(*bench_args, "--out", str(c2)).returncode == 0
    assert c1.read_bytes() == c2.read_bytes()

    ch1 = _run_cli("bench", "chain", "--steps", "30", "--prob", "0.9", "--seed", "3",
                   "--iterations", "5000")
    ch2 = _run_cli("bench", "chain", "--steps", "30", "--prob", "0.9", "--seed", "3",
                   "--iterations", "5000")
    assert ch1.stdout == ch2.stdout
    print("\n[PASS] criterion 10: identical seeded CLI runs produce byte-identical "
          "traces, lifetime CSVs, and chain reports")
