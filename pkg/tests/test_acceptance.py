"""Acceptance criteria 1-6 at their stated tolerances and sample sizes.

Each test records a single PASS/FAIL line (shown in the terminal summary)
and fails if any of its checks fails or its runtime budget is exceeded.
"""

import time

import pytest

from secisac.cli import EXIT_OK, main
from secisac.system_model import SystemParams
from secisac.validation import (
    check_ccdf_bracket,
    check_crb_chain,
    check_ergodic_crb,
    check_rates,
    check_structural,
)

pytestmark = pytest.mark.slow

SEED = 42
FIG_C_TAU = 0.76


def _record(log, number, title, checks, elapsed, budget):
    ok = all(c.passed for c in checks) and elapsed < budget
    detail = "; ".join(f"{c.name}={c.measured:.3g}<={c.tolerance:.3g}" for c in checks)
    log.append(f"criterion {number} {title}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s < {budget}s) {detail}")
    failed = [c.line() for c in checks if not c.passed]
    assert not failed, failed
    assert elapsed < budget


def _timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start


def test_criterion_1_structural_invariants(acceptance_log):
    checks, elapsed = _timed(check_structural, SystemParams(), draws=1000, seed=SEED)
    _record(acceptance_log, 1, "structural invariants", checks, elapsed, 10)


def test_criterion_2_crb_oracle_chain(acceptance_log):
    checks, elapsed = _timed(check_crb_chain, SystemParams(), draws=100, seed=SEED)
    _record(acceptance_log, 2, "CRB oracle chain", checks, elapsed, 30)


def test_criterion_3_ccdf_bracket(acceptance_log):
    params = SystemParams(tau=FIG_C_TAU)
    checks, elapsed = _timed(check_ccdf_bracket, params, trials=10_000, samples=100_000, seed=SEED)
    _record(acceptance_log, 3, "CCDF bracket", checks, elapsed, 300)


def test_criterion_4_ergodic_crb(acceptance_log):
    checks, elapsed = _timed(check_ergodic_crb, SystemParams(), trials=1_000_000, samples=100_000, seed=SEED)
    _record(acceptance_log, 4, "ergodic CRB", checks, elapsed, 300)


def test_criterion_5_rates(acceptance_log):
    checks, elapsed = _timed(check_rates, SystemParams(), trials=1_000_000, samples=1_000_000, seed=SEED)
    _record(acceptance_log, 5, "rates", checks, elapsed, 600)


def test_criterion_6_determinism(acceptance_log, tmp_path):
    start = time.perf_counter()
    outputs = {}
    for run in range(2):
        report = tmp_path / f"report-{run}.txt"
        code = main(["validate", "--seed", str(SEED), "--out", str(report)])
        files = [report.read_bytes()]
        for command in ("fig-a", "fig-b", "fig-c"):
            csv_path = tmp_path / f"{command}-{run}.csv"
            assert main([command, "--seed", str(SEED), "--out", str(csv_path)]) == EXIT_OK
            files.append(csv_path.read_bytes())
        outputs[run] = (code, files)
    elapsed = time.perf_counter() - start
    identical = outputs[0][1] == outputs[1][1]
    exit_ok = outputs[0][0] == outputs[1][0] == EXIT_OK
    status = "PASS" if identical and exit_ok else "FAIL"
    acceptance_log.append(
        f"criterion 6 determinism: {status} ({elapsed:.1f}s) validate exit={outputs[0][0]}, "
        f"report and 3 CSVs byte-identical={identical}"
    )
    assert identical
    assert exit_ok
