"""Acceptance criteria 1-7; each test prints one PASS/FAIL line."""

import json
import time

import pytest

from annkit import suites
from annkit.cli import main


@pytest.fixture(scope="module")
def full_run():
    start = time.perf_counter()
    report = suites.run_all(seed=0)
    return report, time.perf_counter() - start


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def suite(report, name):
    (rep,) = [r for r in report["suites"] if r["suite"] == name]
    return rep


def test_criterion_1_paper_examples(capsys, verdict):
    code = main(["paper-examples", "--json"])
    doc = json.loads(capsys.readouterr().out)
    failed = [e["id"] for e in doc["entries"] if not e["passed"]]
    ok = code == 0 and doc["passed"] and not failed and doc["tol"] == 1e-9 and len(doc["entries"]) == 14
    verdict(1, ok, f"{len(doc['entries']) - len(failed)}/{len(doc['entries'])} golden entries, tol {doc['tol']}")


def test_criterion_2_binary_merging_coverage(full_run, verdict):
    rep = suite(full_run[0], "binary-merging-coverage")
    ok = rep["passed"] and rep["trials"] == 1000 and rep["failures"] == 0 and rep["powerset_counterexample_found"]
    verdict(2, ok, f"trials={rep['trials']} failures={rep['failures']} powerset witness={rep['powerset_counterexample_found']}")


def test_criterion_3_instantiation(full_run, verdict):
    rep = suite(full_run[0], "instantiation")
    ok = rep["passed"] and rep["trials"] == 1000 and rep["failures"] == 0 and rep["max_error"] <= 1e-9
    verdict(3, ok, f"trials={rep['trials']} failures={rep['failures']} max_error={rep['max_error']:.3g}")


def test_criterion_4_end_to_end_witnesses(full_run, verdict):
    plain = suite(full_run[0], "end-to-end-witness")
    shifted = suite(full_run[0], "shifted-end-to-end-witness")
    ok = (
        plain["passed"]
        and shifted["passed"]
        and plain["trials"] == 2000
        and plain["failures"] == shifted["failures"] == 0
        and plain["max_error"] <= 1e-6
        and shifted["max_error"] <= 1e-6
    )
    verdict(
        4,
        ok,
        f"plain {plain['trials']} trials / {plain['failures']} failures, "
        f"shifted {shifted['trials']} trials / {shifted['failures']} failures",
    )


def test_criterion_5_shift_construction(full_run, verdict):
    rep = suite(full_run[0], "shift-construction")
    ok = rep["passed"] and rep["trials"] >= 1000 and rep["failures"] == 0 and rep["max_error"] <= 1e-9
    verdict(5, ok, f"samples={rep['trials']} failures={rep['failures']} max_error={rep['max_error']:.3g}")


def test_criterion_6_interval_analysis(full_run, verdict):
    rep = suite(full_run[0], "interval-analysis")
    ok = rep["passed"] and rep["trials"] >= 10 * 1000 + 100 * 10 and rep["failures"] == 0
    verdict(6, ok, f"trials={rep['trials']} failures={rep['failures']}")


def test_criterion_7_determinism(full_run, verdict):
    report, elapsed = full_run
    again = suites.run_all(seed=0)
    ok = suites.report_bytes(report) == suites.report_bytes(again) and report["passed"]
    verdict(7, ok, f"byte-identical reports, one full run took {elapsed:.1f}s")
