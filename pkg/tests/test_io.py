import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rankreg import io
from rankreg.exceptions import InputError
from rankreg.objective import default_x0, step_size
from rankreg.solvers import SolverConfig, solve
from rankreg.suites import standard_bundle

any_float = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.tuples(st.integers(1, 5), st.integers(1, 5)).flatmap(
    lambda s: arrays(np.float64, s, elements=any_float)))
def test_matrix_csv_roundtrip_is_exact(tmp_path_factory, M):
    path = tmp_path_factory.mktemp("m") / "m.csv"
    io.write_matrix(path, M)
    back = io.read_matrix(path)
    assert back.shape == M.shape
    assert np.array_equal(back.view(np.uint64), M.view(np.uint64))


def test_matrix_csv_format(tmp_path):
    io.write_matrix(tmp_path / "a.csv", [[1.0, 0.1], [-2.5, 3e-300]])
    assert (tmp_path / "a.csv").read_text() == "1.0,0.1\n-2.5,3e-300\n"


def test_read_matrix_errors(tmp_path):
    (tmp_path / "r.csv").write_text("1,2\n3\n")
    with pytest.raises(InputError):
        io.read_matrix(tmp_path / "r.csv")
    (tmp_path / "x.csv").write_text("1,abc\n")
    with pytest.raises(InputError):
        io.read_matrix(tmp_path / "x.csv")
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(InputError):
        io.read_matrix(tmp_path / "e.csv")
    with pytest.raises(InputError):
        io.read_matrix(tmp_path / "missing.csv")


def test_synthetic_generator():
    b = io.make_synthetic(20, 15, 10, 3, 0.01, 300.0, 0)
    assert b.Y.shape == (20, 10) and b.D.shape == (20, 15)
    assert np.linalg.matrix_rank(b.X_true) == 3
    sig = np.linalg.svd(b.X_true, compute_uv=False)
    assert sig[2] > 1e-6 * sig[0] and sig[3] < 1e-12 * sig[0]
    z = io.make_synthetic(5, 4, 3, 0, 0.0, 1.0, 1)
    assert not z.Y.any() and not z.X_true.any()
    with pytest.raises(InputError):
        io.make_synthetic(5, 4, 3, 4, 0.0, 1.0, 1)
    with pytest.raises(InputError):
        io.make_synthetic(5, 4, 3, 1, -1.0, 1.0, 1)
    with pytest.raises(InputError):
        io.make_synthetic(0, 4, 3, 1, 0.0, 1.0, 1)


def test_bundle_roundtrip(tmp_path):
    b = io.make_synthetic(6, 5, 4, 2, 0.1, 2.0, 9)
    manifest = io.write_bundle(tmp_path / "b", b)
    doc = json.loads(manifest.read_text())
    assert set(doc) == {"lambda", "Y", "D", "X_true", "seed"}
    for src in (tmp_path / "b", manifest):
        back = io.read_bundle(src)
        assert np.array_equal(back.Y, b.Y) and np.array_equal(back.D, b.D)
        assert np.array_equal(back.X_true, b.X_true)
        assert back.lam == 2.0 and back.seed == 9


def test_bundle_inline_and_errors(tmp_path):
    m = tmp_path / "manifest.json"
    m.write_text(json.dumps({"lambda": 1, "Y": [[1.0], [2.0]], "D": [[1, 0], [0, 1]]}))
    b = io.read_bundle(m)
    assert b.problem().x_shape == (2, 1) and b.X_true is None
    m.write_text(json.dumps({"lambda": 1, "Y": [[1.0]], "D": [[1, 0], [0, 1]]}))
    with pytest.raises(InputError):
        io.read_bundle(m)
    m.write_text(json.dumps({"Y": [[1.0]], "D": [[1.0]]}))
    with pytest.raises(InputError):
        io.read_bundle(m)
    m.write_text("{not json")
    with pytest.raises(InputError):
        io.read_bundle(m)
    m.write_text(json.dumps({"lambda": -1, "Y": [[1.0]], "D": [[1.0]]}))
    with pytest.raises(InputError):
        io.read_bundle(m)
    m.write_text(json.dumps({"lambda": 1, "Y": "nope.csv", "D": [[1.0]]}))
    with pytest.raises(InputError):
        io.read_bundle(m)


@pytest.fixture(scope="module")
def small_traces():
    P = standard_bundle(0).problem()
    X0 = default_x0(P)
    plan = step_size(P, X0)
    return {alg: solve(P, X0, SolverConfig(alg, plan, max_iters=40))[1]
            for alg in ("pgd", "apg-nm", "apg-m")}


def test_trace_roundtrip(tmp_path, small_traces):
    for alg, tr in small_traces.items():
        path = tmp_path / f"{alg}.csv"
        io.write_trace(path, tr)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(io.TRACE_COLUMNS)
        assert len(lines) == len(tr.records) + 1
        rows = io.read_trace(path)
        for rec, row in zip(tr.records, rows):
            assert row["objective"] == rec.objective
            assert row["fixpoint_residual"] == rec.fixpoint_residual
            assert row["rank"] == row["support_size"] == rec.rank
            assert row["alpha"] == rec.alpha
            assert row["z_accepted"] == rec.z_accepted


def test_trace_header_checked(tmp_path):
    (tmp_path / "t.csv").write_text("a,b\n1,2\n")
    with pytest.raises(InputError):
        io.read_trace(tmp_path / "t.csv")


def test_combined_and_svg(tmp_path, small_traces):
    io.write_combined(tmp_path / "c.csv", small_traces)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "algo,iter,objective,rank"
    assert len(lines) - 1 == sum(len(t.records) for t in small_traces.values())
    series = {a: t.objectives().tolist() for a, t in small_traces.items()}
    series["flat"] = [0.0, 0.0]
    io.write_svg(tmp_path / "p.svg", series)
    root = ET.parse(tmp_path / "p.svg").getroot()
    lines = root.findall("{http://www.w3.org/2000/svg}polyline")
    assert len(lines) == 4


def test_report_is_stable(tmp_path):
    rep = {"b": np.float64(1.5), "a": [np.int64(2), np.bool_(True)],
           "c": float("inf")}
    io.write_report(tmp_path / "r1.json", rep)
    io.write_report(tmp_path / "r2.json", dict(reversed(list(rep.items()))))
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()
    doc = json.loads((tmp_path / "r1.json").read_text())
    assert doc["schema"] == 1 and doc["a"] == [2, True] and doc["c"] == "inf"


def test_unwritable_path(tmp_path):
    with pytest.raises(InputError):
        io.write_matrix(tmp_path / "no" / "such" / "dir.csv", np.eye(2))
