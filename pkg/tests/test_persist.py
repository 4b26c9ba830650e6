import io
import json
import zipfile

import numpy as np
import pytest

from arborist.persist import (
    BUNDLE_SUFFIX,
    BundleError,
    bundle_bytes,
    load_output,
    outputs_equal,
    save_output,
    select_models,
)


def rewrite(raw, edit):
    """Copy a bundle, letting ``edit`` change the entry dict."""
    with zipfile.ZipFile(io.BytesIO(raw)) as zf:
        entries = {n: zf.read(n) for n in zf.namelist()}
    edit(entries)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for n, v in entries.items():
            zf.writestr(n, v)
    return buf.getvalue()


@pytest.fixture(params=["binary_output", "multiclass_output", "regression_output"])
def output(request):
    return request.getfixturevalue(request.param)


def test_round_trip_exact(output, tmp_path):
    path = save_output(output, tmp_path / f"run{BUNDLE_SUFFIX}")
    back = load_output(path)
    assert outputs_equal(output, back)
    for (name, split), pred in output.predictions.items():
        assert np.array_equal(back.predictions[(name, split)], pred)
        recomputed = back.models[name].predict(back.split_frame(split))
        assert np.array_equal(recomputed, pred)
    assert back.leaderboards["test"].names == output.leaderboards["test"].names


def test_repeated_saves_byte_identical(binary_output, tmp_path):
    a = save_output(binary_output, tmp_path / "a.bundle").read_bytes()
    b = save_output(binary_output, tmp_path / "b.bundle").read_bytes()
    assert a == b
    c = save_output(load_output(tmp_path / "a.bundle"), tmp_path / "c.bundle").read_bytes()
    assert a == c


def test_truncated_file(binary_output, tmp_path):
    raw = bundle_bytes(binary_output)
    p = tmp_path / "cut.bundle"
    p.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(BundleError):
        load_output(p)


def test_unknown_schema_version(binary_output, tmp_path):
    def bump(entries):
        m = json.loads(entries["manifest.json"])
        m["schema_version"] = 99
        entries["manifest.json"] = json.dumps(m).encode()

    p = tmp_path / "v99.bundle"
    p.write_bytes(rewrite(bundle_bytes(binary_output), bump))
    with pytest.raises(BundleError, match="schema_version 99"):
        load_output(p)


def test_checksum_mismatch(binary_output, tmp_path):
    def tamper(entries):
        entries["splits.json"] = entries["splits.json"].replace(b"[", b"[ ", 1)

    p = tmp_path / "bad.bundle"
    p.write_bytes(rewrite(bundle_bytes(binary_output), tamper))
    with pytest.raises(BundleError, match="checksum"):
        load_output(p)


def test_missing_and_unwritable_paths(binary_output, tmp_path):
    with pytest.raises(BundleError):
        load_output(tmp_path / "nope.bundle")
    with pytest.raises(BundleError):
        save_output(binary_output, tmp_path / "no_dir" / "x.bundle")


def test_select_models(binary_output, tmp_path):
    names = binary_output.model_names
    assert outputs_equal(select_models(binary_output, names), binary_output)
    one = select_models(binary_output, [names[2]])
    assert all(b.names == [names[2]] for b in one.leaderboards.values())
    assert set(k[0] for k in one.predictions) == {names[2]}
    assert one.data is binary_output.data and one.splits is binary_output.splits
    with pytest.raises(KeyError, match="ghost"):
        select_models(binary_output, ["ghost"])
    # idempotent and commutes with save/load
    again = select_models(one, [names[2]])
    assert outputs_equal(again, one)
    p = save_output(one, tmp_path / "one.bundle")
    assert outputs_equal(load_output(p), select_models(load_output(save_output(binary_output, tmp_path / "all.bundle")), [names[2]]))


def test_output_invariants(output):
    output.validate()
    for board in output.leaderboards.values():
        assert set(board.names) == set(output.model_names)
        for row in board.rows:
            for m in row.metrics():
                assert all((m, s) in row.values for s in ("train", "test", "valid"))
