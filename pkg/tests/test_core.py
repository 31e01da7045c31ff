import time

import numpy as np
import pytest
from pydantic import ValidationError

from kerdisc.config import env_int
from kerdisc.core.io import load_samples, save_samples
from kerdisc.core.sampling import project, sample_directions
from kerdisc.core.schemas import DirectionSet, DiscrepancyEstimate, RngState, SampleBatch
from kerdisc.discrepancy.utils import build_estimate
from kerdisc.exceptions import InvalidArgumentError, NumericalError, ParseError


def test_sample_batch_shapes():
    """A 1-D array becomes a single column; the stored matrix is read-only."""
    batch = SampleBatch(data=[1.0, 2.0, 3.0])
    assert (batch.n, batch.d) == (3, 1)
    with pytest.raises(ValueError):
        batch.data[0, 0] = 5.0


def test_sample_batch_rejects_non_finite():
    with pytest.raises(ValidationError):
        SampleBatch(data=[[0.0, np.nan]])
    with pytest.raises(ValidationError):
        SampleBatch(data=np.empty((0, 3)))


def test_sphere_batch_norm_tolerance():
    """Sphere batches accept norm errors up to 1e-9 and reject larger ones."""
    SampleBatch(data=[[1.0 + 5e-10, 0.0]], on_sphere=True)
    with pytest.raises(ValidationError):
        SampleBatch(data=[[1.0 + 1e-6, 0.0]], on_sphere=True)


def test_direction_set_requires_unit_rows():
    DirectionSet(dirs=[[0.6, 0.8]])
    with pytest.raises(ValidationError):
        DirectionSet(dirs=[[0.6, 0.8 + 1e-9]])


def test_rng_streams_are_reproducible_and_distinct(rng):
    a = rng.generator().standard_normal(5)
    b = rng.generator().standard_normal(5)
    c = rng.child(0).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert rng.child(3) == RngState(seed=rng.seed, stream=rng.child(3).stream)
    assert rng.child(3) != rng.child(4)


def test_sample_directions(rng):
    dirs = sample_directions(64, 5, rng)
    assert (dirs.m, dirs.d) == (64, 5)
    np.testing.assert_allclose(np.linalg.norm(dirs.dirs, axis=1), 1.0, atol=1e-12)
    with pytest.raises(InvalidArgumentError):
        sample_directions(0, 5, rng)


def test_project_checks_dimension(gaussian_batch, rng):
    dirs = sample_directions(3, gaussian_batch.d, rng)
    assert project(gaussian_batch, dirs).shape == (gaussian_batch.n, 3)
    with pytest.raises(InvalidArgumentError):
        project(gaussian_batch, sample_directions(3, gaussian_batch.d + 1, rng))


def test_estimate_rejects_negative_v_form():
    DiscrepancyEstimate(value=-0.5, estimator="bhep", n=4, d=1, form="U")
    with pytest.raises(ValidationError):
        DiscrepancyEstimate(value=-0.5, estimator="bhep", n=4, d=1, form="V")
    with pytest.raises(ValidationError):
        DiscrepancyEstimate(value=float("inf"), estimator="bhep", n=4, d=1)


def test_build_estimate_reports_negative_v_form_as_numerical():
    """A negative V-form is a numerical failure (exit 4) before the schema ever sees it."""
    started = time.perf_counter()
    assert build_estimate(-0.5, "bhep", 4, 1, started, form="U").value == -0.5
    assert build_estimate(-1e-9, "bhep", 4, 1, started, form="V").value == -1e-9
    with pytest.raises(NumericalError) as info:
        build_estimate(-0.5, "bhep", 4, 1, started, form="V")
    assert info.value.exit_code == 4
    with pytest.raises(NumericalError):
        build_estimate(float("nan"), "bhep", 4, 1, started)


def test_load_csv_with_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n3,4.5\n")
    batch = load_samples(path)
    np.testing.assert_array_equal(batch.data, [[1.0, 2.0], [3.0, 4.5]])


def test_load_csv_ragged_row_names_line(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("1,2\n3,4\n5\n")
    with pytest.raises(ParseError, match="line 3"):
        load_samples(path)


def test_load_csv_bad_cell_names_line_and_column(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("1,2\n3,oops\n")
    with pytest.raises(ParseError, match="line 2, column 2"):
        load_samples(path)


def test_load_missing_file_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        load_samples(tmp_path / "missing.csv")


def test_jsonl_and_csv_keep_every_bit(tmp_path, gaussian_batch):
    """17 significant digits reproduce the batch exactly in both formats."""
    for name in ("x.csv", "x.jsonl"):
        path = tmp_path / name
        save_samples(gaussian_batch, path)
        np.testing.assert_array_equal(load_samples(path).data, gaussian_batch.data)


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(InvalidArgumentError):
        load_samples(tmp_path / "x.parquet")


def test_env_int_falls_back_on_malformed_values(monkeypatch, caplog):
    monkeypatch.setenv("KERDISC_THREADS", "four")
    with caplog.at_level("WARNING", logger="kerdisc"):
        assert env_int("KERDISC_THREADS", 1) == 1
    assert "KERDISC_THREADS" in caplog.text
    monkeypatch.setenv("KERDISC_THREADS", "0")
    assert env_int("KERDISC_THREADS", 1) == 1
    monkeypatch.setenv("KERDISC_THREADS", " 6 ")
    assert env_int("KERDISC_THREADS", 1) == 6
    monkeypatch.delenv("KERDISC_THREADS")
    assert env_int("KERDISC_THREADS", 3) == 3
