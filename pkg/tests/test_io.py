import numpy as np
import pytest

from homtomo.io import DataFormatError, load_dataset, read_table, save_dataset, write_table
from homtomo.simulate import simulate
from homtomo.states import StateSpec


def test_dataset_roundtrip_bitexact(tmp_path):
    data = simulate(StateSpec.cat(2j, "odd"), 0.9, 3, 40, 2024)
    first = tmp_path / "a.txt"
    second = tmp_path / "b.txt"
    save_dataset(first, data)
    loaded = load_dataset(first)
    save_dataset(second, loaded)
    assert first.read_bytes() == second.read_bytes()
    np.testing.assert_array_equal(loaded.xs, data.xs)
    np.testing.assert_array_equal(loaded.thetas, data.thetas)
    assert loaded.eta == data.eta
    assert loaded.state_desc == data.state_desc
    assert (loaded.seed, loaded.phases, loaded.per_phase) == (2024, 3, 40)


def test_dataset_file_shape(tmp_path):
    data = simulate(StateSpec.vacuum(), 1.0, 1, 2, 5)
    path = tmp_path / "d.txt"
    save_dataset(path, data)
    text = path.read_text()
    lines = text.split("\n")
    assert lines[0] == "# format_version=1"
    assert "# state=vacuum" in lines
    assert "# eta=1.0" in lines
    assert len(lines[6].split("\t")) == 2
    assert "\r" not in text


def test_load_dataset_missing_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# format_version=1\n# eta=0.9\n0.0\t1.0\n")
    with pytest.raises(DataFormatError, match="header"):
        load_dataset(path)


def test_load_dataset_bad_version(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# format_version=9\n# state=vacuum\n# eta=1.0\n# seed=0\n"
                    "# phases=1\n# per_phase=1\n0.0\t1.0\n")
    with pytest.raises(DataFormatError, match="format_version"):
        load_dataset(path)


def test_load_dataset_malformed_body(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# format_version=1\n# state=vacuum\n# eta=1.0\n# seed=0\n"
                    "# phases=1\n# per_phase=1\n0.0\tnot_a_number\n")
    with pytest.raises(DataFormatError):
        load_dataset(path)


def test_load_dataset_unreadable(tmp_path):
    with pytest.raises(DataFormatError):
        load_dataset(tmp_path / "missing.txt")


def test_table_roundtrip(tmp_path):
    rows = [(-1.5, 0.0, 0.1234567890123456, 3000, -812345.678),
            (0.0, 0.0, -0.3183098861837907, 3000, float("nan"))]
    path = tmp_path / "t.txt"
    write_table(path, {"state": "cat:0.0,2.0,odd", "n_max": 40}, rows)
    headers, body = read_table(path)
    assert headers["state"] == "cat:0.0,2.0,odd"
    assert headers["n_max"] == "40"
    assert body.shape == (2, 5)
    assert body[1, 2] == -0.3183098861837907
    assert body[0, 3] == 3000
    assert np.isnan(body[1, 4])


def test_table_rejects_wrong_width(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("# format_version=1\n0.0\t1.0\n")
    with pytest.raises(DataFormatError):
        read_table(path)
