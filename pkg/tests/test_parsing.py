import json
import math

import pytest

from app.core.errors import ValidationFailure
from app.parsing import (
    is_builtin,
    load_builtin,
    parse_k,
    parse_texture_table,
    read_texture_table,
    write_rows,
)
from app.schemas.run import KGrid, Mode, RunConfig

SMALL_TABLE = """\
# v: 0.3
# r: 0.18
# k_units: pi
k,sx,sx_err,sz,sz_err,sx_theory,sz_theory
0.0,-0.07,0.10,0.31,0.03,0.000,0.280
0.5,0.20,0.05,0.80,0.04,0.210,0.820
1.0,0.01,0.05,0.90,0.04,0.000,0.910
"""


def test_parse_k():
    assert parse_k("0.4pi") == pytest.approx(0.4 * math.pi)
    assert parse_k("1.2 π") == pytest.approx(1.2 * math.pi)
    assert parse_k("0.5") == 0.5
    assert parse_k("0.5", pi_units=True) == pytest.approx(0.5 * math.pi)
    with pytest.raises(ValidationFailure):
        parse_k("half")


def test_parse_texture_table_experiment_columns():
    table = parse_texture_table(SMALL_TABLE, name="small")
    assert len(table.samples) == 3
    first = table.samples[0]
    assert (first.sx, first.sz, first.sx_err, first.sz_err) == (-0.07, 0.31, 0.10, 0.03)
    assert table.samples[1].k == pytest.approx(0.5 * math.pi)
    assert table.v == 0.3 and table.r == 0.18
    assert table.params.gamma == 1.0


def test_parse_texture_table_theory_columns():
    table = parse_texture_table(SMALL_TABLE, source="theory")
    assert table.samples[1].sx == 0.21
    assert table.samples[1].sx_err is None


def test_parse_texture_table_errors():
    with pytest.raises(ValidationFailure):
        parse_texture_table(SMALL_TABLE, source="model")
    with pytest.raises(ValidationFailure):
        parse_texture_table("# v: 0.3\n")
    with pytest.raises(ValidationFailure):
        parse_texture_table("k,sx\n0.1,0.2\n")
    with pytest.raises(ValidationFailure):
        parse_texture_table("k,sx,sz\n0.2,0.1,0.5\n0.1,0.1,0.5\n")
    with pytest.raises(ValidationFailure):
        parse_texture_table("k,sx,sz\n0.1,abc,0.5\n")
    with pytest.raises(ValidationFailure, match="Bloch disk"):
        parse_texture_table("k,sx,sz\n0.1,0.9,0.9\n")


def test_read_texture_table(tmp_path):
    path = tmp_path / "texture.csv"
    path.write_text(SMALL_TABLE, encoding="utf-8")
    table = read_texture_table(path)
    assert table.name == "texture"
    with pytest.raises(ValidationFailure):
        read_texture_table(tmp_path / "missing.csv")


@pytest.mark.parametrize("name", ["s1", "table_s2", "table_s3_theory", "TABLE_S3_EXPERIMENT"])
def test_builtin_names(name):
    assert is_builtin(name)
    assert load_builtin(name).samples


def test_unknown_builtin():
    assert not is_builtin("s4")
    with pytest.raises(ValidationFailure):
        load_builtin("s4")


def test_builtin_metadata():
    table = load_builtin("s3")
    assert table.name == "table_s3_theory"
    assert table.params.gamma == 3.5
    assert table.sign_corrected_after == pytest.approx(math.pi)
    assert len(load_builtin("s1").samples) == 11


def test_as_measured_undoes_sign_correction():
    table = load_builtin("s3")
    measured = table.as_measured()
    assert "sign_corrected_after" not in measured.metadata
    for before, after in zip(table.samples, measured.samples):
        sign = -1 if before.k > math.pi else 1
        assert after.sx == sign * before.sx
        assert after.sz == sign * before.sz
    s1 = load_builtin("s1")
    assert s1.as_measured() is s1


def test_write_rows(tmp_path):
    path = write_rows(
        tmp_path / "rows.csv",
        ["k", "sx"],
        [{"k": 0.1, "sx": 1 / 3, "ignored": 5}],
        metadata={"v": 0.3},
    )
    lines = path.read_text().splitlines()
    assert lines[0] == "# v: 0.3"
    assert lines[1] == "k,sx"
    assert float(lines[2].split(",")[1]) == 1 / 3


def test_k_grid_parse():
    grid = KGrid.parse("0:2:5pi")
    assert grid.values() == pytest.approx([0, 0.5 * math.pi, math.pi, 1.5 * math.pi, 2 * math.pi])
    assert KGrid.parse("0.1,0.3").values() == pytest.approx([0.1, 0.3])
    assert KGrid.parse("0.1π,0.3π").values() == pytest.approx([0.1 * math.pi, 0.3 * math.pi])
    for bad in ("0:2", "0.1", "a,b", "0:2:1"):
        with pytest.raises(ValidationFailure):
            KGrid.parse(bad)


def test_run_config_from_json_and_toml(tmp_path):
    json_path = tmp_path / "run.json"
    json_path.write_text(json.dumps({"v": 0.3, "r": 0.3, "gamma": 4.0, "mode": "dilated"}))
    config = RunConfig.from_file(json_path)
    assert config.mode is Mode.dilated
    assert config.gamma == 4.0

    toml_path = tmp_path / "run.toml"
    toml_path.write_text('v = 0.3\nr = 0.18\n[k_grid]\npoints = [0.0, 0.5]\n[readout]\nshots = 1000\n')
    config = RunConfig.from_file(toml_path)
    assert config.k_grid.values() == pytest.approx([0.0, 0.5 * math.pi])
    assert config.readout.shots == 1000


def test_run_config_rejects_bad_input(tmp_path):
    with pytest.raises(ValidationFailure):
        RunConfig.from_mapping({"gamma": -1.0})
    with pytest.raises(ValidationFailure):
        RunConfig.from_mapping({"colour": "red"})
    with pytest.raises(ValidationFailure):
        RunConfig.from_mapping({"mode": "dilated", "horizon": 5.0, "dilation": {"horizon": 1.0}})
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ValidationFailure):
        RunConfig.from_file(broken)
    with pytest.raises(ValidationFailure):
        RunConfig.from_file(tmp_path / "missing.toml")


def test_run_config_overrides():
    config = RunConfig().with_overrides(v=0.5, gamma=None, dilation={"eta0": 4.0, "step": None})
    assert config.v == 0.5
    assert config.gamma == 3.5
    assert config.dilation.eta0 == 4.0
    assert config.dilation.step == RunConfig().dilation.step
    assert config.metadata()["dilation"]["eta0"] == 4.0
