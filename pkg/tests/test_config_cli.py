from __future__ import annotations

import json
from pathlib import Path

import pytest

from noslip import cli
from noslip.config import ConfigError, load_config, parse_config, table_from_arg

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

GOOD = """\
table:
  builder: stadium
  params: {half_length: 1.0}
run:
  max_collisions: 50
  seed: 4
  format: jsonl
initial_conditions:
  kind: random
  count: 3
"""


def test_parse_good_config():
    cfg = parse_config(GOOD)
    assert cfg.table.name == "stadium"
    assert cfg.max_collisions == 50 and cfg.seed == 4 and cfg.format == "jsonl"
    assert cfg.sampling.count == 3 and cfg.sampling.seed == 4


@pytest.mark.parametrize("text,line,field", [
    (GOOD.replace("format: jsonl", "format: xml"), 7, "run.format"),
    (GOOD.replace("max_collisions: 50", "max_collisions: fifty"), 5, "run.max_collisions"),
    (GOOD.replace("seed: 4", "seed: -1"), 6, "run.seed"),
    (GOOD.replace("kind: random", "kind: sobol"), 9, "initial_conditions.kind"),
    (GOOD.replace("half_length: 1.0", "half_length: -1.0"), 3, "table.params"),
    (GOOD.replace("builder: stadium", "builder: blob"), 2, "table.builder"),
    ("table:\n  pieces:\n    - segment: {a: [0, 0], b: [1]}\n", 3, "table.pieces[0].segment.b"),
    ("table:\n  pieces:\n    - spline: {}\n", 3, "table.pieces[0]"),
    ("tabel: hexagon\n", 1, "tabel"),
    ("table: hexagon\nrun: [1, 2\n", 3, "<document>"),
])
def test_config_errors_name_field_and_line(text, line, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == field
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_raw_piece_table():
    cfg = load_config(CONFIGS / "table_square_torus.yaml")
    assert cfg.table.name == "pieces" and len(cfg.table.gluings) == 4


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    load_config(path)


def test_table_arg_forms():
    assert table_from_arg("wedge:theta=0.5").params["theta"] == 0.5
    assert table_from_arg("hexagon").params["n"] == 6
    with pytest.raises(ConfigError):
        table_from_arg("wedge:theta")
    with pytest.raises(ConfigError):
        table_from_arg("wedge:angle=0.5")


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_csv(capsys, tmp_path):
    out = tmp_path / "trace.csv"
    code, _, _ = run(capsys, "simulate", "--table", "hexagon", "--position", "0.1,0.05",
                     "--velocity", "0.3,0.7,0.4", "--max-collisions", "5", "--out", str(out))
    assert code == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(rows) == 6 and rows[0].startswith("orbit,index,piece")


def test_simulate_is_reproducible(capsys):
    args = ("simulate", "--table", "equilateral", "--count", "5", "--seed", "9",
            "--max-collisions", "50", "--format", "jsonl")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b and json.loads(a.splitlines()[0])["seed"] == 9


def test_simulate_from_config(capsys):
    code, out, err = run(capsys, "simulate", "--config", str(CONFIGS / "simulate_wedge_period8.yaml"))
    assert code == 0
    assert json.loads(err)["period_histogram"] == {"8": 1}


def test_portrait_command(capsys, tmp_path):
    svg = tmp_path / "p.svg"
    code, out, _ = run(capsys, "portrait", "--table", "hexagon", "--count", "2",
                       "--max-collisions", "20", "--svg", str(svg))
    assert code == 0 and svg.read_text().startswith("<svg")
    assert sum(1 for l in out.splitlines() if not l.startswith("#")) == 41


def test_wedge_command(capsys):
    code, out, _ = run(capsys, "wedge", "--alpha", "1.5707963267948966")
    rows = json.loads(out)
    assert code == 0 and rows[0]["period"] == 8 and rows[0]["polygon_order"] == 8
    code, out, _ = run(capsys, "wedge", "--sweep", "0.5,2.5,0.5", "--samples", "5000")
    assert json.loads(out)[-1] == {"sweep_area_non_increasing": True}


def test_circle_and_triangle_commands(capsys):
    code, out, _ = run(capsys, "circle", "--n", "6")
    rep = json.loads(out)
    assert code == 0 and rep["r1"] == pytest.approx(3 ** 0.5 / 2)
    assert rep["closure_error"] < 1e-12
    code, out, _ = run(capsys, "triangle", "--count", "30")
    rep = json.loads(out)
    assert code == 0 and rep["outside_allowed_classes"] == 0


@pytest.mark.parametrize("argv", [
    ("simulate", "--table", "nope"),
    ("simulate",),
    ("simulate", "--table", "hexagon", "--position", "5,5", "--velocity", "0,1,0"),
    ("simulate", "--table", "hexagon", "--velocity", "1,2"),
    ("simulate", "--table", "wedge:theta=1.0"),
    ("portrait", "--table", "strip"),
    ("wedge", "--sweep", "0,4,1"),
    ("verify", "--only", "no-such-check"),
    ("simulate", "--config", "/nonexistent/config.yaml"),
])
def test_bad_input_exits_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "error" in err


def test_verify_exit_codes(capsys):
    code, out, _ = run(capsys, "verify", "--only", "01-collision-law,02-strip-matrix")
    assert code == 0 and "2/2 checks passed" in out
    code, out, _ = run(capsys, "verify", "--only", "03-strip-bound")
    assert code == 2 and out.startswith("FAIL 03-strip-bound")
