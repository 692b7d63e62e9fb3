"""Rendering tests: determinism, schemas, and CLI behavior.

The golden CSVs under tests/golden/ were emitted by the engine's CLI and
are consumed here strictly through the documented CSV schemas.
"""

from pathlib import Path

import pytest

from plots import FigureRequest, SchemaError, render
from plots.cli import main

GOLDEN = Path(__file__).parent / "golden"

GOLDEN_INPUTS = {
    "ecdf": GOLDEN / "law.csv",
    "atoms": GOLDEN / "atom_profile.csv",
    "ks": GOLDEN / "ks_by_n.csv",
    "discontinuity": GOLDEN / "discontinuity.csv",
}


@pytest.mark.parametrize("kind", sorted(GOLDEN_INPUTS))
@pytest.mark.parametrize("fmt", ["png", "svg"])
def test_renders_byte_identically_twice(tmp_path, kind, fmt):
    paths = []
    for i in range(2):
        out = tmp_path / f"{kind}-{i}.{fmt}"
        render(FigureRequest(kind=kind, inputs=(GOLDEN_INPUTS[kind],), output=out))
        assert out.stat().st_size > 0
        paths.append(out)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_ecdf_single_draw_single_step(tmp_path):
    csv_path = tmp_path / "one.csv"
    csv_path.write_text("rep,s1,value,on_boundary\n0,0.25,1.5,0\n")
    out = tmp_path / "one.svg"
    render(FigureRequest(kind="ecdf", inputs=(csv_path,), output=out))
    assert out.stat().st_size > 0


def test_missing_column_named_in_error(tmp_path):
    csv_path = tmp_path / "bad.csv"
    csv_path.write_text("coordinate,location,h,mass\n0,0.0,0.04,0.05\n")
    with pytest.raises(SchemaError, match="missing column\\(s\\) 'stderr'"):
        render(FigureRequest(kind="atoms", inputs=(csv_path,),
                             output=tmp_path / "x.png"))


def test_ecdf_requires_coordinate_columns(tmp_path):
    csv_path = tmp_path / "bad.csv"
    csv_path.write_text("rep,value,on_boundary\n0,1.0,0\n")
    with pytest.raises(SchemaError, match="'s1'"):
        render(FigureRequest(kind="ecdf", inputs=(csv_path,),
                             output=tmp_path / "x.png"))


def test_discontinuity_requires_all_rows(tmp_path):
    csv_path = tmp_path / "bad.csv"
    csv_path.write_text("quantity,estimate,stderr\np_zero,0.5,0.01\n")
    with pytest.raises(SchemaError, match="'p_neg'"):
        render(FigureRequest(kind="discontinuity", inputs=(csv_path,),
                             output=tmp_path / "x.png"))


def test_unknown_kind_and_bad_format_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown figure kind"):
        FigureRequest(kind="pie", inputs=(GOLDEN_INPUTS["ks"],),
                      output=tmp_path / "x.png")
    with pytest.raises(ValueError, match="unsupported output format"):
        FigureRequest(kind="ks", inputs=(GOLDEN_INPUTS["ks"],),
                      output=tmp_path / "x.pdf")
    with pytest.raises(ValueError, match="at least one input"):
        FigureRequest(kind="ks", inputs=(), output=tmp_path / "x.png")


def test_overlaid_inputs(tmp_path):
    out = tmp_path / "overlay.png"
    render(FigureRequest(kind="ks",
                         inputs=(GOLDEN_INPUTS["ks"], GOLDEN_INPUTS["ks"]),
                         output=out, labels=("a", "b")))
    assert out.stat().st_size > 0


def test_cli_render_ok(tmp_path):
    out = tmp_path / "fig.png"
    assert main(["render", "--kind", "atoms",
                 "--in", str(GOLDEN_INPUTS["atoms"]), "--out", str(out)]) == 0
    assert out.stat().st_size > 0


def test_cli_schema_error_exit1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("n\n10\n")
    assert main(["render", "--kind", "ks", "--in", str(bad),
                 "--out", str(tmp_path / "fig.png")]) == 1
    assert "missing column(s) 'ks'" in capsys.readouterr().err


def test_cli_missing_input_file_exit1(tmp_path, capsys):
    assert main(["render", "--kind", "ks", "--in", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "fig.png")]) == 1
    assert "error:" in capsys.readouterr().err
