import pytest

from bsdiagram import cli
from bsdiagram import diagram as dg


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def test_point_square(capsys):
    code, out = run(capsys, "point", "--square", "--levels", "2")
    assert code == 0
    assert "19.739" in out.out


def test_point_writes_csv(tmp_path, capsys):
    code, _ = run(capsys, "point", "--rect", "2", "--levels", "2", "--out", str(tmp_path))
    assert code == 0
    text = (tmp_path / "point.csv").read_text()
    assert text.splitlines()[0] == ",".join(dg.CSV_COLUMNS)
    (p,) = dg.points_from_csv(text)
    assert dg.region_R_contains(p.x, p.y, p.tolerance())


def test_point_from_file(tmp_path, capsys):
    f = tmp_path / "tri.txt"
    f.write_text("0 0\n1 0\n0 1\n")
    code, out = run(capsys, "point", "--file", str(f), "--levels", "2", "--out", str(tmp_path))
    assert code == 0
    (p,) = dg.points_from_csv((tmp_path / "point.csv").read_text())
    assert p.params == (str(f),)


@pytest.mark.parametrize("argv", [
    ["point"],
    ["point", "--file", "/nonexistent/polygon.txt"],
    ["diagram", "--families", ","],
    ["diagram", "--families", "hexagons"],
    ["point", "--rect", "-1"],
])
def test_usage_errors(argv, capsys, tmp_path):
    code, out = run(capsys, *argv, "--out", str(tmp_path)) if argv[0] == "diagram" else run(capsys, *argv)
    assert code == 2
    assert out.err


def test_invalid_polygon_file(tmp_path, capsys):
    f = tmp_path / "bad.txt"
    f.write_text("0 0\n1 1\n2 2\n")
    code, _ = run(capsys, "point", "--file", str(f))
    assert code == 2


def test_slopes_constants(capsys):
    code, out = run(capsys, "slopes", "--skip-fd")
    assert code == 0
    assert "2.7666" in out.out
    assert "1.462599" in out.out


def test_verify_disk_and_tamper(capsys):
    assert run(capsys, "verify", "--disk", "--n-random", "0", "--levels", "2")[0] == 0
    code, out = run(capsys, "verify", "--disk", "--n-random", "0", "--levels", "2", "--tamper-lambda", "0.9")
    assert code == 5


def test_verify_random(capsys):
    code, _ = run(capsys, "verify", "--n-random", "3", "--levels", "2", "--seed", "4")
    assert code == 0


def test_diagram_small(tmp_path, capsys):
    code, out = run(capsys, "diagram", "--families", "rectangle,regular", "--count", "3",
                    "--levels", "2", "--out", str(tmp_path))
    assert code == 0
    pts = dg.points_from_csv((tmp_path / "diagram.csv").read_text())
    assert len(pts) == 6
    assert (tmp_path / "diagram.svg").read_text().rstrip().endswith("</svg>")
    assert "region audit: 6/6" in out.out


def test_path_homothety(tmp_path, capsys):
    code, _ = run(capsys, "path", "homothety", "--square", "--levels", "2", "--steps", "5", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "path_homothety.csv").exists()


def test_path_css(tmp_path, capsys):
    code, _ = run(capsys, "path", "css", "--rect", "2", "--levels", "2", "--steps", "6", "--out", str(tmp_path))
    assert code == 0
    assert len((tmp_path / "path_css.csv").read_text().splitlines()) == 7


def test_path_minkowski_needs_two_shapes(tmp_path, capsys):
    code, _ = run(capsys, "path", "minkowski", "--square", "--levels", "2", "--out", str(tmp_path))
    assert code == 2


def test_envelope_from_csv(tmp_path, capsys):
    pts = [dg.DiagramPoint(20 + i, 30 + 2 * i, family="rectangle", params=(1.0,)) for i in range(6)]
    dg.write_points_csv(pts, tmp_path / "d.csv")
    code, out = run(capsys, "envelope", "--csv", str(tmp_path / "d.csv"), "--bins", "3", "--out", str(tmp_path))
    assert code == 0


def test_envelope_empty_csv(tmp_path, capsys):
    dg.write_points_csv([], tmp_path / "d.csv")
    code, _ = run(capsys, "envelope", "--csv", str(tmp_path / "d.csv"), "--out", str(tmp_path))
    assert code == 2


def test_verify_reverse_polya_diagnostic(capsys):
    code, out = run(capsys, "verify", "--square", "--levels", "2", "--reverse-polya", "0.5")
    assert code == 0
    assert "1/1 below" in out.out
    assert run(capsys, "verify", "--square", "--reverse-polya", "0")[0] == 2
