import numpy as np

from lcw.plots import pgm_grid, svg_scatter


class TestPgmGrid:
    def test_header_dimensions_ten_per_row(self, tmp_path, rng):
        # 100 28x28 images -> canvas 280 wide, 10 rows
        path = tmp_path / "grid.pgm"
        pgm_grid(path, rng.uniform(0, 1, size=(100, 784)), 28)
        raw = path.read_bytes()
        header, rest = raw.split(b"\n", 1)
        assert header == b"P5"
        dims, rest = rest.split(b"\n", 1)
        assert dims == b"280 280"
        maxval, pixels = rest.split(b"\n", 1)
        assert maxval == b"255"
        assert len(pixels) == 280 * 280

    def test_partial_last_row(self, tmp_path, rng):
        path = tmp_path / "grid.pgm"
        pgm_grid(path, rng.uniform(0, 1, size=(13, 64)), 8)
        dims = path.read_bytes().split(b"\n")[1]
        assert dims == b"80 16"  # 10 per row, 2 rows

    def test_pixel_values(self, tmp_path):
        path = tmp_path / "grid.pgm"
        pgm_grid(path, np.array([[0.0, 1.0, 0.5, 0.25]]), 2)
        pixels = path.read_bytes().rsplit(b"\n", 1)[1]
        row0 = pixels[:4]
        assert row0[0] == 0 and row0[1] == 255


class TestSvgScatter:
    def test_valid_svg_with_points_and_lines(self, tmp_path, rng):
        path = tmp_path / "scatter.svg"
        svg_scatter(path, [rng.standard_normal((30, 2))],
                    lines=[np.array([[0.0, 0.0], [1.0, 1.0]])], title="demo")
        text = path.read_text()
        assert text.startswith("<svg")
        assert text.count("<circle") == 30
        assert "<polyline" in text
        assert text.rstrip().endswith("</svg>")
