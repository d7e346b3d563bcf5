import numpy as np
import pytest

from builders import correlated_gaussian, grid, joint
from colorqubit.errors import TableParseError
from colorqubit.io import (read_amplitude, read_jsa, write_amplitude, write_contour, write_intensity, write_jsa,
                           write_modes, write_objective_surface)
from colorqubit.schmidt import schmidt_decompose


def test_jsa_round_trip(tmp_path):
    j = joint(lambda x, y: correlated_gaussian(0.3)(x, y) * np.exp(0.2j * x), grid(64, 80))
    path = write_jsa(tmp_path / "jsa.dat", j)
    back = read_jsa(path)
    assert back.grid == j.grid
    np.testing.assert_allclose(back.values, j.values, rtol=1e-11, atol=1e-14)


def test_jsa_row_count_checked(tmp_path):
    j = joint(correlated_gaussian(0.3), grid(64, 64))
    path = write_jsa(tmp_path / "jsa.dat", j)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(TableParseError):
        read_jsa(path)


def test_amplitude_round_trip_and_normalization(tmp_path):
    axis = np.linspace(-6, 6, 301)
    h = np.exp(-axis**2 / 2 + 0.3j * axis)
    path = write_amplitude(tmp_path / "h.dat", axis, 3 * h)
    back = read_amplitude(path, axis)
    assert np.sum(np.abs(back) ** 2) * (axis[1] - axis[0]) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(back, h / np.sqrt(np.sum(np.abs(h) ** 2) * (axis[1] - axis[0])), atol=1e-10)


def test_amplitude_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "bad.dat"
    p.write_text("# omega re im\n1 0 0\n2 1\n")
    with pytest.raises(TableParseError, match="line 3"):
        read_amplitude(p, np.linspace(0, 3, 10))
    p.write_text("1 0 0\n3 1 0\n2 1 0\n")
    with pytest.raises(TableParseError, match="line 3"):
        read_amplitude(p, np.linspace(0, 3, 10))
    p.write_text("1 0 0\n2 x 0\n")
    with pytest.raises(TableParseError, match="line 2"):
        read_amplitude(p, np.linspace(0, 3, 10))


def test_text_exports(tmp_path):
    j = joint(correlated_gaussian(0.5), grid(64, 64))
    d = schmidt_decompose(j)
    data = np.loadtxt(write_intensity(tmp_path / "i.dat", j))
    assert data.shape == (64 * 64, 3) and data[:, 2].max() == pytest.approx(1.0)
    paths = write_modes(tmp_path, "mode", d.modes_a, d.axis_a, 0.0)
    assert [p.name for p in paths] == ["mode_1.dat", "mode_2.dat", "mode_3.dat"]
    assert np.abs(np.loadtxt(paths[0])[:, 1:]).max() == pytest.approx(1.0)
    s = np.loadtxt(write_objective_surface(tmp_path / "s.dat", [(0.7, 1.0, 1.6, 0.1), (0.7, 1.1, 1.6, 0.2)]))
    assert s.shape == (2, 4)
    c = write_contour(tmp_path / "c.dat", {"sfwm": [np.array([[0.8, 1.2], [0.81, 1.21]])], "dfg": []})
    assert c.read_text().splitlines()[1].split()[0] == "SFWM"
