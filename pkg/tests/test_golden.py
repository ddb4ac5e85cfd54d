import csv
import io
import math
from pathlib import Path

import numpy as np
import pytest

from fockinterf import closed_forms as cf
from fockinterf.figures import FIGURES

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def table(figure_output):
    def load(name):
        rows = list(csv.reader(io.StringIO(figure_output(name)[0])))
        return rows[0], np.array(rows[1:], dtype=float)
    return load


@pytest.mark.parametrize("name", sorted(FIGURES))
def test_figure_matches_golden_bytes(name, figure_output):
    text, seconds = figure_output(name)
    assert text.encode() == (GOLDEN / f"{name}.csv").read_bytes()
    assert seconds < 60


def test_fig1b_single_zero_near_null(table):
    header, data = table("fig1b")
    assert header == ["r", "re", "im", "prob", "tail_bound"]
    prob = data[:, 3]
    i = int(np.argmin(prob))
    assert abs(data[i, 0] - math.asinh(1)) <= 0.005
    # a single zero: the real amplitude changes sign once
    assert np.count_nonzero(np.diff(np.sign(data[:, 1])) != 0) == 1


def test_fig2b_dips_sharpen_with_gain(table):
    _, data = table("fig2b")
    widths = {}
    for r in (0.2, 1.0, 2.0):
        rows = data[data[:, 0] == r]
        prob = rows[:, 4]
        centre = int(np.argmin(abs(rows[:, 1] - math.pi)))
        assert prob[centre] < 1e-20
        widths[r] = centre - int(np.argmax(prob[:centre + 1]))
    assert widths[2.0] < widths[1.0] < widths[0.2]


@pytest.mark.parametrize("name,gains", [("fig3b", (1.0, 1.0, 1.0)), ("fig3c", (1.0, 0.5, 0.6))])
def test_fig3_matches_closed_form(name, gains, table):
    _, data = table(name)
    for phi1, phi2, re, im, *_ in data:
        assert abs(complex(re, im) - cf.amp_three_crystal_11(*gains, phi1, phi2)) < 1e-12


def test_fig4b_null_curve(table):
    _, data = table("fig4b")
    for r1 in np.unique(data[:, 0])[1:]:
        rows = data[data[:, 0] == r1]
        best = rows[int(np.argmin(rows[:, 4])), 1]
        predicted = cf.four_crystal_null_r3(r1)
        step = rows[1, 1] - rows[0, 1]
        assert abs(best - predicted) <= step / 2 + 1e-12


def test_fig4c_null_curve(table):
    _, data = table("fig4c")
    for r3 in np.unique(data[:, 1]):
        rows = data[data[:, 1] == r3]
        best = rows[int(np.argmin(rows[:, 4])), 0]
        predicted = cf.four_crystal_phi0_null_r1(r3, 2 * r3)
        step = rows[1, 0] - rows[0, 0]
        assert abs(best - predicted) <= step / 2 + 1e-12
        assert abs(complex(*rows[0, 2:4]) - cf.amp_four_crystal_1111(rows[0, 0], rows[0, 0], r3, 2 * r3, 0)) \
            <= rows[0, 5] + 1e-12
