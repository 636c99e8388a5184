import csv
import io
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from innervar import io as rio
from innervar import quad_diff as q
from innervar import partition as part
from innervar.domain import PlanarDomain
from innervar.field import SampledMap, build_grid

SVG_NS = "{http://www.w3.org/2000/svg}"


def test_field_csv_roundtrip():
    g = build_grid(PlanarDomain.annulus(0.5, 1.0), 24)
    m = SampledMap.from_function(g, lambda z: z * np.conj(z) + 1j * z, name="probe")
    text = rio.field_csv(m)
    header, i, j, v = rio.read_field_csv(text)
    assert header["name"] == "probe" and header["count"] == g.count
    assert np.array_equal(m.values[j, i], v)
    assert text.splitlines()[1] == "i,j,x,y,re,im"


def test_field_csv_rejects_missing_header():
    with pytest.raises(ValueError):
        rio.read_field_csv("i,j,x,y,re,im\n")


def test_report_json_is_strict_and_sorted():
    rep = {"b": float("nan"), "a": [1 + 2j, np.float64(math.inf)], "c": np.arange(3), "d": np.bool_(True)}
    s = rio.dumps_report(rep)
    assert json.loads(s) == {"a": [[1.0, 2.0], None], "b": None, "c": [0, 1, 2], "d": True}
    assert s.index('"a"') < s.index('"b"') < s.index('"c"')
    assert "NaN" not in s and "Infinity" not in s


def test_polyline_csv():
    tr = q.trace_vertical(q.constant(1), 0.3, PlanarDomain.disk(0, 1))
    rows = list(csv.reader(io.StringIO(rio.polyline_csv([tr, tr]))))
    assert rows[0] == ["trajectory", "k", "x", "y"]
    assert len(rows) == 1 + 2 * len(tr.points)
    assert float(rows[1][2]) == pytest.approx(0.3)


def test_sweep_csv():
    class S:
        epsilons = [-0.1, 0.0, 0.1]
        energies = [1.2, 1.0, 1.3]
        c0 = 1.0
    rows = list(csv.reader(io.StringIO(rio.sweep_csv(S))))
    assert rows[0] == ["epsilon", "energy", "delta"]
    assert [float(r[2]) for r in rows[1:]] == pytest.approx([0.2, 0.0, 0.3])


def parse_svg(text):
    root = ET.fromstring(text.encode())
    assert root.tag == SVG_NS + "svg" and root.get("version") == "1.1"
    return root


def test_trajectories_svg():
    qd = q.leminiscate()
    trs = [q.trace_vertical(qd, complex(math.sqrt(1 + r * r))) for r in (0.3, 0.6)]
    root = parse_svg(rio.trajectories_svg(trs, critical=qd.critical_points))
    assert len(root.findall(SVG_NS + "polygon")) == 2
    assert len(root.findall(SVG_NS + "circle")) == 3


def test_partition_svg_colors_by_sign():
    D = PlanarDomain.disk(0, 1)
    P = part.build_partition(D, PlanarDomain.rectangle(-0.4, -0.4, 0.4, 0.4), [0j], 0.2)
    P = P.with_signs(np.where(np.arange(len(P)) % 2, -1.0, 1.0))
    root = parse_svg(rio.partition_svg(P, D))
    fills = [r.get("fill") for r in root.findall(SVG_NS + "rect")][1:]
    assert len(fills) == len(P) and len(set(fills)) == 2


def test_svg_y_axis_points_up():
    c = rio.SvgCanvas((0, 0, 1, 1), 110, 5)
    hi, lo = c._xy(0.5 + 0.9j), c._xy(0.5 + 0.1j)
    assert hi[1] < lo[1]
    with pytest.raises(ValueError):
        rio.SvgCanvas((0, 0, 0, 1))


def test_outline_svg_deterministic():
    d = PlanarDomain.annulus(0.3, 1.0)
    assert rio.outline_svg(d) == rio.outline_svg(d)
    assert len(parse_svg(rio.outline_svg(d)).findall(SVG_NS + "polygon")) == 2
