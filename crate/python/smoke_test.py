"""Smoke test for the ppweno Python bindings.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import math
import tempfile
from pathlib import Path

import ppweno_py as pw


def check_cases():
    names = pw.list_cases()
    assert "double-rarefaction" in names and "sedov-2d" in names
    case = pw.Case.builtin("vortex")
    back = pw.Case.from_json(case.to_json())
    assert back.name == "vortex" and back.two_d
    try:
        pw.Case.builtin("missing")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown case accepted")


def check_run():
    case = pw.Case.builtin("double-rarefaction")
    case.t_end = 0.05
    res = case.run(100)
    assert res.nx == 100 and res.steps > 0
    assert len(res.density) == 100
    rho = res.density
    assert max(abs(a - b) for a, b in zip(rho, reversed(rho))) < 1e-10
    assert res.min_pressure > 0.0
    assert all(r["min_density"] > 0.0 for r in res.steplog)
    with tempfile.TemporaryDirectory() as d:
        written = [Path(p).name for p in res.write(d)]
        assert written == ["density.csv", "velocity.csv", "pressure.csv", "steplog.csv"]
        assert (Path(d) / "density.csv").read_text().startswith("# case: double-rarefaction")


def check_convergence():
    case = pw.Case.builtin("scalar-source")
    rows = case.converge([20, 40])
    assert [r["n"] for r in rows] == [20, 40]
    assert rows[0]["l1_order"] is None and rows[1]["l1_order"] > 2.0
    assert all(r["min_value"] >= -1e-13 for r in rows)


def check_kernels():
    assert abs(pw.weno5_face([2.0] * 5) - 2.0) < 1e-14
    assert abs(pw.weno5_face([2.0] * 5, right=True) - 2.0) < 1e-14
    plus, minus = pw.lxf_split([1.0, 2.0], [0.5, 2.0], 1.0)
    assert plus == [0.75, 2.0] and minus == [-0.25, 0.0]
    assert pw.mpp_bounds_max(0.5, 1.0, 0.5, -0.2, 0.3, 0.1, 0.1) == (1.0, 1.0)
    assert pw.decouple_rectangle_1d([0.0, 0.4], [0.7, 0.0], [0.5, 0.5]) == (0.5, 0.4)
    p = pw.ideal_pressure(1.4, [1.0, 0.0, 0.0, 2.5])
    assert abs(p - 1.0) < 1e-15
    r = pw.scale_pressure_to_floor(1.4, [1.0, 0.0, 0.0, 2.5], [0.0, 0.0, 0.0, -5.0], 0.5)
    assert math.isclose(r, 0.25, abs_tol=1e-10), r


if __name__ == "__main__":
    check_cases()
    check_run()
    check_convergence()
    check_kernels()
    print("ppweno_py smoke test passed")
