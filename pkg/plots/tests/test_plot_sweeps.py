import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from plot_sweeps import (MalformedCsv, PlotSpec, align_curves, main,
                         max_log_gap, read_sweep_csv, render)

REPO = Path(__file__).resolve().parent.parent.parent
ACCEPTANCE_SWEEPS = [REPO / "runs" / "acceptance" / "sweep_one_point" / "sweep_mean.csv",
                     REPO / "runs" / "acceptance" / "sweep_two_point" / "sweep_mean.csv"]


def write_sweep(path, ts, mean, std=None):
    std = std if std is not None else [m * 0.1 for m in mean]
    with open(path, "w") as fh:
        fh.write("t,mean_dist,std_dist\n")
        for t, m, s in zip(ts, mean, std):
            fh.write(f"{t},{m!r},{s!r}\n")
    return path


def synthetic_power_law(path, p=4 / 7, t_max=100_000):
    ts = [t for t in (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000,
                      10000, 20000, 50000, 100000) if t <= t_max]
    mean = [float(t) ** (-p / 2.0) for t in ts]
    return write_sweep(path, ts, mean)


def test_reader_roundtrip(tmp_path):
    path = synthetic_power_law(tmp_path / "s.csv")
    curve = read_sweep_csv(path)
    assert curve.ts[0] == 1 and curve.ts[-1] == 100000
    assert curve.mean[0] == 1.0


def test_reader_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,mean_dist,std_dist\n10,0.5\n")
    with pytest.raises(MalformedCsv) as exc:
        read_sweep_csv(bad)
    assert "bad.csv:2" in str(exc.value)
    noheader = tmp_path / "noheader.csv"
    noheader.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(MalformedCsv):
        read_sweep_csv(noheader)


def test_align_to_coarsest(tmp_path):
    a = write_sweep(tmp_path / "a.csv", [1, 10, 100, 1000], [1.0, 0.5, 0.2, 0.1])
    b = write_sweep(tmp_path / "b.csv", [1, 5, 10, 100, 1000], [1, 0.8, 0.6, 0.3, 0.2])
    curves = align_curves([read_sweep_csv(a), read_sweep_csv(b)])
    assert np.array_equal(curves[0].ts, [1, 10, 100, 1000])
    assert np.array_equal(curves[1].ts, [1, 10, 100, 1000])
    assert curves[1].mean[1] == 0.6


def test_single_curve_smoke(tmp_path):
    path = synthetic_power_law(tmp_path / "s.csv")
    out = render(PlotSpec(inputs=[str(path)], out=str(tmp_path / "fig.png")))
    assert out.is_file() and out.stat().st_size > 0


def test_two_curves_overlay_and_rerender_deterministic(tmp_path):
    a = synthetic_power_law(tmp_path / "a.csv", p=0.5)
    b = synthetic_power_law(tmp_path / "b.csv", p=1.0)
    spec = PlotSpec(inputs=[str(a), str(b)], labels=["one-point", "two-point"],
                    out=str(tmp_path / "fig.png"))
    out1 = render(spec)
    size1 = out1.stat().st_size
    out2 = render(spec)
    assert out2.stat().st_size == size1  # overwrite, same content size


def test_guide_line_self_test(tmp_path):
    # exact t^(-p/2) input: curve and guide must coincide (max log-gap < 0.05)
    p = 4 / 7
    path = synthetic_power_law(tmp_path / "exact.csv", p=p)
    curve = read_sweep_csv(path)
    assert max_log_gap(curve, p) < 0.05
    # and a clearly different exponent must NOT coincide
    assert max_log_gap(curve, 2.0) > 0.05


def test_svg_output(tmp_path):
    path = synthetic_power_law(tmp_path / "s.csv")
    out = render(PlotSpec(inputs=[str(path)], out=str(tmp_path / "fig.svg")))
    assert out.suffix == ".svg" and b"<svg" in out.read_bytes()[:500]


def test_spec_json_and_cli(tmp_path):
    a = synthetic_power_law(tmp_path / "a.csv")
    spec = {"inputs": [str(a)], "out": str(tmp_path / "from_spec.png"),
            "labels": ["demo"], "guides": [4 / 7]}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    assert main(["--spec", str(spec_path)]) == 0
    assert (tmp_path / "from_spec.png").is_file()
    assert main([str(tmp_path / "missing.csv"), "--out", str(tmp_path / "x.png")]) == 2


def test_two_panel_figure_from_acceptance_sweeps(tmp_path):
    """Figure-layout check on the criterion-3 sweeps (synthesized if absent)."""
    if all(p.is_file() for p in ACCEPTANCE_SWEEPS):
        inputs = [str(p) for p in ACCEPTANCE_SWEEPS]
    else:
        inputs = [str(synthetic_power_law(tmp_path / "one_point.csv", p=0.25)),
                  str(synthetic_power_law(tmp_path / "two_point.csv", p=0.5))]
    out = tmp_path / "figure1.png"
    rc = main(inputs + ["--labels", "one-point feedback", "two-point feedback",
                        "--layout", "panels", "--out", str(out)])
    assert rc == 0
    assert out.is_file() and out.stat().st_size > 0
