import subprocess
import sys

import numpy as np
import pytest

from banditplots.cli import main
from banditplots.render import GridMismatchError, load_summary, render

HEADER = "checkpoint_t,mean_cum_regret,std_cum_regret,mean_cum_time_ns,std_cum_time_ns"


def write_summary(path, checkpoints, regret, std=None, time_ns=None):
    std = std if std is not None else [0.0] * len(checkpoints)
    time_ns = time_ns if time_ns is not None else [1000.0 * c for c in checkpoints]
    with open(path, "w") as fh:
        fh.write(HEADER + "\n")
        for i, cp in enumerate(checkpoints):
            fh.write(f"{cp},{regret[i]},{std[i]},{time_ns[i]},0.0\n")
    return path


def test_single_summary_zero_std_renders(tmp_path):
    cps = list(range(10, 110, 10))
    path = write_summary(tmp_path / "solo_summary.csv", cps, [float(c) for c in cps])
    outputs, data = render([path], tmp_path / "fig")
    for out in outputs:
        assert out.exists() and out.stat().st_size > 0
    assert set(data) == {"solo"}


def test_two_summaries_two_legend_entries(tmp_path):
    cps = list(range(10, 110, 10))
    a = write_summary(tmp_path / "alpha_summary.csv", cps, [float(c) for c in cps])
    b = write_summary(tmp_path / "beta_summary.csv", cps, [2.0 * c for c in cps])
    _, data = render([a, b], tmp_path / "fig")
    assert set(data) == {"alpha", "beta"}


def test_plotted_arrays_preserve_ordering(tmp_path):
    cps = list(range(10, 110, 10))
    low = write_summary(tmp_path / "low_summary.csv", cps, [float(c) for c in cps])
    high = write_summary(tmp_path / "high_summary.csv", cps, [2.0 * c for c in cps])
    _, data = render([low, high], tmp_path / "fig")
    assert np.all(data["high"][1] > data["low"][1])


def test_mismatched_grids_error_names_files(tmp_path):
    cps_a = list(range(10, 110, 10))
    cps_b = list(range(5, 55, 5))
    a = write_summary(tmp_path / "a_summary.csv", cps_a, [1.0] * 10)
    b = write_summary(tmp_path / "b_summary.csv", cps_b, [1.0] * 10)
    with pytest.raises(GridMismatchError, match="b_summary.csv"):
        render([a, b], tmp_path / "fig")


def test_rendering_is_pure_function_of_inputs(tmp_path):
    cps = list(range(10, 110, 10))
    path = write_summary(tmp_path / "pure_summary.csv", cps, [float(c) for c in cps])
    _, first = render([path], tmp_path / "one")
    _, second = render([path], tmp_path / "two")
    assert first.keys() == second.keys()
    for key in first:
        assert np.array_equal(first[key][1], second[key][1])
        assert np.array_equal(first[key][2], second[key][2])


def test_load_summary_rejects_bad_header(tmp_path):
    bad = tmp_path / "bad_summary.csv"
    bad.write_text("nope\n1,2,3,4,5\n")
    with pytest.raises(ValueError):
        load_summary(bad)


def test_cli_success_and_outputs(tmp_path, capsys):
    cps = list(range(10, 110, 10))
    a = write_summary(tmp_path / "a_summary.csv", cps, [float(c) for c in cps])
    code = main(["plot", "--summaries", str(a), "--out-prefix", str(tmp_path / "fig")])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2
    assert (tmp_path / "fig_regret.png").exists()
    assert (tmp_path / "fig_runtime.png").exists()


def test_cli_log_time_flag(tmp_path):
    cps = list(range(10, 110, 10))
    a = write_summary(tmp_path / "a_summary.csv", cps, [float(c) for c in cps])
    assert main(["plot", "--summaries", str(a), "--out-prefix",
                 str(tmp_path / "logfig"), "--log-time"]) == 0


def test_cli_error_exit_code(tmp_path, capsys):
    assert main(["plot", "--summaries", str(tmp_path / "missing.csv"),
                 "--out-prefix", str(tmp_path / "fig")]) == 1
    assert "error" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    cps = list(range(10, 110, 10))
    a = write_summary(tmp_path / "a_summary.csv", cps, [float(c) for c in cps])
    proc = subprocess.run(
        [sys.executable, "-m", "banditplots.cli", "plot", "--summaries", str(a),
         "--out-prefix", str(tmp_path / "fig")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
