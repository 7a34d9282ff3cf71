import csv
import io
import json
import subprocess
import sys

from rsmmf.cli import main
from rsmmf.harness import CONTRIBUTION_COLUMNS, CSV_COLUMNS, DOF_CHECK_COLUMNS


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


def test_dof_subcommand(capsys):
    assert main(["dof", "--groups", "1,2,3", "--antennas", "2,4,6"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert rows[0][:5] == ["group_sizes", "n_antennas", "designated", "degraded", "rs"]
    assert [r[2:5] for r in rows[1:]] == [["0", "1/3", "1/3"], ["1/2", "1/3", "1/2"], ["1", "1/3", "1"]]


def test_sweep_to_file(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--groups", "1,2,3", "--antennas", "4", "--snr", "10",
                 "--realizations", "1", "--strategy", "designated,zf_partial", "--out", str(out)])
    assert code == 0
    assert capsys.readouterr().out == ""
    rows = read_csv(out.read_text(encoding="utf-8"))
    assert rows[0] == list(CSV_COLUMNS) and len(rows) == 1 + 2 * 3


def test_sweep_with_config_and_failure(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "layout": {"n_antennas": 4, "group_sizes": [1, 2, 3]},
        "snr_db_list": [10],
        "realizations": 1,
        "strategies": ["zf_full"],
    }))
    assert main(["sweep", "--config", str(cfg)]) == 1
    captured = capsys.readouterr()
    assert "failed: strategy=zf_full" in captured.err
    assert read_csv(captured.out)[0] == list(CSV_COLUMNS)


def test_contributions(capsys):
    code = main(["contributions", "--groups", "1,2,3", "--antennas", "4", "--snr", "20",
                 "--realizations", "1", "--strategy", "rs"])
    assert code == 0
    rows = read_csv(capsys.readouterr().out)
    assert rows[0] == list(CONTRIBUTION_COLUMNS) and len(rows) == 1 + 3


def test_dof_check_exit_codes(capsys):
    assert main(["dof-check", "--groups", "1,2,3", "--antennas", "6", "--strategy", "zf_full"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert rows[0] == list(DOF_CHECK_COLUMNS) and rows[1][7] == "0"
    assert main(["dof-check", "--groups", "1,2,3", "--antennas", "4", "--strategy", "zf_full",
                 "--realizations", "2"]) == 1
    assert "flagged" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rsmmf", "dof", "--groups", "2,2,2", "--antennas", "4"],
                          capture_output=True, text=True, check=True)
    assert read_csv(proc.stdout)[1][2:5] == ["0", "1/3", "1/2"]
