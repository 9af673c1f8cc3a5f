import csv
import io
import math
import re
import subprocess
import sys

import numpy as np
import pytest

from uqt.cli import main
from uqt.io import write_ensemble, write_labels
from uqt.simplex import EnsemblePredictions, PredictionKind

from conftest import FIXTURES, random_simplex

ERROR_LINE = re.compile(r"^uqt: E_[A-Z_]+: [^\n]+\n$")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def hand_file(tmp_path):
    path = tmp_path / "hand.uqt"
    write_ensemble(path, EnsemblePredictions([[[0.5, 0.5]], [[0.9, 0.1]]]))
    return path


@pytest.fixture
def random_file(tmp_path):
    path = tmp_path / "random.uqt"
    write_ensemble(path, EnsemblePredictions(random_simplex(np.random.default_rng(7), (6, 300), 4)))
    return path


class TestMeasures:
    def test_identical_members(self, tmp_path, capsys):
        path = tmp_path / "same.uqt"
        write_ensemble(path, EnsemblePredictions(np.tile([[[0.2, 0.3, 0.5]]], (3, 4, 1))))
        code, out, _ = run(capsys, "measures", "--input", path, "--rule", "log", "--measure", "exc11")
        assert code == 0
        assert [r["score"] for r in rows(out)] == ["0.0"] * 4
        assert out.splitlines()[0] == "sample_index,score"

    def test_hand_bayes2(self, hand_file, capsys):
        code, out, _ = run(capsys, "measures", "--input", hand_file, "--rule", "log", "--measure", "bayes2")
        assert code == 0 and math.isclose(float(rows(out)[0]["score"]), 0.610864, abs_tol=1e-6)

    def test_infinity_serialized(self, tmp_path, capsys):
        path = tmp_path / "split.uqt"
        write_ensemble(path, EnsemblePredictions([[[1.0, 0.0]], [[0.0, 1.0]]]))
        code, out, _ = run(capsys, "measures", "--input", path, "--rule", "log", "--measure", "exc11")
        assert code == 0 and rows(out)[0]["score"] == "inf"

    @pytest.mark.parametrize("measure", ["exc13", "exc31", "exc23", "exc32", "tot31", "tot13", "bayes3"])
    def test_zero_one_central_undefined(self, hand_file, capsys, measure):
        code, out, err = run(capsys, "measures", "--input", hand_file, "--rule", "zero-one", "--measure", measure)
        assert code == 3 and out == ""
        assert ERROR_LINE.match(err) and "Not defined" in err

    def test_temperature_flag_beats_header(self, tmp_path, capsys):
        path = tmp_path / "logits.uqt"
        write_ensemble(path, EnsemblePredictions([[[0.0, 1.0]], [[2.0, 0.0]]], PredictionKind.LOGITS, 1.0))
        base = ["measures", "--input", path, "--rule", "log", "--measure", "energy-of-mean"]
        _, a, _ = run(capsys, *base)
        _, b, _ = run(capsys, *base, "--temperature", "2")
        assert a != b

    def test_nan_in_file(self, tmp_path, capsys):
        from uqt.io import HEADER
        path = tmp_path / "nan.uqt"
        path.write_bytes(HEADER.pack(b"UQT1", 1, 1, 0, 1, 1, 2, 1.0) + np.array([np.nan, 0.0], "<f8").tobytes())
        code, _, err = run(capsys, "measures", "--input", path, "--rule", "log", "--measure", "exc11")
        assert code == 2 and ERROR_LINE.match(err)

    def test_output_file_and_determinism(self, random_file, tmp_path, capsys):
        outs = []
        for k in range(2):
            target = tmp_path / f"out{k}.csv"
            assert run(capsys, "measures", "--input", random_file, "--rule", "spherical",
                       "--measure", "tot13", "--output", target)[0] == 0
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]

    def test_threads_do_not_change_output(self, random_file, capsys, monkeypatch):
        argv = ["measures", "--input", random_file, "--rule", "log", "--measure", "exc31"]
        monkeypatch.setenv("UQT_THREADS", "1")
        _, a, _ = run(capsys, *argv)
        monkeypatch.setenv("UQT_THREADS", "4")
        _, b, _ = run(capsys, *argv)
        assert a == b


class TestIdentities:
    def test_random_log(self, random_file, capsys):
        code, out, _ = run(capsys, "identities", "--input", random_file, "--rule", "log")
        assert code == 0 and "FAIL" not in out and "epbd=mbi+mrbi" in out

    def test_default_rules(self, random_file, capsys):
        code, out, _ = run(capsys, "identities", "--input", random_file)
        assert code == 0
        for rule in ("log", "brier", "spherical", "zero-one"):
            assert re.search(rf"^{rule}\s", out, re.M)
        assert "neg-log" not in out and "skipped" in out

    def test_brier_prints_equality_check(self, random_file, capsys):
        code, out, _ = run(capsys, "identities", "--input", random_file, "--rule", "brier")
        assert code == 0 and "brier:bi=rbi=mbi=mrbi" in out and "brier:epbd=2bi" in out

    def test_bad_magic(self, tmp_path, capsys):
        path = tmp_path / "bad.uqt"
        path.write_bytes(b"NOPE" + bytes(40))
        code, out, err = run(capsys, "identities", "--input", path, "--rule", "log")
        assert code == 2 and out == "" and ERROR_LINE.match(err)


class TestDetection:
    def test_identical_files(self, random_file, capsys):
        code, out, _ = run(capsys, "auroc", "--in-dist", random_file, "--out-dist", random_file,
                           "--rule", "log", "--measure", "exc12", "tot11")
        assert code == 0
        assert [r["auroc"] for r in rows(out)] == ["0.5", "0.5"]
        assert out.splitlines()[0] == "measure,rule,i,j,auroc,n_pos,n_neg,indeterminate"

    def test_fixture_ood(self, capsys):
        code, out, _ = run(capsys, "auroc", "--in-dist", FIXTURES / "ood_in.uqt", "--out-dist",
                           FIXTURES / "ood_out.uqt", "--rule", "log", "--measure", "exc12")
        assert code == 0 and float(rows(out)[0]["auroc"]) > 0.85

    def test_groups_add_std(self, capsys):
        files = [FIXTURES / "ood_in.uqt", FIXTURES / "ood_out.uqt"]
        code, out, _ = run(capsys, "auroc", "--in-dist", *files, "--out-dist", *files[::-1],
                           "--rule", "log", "--measure", "bayes1")
        row = rows(out)[0]
        assert code == 0 and "auroc_std" in row and float(row["auroc_std"]) > 0

    def test_misclassification(self, capsys):
        code, out, _ = run(capsys, "misclassification", "--input", FIXTURES / "noisy.uqt", "--labels",
                           FIXTURES / "noisy_labels.csv", "--rule", "log", "--measure", "tot11", "exc11")
        tot, exc = (float(r["auroc"]) for r in rows(out))
        assert code == 0 and tot >= exc

    def test_all_correct(self, tmp_path, capsys):
        path, labels = tmp_path / "e.uqt", tmp_path / "y.csv"
        write_ensemble(path, EnsemblePredictions([[[0.9, 0.1], [0.3, 0.7]]]))
        write_labels(labels, [0, 1])
        code, _, err = run(capsys, "misclassification", "--input", path, "--labels", labels,
                           "--rule", "log", "--measure", "bayes1")
        assert code == 4 and ERROR_LINE.match(err)

    def test_one_class_labels_for_ood(self, hand_file, capsys):
        # an ensemble with zero samples cannot be stored, so exercise the label mismatch path instead
        code, _, err = run(capsys, "auroc", "--in-dist", hand_file, "--out-dist", hand_file, hand_file,
                           "--rule", "log", "--measure", "exc11")
        assert code == 2 and ERROR_LINE.match(err)


class TestOracle:
    def test_uniform_prior(self, capsys):
        code, out, _ = run(capsys, "oracle", "--alpha-prior", 1, "--beta-prior", 1, "--n", 0, "--successes", 0)
        values = {r["measure"]: float(r["closed_form"]) for r in rows(out)}
        assert code == 0 and values["EPKL"] == 0.5 and math.isclose(values["EPBS"], 1 / 6, rel_tol=1e-15)

    def test_mc_columns_deterministic(self, capsys):
        argv = ["oracle", "--alpha-prior", 2, "--beta-prior", 3, "--n", 4, 10, "--successes", 1, 6,
                "--mc-draws", 20000, "--seed", 5]
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        assert a == b and len(rows(a)) == 8
        assert all(r["mc_estimate"] and r["within_3se"] in ("yes", "no") for r in rows(a))

    def test_success_rate_sweep(self, capsys):
        code, out, _ = run(capsys, "oracle", "--alpha-prior", 1, "--beta-prior", 1, "--n", 0, 10, 100,
                           "--success-rate", 0.3)
        epkl = [float(r["closed_form"]) for r in rows(out) if r["measure"] == "EPKL"]
        assert code == 0 and epkl == [0.5, 1 / 12, 1 / 102]

    def test_mismatched_successes(self, capsys):
        code, _, err = run(capsys, "oracle", "--alpha-prior", 1, "--beta-prior", 1, "--n", 3, "--successes", 1, 2)
        assert code == 2 and ERROR_LINE.match(err)

    def test_successes_above_trials(self, capsys):
        code, _, err = run(capsys, "oracle", "--alpha-prior", 1, "--beta-prior", 1, "--n", 3, "--successes", 5)
        assert code == 2 and ERROR_LINE.match(err)


class TestMisc:
    def test_convert(self, tmp_path, capsys):
        src = tmp_path / "e.csv"
        src.write_text("member,sample,class,value\n1,0,1,0.1\n0,0,0,0.5\n0,0,1,0.5\n1,0,0,0.9\n")
        dest = tmp_path / "e.uqt"
        assert run(capsys, "convert", "--input", src, "--output", dest)[0] == 0
        code, out, _ = run(capsys, "measures", "--input", dest, "--rule", "log", "--measure", "bayes2")
        assert code == 0 and math.isclose(float(rows(out)[0]["score"]), 0.610864, abs_tol=1e-6)

    @pytest.mark.parametrize("argv", [["measures", "--input", "x.uqt", "--rule", "hinge", "--measure", "exc11"],
                                      ["measures", "--input", "x.uqt", "--rule", "log", "--measure", "exc44"],
                                      ["oracle", "--alpha-prior", "-1", "--beta-prior", "1", "--n", "0",
                                       "--successes", "0"],
                                      ["frobnicate"]])
    def test_validation_errors(self, argv, capsys):
        try:
            code = main(argv)
        except SystemExit as exc:
            code = exc.code
        err = capsys.readouterr().err
        assert code == 2 and ERROR_LINE.match(err)

    def test_console_script(self, hand_file):
        proc = subprocess.run([sys.executable, "-m", "uqt.cli", "measures", "--input", str(hand_file),
                               "--rule", "zero-one", "--measure", "exc13"], capture_output=True, text=True)
        assert proc.returncode == 3 and proc.stderr.startswith("uqt: E_UNDEFINED:")
