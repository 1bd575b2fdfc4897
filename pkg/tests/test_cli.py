import json
import struct

import numpy as np
import pytest

from speechblend.cli import main
from speechblend.harness import DATASET_HEADER, REPORT_HEADER, load_dataset_csv, save_dataset_csv, synth_dataset
from speechblend.metrics import FEATURE_NAMES


def write_sequence(path, values):
    path.write_text("\n".join(repr(float(v)) for v in values) + "\n")


def write_wav(path, samples, rate=8000):
    data = (np.clip(np.asarray(samples), -1, 1) * 32767).astype("<i2").tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, rate, rate * 2, 2, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(data)) + data
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


def make_table(path, rows=80, seed=0, separation=3.0):
    save_dataset_csv(synth_dataset(rows, 0.35, separation, seed=seed), path)


class TestMetrics:
    def test_csv_pair(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        t = np.arange(16) / 16.0
        write_sequence(a, np.sin(2 * np.pi * t))
        write_sequence(b, np.sin(2 * np.pi * (t - 0.1)))
        assert main(["metrics", "--control", str(a), "--assessed", str(b)]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == ",".join(FEATURE_NAMES)
        assert len(out[1].split(",")) == len(FEATURE_NAMES)

    def test_wav_pair_with_envelope(self, tmp_path, capsys):
        a = tmp_path / "a.wav"
        b = tmp_path / "b.wav"
        t = np.arange(512) / 512.0
        ramp = 0.2 + 0.6 * t
        write_wav(a, ramp * np.sin(2 * np.pi * 4 * t))
        write_wav(b, ramp[::-1] * np.sin(2 * np.pi * 4 * t))
        rc = main(
            ["metrics", "--control", str(a), "--assessed", str(b), "--window", "64", "--hop", "32"]
        )
        assert rc == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == ",".join(FEATURE_NAMES)

    def test_params_override(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_sequence(a, [0.0, 1.0, 0.0, -1.0])
        write_sequence(b, [0.0, 0.5, 1.0, 0.5])
        rc = main(
            ["metrics", "--control", str(a), "--assessed", str(b), "--params", '{"msm_cost": 2.0}']
        )
        assert rc == 0

    def test_unknown_param_rejected(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        write_sequence(a, [0.0, 1.0, 2.0])
        rc = main(["metrics", "--control", str(a), "--assessed", str(a), "--params", '{"sigma": 1}'])
        assert rc == 2

    def test_unknown_suffix(self, tmp_path):
        a = tmp_path / "a.dat"
        write_sequence(a, [0.0, 1.0])
        assert main(["metrics", "--control", str(a), "--assessed", str(a)]) == 2


class TestPrep:
    def test_clean(self, tmp_path):
        src = tmp_path / "in.csv"
        dst = tmp_path / "out.csv"
        make_table(src, rows=60, seed=1)
        assert main(["prep", "clean", "--in", str(src), "--out", str(dst)]) == 0
        assert len(load_dataset_csv(dst)) <= 60

    def test_rebalance(self, tmp_path):
        src = tmp_path / "in.csv"
        dst = tmp_path / "out.csv"
        make_table(src, rows=60, seed=2)
        assert main(["prep", "rebalance", "--in", str(src), "--out", str(dst), "--seed", "3"]) == 0
        counts = np.bincount(load_dataset_csv(dst).labels(), minlength=2)
        assert counts[0] == counts[1]


class TestTrainEval:
    def test_round_trip(self, tmp_path, capsys):
        table = tmp_path / "d.csv"
        model = tmp_path / "ens.json"
        make_table(table, rows=100, seed=4)
        rc = main(
            [
                "train",
                "--in",
                str(table),
                "--meta",
                "decision_tree",
                "--bases",
                "knn,svm",
                "--seed",
                "5",
                "--out",
                str(model),
            ]
        )
        assert rc == 0
        doc = json.loads(model.read_text())
        assert "base_models" in doc
        assert main(["eval", "--model", str(model), "--in", str(table)]) == 0
        out = capsys.readouterr().out.strip()
        assert out.startswith("accuracy 0.") or out == "accuracy 1.000"

    def test_eval_plain_model(self, tmp_path, capsys):
        from speechblend.learners import fit, make_spec, save_model

        table = tmp_path / "d.csv"
        make_table(table, rows=60, seed=6)
        d = load_dataset_csv(table)
        model = tmp_path / "m.json"
        save_model(fit(make_spec("knn"), d.features(), d.labels()), model)
        assert main(["eval", "--model", str(model), "--in", str(table)]) == 0
        assert capsys.readouterr().out.startswith("accuracy ")


class TestSweep:
    def test_writes_csv_and_markdown(self, tmp_path):
        table = tmp_path / "d.csv"
        report = tmp_path / "rep.csv"
        make_table(table, rows=60, seed=7)
        rc = main(
            [
                "sweep",
                "--in",
                str(table),
                "--seed",
                "1",
                "--report",
                str(report),
                "--pool",
                "knn,svm",
                "--subset-sizes",
                "2",
            ]
        )
        assert rc == 0
        lines = report.read_text().splitlines()
        assert lines[0] == REPORT_HEADER
        assert len(lines) == 1 + 16
        assert report.with_suffix(".md").exists()

    def test_config_file_and_flag_precedence(self, tmp_path):
        table = tmp_path / "d.csv"
        make_table(table, rows=60, seed=8)
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"seed": 7, "pool": "knn,svm", "subset_sizes": "2"}))

        r1 = tmp_path / "r1.csv"
        rc = main(["sweep", "--in", str(table), "--report", str(r1), "--config", str(config)])
        assert rc == 0
        assert "master seed: 7" in r1.with_suffix(".md").read_text()

        r2 = tmp_path / "r2.csv"
        rc = main(
            ["sweep", "--in", str(table), "--report", str(r2), "--config", str(config), "--seed", "9"]
        )
        assert rc == 0
        assert "master seed: 9" in r2.with_suffix(".md").read_text()

    def test_unknown_config_key(self, tmp_path):
        table = tmp_path / "d.csv"
        make_table(table, rows=40, seed=9)
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"sede": 7}))
        rc = main(["sweep", "--in", str(table), "--report", str(tmp_path / "r.csv"), "--config", str(config)])
        assert rc == 2


class TestSynth:
    def test_generates_table(self, tmp_path):
        out = tmp_path / "s.csv"
        rc = main(
            ["synth", "--rows", "50", "--minority", "0.3", "--separation", "2.0", "--out", str(out)]
        )
        assert rc == 0
        d = load_dataset_csv(out)
        assert len(d) == 50
        assert np.bincount(d.labels(), minlength=2)[0] == 15

    def test_bad_parameter(self, tmp_path):
        rc = main(
            [
                "synth",
                "--rows",
                "5",
                "--minority",
                "0.3",
                "--separation",
                "1.0",
                "--out",
                str(tmp_path / "s.csv"),
            ]
        )
        assert rc == 2


class TestExitCodes:
    def test_usage_error(self):
        assert main(["bogus"]) == 1

    def test_missing_required(self):
        assert main(["train", "--in", "x.csv"]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["eval", "--model", str(tmp_path / "nope.json"), "--in", str(tmp_path / "d.csv")]) == 2

    def test_bad_dataset_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n")
        assert main(["prep", "clean", "--in", str(p), "--out", str(tmp_path / "o.csv")]) == 2

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "metrics" in capsys.readouterr().out
