import numpy as np
import pytest

from llt.cli import RunConfig, build_parser, load_config, main
from llt.dataset_io import load_corpus, load_law


def run(argv):
    return main(argv)


class TestParsing:
    def test_no_subcommand(self, capsys):
        assert run([]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as e:
            run(["frobnicate"])
        assert e.value.code == 1

    def test_help_every_subcommand(self, capsys):
        for cmd in ("synth", "preprocess", "fit-law", "scan-law-length",
                    "transform", "train", "evaluate", "reproduce"):
            with pytest.raises(SystemExit) as e:
                build_parser().parse_args([cmd, "--help"])
            assert e.value.code == 0
            assert "--" in capsys.readouterr().out

    def test_missing_required_flag(self, capsys):
        with pytest.raises(SystemExit) as e:
            run(["fit-law", "--train", "x.csv"])  # --out missing
        assert e.value.code == 1


class TestConfig:
    def test_file_values_applied(self, tmp_path):
        path = tmp_path / "cfg"
        path.write_text("law_len=7\nseed=3\n# comment\n")
        cfg = load_config(str(path), {})
        assert cfg.law_len == 7 and cfg.seed == 3
        assert cfg.train_fraction == 0.4  # untouched default

    def test_flags_win(self, tmp_path):
        path = tmp_path / "cfg"
        path.write_text("law_len=7\n")
        cfg = load_config(str(path), {"law_len": "9"})
        assert cfg.law_len == 9

    def test_env_var_default(self, tmp_path, monkeypatch):
        path = tmp_path / "cfg"
        path.write_text("seed=11\n")
        monkeypatch.setenv("LLT_CONFIG", str(path))
        assert load_config(None, {}).seed == 11

    def test_echo_lines_cover_all_fields(self):
        from dataclasses import fields

        lines = RunConfig().echo_lines()
        assert len(lines) == len(fields(RunConfig))
        assert all(l.startswith("# config ") for l in lines)


class TestSynthCommand:
    def test_writes_corpora(self, tmp_path):
        out = tmp_path / "data"
        assert run(["synth", "--beats", "20", "--out-dir", str(out)]) == 0
        train = load_corpus(out / "train.csv")
        test = load_corpus(out / "test.csv")
        assert len(train) == 2 * (8 + 6)  # 40% + 30% of 20 per class
        assert len(test) == 2 * 6


class TestPipelineCommands:
    @pytest.fixture()
    def data_dir(self, tmp_path):
        out = tmp_path / "data"
        assert run(["synth", "--beats", "40", "--out-dir", str(out)]) == 0
        return out

    def test_fit_law_and_transform(self, data_dir, tmp_path):
        law_path = tmp_path / "n.law"
        assert run(["fit-law", "--train", str(data_dir / "train.csv"),
                    "--out", str(law_path)]) == 0
        law = load_law(law_path)
        assert law.width == 12
        feat_path = tmp_path / "f.csv"
        assert run(["transform", "--law", str(law_path),
                    "--in", str(data_dir / "train.csv"),
                    "--out", str(feat_path)]) == 0
        from llt.dataset_io import load_features

        X, labels, layout = load_features(feat_path)
        assert X.shape[1] == 19
        assert layout == [("Normal", 19)]

    def test_scan_law_length(self, data_dir, tmp_path, capsys):
        out = tmp_path / "scan.csv"
        assert run(["scan-law-length", "--min", "3", "--max", "5",
                    "--train", str(data_dir / "train.csv"),
                    "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("l,lambda_train")
        assert len(lines) == 4

    def test_reproduce_end_to_end(self, data_dir, tmp_path, capsys):
        out = tmp_path / "run"
        assert run(["reproduce", "--data", str(data_dir),
                    "--out", str(out)]) == 0
        report = (out / "report.csv").read_text()
        assert "# config law_len=12" in report
        assert "# fit_input law=train" in report
        for name in ("knn-k4", "svm-linear", "svm-rbf", "rf", "mlp"):
            assert f"model_{name}.txt" in {p.name for p in out.iterdir()}
            assert f"{name},test" in report
        assert (out / "law_normal.law").exists()

    def test_missing_data_dir(self, tmp_path, capsys):
        assert run(["reproduce", "--data", str(tmp_path / "nope")]) == 1
        assert "error" in capsys.readouterr().err


def test_evaluate_command(tmp_path):
    data = tmp_path / "data"
    out = tmp_path / "run"
    assert run(["synth", "--beats", "40", "--out-dir", str(data)]) == 0
    assert run(["reproduce", "--data", str(data), "--out", str(out)]) == 0
    report = tmp_path / "eval.csv"
    assert run(["evaluate", "--law", str(out / "law_normal.law"),
                "--model", str(out / "model_rf.txt"),
                "--test", str(data / "test.csv"),
                "--report", str(report)]) == 0
    assert "rf,test" in report.read_text()


def test_preprocess_command(tmp_path):
    t = np.arange(2000) / 360.0
    v = np.zeros(2000)
    for i in range(-8, 9):
        v[1000 + i] = 1.0 - abs(i) / 9
    raw = tmp_path / "raw.csv"
    raw.write_text("360;" + ",".join(f"{x:.17g}" for x in v) + "\n")
    out = tmp_path / "beats.csv"
    assert run(["preprocess", "--in", str(raw), "--out", str(out),
                "--label", "N"]) == 0
    corpus = load_corpus(out)
    assert len(corpus) == 1
    assert corpus.window_len == 30
