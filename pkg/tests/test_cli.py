import io
import math

import numpy as np
import pytest

from trimcodec import cli, pgm
from trimcodec.model import load_model
from trimcodec.training import LEARNING_RATES


def run_cli(*argv):
    out = io.StringIO()
    code = cli.run(list(argv), out=out)
    return code, out.getvalue()


def parse_report(text):
    fields = {}
    for token in text.split():
        key, _, value = token.partition("=")
        fields[key] = value
    return fields


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    code, _ = run_cli("gen-corpus", "--output", str(root), "--kind", "markov-texture",
                      "--count", "8", "--size", "12", "--seed", "3")
    assert code == 0
    return root


@pytest.fixture(scope="module")
def model_path(tmp_path_factory, corpus_dir):
    root = tmp_path_factory.mktemp("model")
    path = root / "model.bin"
    code, _ = run_cli("train", "--input", str(corpus_dir), "--output", str(path),
                      "--groups", "2", "--residual-blocks", "0", "--steps", "150",
                      "--eval-interval", "50", "--seed", "4")
    assert code == 0
    return path


class TestGenCorpus:
    def test_writes_pgm_files(self, corpus_dir):
        files = sorted(corpus_dir.glob("*.pgm"))
        assert len(files) == 8
        img = pgm.read_pgm(files[0])
        assert img.shape == (12, 12)

    def test_kinds_validated(self):
        with pytest.raises(SystemExit):
            run_cli("gen-corpus", "--output", "x", "--kind", "fractal")


class TestTrain:
    def test_writes_metrics_log(self, model_path):
        metrics = model_path.parent / (model_path.name + ".metrics")
        lines = metrics.read_text().strip().splitlines()
        assert lines
        for line in lines:
            fields = parse_report(line)
            assert set(fields) == {"step", "loss_bps", "lr"}
            assert float(fields["lr"]) in LEARNING_RATES

    def test_model_file_deterministic(self, tmp_path, corpus_dir):
        outs = []
        for name in ("a.bin", "b.bin"):
            path = tmp_path / name
            code, _ = run_cli("train", "--input", str(corpus_dir), "--output", str(path),
                              "--groups", "2", "--residual-blocks", "0", "--steps", "60",
                              "--eval-interval", "30", "--seed", "9")
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_empty_corpus_fails_cleanly(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert cli.main(["train", "--input", str(empty), "--output", str(tmp_path / "m.bin")]) == 2


class TestCompressDecompress:
    def test_roundtrip_byte_exact(self, tmp_path, corpus_dir, model_path):
        src = sorted(corpus_dir.glob("*.pgm"))[0]
        packed = tmp_path / "img.tcc"
        out_img = tmp_path / "restored.pgm"
        code, report = run_cli("compress", "--input", str(src), "--model", str(model_path),
                               "--output", str(packed))
        assert code == 0
        code, _ = run_cli("decompress", "--input", str(packed), "--model", str(model_path),
                          "--output", str(out_img))
        assert code == 0
        assert out_img.read_bytes() == src.read_bytes()

    def test_printed_ratio_matches_payload(self, tmp_path, corpus_dir, model_path):
        src = sorted(corpus_dir.glob("*.pgm"))[1]
        packed = tmp_path / "img.tcc"
        code, report = run_cli("compress", "--input", str(src), "--model", str(model_path),
                               "--output", str(packed))
        fields = parse_report(report)
        img = pgm.read_pgm(src)
        payload_bits = int(fields["payload_bits"])
        expect = img.size * 8 / payload_bits
        assert math.isclose(float(fields["ratio"]), expect, rel_tol=1e-6)

    def test_tiled_roundtrip(self, tmp_path, corpus_dir, model_path):
        src = sorted(corpus_dir.glob("*.pgm"))[2]
        packed = tmp_path / "img.tcc"
        out_img = tmp_path / "restored.pgm"
        assert run_cli("compress", "--input", str(src), "--model", str(model_path),
                       "--output", str(packed), "--tile", "8")[0] == 0
        assert run_cli("decompress", "--input", str(packed), "--model", str(model_path),
                       "--output", str(out_img))[0] == 0
        assert out_img.read_bytes() == src.read_bytes()

    def test_missing_model_fails_cleanly(self, tmp_path, corpus_dir):
        src = sorted(corpus_dir.glob("*.pgm"))[0]
        assert cli.main(["compress", "--input", str(src), "--model",
                         str(tmp_path / "nope.bin"), "--output", str(tmp_path / "o")]) == 2

    def test_corrupt_container_fails_cleanly(self, tmp_path, model_path):
        bad = tmp_path / "bad.tcc"
        bad.write_bytes(b"garbage")
        assert cli.main(["decompress", "--input", str(bad), "--model", str(model_path),
                         "--output", str(tmp_path / "o.pgm")]) == 2


class TestInpaint:
    def test_zero_region_is_identity(self, tmp_path, corpus_dir, model_path):
        src = sorted(corpus_dir.glob("*.pgm"))[0]
        out = tmp_path / "filled.pgm"
        code, _ = run_cli("inpaint", "--input", str(src), "--model", str(model_path),
                          "--output", str(out), "--region", "0,0,0,0", "--seed", "1")
        assert code == 0
        assert out.read_bytes() == src.read_bytes()

    def test_seeded_output_stable(self, tmp_path, corpus_dir, model_path):
        src = sorted(corpus_dir.glob("*.pgm"))[0]
        outs = []
        for name in ("f1.pgm", "f2.pgm"):
            out = tmp_path / name
            code, report = run_cli("inpaint", "--input", str(src), "--model", str(model_path),
                                   "--output", str(out), "--seed", "5")
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        fields = parse_report(report)
        # default region is the bottom-right ninth
        assert fields["region"] == "8,8,4,4"

    def test_region_out_of_bounds(self, tmp_path, corpus_dir, model_path):
        src = sorted(corpus_dir.glob("*.pgm"))[0]
        assert cli.main(["inpaint", "--input", str(src), "--model", str(model_path),
                         "--output", str(tmp_path / "o.pgm"), "--region", "10,10,5,5"]) == 2

    def test_output_values_in_range(self, tmp_path, corpus_dir, model_path):
        src = sorted(corpus_dir.glob("*.pgm"))[0]
        out = tmp_path / "filled.pgm"
        run_cli("inpaint", "--input", str(src), "--model", str(model_path),
                "--output", str(out), "--seed", "2")
        img = pgm.read_pgm(out)
        assert img.min() >= 0 and img.max() <= 255


class TestBench:
    def test_report_layout_and_pass_counts(self, tmp_path, corpus_dir):
        src = sorted(corpus_dir.glob("*.pgm"))[0]  # 12x12 image
        code, report = run_cli("bench", "--input", str(src), "--seed", "2")
        assert code == 0
        fields = parse_report(report)
        assert int(fields["raster_passes"]) == 12 * 12 * 8
        assert int(fields["slope_passes"]) == 12 + 12 + 8 - 2
        expect = (12 * 12 * 8) / (12 + 12 + 8 - 2)
        assert math.isclose(float(fields["pass_ratio"]), expect, rel_tol=1e-3)
        for key in ("raster_encode_seconds", "raster_decode_seconds",
                    "slope_encode_seconds", "slope_decode_seconds"):
            assert float(fields[key]) >= 0.0

    def test_wrong_schedule_model_rejected(self, tmp_path, corpus_dir, model_path):
        src = sorted(corpus_dir.glob("*.pgm"))[0]
        assert cli.main(["bench", "--input", str(src), "--slope-model", str(model_path)]) == 2


def test_thread_cap_env(tmp_path, corpus_dir, monkeypatch):
    monkeypatch.setenv("TCAE_THREADS", "1")
    root = tmp_path / "c2"
    code, _ = run_cli("gen-corpus", "--output", str(root), "--kind", "constant",
                      "--count", "1", "--size", "4", "--seed", "0")
    assert code == 0
    monkeypatch.setenv("TCAE_THREADS", "zero")
    assert cli.main(["gen-corpus", "--output", str(root), "--kind", "constant",
                     "--count", "1", "--size", "4"]) == 2


def test_model_roundtrip_through_cli_file(model_path):
    model = load_model(model_path.read_bytes())
    assert model.config.alphabet_size == 2
    assert model.config.depth == 8
