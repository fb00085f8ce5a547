import numpy as np
import pytest

from embex.embf import write_embf
from embex.extract import ExtractError, ExtractorConfig, extract


def _cfg(tiny_encoder_dir, tmp_path, **kw):
    defaults = dict(
        encoder_name=tiny_encoder_dir,
        pooling="cls",
        max_length=32,
        batch_size=4,
        output_path=str(tmp_path / "out.embf"),
    )
    defaults.update(kw)
    return ExtractorConfig(**defaults)


def test_extract_shape(tiny_encoder_dir, tmp_path):
    rows = [("a", "external beam radiation", 0), ("b", "adjuvant chemotherapy", 1), ("c", "mild fatigue was reported", 0)]
    cfg = _cfg(tiny_encoder_dir, tmp_path)
    summary = extract(rows, ["rad", "sys"], cfg)
    assert summary == {"n": 3, "dim": 32, "truncated": 0}


def test_identical_text_gives_identical_vectors(tiny_encoder_dir, tmp_path):
    rows = [("a", "the patient tolerated treatment well", 0), ("b", "the patient tolerated treatment well", 0)]
    cfg = _cfg(tiny_encoder_dir, tmp_path)
    extract(rows, ["only"], cfg)
    import struct

    blob = open(cfg.output_path, "rb").read()
    _, n, dim, json_len = struct.unpack_from("<IIII", blob, 4)
    vecs = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=20 + json_len).reshape(n, dim)
    assert np.array_equal(vecs[0], vecs[1])


def test_extract_is_deterministic_across_calls(tiny_encoder_dir, tmp_path):
    rows = [("a", "proton beam course", 0), ("b", "hormone suppression therapy", 1)]
    cfg1 = _cfg(tiny_encoder_dir, tmp_path, output_path=str(tmp_path / "o1.embf"))
    cfg2 = _cfg(tiny_encoder_dir, tmp_path, output_path=str(tmp_path / "o2.embf"))
    extract(rows, ["rad", "sys"], cfg1)
    extract(rows, ["rad", "sys"], cfg2)
    assert open(cfg1.output_path, "rb").read() == open(cfg2.output_path, "rb").read()


def test_pooling_modes_differ(tiny_encoder_dir, tmp_path):
    rows = [("a", "stereotactic radiosurgery boost", 0)]
    cls_cfg = _cfg(tiny_encoder_dir, tmp_path, output_path=str(tmp_path / "cls.embf"))
    mean_cfg = _cfg(tiny_encoder_dir, tmp_path, pooling="mean_tokens", output_path=str(tmp_path / "mean.embf"))
    extract(rows, ["x"], cls_cfg)
    extract(rows, ["x"], mean_cfg)
    assert open(cls_cfg.output_path, "rb").read() != open(mean_cfg.output_path, "rb").read()


def test_truncation_counted(tiny_encoder_dir, tmp_path):
    long_text = " ".join(["the patient tolerated treatment well"] * 20)
    rows = [("a", long_text, 0), ("b", "short note", 0)]
    cfg = _cfg(tiny_encoder_dir, tmp_path, max_length=8)
    summary = extract(rows, ["x"], cfg)
    assert summary["truncated"] == 1


def test_empty_rows_rejected(tiny_encoder_dir, tmp_path):
    with pytest.raises(ExtractError, match="no input texts"):
        extract([], ["x"], _cfg(tiny_encoder_dir, tmp_path))


def test_unavailable_encoder_is_explicit_error(tmp_path, monkeypatch):
    monkeypatch.setenv("HF_HUB_OFFLINE", "1")
    cfg = ExtractorConfig(
        encoder_name="no-such-org/no-such-model-xyz",
        output_path=str(tmp_path / "x.embf"),
    )
    with pytest.raises(ExtractError, match="no-such-org/no-such-model-xyz"):
        extract([("a", "text", 0)], ["x"], cfg)


def test_bad_config_rejected(tiny_encoder_dir, tmp_path):
    with pytest.raises(ExtractError):
        _cfg(tiny_encoder_dir, tmp_path, pooling="max").validate()
    with pytest.raises(ExtractError):
        _cfg(tiny_encoder_dir, tmp_path, max_length=0).validate()


def test_writer_validation(tmp_path):
    with pytest.raises(ValueError, match="unique"):
        write_embf(str(tmp_path / "x.embf"), "d", ["a"], ["i", "i"], [0, 0], np.zeros((2, 3)))
    with pytest.raises(ValueError, match="labels"):
        write_embf(str(tmp_path / "x.embf"), "d", ["a"], ["i", "j"], [0, 1], np.zeros((2, 3)))
    with pytest.raises(ValueError, match="finite"):
        write_embf(str(tmp_path / "x.embf"), "d", ["a"], ["i"], [0], np.array([[np.nan, 0.0]]))
