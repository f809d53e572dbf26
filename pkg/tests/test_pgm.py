import numpy as np
import pytest

from trimcodec.pgm import PgmError, encode_pgm, parse_pgm, read_pgm, write_pgm


def test_roundtrip_bytes():
    gen = np.random.default_rng(1)
    img = gen.integers(0, 256, size=(5, 9), dtype=np.uint8)
    np.testing.assert_array_equal(parse_pgm(encode_pgm(img)), img)


def test_roundtrip_file(tmp_path):
    gen = np.random.default_rng(2)
    img = gen.integers(0, 256, size=(4, 3), dtype=np.uint8)
    path = tmp_path / "img.pgm"
    write_pgm(path, img)
    np.testing.assert_array_equal(read_pgm(path), img)
    # canonical writer output is byte-stable
    write_pgm(tmp_path / "again.pgm", read_pgm(path))
    assert (tmp_path / "again.pgm").read_bytes() == path.read_bytes()


def test_canonical_header():
    img = np.zeros((2, 3), dtype=np.uint8)
    assert encode_pgm(img).startswith(b"P5\n3 2\n255\n")


def test_comments_and_whitespace():
    data = b"P5 # format\n# a comment line\n 3\t2 # dims\n255\n" + bytes(6)
    img = parse_pgm(data)
    assert img.shape == (2, 3)


def test_rejects_other_formats():
    with pytest.raises(PgmError, match="only binary P5"):
        parse_pgm(b"P6\n2 2\n255\n" + bytes(12))
    with pytest.raises(PgmError, match="only binary P5"):
        parse_pgm(b"P2\n1 1\n255\n0\n")


def test_rejects_wide_maxval():
    with pytest.raises(PgmError, match="maxval"):
        parse_pgm(b"P5\n1 1\n65535\n\x00\x00")


def test_truncated_pixels():
    with pytest.raises(PgmError, match="truncated"):
        parse_pgm(b"P5\n4 4\n255\n" + bytes(3))


def test_truncated_header():
    with pytest.raises(PgmError, match="header"):
        parse_pgm(b"P5\n4")


def test_bad_image_for_writer():
    with pytest.raises(PgmError):
        encode_pgm(np.zeros((2, 2, 3), dtype=np.uint8))
    with pytest.raises(PgmError):
        encode_pgm(np.full((2, 2), 300))
