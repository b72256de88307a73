import struct

import numpy as np
import pytest

from phasebridge.grid import PhaseGrid
from phasebridge.densities import TorusTrigG, sample_on_grid
from phasebridge.snapshot import MAGIC, read_snapshot, write_snapshot


def test_round_trip(tmp_path):
    grid = PhaseGrid(12, 20)
    arr = sample_on_grid(TorusTrigG(0.3, 0.5), grid)
    path = tmp_path / "rho.snap"
    write_snapshot(path, 0.75, arr.values)
    t, back = read_snapshot(path)
    assert t == 0.75
    assert back.grid == grid
    np.testing.assert_array_equal(back.values, arr.values)


def test_header_layout(tmp_path):
    values = np.arange(6.0).reshape(2, 3) + 1.0
    path = tmp_path / "h.snap"
    write_snapshot(path, 0.25, values)
    raw = path.read_bytes()
    assert len(raw) == 32 + 6 * 8
    magic, nx, nv, t = struct.unpack_from("<8sQQd", raw)
    assert magic == MAGIC
    assert (nx, nv, t) == (2, 3, 0.25)
    # row-major payload, x outer: first row then second
    payload = np.frombuffer(raw, dtype="<f8", offset=32)
    np.testing.assert_array_equal(payload, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])


def test_bit_exact_rewrite(tmp_path):
    rng = np.random.default_rng(12)
    values = rng.uniform(0.1, 1.0, (7, 5))
    p1, p2 = tmp_path / "a.snap", tmp_path / "b.snap"
    write_snapshot(p1, 0.5, values)
    write_snapshot(p2, 0.5, values)
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.snap"
    write_snapshot(path, 0.0, np.ones((2, 2)))
    raw = bytearray(path.read_bytes())
    raw[:8] = b"NOTMAGIC"
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="magic"):
        read_snapshot(path)


def test_truncated_rejected(tmp_path):
    path = tmp_path / "short.snap"
    write_snapshot(path, 0.0, np.ones((4, 4)))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="bytes"):
        read_snapshot(path)


def test_non_2d_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_snapshot(tmp_path / "x.snap", 0.0, np.ones(5))
