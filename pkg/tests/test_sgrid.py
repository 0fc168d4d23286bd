import numpy as np
import pytest

from sslab import GridDomain, SGridError, read_sgrid, write_sgrid
from sslab.sgrid import dumps_sgrid, loads_sgrid
from sslab import shapes


def test_round_trip_2d(tmp_path):
    rng = np.random.default_rng(5)
    mask = rng.random((17, 9)) < 0.5
    mask[0, 0] = mask[-1, -1] = True
    d = GridDomain.from_mask(mask, 0.125)
    p = tmp_path / "a.sgrid"
    write_sgrid(p, d)
    back = read_sgrid(p)
    assert back == d
    # rewrite is byte-exact
    text = p.read_text()
    write_sgrid(tmp_path / "b.sgrid", back)
    assert (tmp_path / "b.sgrid").read_text() == text


def test_round_trip_3d(tmp_path):
    rng = np.random.default_rng(6)
    mask = rng.random((5, 4, 3)) < 0.6
    mask[0, 0, 0] = mask[-1, -1, -1] = True
    d = GridDomain.from_mask(mask, 0.5)
    p = tmp_path / "c.sgrid"
    write_sgrid(p, d)
    assert read_sgrid(p) == d


def test_write_normalizes_to_bounding_box(tmp_path):
    mask = np.zeros((10, 10), dtype=bool)
    mask[4:6, 2:5] = True
    d = GridDomain.from_mask(mask, 1.0)
    text = dumps_sgrid(d)
    back = loads_sgrid(text)
    assert back.spec.extent == (2, 3)
    assert back.spec.origin == (0, 0)
    assert back.cell_count == d.cell_count
    assert dumps_sgrid(back) == text


def test_whitespace_tolerant():
    text = "SGRID 1\n 2   0.5 \n3 2\n1 0 1\n011"
    d = loads_sgrid(text)
    assert d.cell_count == 4
    assert d.cell_size == 0.5


def test_row0_is_smallest_y():
    text = "SGRID 1\n2 1.0\n2 2\n10\n01\n"
    d = loads_sgrid(text)
    assert d.contains_cell((0, 0)) and d.contains_cell((1, 1))
    assert not d.contains_cell((1, 0)) and not d.contains_cell((0, 1))


@pytest.mark.parametrize("text,line", [
    ("SGRD 1\n2 1.0\n2 2\n10\n01\n", 1),
    ("SGRID 1\n2\n2 2\n10\n01\n", 2),
    ("SGRID 1\n5 1.0\n2 2\n10\n01\n", 2),
    ("SGRID 1\n2 1.0\n2\n10\n01\n", 3),
    ("SGRID 1\n2 1.0\n2 2\n10\n", 5),
    ("SGRID 1\n2 1.0\n2 2\n100\n01\n", 4),
])
def test_malformed_reports_line(text, line):
    with pytest.raises(SGridError) as e:
        loads_sgrid(text)
    assert e.value.line == line


def test_malformed_reports_column():
    with pytest.raises(SGridError) as e:
        loads_sgrid("SGRID 1\n2 1.0\n3 1\n1x0\n")
    assert e.value.line == 4
    assert e.value.column == 2


def test_corpus_families_round_trip(tmp_path):
    # write drops the lattice origin, so compare occupancy and scale
    for name, d in shapes.standard_corpus(seed=1, blobs=2):
        p = tmp_path / f"{name}.sgrid"
        write_sgrid(p, d)
        back = read_sgrid(p)
        assert back.cell_size == d.cell_size
        assert np.array_equal(back.occupancy, d.trimmed().occupancy)
