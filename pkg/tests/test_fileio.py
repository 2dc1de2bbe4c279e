import json

import pytest

from linetension.currents import boundary, is_closed, mass, normalize
from linetension.fileio import SchemaError, dump_current, load_current, parse_current
from conftest import currents_equal


def doc(pieces, n=2, m=1):
    return {"ambient_dim": n, "lattice_dim": m, "pieces": pieces}


def piece(start, end, theta):
    return {"start": list(start), "end": list(end), "theta": list(theta)}


SQUARE = doc(
    [
        piece((0, 0), (1, 0), (1,)),
        piece((1, 0), (1, 1), (1,)),
        piece((1, 1), (0, 1), (1,)),
        piece((0, 1), (0, 0), (1,)),
    ]
)


class TestParse:
    def test_valid_square(self):
        P = parse_current(SQUARE)
        assert P.ambient_dim == 2 and P.lattice_dim == 1
        assert is_closed(P)
        assert mass(P) == pytest.approx(4.0)

    def test_missing_field(self):
        with pytest.raises(SchemaError, match="missing field 'pieces'"):
            parse_current({"ambient_dim": 2, "lattice_dim": 1})

    def test_dimension_mismatch_path(self):
        bad = doc([piece((0, 0, 0), (1, 0, 0), (1,))])
        with pytest.raises(SchemaError, match=r"pieces\[0\].start"):
            parse_current(bad)

    def test_theta_must_be_integral(self):
        bad = doc([piece((0, 0), (1, 0), (1.5,))])
        with pytest.raises(SchemaError, match=r"pieces\[0\].theta\[0\]"):
            parse_current(bad)
        ok = doc([piece((0, 0), (1, 0), (2.0,))])
        assert parse_current(ok).pieces[0][1].entries == (2,)

    def test_degenerate_segment(self):
        bad = doc([piece((0.5, 0.5), (0.5, 0.5), (1,))])
        with pytest.raises(SchemaError, match="degenerate"):
            parse_current(bad)

    def test_snapping_identifies_near_vertices(self):
        # Endpoints differing by 1e-10 must cancel after snapping.
        wobbly = doc(
            [
                piece((0, 0), (1.0000000001, 0), (1,)),
                piece((1, 0), (0, 0), (1,)),
            ]
        )
        P = parse_current(wobbly)
        assert normalize(P).is_empty
        assert boundary(P).is_empty

    def test_non_number_coordinate(self):
        bad = doc([piece((0, "x"), (1, 0), (1,))])
        with pytest.raises(SchemaError, match=r"pieces\[0\].start\[1\]"):
            parse_current(bad)


class TestRoundTrip:
    def test_dump_and_load(self, tmp_path):
        P = parse_current(SQUARE)
        path = tmp_path / "square.json"
        dump_current(P, path)
        Q = load_current(path)
        assert currents_equal(P, Q)

    def test_invalid_json_reported(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError, match="invalid JSON"):
            load_current(path)

    def test_loaded_document_matches(self, tmp_path):
        path = tmp_path / "square.json"
        path.write_text(json.dumps(SQUARE))
        P = load_current(path)
        assert len(P.pieces) == 4
