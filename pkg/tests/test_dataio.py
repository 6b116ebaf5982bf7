import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from bridgerank import dataio
from bridgerank.errors import (
    BridgeRankError,
    DataFormatError,
    DuplicateVoteError,
    RatingRangeError,
    SchemaError,
)
from bridgerank.model import ModelParams, RatingsDataset, Vote
from bridgerank.scoring import NoteScore, NoteStatus
from bridgerank.simulator import SimulationConfig, generate


def write(path, text: str):
    path.write_bytes(text.encode("utf-8"))
    return path


# -- votes ----------------------------------------------------------------------

def test_header_only_is_empty(tmp_path):
    d = dataio.read_votes(write(tmp_path / "v.tsv", "user_id\tnote_id\trating\n"))
    assert (d.n_users, d.n_notes, len(d)) == (0, 0, 0)


def test_two_votes_in_file_order(tmp_path):
    d = dataio.read_votes(write(tmp_path / "v.tsv", "user_id\tnote_id\trating\na\tn1\t1\nb\tn1\t-1\n"))
    assert (d.n_users, d.n_notes) == (2, 1)
    assert d.votes == (Vote("a", "n1", 1.0), Vote("b", "n1", -1.0))


def test_round_trip_generated_corpus(tmp_path):
    data, _ = generate(SimulationConfig(users_per_group=20, notes_per_archetype=4, votes_per_note=10, seed=2))
    f1, f2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
    dataio.write_votes(data, f1)
    back = dataio.read_votes(f1)
    assert back.votes == data.votes
    dataio.write_votes(back, f2)
    assert f1.read_bytes() == f2.read_bytes()
    assert dataio.read_votes(f2) == back


def test_fractional_ratings_round_trip(tmp_path):
    votes = [Vote("a", "x", 0.0), Vote("b", "x", -0.0), Vote("c", "x", 0.1), Vote("d", "x", -1 / 3)]
    data = RatingsDataset(votes)
    dataio.write_votes(data, tmp_path / "v.tsv")
    text = (tmp_path / "v.tsv").read_text()
    assert "a\tx\t0.0\n" in text
    back = dataio.read_votes(tmp_path / "v.tsv")
    assert [v.rating for v in back] == [v.rating for v in votes]
    assert np.signbit(back.ratings[1])


@pytest.mark.parametrize("body, line", [
    ("a\tn\n", 2),
    ("a\tn\t1\nb\tn\tx\n", 3),
    ("a\tn\t1\t2\n", 2),
    ("\tn\t1\n", 2),
])
def test_malformed_lines_report_line_number(tmp_path, body, line):
    with pytest.raises(DataFormatError) as info:
        dataio.read_votes(write(tmp_path / "v.tsv", "user_id\tnote_id\trating\n" + body))
    assert info.value.line == line
    assert f":{line}:" in str(info.value)


def test_bad_header(tmp_path):
    with pytest.raises(DataFormatError):
        dataio.read_votes(write(tmp_path / "v.tsv", "user\tnote\trating\n"))
    with pytest.raises(DataFormatError):
        dataio.read_votes(write(tmp_path / "e.tsv", ""))


@pytest.mark.parametrize("value", ["1.5", "-2", "nan", "inf"])
def test_rating_out_of_range(tmp_path, value):
    with pytest.raises(RatingRangeError):
        dataio.read_votes(write(tmp_path / "v.tsv", f"user_id\tnote_id\trating\na\tn\t{value}\n"))


def test_duplicates(tmp_path):
    path = write(tmp_path / "v.tsv", "user_id\tnote_id\trating\na\tn\t1\nb\tn\t1\na\tn\t-1\n")
    with pytest.raises(DuplicateVoteError, match=":4:"):
        dataio.read_votes(path)
    d = dataio.read_votes(path, on_duplicate="last")
    assert d.votes == (Vote("a", "n", -1.0), Vote("b", "n", 1.0))


def test_crlf_and_missing_final_newline(tmp_path):
    d = dataio.read_votes(write(tmp_path / "v.tsv", "user_id\tnote_id\trating\r\na\tn\t1"))
    assert d.votes == (Vote("a", "n", 1.0),)


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError, match="nope.tsv"):
        dataio.read_votes(tmp_path / "nope.tsv")


@settings(max_examples=200, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.binary(max_size=200))
def test_arbitrary_bytes_never_crash(tmp_path, blob):
    path = tmp_path / "fuzz.tsv"
    for payload in (blob, b"user_id\tnote_id\trating\n" + blob):
        path.write_bytes(payload)
        try:
            dataio.read_votes(path)
        except BridgeRankError:
            pass
        try:
            dataio.read_params(path)
        except BridgeRankError:
            pass


# -- params ---------------------------------------------------------------------

def random_params(seed):
    rng = np.random.default_rng(seed)
    U, N = rng.integers(0, 12, size=2)
    specials = np.array([0.0, -0.0, 5e-324, -1e308, 1 / 3, np.pi * 1e-12])
    def draw(n):
        v = rng.standard_normal(n) * 10.0 ** rng.integers(-8, 8, size=n)
        mask = rng.random(n) < 0.2
        v[mask] = rng.choice(specials, mask.sum())
        return v
    return ModelParams(draw(U), draw(U), draw(N), draw(N))


@pytest.mark.parametrize("seed", range(100))
def test_params_round_trip_fuzzed(tmp_path, seed):
    p = random_params(seed)
    uids = [f"user{k}" for k in range(p.n_users)]
    nids = [f"note{k}" for k in range(p.n_notes)]
    dataio.write_params(p, tmp_path / "p.tsv", uids, nids)
    back, u2, n2 = dataio.read_params(tmp_path / "p.tsv")
    assert back == p
    assert (u2, n2) == (uids, nids)


def test_empty_params_round_trip(tmp_path):
    dataio.write_params(ModelParams.zeros(0, 0), tmp_path / "p.tsv")
    back, u, n = dataio.read_params(tmp_path / "p.tsv")
    assert back == ModelParams.zeros(0, 0) and u == [] and n == []


def test_params_layout(tmp_path):
    dataio.write_params(ModelParams([0.1], [-2.0], [1 / 3], [0.0]), tmp_path / "p.tsv", ["u"], ["n"])
    assert (tmp_path / "p.tsv").read_text() == (
        "[users]\nuser_id\tintercept\tfactor\nu\t0.10000000000000001\t-2\n"
        "[notes]\nnote_id\tintercept\tfactor\nn\t0.33333333333333331\t0\n"
    )


def test_align_params():
    data = RatingsDataset([Vote("b", "y", 1), Vote("a", "x", 1)])
    p = ModelParams([1.0, 2.0, 9.0], [0.1, 0.2, 0.9], [3.0, 4.0], [0.3, 0.4])
    aligned = dataio.align_params(p, ["a", "b", "extra"], ["x", "y"], data)
    np.testing.assert_array_equal(aligned.user_intercepts, [2.0, 1.0])
    np.testing.assert_array_equal(aligned.note_factors, [0.4, 0.3])
    with pytest.raises(BridgeRankError):
        dataio.align_params(p, ["a", "extra", "z"], ["x", "y"], data)


# -- scores and truth -----------------------------------------------------------

def test_scores_round_trip(tmp_path):
    scores = [NoteScore("n2", 0.9, -0.1, 12), NoteScore("n1", 0.2, 1.3, 3)]
    statuses = [NoteStatus.DISPLAYED, NoteStatus.NEEDS_MORE_VOTES]
    dataio.write_scores(scores, statuses, tmp_path / "s.tsv")
    lines = (tmp_path / "s.tsv").read_text().splitlines()
    assert lines[0] == "note_id\tintercept\tfactor\tvote_count\tstatus\trank"
    assert lines[1].endswith("\t12\tDISPLAYED\t1")
    assert dataio.read_scores(tmp_path / "s.tsv") == (scores, statuses)


def test_truth_round_trip(tmp_path):
    _, truth = generate(SimulationConfig(users_per_group=5, notes_per_archetype=2, votes_per_note=4))
    dataio.write_truth(truth, tmp_path / "t.tsv")
    assert dataio.read_truth(tmp_path / "t.tsv") == truth


# -- public data conversion -----------------------------------------------------

PUBLIC_HEADER = "noteId\traterParticipantId\tcreatedAtMillis\thelpfulnessLevel\n"


def test_convert_default_mode(tmp_path):
    src = write(tmp_path / "r.tsv", PUBLIC_HEADER
                + "n1\tr1\t0\tHELPFUL\nn1\tr2\t0\tSOMEWHAT_HELPFUL\nn2\tr1\t0\tNOT_HELPFUL\n")
    counts = dataio.convert_public_data(src, tmp_path / "v.tsv")
    assert (tmp_path / "v.tsv").read_text() == "user_id\tnote_id\trating\nr1\tn1\t1\nr1\tn2\t-1\n"
    assert counts == {"written": 2, "dropped:SOMEWHAT_HELPFUL": 1}


def test_convert_tri_mode(tmp_path):
    src = write(tmp_path / "r.tsv", PUBLIC_HEADER
                + "n1\tr1\t0\tHELPFUL\nn1\tr2\t0\tSOMEWHAT_HELPFUL\nn1\tr3\t0\tNOT_HELPFUL\n")
    dataio.convert_public_data(src, tmp_path / "v.tsv", "tri")
    d = dataio.read_votes(tmp_path / "v.tsv")
    assert [v.rating for v in d] == [1.0, 0.0, -1.0]


def test_convert_unknown_levels_warn(tmp_path, caplog):
    src = write(tmp_path / "r.tsv", PUBLIC_HEADER + "n1\tr1\t0\t\nn1\tr2\t0\tMEH\nn2\tr2\t0\tMEH\n")
    with caplog.at_level(logging.WARNING):
        counts = dataio.convert_public_data(src, tmp_path / "v.tsv")
    assert counts == {"written": 0, "dropped:<empty>": 1, "dropped:MEH": 2}
    assert "MEH" in caplog.text


def test_convert_missing_column(tmp_path):
    src = write(tmp_path / "r.tsv", "noteId\thelpfulnessLevel\nn1\tHELPFUL\n")
    with pytest.raises(SchemaError, match="raterParticipantId"):
        dataio.convert_public_data(src, tmp_path / "v.tsv")


def test_convert_header_only(tmp_path):
    src = write(tmp_path / "r.tsv", PUBLIC_HEADER)
    dataio.convert_public_data(src, tmp_path / "v.tsv")
    assert len(dataio.read_votes(tmp_path / "v.tsv")) == 0
