import math

import pytest

from records import LikelihoodRecord, RecordParseError, format_records, parse_records, read_records


def test_parse_minimal_file():
    recs = parse_records("id,loglik\na,-1.5\nb,-2e1\n")
    assert recs == [LikelihoodRecord("a", -1.5), LikelihoodRecord("b", -20.0)]


def test_parse_latent_and_scores():
    text = "id,loglik,latent_sqnorm,score_0,score_1\na,-3.0,16.0,0.5,-1\nb,-4.0,,1e-3,2\n"
    a, b = parse_records(text)
    assert a.latent_sqnorm == 16.0
    assert a.score == (0.5, -1.0)
    assert b.latent_sqnorm is None
    assert b.score == (0.001, 2.0)


def test_bits_per_dim_conversion():
    (rec,) = parse_records("id,loglik\na,2.0\n", bits_per_dim=3)
    assert rec.loglik == pytest.approx(-2.0 * 3 * math.log(2.0))


@pytest.mark.parametrize("text", [
    "",
    "loglik,id\na,1\n",
    "id,loglik\na,-1,3\n",
    "id,loglik\na,nan\n",
    "id,loglik\na,inf\n",
    "id,loglik\na,abc\n",
    "id,loglik\na,-1\na,-2\n",
    "id,loglik\n,-1\n",
    "id,loglik,latent_sqnorm\na,-1,-4\n",
])
def test_malformed_files_are_rejected(text):
    with pytest.raises(RecordParseError):
        parse_records(text)


def test_record_rejects_non_finite_loglik():
    with pytest.raises(RecordParseError):
        LikelihoodRecord("x", float("nan"))


def test_round_trip_is_bit_exact():
    text = "id,loglik,latent_sqnorm,score_0\na,-1234.5678901234567,3.0000000000000004,0.1\nb,-1e-300,0.0,-2.5e10\n"
    first = parse_records(text)
    again = parse_records(format_records(first))
    assert again == first
    assert [r.loglik for r in again] == [-1234.5678901234567, -1e-300]


def test_read_records_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_records(tmp_path / "nao_existe.csv")
    bad = tmp_path / "latin1.csv"
    bad.write_bytes("id,loglik\nçã,-1\n".encode("latin-1"))
    with pytest.raises(RecordParseError):
        read_records(bad)
