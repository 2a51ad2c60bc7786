import json

import numpy as np
import pytest

from finemerge import FramePosteriors, ServiceHypothesis
from finemerge.core import DEFAULT_VOCAB, LocalHypothesis, Vocabulary
from finemerge.io import (
    FormatError,
    decode_posteriors,
    encode_posteriors,
    read_hypotheses,
    read_params,
    read_posteriors,
    read_references,
    read_split,
    write_dataset,
    write_hypotheses,
    write_params,
    write_posteriors,
)
from finemerge.merge import MergeParams
from finemerge.synth import SynthConfig, gen_dataset
from finemerge.tune import TunedParams

from conftest import random_posteriors


class TestPosteriorFiles:
    def test_tiny_round_trip_is_bitwise(self):
        vocab = Vocabulary.from_string("_a")
        P = FramePosteriors("u", np.array([[0.25, 0.75]]))
        (Q, v), = decode_posteriors(encode_posteriors(P, vocab))
        assert v == vocab and Q.utterance_id == "u"
        np.testing.assert_array_equal(Q.probs, P.probs)

    def test_many_records(self, tmp_path):
        rng = np.random.default_rng(0)
        items = [random_posteriors(rng, T, len(DEFAULT_VOCAB), 0.5, f"u{T}") for T in (1, 4, 9)]
        write_posteriors(tmp_path / "p.bin", items)
        back = read_posteriors(tmp_path / "p.bin")
        assert [P.utterance_id for P in back] == ["u1", "u4", "u9"]
        for a, b in zip(items, back):
            np.testing.assert_allclose(b.probs, a.probs, atol=1e-7)

    def test_json_matches_binary(self, tmp_path):
        rng = np.random.default_rng(1)
        items = [random_posteriors(rng, 6, len(DEFAULT_VOCAB), 0.3, "x")]
        write_posteriors(tmp_path / "p.bin", items)
        write_posteriors(tmp_path / "p.json", items, fmt="json")
        a = read_posteriors(tmp_path / "p.bin")[0].probs
        b = read_posteriors(tmp_path / "p.json")[0].probs
        np.testing.assert_array_equal(a, b)

    def test_truncated(self, tmp_path):
        data = encode_posteriors(FramePosteriors("u", np.full((3, len(DEFAULT_VOCAB)), 1 / 29)))
        for cut in (2, 7, len(data) - 1):
            (tmp_path / "p.bin").write_bytes(data[:cut])
            with pytest.raises(FormatError, match="truncated|magic"):
                read_posteriors(tmp_path / "p.bin")

    def test_bad_magic_and_version(self):
        data = encode_posteriors(FramePosteriors("u", np.full((1, len(DEFAULT_VOCAB)), 1 / 29)))
        with pytest.raises(FormatError, match="magic"):
            decode_posteriors(b"XXXX" + data[4:])
        with pytest.raises(FormatError, match="version"):
            decode_posteriors(data[:4] + b"\x09\x00" + data[6:])

    def test_vocabulary_mismatch(self, tmp_path):
        vocab = Vocabulary.from_string("_ab")
        write_posteriors(tmp_path / "p.bin", [FramePosteriors("u", np.array([[1.0, 0.0, 0.0]]))], vocab)
        with pytest.raises(FormatError, match="vocabulary"):
            read_posteriors(tmp_path / "p.bin")
        assert len(read_posteriors(tmp_path / "p.bin", vocab)) == 1

    def test_width_mismatch_on_write(self):
        with pytest.raises(FormatError):
            encode_posteriors(FramePosteriors("u", np.array([[1.0, 0.0]])))

    def test_garbage(self, tmp_path):
        (tmp_path / "p").write_bytes(b"\xff\xfe not json")
        with pytest.raises(FormatError):
            read_posteriors(tmp_path / "p")


class TestJsonLines:
    def test_round_trip(self, tmp_path):
        items = [
            ("a", ServiceHypothesis("the cat", (0.9, 0.8), (("the cat", -1.0), ("a cat", -2.5)))),
            ("b", LocalHypothesis("dog", (0.5,))),
            ("c", ServiceHypothesis("", ())),
        ]
        write_hypotheses(tmp_path / "h.jsonl", items)
        res = read_hypotheses(tmp_path / "h.jsonl")
        assert res.ok
        got = res.as_dict()
        assert got["a"].transcript == "the cat"
        assert got["a"].word_confidences == (0.9, 0.8)
        assert got["a"].nbest == (("the cat", -1.0), ("a cat", -2.5))
        assert got["b"].word_confidences == (0.5,)
        assert got["c"].transcript == ""

    def test_raw_text_is_normalized(self, tmp_path):
        (tmp_path / "h.jsonl").write_text(json.dumps({"id": "a", "transcript": "The  Cat!"}) + "\n")
        assert read_hypotheses(tmp_path / "h.jsonl").as_dict()["a"].transcript == "the cat"

    def test_errors_collected_with_line_numbers(self, tmp_path):
        lines = [
            json.dumps({"id": "a", "transcript": "ok"}),
            "{not json",
            "",
            json.dumps({"transcript": "no id"}),
            json.dumps([1, 2]),
            json.dumps({"id": "b", "transcript": 5}),
            json.dumps({"id": "c", "transcript": "two words", "word_confidences": [0.5]}),
            json.dumps({"id": "d", "transcript": "fine"}),
        ]
        (tmp_path / "h.jsonl").write_text("\n".join(lines) + "\n")
        res = read_hypotheses(tmp_path / "h.jsonl")
        assert [e.line for e in res.errors] == [2, 4, 5, 6, 7]
        assert [k for k, _ in res.records] == ["a", "d"]

    def test_references(self, tmp_path):
        (tmp_path / "r.jsonl").write_text('{"id": "a", "transcript": "x y"}\n{"id": "b"}\n')
        res = read_references(tmp_path / "r.jsonl")
        assert res.records == [("a", "x y")] and res.errors[0].line == 2


class TestParams:
    def test_round_trip(self, tmp_path):
        p = TunedParams(merge=MergeParams(psi=0.01, omega=0.3, gamma=0.2), rescore_lambda=2.0)
        write_params(tmp_path / "p.json", p)
        assert read_params(tmp_path / "p.json") == p

    @pytest.mark.parametrize(
        "text",
        [
            "nope",
            "[]",
            '{"format": "finemerge-params", "version": 99}',
            '{"format": "other", "version": 1}',
            '{"format": "finemerge-params", "version": 1, "merge": {"omega": 3.0}}',
            '{"format": "finemerge-params", "version": 1, "merge": {"bogus": 1}}',
        ],
    )
    def test_rejects(self, tmp_path, text):
        (tmp_path / "p.json").write_text(text)
        with pytest.raises(FormatError):
            read_params(tmp_path / "p.json")


class TestDataset:
    @pytest.mark.parametrize("fmt", ["binary", "json"])
    def test_round_trip(self, tmp_path, fmt):
        ds = gen_dataset(SynthConfig(seed=2), 120)
        write_dataset(tmp_path, ds, fmt=fmt)
        for name in ("val", "test"):
            back = read_split(tmp_path, name)
            assert [u.id for u in back] == [u.id for u in ds.splits[name]]
            for a, b in zip(ds.splits[name], back):
                assert a.reference == b.reference
                assert a.service.transcript == b.service.transcript
                assert a.service.nbest == b.service.nbest
                np.testing.assert_array_equal(a.posteriors.probs, b.posteriors.probs)
        train = read_split(tmp_path, "train")
        assert [u.reference for u in train] == [u.reference for u in ds.train]
        assert (tmp_path / "train.txt").read_text().splitlines() == [u.reference for u in ds.train]
        assert SynthConfig.from_dict(json.loads((tmp_path / "config.json").read_text())) == ds.config

    def test_missing_service_line(self, tmp_path):
        write_dataset(tmp_path, gen_dataset(SynthConfig(seed=2), 120))
        path = tmp_path / "val.service.jsonl"
        path.write_text("".join(path.read_text().splitlines(keepends=True)[1:]))
        with pytest.raises(FormatError):
            read_split(tmp_path, "val")
