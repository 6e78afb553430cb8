"""Back-translation augmentation with pluggable translation clients."""

import json

import pytest

from claimlens import (
    ClaimRecord,
    Dataset,
    FixtureTranslationClient,
    HttpTranslationClient,
    IdentityTranslationClient,
    TranslationError,
    augment_dataset,
    back_translate,
    load_paraphrase_fixture,
)
from conftest import make_claim, write_jsonl


GINGER_ORIGINAL = (
    "Consuming boiled ginger with an empty stomach can kill the coronavirus"
)
GINGER_PARAPHRASE = "Eating cooked ginger on an empty stomach can kill coronavirus"


def _fixture_client(dataset, mapping):
    return FixtureTranslationClient(mapping, dataset)


class TestBackTranslate:
    def test_ginger_paraphrase_round_trip(self):
        record = ClaimRecord(id="g1", text=GINGER_ORIGINAL, label="fake")
        ds = Dataset((record,))
        client = _fixture_client(ds, {"g1": GINGER_PARAPHRASE})
        product = back_translate(record, client, pivot="de")
        assert product is not None
        assert product.text == GINGER_PARAPHRASE
        assert product.label == record.label
        assert product.parent_id == "g1"
        assert product.id == "g1-bt-de"

    def test_identity_round_trip_skipped(self):
        record = make_claim(1, "Some claim text here", "true")
        assert back_translate(record, IdentityTranslationClient()) is None

    def test_case_only_difference_still_skipped(self):
        record = make_claim(1, "Some claim text here", "true")
        ds = Dataset((record,))
        client = _fixture_client(ds, {"c1": "SOME CLAIM TEXT HERE"})
        assert back_translate(record, client) is None


class TestAugmentDataset:
    def test_doubles_dataset_with_distinct_paraphrases(self):
        n = 20
        records = tuple(
            make_claim(i, f"original claim number {i}", "true" if i % 2 else "fake")
            for i in range(n)
        )
        ds = Dataset(records)
        client = _fixture_client(
            ds, {f"c{i}": f"paraphrased claim number {i}" for i in range(n)}
        )
        augmented, report = augment_dataset(ds, client)
        assert len(augmented) == 2 * n
        assert report.produced == n
        assert report.skipped_identical == 0
        assert report.failed == 0
        # labels preserved, parent links valid (Dataset validates on build)
        for product in augmented.records[n:]:
            assert product.parent_id is not None
            assert augmented.get(product.parent_id).label == product.label

    def test_two_records_produces_four(self):
        ds = Dataset((
            make_claim(1, "first original claim", "true"),
            make_claim(2, "second original claim", "fake"),
        ))
        client = _fixture_client(
            ds, {"c1": "first claim paraphrased", "c2": "second claim paraphrased"}
        )
        augmented, report = augment_dataset(ds, client)
        assert len(augmented) == 4
        assert report.produced == 2

    def test_empty_eligible_set_unchanged(self):
        parent = make_claim(1, "one claim", "true")
        ds = Dataset((parent,))
        client = _fixture_client(ds, {"c1": "one claim"})  # identical -> skip
        augmented, report = augment_dataset(ds, client)
        assert augmented.records == ds.records
        assert report.produced == 0
        assert report.skipped_identical == 1

    def test_all_failures_output_equals_input(self):
        class Failing(IdentityTranslationClient):
            def translate(self, text, source, target):
                raise TranslationError("boom")

        ds = Dataset((
            make_claim(1, "first claim", "true"),
            make_claim(2, "second claim", "fake"),
        ))
        augmented, report = augment_dataset(ds, Failing())
        assert augmented.records == ds.records
        assert report.failed == 2
        assert report.produced == 0
        assert len(report.failure_messages) == 2

    def test_second_run_is_a_no_op(self):
        n = 5
        records = tuple(make_claim(i, f"claim text {i}", "true") for i in range(n))
        ds = Dataset(records)
        mapping = {f"c{i}": f"rewritten claim {i}" for i in range(n)}
        once, first = augment_dataset(ds, _fixture_client(ds, dict(mapping)))
        twice, second = augment_dataset(once, _fixture_client(once, dict(mapping)))
        assert first.produced == n
        assert twice.records == once.records
        assert second.eligible == 0
        assert second.produced == 0

    def test_concurrent_run_matches_sequential(self):
        n = 30
        records = tuple(make_claim(i, f"claim text {i}", "true") for i in range(n))
        ds = Dataset(records)
        mapping = {f"c{i}": f"rewritten text {i}" for i in range(n)}
        seq, _ = augment_dataset(ds, _fixture_client(ds, dict(mapping)))
        par, _ = augment_dataset(
            ds, _fixture_client(ds, dict(mapping)), max_workers=8
        )
        assert [r.id for r in seq.records] == [r.id for r in par.records]
        assert [r.text for r in seq.records] == [r.text for r in par.records]

    def test_report_records_pivot_and_scope(self, tiny_dataset):
        _, report = augment_dataset(
            tiny_dataset, IdentityTranslationClient(), pivot="fr", scope="whole_dataset"
        )
        assert report.pivot_language == "fr"
        assert report.scope == "whole_dataset"


class TestFixtureLoading:
    def test_load_paraphrase_fixture(self, tmp_path):
        path = tmp_path / "fix.jsonl"
        write_jsonl(path, [{"id": "a", "paraphrase": "re-worded text"}])
        table = load_paraphrase_fixture(path)
        assert table == {"a": "re-worded text"}

    def test_fixture_unknown_text_fails(self, tiny_dataset):
        client = _fixture_client(tiny_dataset, {"c1": "re-worded"})
        with pytest.raises(TranslationError):
            client.translate("text that is not in the dataset", "en", "de")


class TestHttpClient:
    class _FakeResponse:
        def __init__(self, status_code, payload):
            self.status_code = status_code
            self._payload = payload

        def json(self):
            return self._payload

    class _FakeSession:
        def __init__(self, response):
            self.response = response
            self.calls = []

        def post(self, url, json=None, headers=None, timeout=None):
            self.calls.append({"url": url, "json": json, "headers": headers})
            return self.response

    def test_request_schema_and_response(self):
        session = self._FakeSession(self._FakeResponse(200, {"text": "Hallo Welt"}))
        client = HttpTranslationClient(
            "https://mt.example/translate", auth_token="tok", session=session
        )
        out = client.translate("hello world", "en", "de")
        assert out == "Hallo Welt"
        call = session.calls[0]
        assert call["json"] == {"text": "hello world", "source": "en", "target": "de"}
        assert call["headers"]["Authorization"] == "Bearer tok"

    def test_non_2xx_is_failure(self):
        session = self._FakeSession(self._FakeResponse(503, {}))
        client = HttpTranslationClient("https://mt.example/translate", session=session)
        with pytest.raises(TranslationError, match="503"):
            client.translate("hello", "en", "de")

    def test_missing_text_key_is_failure(self):
        session = self._FakeSession(self._FakeResponse(200, {"translation": "x"}))
        client = HttpTranslationClient("https://mt.example/translate", session=session)
        with pytest.raises(TranslationError):
            client.translate("hello", "en", "de")
