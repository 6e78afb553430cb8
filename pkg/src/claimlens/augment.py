"""Back-translation augmentation: claim -> pivot language -> English.

Paraphrases that survive the round trip become new records labeled like
their parent and linked to it through parent_id, so downstream splitting can
keep augmented copies out of evaluation folds. Products are never
re-augmented. Three clients cover the practical cases: a real HTTP
translation service, a deterministic fixture for offline tests, and an
identity client whose output always gets skipped.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Optional, Union

from .corpus import ClaimRecord, Dataset

DEFAULT_PIVOT = "de"
_FIXTURE_SENTINEL = "__fixture__:"


class TranslationError(RuntimeError):
    """Raised when a translation leg cannot produce text."""


class TranslationClient(ABC):
    """A text translator between two language codes."""

    @abstractmethod
    def translate(self, text: str, source: str, target: str) -> str:
        """Translate text from source language to target language."""


class HttpTranslationClient(TranslationClient):
    """Client for a JSON-over-HTTP translation endpoint.

    Request: POST {"text", "source", "target"}; response: {"text"}; any
    non-2xx status is a failure. Every failure mode (network, bad status,
    malformed body) surfaces as TranslationError so augmentation can count
    it instead of crashing.
    """

    def __init__(
        self,
        endpoint: str,
        auth_token: Optional[str] = None,
        timeout: float = 10.0,
        session=None,
    ):
        import requests

        self.endpoint = endpoint
        self.timeout = timeout
        self._headers = {}
        if auth_token:
            self._headers["Authorization"] = f"Bearer {auth_token}"
        self._session = session if session is not None else requests.Session()

    def translate(self, text: str, source: str, target: str) -> str:
        import requests

        try:
            response = self._session.post(
                self.endpoint,
                json={"text": text, "source": source, "target": target},
                headers=self._headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TranslationError(f"translation request failed: {exc}") from exc
        if not 200 <= response.status_code < 300:
            raise TranslationError(
                f"translation service returned HTTP {response.status_code}"
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise TranslationError("translation service returned invalid JSON") from exc
        translated = body.get("text")
        if not isinstance(translated, str) or not translated.strip():
            raise TranslationError("translation service response missing text")
        return translated


class IdentityTranslationClient(TranslationClient):
    """Returns input unchanged; every back-translation gets skipped."""

    def translate(self, text: str, source: str, target: str) -> str:
        return text


class FixtureTranslationClient(TranslationClient):
    """Deterministic offline client backed by an id -> paraphrase table.

    The outbound leg maps a record's text to its id (through the dataset)
    and returns an opaque sentinel; the return leg resolves the sentinel to
    the canned paraphrase. Texts or ids absent from the tables raise
    TranslationError, which augmentation records as a failure.
    """

    def __init__(self, paraphrases: Mapping[str, str], dataset: Dataset):
        self._paraphrases = dict(paraphrases)
        self._text_to_id = {}
        for rec in dataset.records:
            self._text_to_id.setdefault(rec.text, rec.id)

    def translate(self, text: str, source: str, target: str) -> str:
        if source == "en":
            record_id = self._text_to_id.get(text)
            if record_id is None:
                raise TranslationError("fixture has no entry for this text")
            return f"{_FIXTURE_SENTINEL}{record_id}"
        if text.startswith(_FIXTURE_SENTINEL):
            record_id = text[len(_FIXTURE_SENTINEL):]
            paraphrase = self._paraphrases.get(record_id)
            if paraphrase is None:
                raise TranslationError(f"fixture has no paraphrase for id {record_id!r}")
            return paraphrase
        raise TranslationError("fixture client received text it did not produce")


def load_paraphrase_fixture(path: str | Path) -> dict[str, str]:
    """Load a JSONL fixture of {"id", "paraphrase"} rows."""
    path = Path(path)
    table: dict[str, str] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "id" not in obj or "paraphrase" not in obj:
                raise ValueError(f"{path}:{lineno}: fixture row needs 'id' and 'paraphrase'")
            table[obj["id"]] = obj["paraphrase"]
    return table


def back_translate(
    record: ClaimRecord, client: TranslationClient, pivot: str = DEFAULT_PIVOT
) -> Optional[ClaimRecord]:
    """Round-trip one claim through the pivot language.

    Returns the augmented record, or None when the round trip came back
    identical to the original (compared case-insensitively after trimming).
    Translation failures propagate as TranslationError.
    """
    pivoted = client.translate(record.text, "en", pivot)
    round_tripped = client.translate(pivoted, pivot, "en").strip()
    if not round_tripped:
        raise TranslationError("round trip produced empty text")
    if round_tripped.lower() == record.text.strip().lower():
        return None
    return ClaimRecord(
        id=f"{record.id}-bt-{pivot}",
        text=round_tripped,
        label=record.label,
        source=record.source,
        date=record.date,
        evidence=record.evidence,
        parent_id=record.id,
    )


@dataclass(frozen=True)
class AugmentationReport:
    """Outcome tally; produced + skipped_identical + failed equals the
    number of eligible (non-product) input records."""

    produced: int
    skipped_identical: int
    failed: int
    pivot_language: str
    scope: str
    failure_messages: tuple[str, ...] = ()

    @property
    def eligible(self) -> int:
        return self.produced + self.skipped_identical + self.failed


def augment_dataset(
    dataset: Dataset,
    client: TranslationClient,
    pivot: str = DEFAULT_PIVOT,
    scope: str = "whole_dataset",
    max_workers: int = 1,
) -> tuple[Dataset, AugmentationReport]:
    """Back-translate every original record and append the products.

    Records that are themselves augmentation products (parent_id set) are
    left alone. Failed translations are counted, capped at 25 recorded
    messages, and never abort the run. With max_workers > 1 the round trips
    run on a thread pool (useful for HTTP clients); products are appended in
    input order either way.
    """
    if max_workers < 1:
        raise ValueError(f"max_workers must be >= 1, got {max_workers}")
    # skip products, and skip originals whose product already exists, so a
    # second run over augmented output is a no-op rather than an id collision
    existing = {rec.id for rec in dataset.records}
    eligible = [
        rec
        for rec in dataset.records
        if rec.parent_id is None and f"{rec.id}-bt-{pivot}" not in existing
    ]
    outcomes: list[Union[Optional[ClaimRecord], TranslationError]] = []
    if max_workers == 1 or len(eligible) <= 1:
        for rec in eligible:
            try:
                outcomes.append(back_translate(rec, client, pivot))
            except TranslationError as exc:
                outcomes.append(exc)
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(back_translate, rec, client, pivot) for rec in eligible]
            for future in futures:
                try:
                    outcomes.append(future.result())
                except TranslationError as exc:
                    outcomes.append(exc)
    products: list[ClaimRecord] = []
    skipped = 0
    failed = 0
    messages: list[str] = []
    for rec, outcome in zip(eligible, outcomes):
        if isinstance(outcome, TranslationError):
            failed += 1
            if len(messages) < 25:
                messages.append(f"{rec.id}: {outcome}")
        elif outcome is None:
            skipped += 1
        else:
            products.append(outcome)
    augmented = replace(dataset, records=dataset.records + tuple(products))
    report = AugmentationReport(
        produced=len(products),
        skipped_identical=skipped,
        failed=failed,
        pivot_language=pivot,
        scope=scope,
        failure_messages=tuple(messages),
    )
    return augmented, report
