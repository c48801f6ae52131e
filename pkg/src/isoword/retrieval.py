"""Keyword-indexed record store with query-string audit generation.

Records carry a dedicated keyword field; an inverted index maps the
normalized keyword to record ids in insertion order. Lookups are exact
matches on the normalized keyword. For every search a canonical SQL-style
query string is generated for audit logging; it denotes exactly the records
the search returns.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .errors import (
    CorruptStore,
    DuplicateId,
    EmptyKeyword,
    InvalidPictureRecord,
)

log = logging.getLogger(__name__)

KINDS = ("text", "picture")


@dataclass(frozen=True)
class Record:
    """One stored information item; `keyword` is the search key."""

    id: int
    keyword: str
    title: str
    body: str = ""
    kind: str = "text"
    picture_path: str | None = None
    description: str = ""


@dataclass(frozen=True)
class Presentation:
    display_text: str
    speakable_text: str
    picture_path: str | None = None


def normalize_keyword(s: str) -> str:
    """Trim, lowercase, and collapse internal whitespace runs to one space."""
    normalized = " ".join(s.split()).lower()
    if not normalized:
        raise EmptyKeyword(f"keyword {s!r} is empty after normalization")
    return normalized


def build_query(keyword: str) -> str:
    """Canonical audit query string for a keyword search.

    Single quotes inside the keyword are doubled, SQL style. The records a
    search returns are exactly the ones this statement denotes.
    """
    normalized = normalize_keyword(keyword)
    return "SELECT * FROM records WHERE keyword = '{}';".format(
        normalized.replace("'", "''")
    )


class RecordStore:
    """In-memory record set plus the keyword inverted index."""

    def __init__(self):
        self._records: dict[int, Record] = {}
        self._index: dict[str, list[int]] = {}

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[Record]:
        return list(self._records.values())

    def add(self, record: Record) -> None:
        """Store a record and index it under its normalized keyword."""
        if record.id in self._records:
            raise DuplicateId(f"record id {record.id} already stored")
        if record.kind not in KINDS:
            raise ValueError(f"unknown record kind {record.kind!r}")
        if record.kind == "picture" and (
            not record.picture_path or not record.description.strip()
        ):
            raise InvalidPictureRecord(
                f"picture record {record.id} needs picture_path and description"
            )
        keyword = normalize_keyword(record.keyword)
        self._records[record.id] = record
        self._index.setdefault(keyword, []).append(record.id)

    def search(self, keyword: str) -> list[Record]:
        """Records whose normalized keyword matches, in insertion order."""
        normalized = normalize_keyword(keyword)
        log.info("query: %s", build_query(keyword))
        return [self._records[rid] for rid in self._index.get(normalized, [])]


def render_result(record: Record) -> Presentation:
    """Presentation for one record.

    Text records speak title + body; picture records speak title +
    description and surface the picture path for display.
    """
    if record.kind == "picture":
        return Presentation(
            display_text=f"{record.title} [picture: {record.picture_path}]\n"
            f"{record.description}",
            speakable_text=f"{record.title}. {record.description}",
            picture_path=record.picture_path,
        )
    return Presentation(
        display_text=f"{record.title}\n{record.body}",
        speakable_text=f"{record.title}. {record.body}",
        picture_path=None,
    )


def save_store(store: RecordStore, path) -> None:
    """Write the store as UTF-8 JSON lines, one record per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in store.records:
            doc = {
                "id": record.id,
                "keyword": record.keyword,
                "title": record.title,
                "body": record.body,
                "kind": record.kind,
            }
            if record.picture_path is not None:
                doc["picture_path"] = record.picture_path
            if record.description:
                doc["description"] = record.description
            fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def load_store(path) -> RecordStore:
    """Read a JSON-lines store file, rebuilding and re-validating the index.

    Any malformed or invariant-breaking line raises CorruptStore naming the
    line number. An empty file loads as an empty, valid store.
    """
    store = RecordStore()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                record = Record(
                    id=int(doc["id"]),
                    keyword=str(doc["keyword"]),
                    title=str(doc["title"]),
                    body=str(doc.get("body", "")),
                    kind=str(doc.get("kind", "text")),
                    picture_path=doc.get("picture_path"),
                    description=str(doc.get("description", "")),
                )
                store.add(record)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorruptStore(f"{path}: line {line_no}: {exc}") from exc
            except (DuplicateId, EmptyKeyword, InvalidPictureRecord) as exc:
                raise CorruptStore(f"{path}: line {line_no}: {exc}") from exc
    return store
