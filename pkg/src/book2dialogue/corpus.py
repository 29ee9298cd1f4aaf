"""Textbook corpus: parsing the canonical JSON format and deriving the
partial-information views handed to the student role."""
from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import EmptyBook, SchemaError


class InfoLevel(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    FULL = "full"


@dataclass(frozen=True)
class FormattingInfo:
    """Structural metadata of a section, distinct from its prose content."""

    title: str
    summary: str = ""
    introduction: str = ""
    learning_objectives: tuple[str, ...] = ()
    bold_terms: tuple[str, ...] = ()
    key_concepts: tuple[str, ...] = ()


@dataclass(frozen=True)
class Section:
    id: str
    title: str
    content: str
    subsection_titles: tuple[str, ...]
    formatting: FormattingInfo


@dataclass(frozen=True)
class Chapter:
    index: int
    title: str
    sections: tuple[Section, ...]


@dataclass(frozen=True)
class Book:
    id: str
    title: str
    domain_label: str
    chapters: tuple[Chapter, ...]

    def find_section(self, section_id: str) -> Section | None:
        for chapter in self.chapters:
            for section in chapter.sections:
                if section.id == section_id:
                    return section
        return None

    def iter_sections(self):
        for chapter in self.chapters:
            for section in chapter.sections:
                yield chapter, section


@dataclass(frozen=True)
class StudentContext:
    """The fields actually exposed to the student role at a given level."""

    info_level: InfoLevel
    rendered_fields: dict[str, str] = field(default_factory=dict)


# Field sets per level. Low/Medium are fixed; High adds the remaining
# formatting fields; Full additionally exposes the section content.
_FORMATTING_FIELDS = ("title", "summary", "introduction",
                      "learning_objectives", "bold_terms", "key_concepts")


def _nfc(value: str) -> str:
    return unicodedata.normalize("NFC", value)


def _require(obj: dict, key: str, path: str, kind=str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{path}.{key}")
    value = obj[key]
    if kind is str and not isinstance(value, str):
        raise SchemaError(f"{path}.{key}", f"expected string at {path}.{key}")
    if kind is int and not isinstance(value, int):
        raise SchemaError(f"{path}.{key}", f"expected integer at {path}.{key}")
    if kind is list and not isinstance(value, list):
        raise SchemaError(f"{path}.{key}", f"expected list at {path}.{key}")
    return value


def _str_list(obj: dict, key: str, path: str) -> tuple[str, ...]:
    raw = obj.get(key, [])
    if not isinstance(raw, list) or any(not isinstance(x, str) for x in raw):
        raise SchemaError(f"{path}.{key}", f"expected list of strings at {path}.{key}")
    return tuple(_nfc(x) for x in raw)


def parse_textbook(document: dict | str | Path) -> Book:
    """Parse a canonical textbook JSON document (dict, JSON text, or path).

    All strings are NFC-normalized. Chapter/section order is preserved.
    Raises SchemaError naming the first bad path, or EmptyBook when the
    document carries no chapters.
    """
    if isinstance(document, Path):
        document = json.loads(document.read_text(encoding="utf-8"))
    elif isinstance(document, str):
        document = json.loads(document)
    if not isinstance(document, dict):
        raise SchemaError("$", "top-level value must be an object")

    book_id = _nfc(_require(document, "id", "$"))
    if not book_id:
        raise SchemaError("$.id", "book id must be non-empty")
    title = _nfc(_require(document, "title", "$"))
    domain = _nfc(_require(document, "domain", "$"))
    raw_chapters = _require(document, "chapters", "$", list)
    if not raw_chapters:
        raise EmptyBook(f"book {book_id!r} has no chapters")

    chapters = []
    seen_section_ids: set[str] = set()
    for ci, raw_chapter in enumerate(raw_chapters):
        cpath = f"chapters[{ci}]"
        index = _require(raw_chapter, "index", cpath, int)
        if index != ci + 1:
            raise SchemaError(f"{cpath}.index",
                              f"chapter indices must be 1-based and contiguous, "
                              f"got {index} at position {ci}")
        ctitle = _nfc(_require(raw_chapter, "title", cpath))
        raw_sections = _require(raw_chapter, "sections", cpath, list)
        sections = []
        for si, raw_section in enumerate(raw_sections):
            spath = f"{cpath}.sections[{si}]"
            sections.append(_parse_section(raw_section, spath, seen_section_ids))
        chapters.append(Chapter(index=index, title=ctitle, sections=tuple(sections)))
    return Book(id=book_id, title=title, domain_label=domain,
                chapters=tuple(chapters))


def _parse_section(raw: dict, path: str, seen_ids: set[str]) -> Section:
    sid = _nfc(_require(raw, "id", path))
    if not sid:
        raise SchemaError(f"{path}.id", "section id must be non-empty")
    if sid in seen_ids:
        raise SchemaError(f"{path}.id", f"duplicate section id {sid!r}")
    seen_ids.add(sid)
    stitle = _nfc(_require(raw, "title", path))
    content = _nfc(_require(raw, "content", path))
    subsection_titles = _str_list(raw, "subsection_titles", path)

    raw_fmt = raw.get("formatting")
    if not isinstance(raw_fmt, dict):
        raise SchemaError(f"{path}.formatting")
    fmt_title = _nfc(_require(raw_fmt, "title", f"{path}.formatting"))
    if not fmt_title:
        raise SchemaError(f"{path}.formatting.title", "formatting title must be non-empty")
    formatting = FormattingInfo(
        title=fmt_title,
        summary=_nfc(raw_fmt.get("summary", "")),
        introduction=_nfc(raw_fmt.get("introduction", "")),
        learning_objectives=_str_list(raw_fmt, "learning_objectives", f"{path}.formatting"),
        bold_terms=_str_list(raw_fmt, "bold_terms", f"{path}.formatting"),
        key_concepts=_str_list(raw_fmt, "key_concepts", f"{path}.formatting"),
    )
    return Section(id=sid, title=stitle, content=content,
                   subsection_titles=subsection_titles, formatting=formatting)


def book_to_dict(book: Book) -> dict:
    """Serialize a Book back to the canonical JSON structure."""
    return {
        "id": book.id,
        "title": book.title,
        "domain": book.domain_label,
        "chapters": [
            {
                "index": ch.index,
                "title": ch.title,
                "sections": [
                    {
                        "id": s.id,
                        "title": s.title,
                        "content": s.content,
                        "subsection_titles": list(s.subsection_titles),
                        "formatting": {
                            "title": s.formatting.title,
                            "summary": s.formatting.summary,
                            "introduction": s.formatting.introduction,
                            "learning_objectives": list(s.formatting.learning_objectives),
                            "bold_terms": list(s.formatting.bold_terms),
                            "key_concepts": list(s.formatting.key_concepts),
                        },
                    }
                    for s in ch.sections
                ],
            }
            for ch in book.chapters
        ],
    }


def _render_list(items: tuple[str, ...]) -> str:
    return "; ".join(items)


def select_context(formatting: FormattingInfo, content: str, level: InfoLevel,
                   subsection_titles: tuple[str, ...] = ()) -> StudentContext:
    """Derive the student's partial view of a section.

    Low exposes only the title; Medium adds the summary; High exposes all
    formatting fields (plus subsection titles, used by the prompt template);
    Full additionally exposes the prose content.
    """
    if not formatting.title:
        raise ValueError("formatting.title must be non-empty")
    fields: dict[str, str] = {"title": formatting.title}
    if level in (InfoLevel.MEDIUM, InfoLevel.HIGH, InfoLevel.FULL):
        fields["summary"] = formatting.summary
    if level in (InfoLevel.HIGH, InfoLevel.FULL):
        fields["introduction"] = formatting.introduction
        fields["learning_objectives"] = _render_list(formatting.learning_objectives)
        fields["bold_terms"] = _render_list(formatting.bold_terms)
        fields["key_concepts"] = _render_list(formatting.key_concepts)
        fields["subsection_titles"] = _render_list(subsection_titles)
    if level is InfoLevel.FULL:
        fields["content"] = content
    return StudentContext(info_level=level, rendered_fields=fields)


def context_for_section(section: Section, level: InfoLevel) -> StudentContext:
    return select_context(section.formatting, section.content, level,
                          subsection_titles=section.subsection_titles)
