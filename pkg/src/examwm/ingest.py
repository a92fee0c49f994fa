"""Assessment ingestion: PDF bytes -> structured item schema.

Segmentation follows a configurable question-number grammar (stems start at
the left text margin with `1.`, `Q2)`, `3:` style markers; options are
`(A)`/`B.` markers or bare True/False tokens). Encrypted and image-only PDFs
are rejected; watermarking needs a text layer.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace

from .errors import InvalidGold, KeyMismatch, NoItemsFound
from .jsonutil import dumps_stable, loads
from .pdf import load
from .pdf.textruns import document_runs

QTYPES = ("MCQ", "TF", "LF")


@dataclass(frozen=True)
class TextSpan:
    page_index: int
    bbox: tuple[float, float, float, float]
    text: str
    font_key: str
    font_size: float

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if x0 > x1 or y0 > y1:
            raise ValueError(f"degenerate bbox {self.bbox}")
        if self.page_index < 0:
            raise ValueError("negative page index")
        if not self.text:
            raise ValueError("empty span text")

    def to_dict(self) -> dict:
        return {
            "bbox": list(self.bbox),
            "font_key": self.font_key,
            "font_size": self.font_size,
            "page_index": self.page_index,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TextSpan":
        return cls(
            page_index=d["page_index"],
            bbox=tuple(d["bbox"]),
            text=d["text"],
            font_key=d["font_key"],
            font_size=d["font_size"],
        )


@dataclass
class OptionEntry:
    label: str
    body: list[TextSpan]

    def body_text(self) -> str:
        """Option body with the leading label marker stripped."""
        text = " ".join(s.text for s in self.body).strip()
        m = re.match(r"^\(?" + re.escape(self.label) + r"[.)]\s*", text)
        return text[m.end():] if m else text

    def to_dict(self) -> dict:
        return {"body": [s.to_dict() for s in self.body], "label": self.label}

    @classmethod
    def from_dict(cls, d: dict) -> "OptionEntry":
        return cls(label=d["label"], body=[TextSpan.from_dict(s) for s in d["body"]])


@dataclass
class QuestionItem:
    id: str
    qtype: str
    stem: list[TextSpan]
    options: list[OptionEntry] = field(default_factory=list)
    gold: str | None = None
    figures: list[tuple[float, float, float, float]] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def stem_text(self) -> str:
        return " ".join(s.text for s in self.stem).strip()

    def option_labels(self) -> list[str]:
        return [o.label for o in self.options]

    def validate(self) -> None:
        if self.qtype not in QTYPES:
            raise ValueError(f"{self.id}: bad qtype {self.qtype}")
        labels = self.option_labels()
        if len(set(labels)) != len(labels):
            raise ValueError(f"{self.id}: duplicate option labels")
        if self.qtype == "MCQ" and len(labels) < 2:
            raise ValueError(f"{self.id}: MCQ needs >= 2 options")
        if self.qtype == "TF" and sorted(labels) != ["False", "True"]:
            raise ValueError(f"{self.id}: TF needs the True/False pair")
        if self.qtype == "LF" and labels:
            raise ValueError(f"{self.id}: LF must have no options")
        if self.gold is not None and self.qtype != "LF" and self.gold not in labels:
            raise InvalidGold(f"{self.id}: gold {self.gold!r} not among {labels}")

    def to_dict(self) -> dict:
        return {
            "figures": [list(b) for b in self.figures],
            "flags": list(self.flags),
            "gold": self.gold,
            "id": self.id,
            "options": [o.to_dict() for o in self.options],
            "qtype": self.qtype,
            "stem": [s.to_dict() for s in self.stem],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuestionItem":
        return cls(
            id=d["id"],
            qtype=d["qtype"],
            stem=[TextSpan.from_dict(s) for s in d["stem"]],
            options=[OptionEntry.from_dict(o) for o in d["options"]],
            gold=d.get("gold"),
            figures=[tuple(b) for b in d.get("figures", [])],
            flags=list(d.get("flags", [])),
        )


@dataclass
class ItemSchema:
    exam_id: str
    items: list[QuestionItem]
    page_count: int
    source_hash: str
    preamble: list[str] = field(default_factory=list)

    def item(self, item_id: str) -> QuestionItem:
        for it in self.items:
            if it.id == item_id:
                return it
        raise KeyMismatch(f"item {item_id} not in schema {self.exam_id}")

    def has_item(self, item_id: str) -> bool:
        return any(it.id == item_id for it in self.items)

    def to_json(self) -> bytes:
        return dumps_stable({
            "exam_id": self.exam_id,
            "items": [it.to_dict() for it in self.items],
            "page_count": self.page_count,
            "preamble": list(self.preamble),
            "source_hash": self.source_hash,
        })

    @classmethod
    def from_json(cls, data: bytes | str) -> "ItemSchema":
        d = loads(data)
        return cls(
            exam_id=d["exam_id"],
            items=[QuestionItem.from_dict(x) for x in d["items"]],
            page_count=d["page_count"],
            source_hash=d["source_hash"],
            preamble=list(d.get("preamble", [])),
        )


@dataclass
class AnswerKey:
    exam_id: str
    entries: dict[str, dict]  # id -> {"type", "gold"?, "reference_answer"?}

    def to_json(self) -> bytes:
        items = []
        for item_id in sorted(self.entries, key=_qnum_sort_key):
            e = self.entries[item_id]
            entry: dict[str, object] = {"id": item_id, "type": e["type"]}
            if e.get("gold") is not None:
                entry["gold"] = e["gold"]
            if e.get("reference_answer") is not None:
                entry["reference_answer"] = e["reference_answer"]
            items.append(entry)
        return dumps_stable({"exam_id": self.exam_id, "items": items})

    @classmethod
    def from_json(cls, data: bytes | str) -> "AnswerKey":
        d = loads(data)
        entries = {}
        for e in d["items"]:
            entries[e["id"]] = {
                "type": e["type"],
                "gold": e.get("gold"),
                "reference_answer": e.get("reference_answer"),
            }
        return cls(exam_id=d["exam_id"], entries=entries)


def _qnum_sort_key(item_id: str):
    m = re.match(r"Q(\d+)([a-z]?)$", item_id)
    if m:
        return (0, int(m.group(1)), m.group(2))
    return (1, 0, item_id)


@dataclass
class SegmentConfig:
    stem_pattern: str = r"^Q?\s*(\d+)([a-z]?)[.):]\s+"
    option_pattern: str = r"^\(?([A-Z])[.)]\s*"
    tf_tokens: tuple[str, str] = ("True", "False")
    left_margin_tolerance: float = 6.0


DEFAULT_SEGMENT_CONFIG = SegmentConfig()


# --- operations ----------------------------------------------------------------


def extract_spans(pdf_bytes: bytes) -> list[TextSpan]:
    """All text spans of the document in reading order.

    Reading order is geometric: page ascending, then top-to-bottom,
    then left-to-right by bbox. Raises MalformedPdf / EncryptedPdf.
    """
    doc = load(pdf_bytes)
    spans: list[TextSpan] = []
    for page_text in document_runs(doc):
        for run in page_text.runs:
            if not run.text:
                continue
            spans.append(TextSpan(
                page_index=page_text.page_index,
                bbox=run.bbox,
                text=run.text,
                font_key=run.font_res,
                font_size=run.size,
            ))
    spans.sort(key=lambda s: (s.page_index, -s.bbox[3], s.bbox[0]))
    return spans


def classify_item(options: list[OptionEntry]) -> str:
    """Total classification rule over the grouped options."""
    if len(options) == 2:
        texts = sorted((o.label.lower() for o in options))
        if texts == ["false", "true"]:
            return "TF"
        bodies = sorted(o.body_text().lower() for o in options)
        if bodies == ["false", "true"]:
            return "TF"
    lettered = [o for o in options if re.fullmatch(r"[A-Z]", o.label)]
    if len(lettered) >= 2:
        return "MCQ"
    return "LF"


def _page_margins(spans: list[TextSpan]) -> dict[int, float]:
    margins: dict[int, float] = {}
    for s in spans:
        x = s.bbox[0]
        if s.page_index not in margins or x < margins[s.page_index]:
            margins[s.page_index] = x
    return margins


def segment_items(spans: list[TextSpan], *, exam_id: str, page_count: int,
                  source_hash: str,
                  config: SegmentConfig = DEFAULT_SEGMENT_CONFIG,
                  figure_rects: list[tuple[int, tuple[float, float, float, float]]] | None = None,
                  ) -> ItemSchema:
    """Group reading-ordered spans into question items.

    Unmatched leading text becomes preamble; later unmatched spans continue
    the current stem or option body. Items with letter-suffixed numbering
    ("1a.") become separate items flagged for instructor review.
    """
    stem_re = re.compile(config.stem_pattern)
    option_re = re.compile(config.option_pattern)
    margins = _page_margins(spans)

    preamble: list[str] = []
    drafts: list[dict] = []
    current: dict | None = None
    seen_ids: dict[str, int] = {}

    for span in spans:
        at_margin = span.bbox[0] <= margins[span.page_index] + config.left_margin_tolerance
        stem_m = stem_re.match(span.text) if at_margin else None
        if stem_m:
            number, suffix = stem_m.group(1), stem_m.group(2)
            item_id = f"Q{number}{suffix}"
            flags = ["ambiguous_numbering"] if suffix else []
            count = seen_ids.get(item_id, 0)
            seen_ids[item_id] = count + 1
            if count:
                item_id = f"{item_id}#{count + 1}"
                flags.append("duplicate_number")
            current = {"id": item_id, "stem": [span], "options": [], "flags": flags}
            drafts.append(current)
            continue
        token = span.text.strip()
        option_m = option_re.match(span.text)
        is_tf_token = token in config.tf_tokens
        if current is not None and (option_m or is_tf_token):
            label = token if is_tf_token else option_m.group(1)
            current["options"].append(OptionEntry(label=label, body=[span]))
            continue
        if current is None:
            preamble.append(span.text)
        elif current["options"]:
            current["options"][-1].body.append(span)
        else:
            current["stem"].append(span)

    if not drafts:
        raise NoItemsFound("no recognizable question numbering in document")

    items: list[QuestionItem] = []
    for draft in drafts:
        options: list[OptionEntry] = draft["options"]
        # collapse duplicate labels rather than dropping content
        qtype = classify_item(options)
        flags = list(draft["flags"])
        stem = list(draft["stem"])
        if qtype == "LF" and options:
            for opt in options:
                stem.extend(opt.body)
            options = []
            flags.append("demoted_options")
        if qtype == "TF":
            relabeled = []
            for opt in options:
                body = opt.body_text() or opt.label
                canonical = "True" if body.lower() == "true" or opt.label.lower() == "true" else "False"
                relabeled.append(OptionEntry(label=canonical, body=opt.body))
            options = relabeled
        item = QuestionItem(id=draft["id"], qtype=qtype, stem=stem,
                            options=options, flags=flags)
        item.validate()
        items.append(item)

    if figure_rects:
        _attach_figures(items, figure_rects)

    return ItemSchema(exam_id=exam_id, items=items, page_count=page_count,
                      source_hash=source_hash, preamble=preamble)


def _attach_figures(items: list[QuestionItem],
                    rects: list[tuple[int, tuple[float, float, float, float]]]) -> None:
    for page, bbox in rects:
        best: QuestionItem | None = None
        best_gap = None
        for item in items:
            first = item.stem[0]
            if first.page_index != page:
                continue
            gap = first.bbox[1] - bbox[3]  # stem bottom above figure top
            if gap >= -2 and (best_gap is None or gap < best_gap):
                best, best_gap = item, gap
        if best is not None:
            best.figures.append(bbox)


def attach_answer_key(schema: ItemSchema, key: AnswerKey) -> ItemSchema:
    """Populate gold answers; returns a new schema, original untouched."""
    if key.exam_id != schema.exam_id:
        raise KeyMismatch(
            f"key exam_id {key.exam_id!r} != schema exam_id {schema.exam_id!r}")
    for item_id in key.entries:
        if not schema.has_item(item_id):
            raise KeyMismatch(f"key entry {item_id} not in schema")

    new_items = []
    for item in schema.items:
        entry = key.entries.get(item.id)
        if entry is None:
            flags = item.flags + ["no_gold"] if "no_gold" not in item.flags else item.flags
            new_items.append(replace(item, flags=flags))
            continue
        if item.qtype == "LF":
            gold = entry.get("reference_answer") or entry.get("gold")
        else:
            gold = entry.get("gold")
            if gold is not None and gold not in item.option_labels():
                raise InvalidGold(
                    f"{item.id}: gold {gold!r} not among options {item.option_labels()}")
        new_items.append(replace(item, gold=gold))
    return replace(schema, items=new_items)


def ingest_pdf(pdf_bytes: bytes, key: AnswerKey | None = None,
               exam_id: str | None = None,
               config: SegmentConfig = DEFAULT_SEGMENT_CONFIG) -> ItemSchema:
    """Full ingestion: extract, segment, attach figures and answer key.

    The exam id defaults to the key's id, then to a digest-derived id, so
    identical bytes always produce an identical schema.
    """
    source_hash = hashlib.sha256(pdf_bytes).hexdigest()
    doc = load(pdf_bytes)
    page_count = len(doc.pages())
    spans = extract_spans(pdf_bytes)

    rects = []
    for page_text in document_runs(doc):
        for rect in page_text.rects:
            x0, y0, x1, y1 = rect.bbox
            if (x1 - x0) >= 8 and (y1 - y0) >= 8:
                rects.append((page_text.page_index, rect.bbox))

    if exam_id is None:
        exam_id = key.exam_id if key is not None else f"exam-{source_hash[:12]}"
    schema = segment_items(spans, exam_id=exam_id, page_count=page_count,
                           source_hash=source_hash, config=config,
                           figure_rects=rects)
    if key is not None:
        schema = attach_answer_key(schema, key)
    return schema
