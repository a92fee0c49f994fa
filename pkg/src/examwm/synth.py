"""Deterministic synthetic exam fixtures.

Generates single-column assessment PDFs (embedded TrueType text, standard
question numbering) plus a matching answer-key JSON. Questions are small
arithmetic problems, so a text-only reference solver can genuinely answer
them from the document alone; that property is what makes calibration with
the bundled mock clients meaningful.
"""

from __future__ import annotations

import io
import os
import random
from dataclasses import dataclass, field

import matplotlib

from .jsonutil import dumps_stable

_FONT_NAME = "ExamSans"
_PAGE_SIZE = (612.0, 792.0)  # US Letter
_LEFT = 72.0
_OPTION_INDENT = 90.0
_TOP = 720.0
_LINE = 16.0
_BOTTOM = 80.0

_TTF_PATH = os.path.join(matplotlib.get_data_path(), "fonts", "ttf", "DejaVuSans.ttf")


@dataclass
class SynthItem:
    id: str
    qtype: str                      # MCQ | TF | LF
    stem: str
    options: list[tuple[str, str]] = field(default_factory=list)  # (label, body)
    gold: str | None = None
    reference_answer: str | None = None
    figure: bool = False


@dataclass
class SynthExam:
    exam_id: str
    seed: int
    items: list[SynthItem]


def _parse_mix(mix: str) -> tuple[int, int, int]:
    parts = mix.split(":")
    if len(parts) != 3:
        raise ValueError(f"mix must be mcq:tf:lf ratios, got {mix!r}")
    vals = tuple(int(p) for p in parts)
    if sum(vals) <= 0 or any(v < 0 for v in vals):
        raise ValueError(f"mix ratios must be non-negative and sum > 0: {mix!r}")
    return vals  # type: ignore[return-value]


def _counts_from_mix(n_items: int, mix: tuple[int, int, int]) -> list[int]:
    total = sum(mix)
    exact = [n_items * m / total for m in mix]
    counts = [int(e) for e in exact]
    remainders = [(exact[i] - counts[i], -i) for i in range(3)]
    for _ in range(n_items - sum(counts)):
        i = max(range(3), key=lambda j: remainders[j])
        counts[i] += 1
        remainders[i] = (-1.0, -i)
    return counts


def build_exam(n_items: int, mix: str = "6:2:2", seed: int = 0,
               exam_id: str | None = None, figure_every: int = 7) -> SynthExam:
    if n_items < 1:
        raise ValueError("need at least one item")
    rng = random.Random(seed)
    counts = _counts_from_mix(n_items, _parse_mix(mix))
    qtypes = ["MCQ"] * counts[0] + ["TF"] * counts[1] + ["LF"] * counts[2]
    rng.shuffle(qtypes)
    exam_id = exam_id or f"synth-{seed}-{n_items}"

    items = []
    for idx, qtype in enumerate(qtypes, start=1):
        a = rng.randint(11, 89)
        b = rng.randint(2, 9)
        op, value = rng.choice([("+", a + b), ("-", a - b)])
        figure = figure_every > 0 and idx % figure_every == 0
        if qtype == "MCQ":
            distractors = set()
            while len(distractors) < 3:
                d = value + rng.choice([-9, -7, -4, -3, -2, -1, 1, 2, 3, 4, 7, 9])
                if d != value:
                    distractors.add(d)
            bodies = [value] + sorted(distractors)
            rng.shuffle(bodies)
            labels = [chr(ord("A") + i) for i in range(len(bodies))]
            gold = labels[bodies.index(value)]
            items.append(SynthItem(
                id=f"Q{idx}", qtype="MCQ",
                stem=f"{idx}. What is {a} {op} {b}?",
                options=[(lab, str(v)) for lab, v in zip(labels, bodies)],
                gold=gold, figure=figure,
            ))
        elif qtype == "TF":
            truth = rng.random() < 0.5
            shown = value if truth else value + rng.choice([-3, -2, -1, 1, 2, 3])
            items.append(SynthItem(
                id=f"Q{idx}", qtype="TF",
                stem=f"{idx}. True or False: {a} {op} {b} = {shown}.",
                options=[("True", "True"), ("False", "False")],
                gold="True" if truth else "False", figure=figure,
            ))
        else:
            items.append(SynthItem(
                id=f"Q{idx}", qtype="LF",
                stem=f"{idx}. Explain why {a} {op} {b} equals {value}.",
                reference_answer=(
                    f"{a} {op} {b} equals {value} because "
                    f"{'adding' if op == '+' else 'subtracting'} {b} "
                    f"{'to' if op == '+' else 'from'} {a} gives {value}."
                ),
                figure=figure,
            ))
    return SynthExam(exam_id=exam_id, seed=seed, items=items)


def render_pdf(exam: SynthExam) -> bytes:
    """Lay the exam out with reportlab; byte-identical for identical inputs."""
    from reportlab.pdfbase import pdfmetrics
    from reportlab.pdfbase.ttfonts import TTFont
    from reportlab.pdfgen import canvas

    if _FONT_NAME not in pdfmetrics.getRegisteredFontNames():
        pdfmetrics.registerFont(TTFont(_FONT_NAME, _TTF_PATH))

    buf = io.BytesIO()
    c = canvas.Canvas(buf, pagesize=_PAGE_SIZE, invariant=1, pageCompression=0)
    y = _TOP

    def newline(step: float = _LINE) -> None:
        nonlocal y
        y -= step
        if y < _BOTTOM:
            c.showPage()
            y = _TOP

    c.setFont(_FONT_NAME, 14)
    c.drawString(_LEFT, y, f"Assessment {exam.exam_id}")
    newline(20)
    c.setFont(_FONT_NAME, 10)
    c.drawString(_LEFT, y, "Answer every question. Objective items have exactly one correct choice.")
    newline(24)

    for item in exam.items:
        needed = _LINE * (len(item.options) + 2) + (56 if item.figure else 0)
        if y - needed < _BOTTOM:
            c.showPage()
            y = _TOP
        c.setFont(_FONT_NAME, 11)
        c.drawString(_LEFT, y, item.stem)
        newline()
        if item.figure:
            c.rect(_LEFT + 6, y - 40, 96, 44, stroke=1, fill=0)
            c.setFont(_FONT_NAME, 8)
            c.drawString(_LEFT + 14, y - 20, "figure")
            newline(56)
            c.setFont(_FONT_NAME, 11)
        for label, body in item.options:
            if item.qtype == "TF":
                c.drawString(_OPTION_INDENT, y, body)
            else:
                c.drawString(_OPTION_INDENT, y, f"({label}) {body}")
            newline()
        newline(8)
    c.showPage()
    c.save()
    return buf.getvalue()


def answer_key_json(exam: SynthExam) -> bytes:
    entries = []
    for item in exam.items:
        entry: dict[str, object] = {"id": item.id, "type": item.qtype}
        if item.qtype == "LF":
            entry["reference_answer"] = item.reference_answer
        else:
            entry["gold"] = item.gold
        entries.append(entry)
    return dumps_stable({"exam_id": exam.exam_id, "items": entries})


def generate(n_items: int, mix: str = "6:2:2", seed: int = 0,
             exam_id: str | None = None) -> tuple[bytes, bytes, SynthExam]:
    """Returns (pdf_bytes, answer_key_bytes, exam description)."""
    exam = build_exam(n_items, mix=mix, seed=seed, exam_id=exam_id)
    return render_pdf(exam), answer_key_json(exam), exam
