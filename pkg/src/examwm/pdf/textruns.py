"""Content-stream interpretation: text runs with geometry and byte ranges.

One TextRun is produced per show-text operator. Runs carry enough structural
information (byte offsets into the page's combined content stream, enclosing
text-object boundaries, the Tf name token range) for the watermark engine to
splice or retag operators without disturbing anything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import MalformedPdf
from .content import ContentOp, iter_ops
from .fonts import LoadedFont, page_fonts
from .model import Name


Matrix = tuple[float, float, float, float, float, float]

IDENTITY: Matrix = (1, 0, 0, 1, 0, 0)


def mat_mult(a: Matrix, b: Matrix) -> Matrix:
    a0, a1, a2, a3, a4, a5 = a
    b0, b1, b2, b3, b4, b5 = b
    return (
        a0 * b0 + a1 * b2,
        a0 * b1 + a1 * b3,
        a2 * b0 + a3 * b2,
        a2 * b1 + a3 * b3,
        a4 * b0 + a5 * b2 + b4,
        a4 * b1 + a5 * b3 + b5,
    )


def mat_apply(m: Matrix, x: float, y: float) -> tuple[float, float]:
    return (m[0] * x + m[2] * y + m[4], m[1] * x + m[3] * y + m[5])


@dataclass
class TextRun:
    page_index: int
    text: str
    codes: bytes
    font_res: str
    font: LoadedFont
    size: float                      # effective size in user-space points
    origin: tuple[float, float]      # baseline start, user space
    bbox: tuple[float, float, float, float]
    render_mode: int
    bt_start: int                    # byte offset of the enclosing BT
    et_end: int                      # byte offset just past the enclosing ET
    tf_range: tuple[int, int] | None  # byte range of the /Name token of Tf
    show_end: int                    # byte offset just past the show operator
    shows_in_block: int = 1          # show-ops sharing this BT block


@dataclass
class PaintedRect:
    page_index: int
    bbox: tuple[float, float, float, float]
    stroked: bool


@dataclass
class PageText:
    page_index: int
    runs: list[TextRun] = field(default_factory=list)
    rects: list[PaintedRect] = field(default_factory=list)


class _TextState:
    def __init__(self) -> None:
        self.font_res: str | None = None
        self.font: LoadedFont | None = None
        self.size = 0.0
        self.char_spacing = 0.0
        self.word_spacing = 0.0
        self.horiz_scale = 1.0
        self.leading = 0.0
        self.rise = 0.0
        self.render_mode = 0


def interpret_page(doc, page: dict, page_index: int) -> PageText:
    """Run the operator stream of one page and collect text runs and rects."""
    stream = doc.page_content(page)
    fonts = page_fonts(doc, page)
    out = PageText(page_index=page_index)

    ctm: Matrix = IDENTITY
    stack: list[tuple[Matrix, _TextState]] = []
    ts = _TextState()
    tm: Matrix = IDENTITY
    tlm: Matrix = IDENTITY
    in_text = False
    bt_start = 0
    pending_rects: list[tuple[float, float, float, float]] = []
    block_runs: list[TextRun] = []
    block_tf_range: tuple[int, int] | None = None

    def flush_block(et_end: int) -> None:
        nonlocal block_runs
        for run in block_runs:
            run.et_end = et_end
            run.shows_in_block = len(block_runs)
        out.runs.extend(block_runs)
        block_runs = []

    for op in iter_ops(stream):
        name = op.operator
        args = op.operands
        if name == "q":
            stack.append((ctm, _copy_ts(ts)))
        elif name == "Q":
            if stack:
                ctm, ts = stack.pop()
        elif name == "cm" and len(args) == 6:
            ctm = mat_mult(_as_matrix(args), ctm)
        elif name == "re" and len(args) == 4:
            x, y, w, h = (float(a) for a in args)
            pending_rects.append((x, y, w, h))
        elif name in ("f", "F", "f*", "B", "B*", "b", "b*", "S", "s"):
            stroked = name in ("S", "s", "B", "B*", "b", "b*")
            for x, y, w, h in pending_rects:
                corners = [
                    mat_apply(ctm, x, y),
                    mat_apply(ctm, x + w, y),
                    mat_apply(ctm, x, y + h),
                    mat_apply(ctm, x + w, y + h),
                ]
                xs = [c[0] for c in corners]
                ys = [c[1] for c in corners]
                out.rects.append(
                    PaintedRect(page_index, (min(xs), min(ys), max(xs), max(ys)), stroked)
                )
            pending_rects = []
        elif name in ("n", "W", "W*"):
            if name == "n":
                pending_rects = []
        elif name == "BT":
            in_text = True
            tm = tlm = IDENTITY
            bt_start = op.start
            block_tf_range = None
        elif name == "ET":
            in_text = False
            flush_block(op.end)
        elif name == "Tf" and len(args) == 2:
            res = str(args[0])
            ts.font_res = res
            ts.font = fonts[res][1] if res in fonts else None
            ts.size = float(args[1])
            if in_text:
                block_tf_range = _tf_name_range(stream, op)
        elif name == "Tc" and args:
            ts.char_spacing = float(args[0])
        elif name == "Tw" and args:
            ts.word_spacing = float(args[0])
        elif name == "Tz" and args:
            ts.horiz_scale = float(args[0]) / 100.0
        elif name == "TL" and args:
            ts.leading = float(args[0])
        elif name == "Ts" and args:
            ts.rise = float(args[0])
        elif name == "Tr" and args:
            ts.render_mode = int(args[0])
        elif name == "Td" and len(args) == 2:
            tlm = mat_mult((1, 0, 0, 1, float(args[0]), float(args[1])), tlm)
            tm = tlm
        elif name == "TD" and len(args) == 2:
            ts.leading = -float(args[1])
            tlm = mat_mult((1, 0, 0, 1, float(args[0]), float(args[1])), tlm)
            tm = tlm
        elif name == "Tm" and len(args) == 6:
            tlm = _as_matrix(args)
            tm = tlm
        elif name == "T*":
            tlm = mat_mult((1, 0, 0, 1, 0, -ts.leading), tlm)
            tm = tlm
        elif name in ("Tj", "'", '"'):
            if name != "Tj":
                tlm = mat_mult((1, 0, 0, 1, 0, -ts.leading), tlm)
                tm = tlm
            if name == '"' and len(args) == 3:
                ts.word_spacing = float(args[0])
                ts.char_spacing = float(args[1])
            raw = args[-1]
            if isinstance(raw, bytes) and raw:
                run, tm = _show(raw, ts, tm, ctm, page_index, bt_start, op, block_tf_range)
                if run is not None:
                    block_runs.append(run)
        elif name == "TJ" and args and isinstance(args[0], list):
            pieces = [p for p in args[0]]
            raw_all = b"".join(p for p in pieces if isinstance(p, bytes))
            if raw_all:
                start_tm = tm
                text_parts: list[str] = []
                x0, y0 = mat_apply(mat_mult(IDENTITY, mat_mult(start_tm, ctm)), 0, ts.rise)
                for p in pieces:
                    if isinstance(p, bytes):
                        run, tm = _show(p, ts, tm, ctm, page_index, bt_start, op, block_tf_range)
                        if run is not None:
                            text_parts.append(run.text)
                    else:
                        shift = -float(p) / 1000.0 * ts.size * ts.horiz_scale
                        tm = mat_mult((1, 0, 0, 1, shift, 0), tm)
                if text_parts:
                    merged, tm_end = _merge_tj(
                        text_parts, raw_all, ts, start_tm, tm, ctm,
                        page_index, bt_start, op, block_tf_range,
                    )
                    block_runs.append(merged)
        # remaining operators do not affect text geometry
    if block_runs:  # unbalanced BT without ET
        flush_block(len(stream))
    return out


def _copy_ts(ts: _TextState) -> _TextState:
    clone = _TextState()
    clone.__dict__.update(ts.__dict__)
    return clone


def _as_matrix(args) -> Matrix:
    return tuple(float(a) for a in args)  # type: ignore[return-value]


def _tf_name_range(stream: bytes, op: ContentOp) -> tuple[int, int] | None:
    """Byte range of the font-name token inside a Tf operator."""
    idx = stream.find(b"/", op.start, op.end)
    if idx < 0:
        return None
    end = idx + 1
    while end < op.end and stream[end] not in b"\x00\t\n\x0c\r ()<>[]{}/%":
        end += 1
    return (idx, end)


def _show(raw, ts, tm, ctm, page_index, bt_start, op, tf_range):
    font = ts.font
    if font is None:
        return None, tm
    trm = mat_mult(tm, ctm)
    scale = math.hypot(trm[2], trm[3])  # vertical unit vector magnitude
    size = ts.size * scale
    x0, y0 = mat_apply(trm, 0, ts.rise)

    advance = 0.0
    for code in raw:
        w = font.code_width(code) / 1000.0 * ts.size
        w += ts.char_spacing
        if code == 32:
            w += ts.word_spacing
        advance += w * ts.horiz_scale
    tm_after = mat_mult((1, 0, 0, 1, advance, 0), tm)
    x1, y1 = mat_apply(mat_mult(tm_after, ctm), 0, ts.rise)

    asc = font.ascent / 1000.0 * size
    desc = font.descent / 1000.0 * size
    bbox = (
        min(x0, x1),
        min(y0, y1) + desc,
        max(x0, x1),
        max(y0, y1) + asc,
    )
    run = TextRun(
        page_index=page_index,
        text=font.decode_codes(raw),
        codes=raw,
        font_res=ts.font_res or "",
        font=font,
        size=size,
        origin=(x0, y0),
        bbox=bbox,
        render_mode=ts.render_mode,
        bt_start=bt_start,
        et_end=op.end,
        tf_range=tf_range,
        show_end=op.end,
    )
    return run, tm_after


def _merge_tj(text_parts, raw_all, ts, start_tm, end_tm, ctm,
              page_index, bt_start, op, tf_range) -> tuple[TextRun, Matrix]:
    font = ts.font
    trm = mat_mult(start_tm, ctm)
    scale = math.hypot(trm[2], trm[3])
    size = ts.size * scale
    x0, y0 = mat_apply(trm, 0, ts.rise)
    x1, y1 = mat_apply(mat_mult(end_tm, ctm), 0, ts.rise)
    asc = font.ascent / 1000.0 * size
    desc = font.descent / 1000.0 * size
    run = TextRun(
        page_index=page_index,
        text="".join(text_parts),
        codes=raw_all,
        font_res=ts.font_res or "",
        font=font,
        size=size,
        origin=(x0, y0),
        bbox=(min(x0, x1), min(y0, y1) + desc, max(x0, x1), max(y0, y1) + asc),
        render_mode=ts.render_mode,
        bt_start=bt_start,
        et_end=op.end,
        tf_range=tf_range,
        show_end=op.end,
    )
    return run, end_tm


def document_runs(doc) -> list[PageText]:
    pages = doc.pages()
    out = []
    for idx, page in enumerate(pages):
        try:
            out.append(interpret_page(doc, page, idx))
        except KeyError as exc:
            raise MalformedPdf(f"page {idx}: missing resource {exc}") from exc
    return out
