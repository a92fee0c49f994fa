"""Content-stream tokenizer.

Yields operators with their operand values *and* exact byte ranges, so the
watermark engine can splice new material into a stream without re-serializing
(and thus without perturbing) any untouched operator bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator

from ..errors import MalformedPdf
from .lexer_ops import OPERATORS
from .parser import _DELIMITERS, _WHITESPACE, Lexer


@dataclass
class ContentOp:
    operands: list[Any]
    operator: str
    start: int  # offset of the first operand byte
    end: int    # offset just past the operator keyword


def iter_ops(stream: bytes) -> Iterator[ContentOp]:
    lex = Lexer(stream)
    operands: list[Any] = []
    op_start: int | None = None
    n = len(stream)
    while True:
        lex.skip_ws()
        if lex.pos >= n:
            if operands:
                raise MalformedPdf("trailing operands without operator")
            return
        here = lex.pos
        c = stream[here]
        if c in _DELIMITERS and c != 0x25:
            if op_start is None:
                op_start = here
            operands.append(lex.parse_object())
            continue
        token = lex.read_regular_token()
        if not token:
            raise MalformedPdf(f"content stream stalls at offset {here}")
        text = token.decode("latin-1")
        if _looks_numeric(token) or text in ("true", "false", "null"):
            if op_start is None:
                op_start = here
            sub = Lexer(token)
            operands.append(sub.parse_object() if token not in (b"true", b"false", b"null")
                            else {b"true": True, b"false": False, b"null": None}[token])
            continue
        if text == "BI":
            # Inline image: skip to EI (fixtures never carry these, but do
            # not choke if a foreign document does).
            end = stream.find(b"EI", lex.pos)
            if end < 0:
                raise MalformedPdf("unterminated inline image")
            lex.pos = end + 2
            yield ContentOp(operands, "BI..EI", op_start if op_start is not None else here, lex.pos)
            operands, op_start = [], None
            continue
        if text not in OPERATORS:
            raise MalformedPdf(f"unknown content operator {text!r} at {here}")
        yield ContentOp(operands, text, op_start if op_start is not None else here, lex.pos)
        operands, op_start = [], None


def _looks_numeric(token: bytes) -> bool:
    head = token[:1]
    return head.isdigit() or head in (b"+", b"-", b".")
