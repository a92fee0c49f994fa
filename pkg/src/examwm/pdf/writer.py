"""Full-rewrite PDF serializer.

Emits a complete file (classic xref table, no incremental-update sections) so
that appended watermark objects cannot be stripped by truncating an update
tail, and so manifests always describe the final object numbering.
Serialization is deterministic for a fixed object graph.
"""

from __future__ import annotations

from typing import Any

from ..errors import MalformedPdf
from .model import Name, PdfStream, Ref, fmt_number

_STRING_ESCAPES = {0x28: b"\\(", 0x29: b"\\)", 0x5C: b"\\\\"}


def _ser_string(value: bytes) -> bytes:
    out = bytearray(b"(")
    for b in value:
        esc = _STRING_ESCAPES.get(b)
        if esc is not None:
            out += esc
        elif 32 <= b <= 126:
            out.append(b)
        else:
            out += b"\\%03o" % b
    out += b")"
    return bytes(out)


def _ser_name(name: str) -> bytes:
    out = bytearray(b"/")
    for b in name.encode("latin-1"):
        if b <= 32 or b > 126 or b in b"()<>[]{}/%#":
            out += b"#%02X" % b
        else:
            out.append(b)
    return bytes(out)


def serialize_object(obj: Any) -> bytes:
    if obj is None:
        return b"null"
    if isinstance(obj, bool):
        return b"true" if obj else b"false"
    if isinstance(obj, Ref):
        return b"%d %d R" % (obj.num, obj.gen)
    if isinstance(obj, Name):
        return _ser_name(str(obj))
    if isinstance(obj, (int, float)):
        return fmt_number(obj).encode("ascii")
    if isinstance(obj, bytes):
        return _ser_string(obj)
    if isinstance(obj, str):
        # Text strings entering the graph as str are encoded as PDFDocEncoded
        # literals; the toolkit itself only injects ASCII.
        return _ser_string(obj.encode("latin-1", "replace"))
    if isinstance(obj, list):
        return b"[ " + b" ".join(serialize_object(v) for v in obj) + b" ]"
    if isinstance(obj, dict):
        parts = [b"<<"]
        for key in sorted(obj):
            if key == "__ref__":
                continue
            parts.append(_ser_name(key) + b" " + serialize_object(obj[key]))
        parts.append(b">>")
        return b"\n".join(parts)
    if isinstance(obj, PdfStream):
        sdict = dict(obj.dict)
        sdict["Length"] = len(obj.raw)
        return serialize_object(sdict) + b"\nstream\n" + obj.raw + b"\nendstream"
    raise MalformedPdf(f"cannot serialize object of type {type(obj).__name__}")


def write(doc) -> bytes:
    """Serialize a Document back to complete PDF bytes."""
    out = bytearray(b"%PDF-1.4\n%\xe2\xe3\xcf\xd3\n")
    offsets: dict[int, int] = {}
    for num in sorted(doc.objects):
        offsets[num] = len(out)
        out += b"%d 0 obj\n" % num
        out += serialize_object(doc.objects[num])
        out += b"\nendobj\n"

    xref_pos = len(out)
    numbers = sorted(offsets)
    # Group into contiguous subsections; entry 0 heads the first section.
    sections: list[tuple[int, list[bytes]]] = [(0, [b"0000000000 65535 f \n"])]
    if numbers and numbers[0] == 1:
        start, entries = sections[0]
    else:
        start, entries = None, None  # type: ignore[assignment]
    prev = 0
    for num in numbers:
        if num == prev + 1 and sections and sections[-1][0] + len(sections[-1][1]) == num:
            sections[-1][1].append(b"%010d 00000 n \n" % offsets[num])
        else:
            sections.append((num, [b"%010d 00000 n \n" % offsets[num]]))
        prev = num

    out += b"xref\n"
    for first, entries in sections:
        out += b"%d %d\n" % (first, len(entries))
        out += b"".join(entries)

    trailer: dict[str, Any] = {
        "Size": (numbers[-1] + 1) if numbers else 1,
        "Root": doc.trailer["Root"],
    }
    for key in ("Info", "ID"):
        if key in doc.trailer:
            trailer[key] = doc.trailer[key]
    out += b"trailer\n" + serialize_object(trailer)
    out += b"\nstartxref\n%d\n%%%%EOF\n" % xref_pos
    return bytes(out)
