"""PDF document parser: tokenizer, xref tables, object graph, page tree.

Scope: classic cross-reference tables (with /Prev chains) and FlateDecode
streams, which covers the toolkit's own output and the reportlab-generated
fixtures. Cross-reference *streams* and object streams are not supported;
such files fail with MalformedPdf unless the full-scan fallback can recover
their objects. Encrypted files are rejected outright.
"""

from __future__ import annotations

import re
from typing import Any

from ..errors import EncryptedPdf, MalformedPdf
from .model import Name, PdfStream, Ref

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"


class Lexer:
    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_ws(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == 0x25:  # '%' comment runs to end of line
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def peek_byte(self) -> int:
        return self.data[self.pos] if self.pos < len(self.data) else -1

    def read_regular_token(self) -> bytes:
        """Read a run of regular (non-delimiter, non-space) characters."""
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos]
            if c in _WHITESPACE or c in _DELIMITERS:
                break
            self.pos += 1
        return data[start:self.pos]

    # --- object parsing -------------------------------------------------

    def parse_object(self) -> Any:
        self.skip_ws()
        if self.pos >= len(self.data):
            raise MalformedPdf("unexpected end of data while parsing object")
        c = self.data[self.pos]
        if c == 0x2F:  # /
            return self._parse_name()
        if c == 0x28:  # (
            return self._parse_literal_string()
        if c == 0x3C:  # <
            if self.data[self.pos:self.pos + 2] == b"<<":
                return self._parse_dict_or_stream()
            return self._parse_hex_string()
        if c == 0x5B:  # [
            return self._parse_array()
        token = self.read_regular_token()
        if not token:
            raise MalformedPdf(f"unparseable byte {chr(c)!r} at offset {self.pos}")
        if token == b"true":
            return True
        if token == b"false":
            return False
        if token == b"null":
            return None
        return self._parse_number_or_ref(token)

    def _parse_number_or_ref(self, token: bytes) -> Any:
        try:
            if re.fullmatch(rb"[+-]?\d+", token):
                value = int(token)
            else:
                value = float(token)
        except ValueError as exc:
            raise MalformedPdf(f"bad numeric token {token!r}") from exc
        if isinstance(value, int) and value >= 0:
            # Lookahead for "<gen> R" making this an indirect reference.
            save = self.pos
            self.skip_ws()
            m = re.match(rb"(\d+)", self.data[self.pos:self.pos + 12])
            if m:
                after = self.pos + m.end()
                sub = Lexer(self.data, after)
                sub.skip_ws()
                if sub.data[sub.pos:sub.pos + 1] == b"R" and (
                    sub.pos + 1 >= len(sub.data)
                    or sub.data[sub.pos + 1] in _WHITESPACE
                    or sub.data[sub.pos + 1] in _DELIMITERS
                ):
                    self.pos = sub.pos + 1
                    return Ref(value, int(m.group(1)))
            self.pos = save
        return value

    def _parse_name(self) -> Name:
        self.pos += 1  # skip '/'
        raw = self.read_regular_token()
        if b"#" in raw:
            out = bytearray()
            i = 0
            while i < len(raw):
                if raw[i:i + 1] == b"#" and i + 2 < len(raw) + 1:
                    try:
                        out.append(int(raw[i + 1:i + 3], 16))
                        i += 3
                        continue
                    except ValueError:
                        pass
                out.append(raw[i])
                i += 1
            raw = bytes(out)
        return Name(raw.decode("latin-1"))

    def _parse_literal_string(self) -> bytes:
        self.pos += 1  # skip '('
        out = bytearray()
        depth = 1
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos]
            if c == 0x5C:  # backslash
                self.pos += 1
                if self.pos >= n:
                    break
                e = data[self.pos]
                if e in b"nrtbf":
                    out.append({0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}[e])
                    self.pos += 1
                elif e in b"()\\":
                    out.append(e)
                    self.pos += 1
                elif e in b"\r\n":  # line continuation
                    self.pos += 1
                    if e == 0x0D and self.pos < n and data[self.pos] == 0x0A:
                        self.pos += 1
                elif 0x30 <= e <= 0x37:  # octal, up to 3 digits
                    code = 0
                    k = 0
                    while k < 3 and self.pos < n and 0x30 <= data[self.pos] <= 0x37:
                        code = code * 8 + (data[self.pos] - 0x30)
                        self.pos += 1
                        k += 1
                    out.append(code & 0xFF)
                else:
                    out.append(e)
                    self.pos += 1
                continue
            if c == 0x28:
                depth += 1
            elif c == 0x29:
                depth -= 1
                if depth == 0:
                    self.pos += 1
                    return bytes(out)
            out.append(c)
            self.pos += 1
        raise MalformedPdf("unterminated literal string")

    def _parse_hex_string(self) -> bytes:
        self.pos += 1  # skip '<'
        end = self.data.find(b">", self.pos)
        if end < 0:
            raise MalformedPdf("unterminated hex string")
        hexdigits = re.sub(rb"[^0-9A-Fa-f]", b"", self.data[self.pos:end])
        if len(hexdigits) % 2:
            hexdigits += b"0"
        self.pos = end + 1
        return bytes.fromhex(hexdigits.decode("ascii"))

    def _parse_array(self) -> list:
        self.pos += 1  # skip '['
        items = []
        while True:
            self.skip_ws()
            if self.peek_byte() == 0x5D:  # ]
                self.pos += 1
                return items
            if self.pos >= len(self.data):
                raise MalformedPdf("unterminated array")
            items.append(self.parse_object())

    def _parse_dict_or_stream(self) -> Any:
        self.pos += 2  # skip '<<'
        d: dict[str, Any] = {}
        while True:
            self.skip_ws()
            if self.data[self.pos:self.pos + 2] == b">>":
                self.pos += 2
                break
            if self.peek_byte() != 0x2F:
                raise MalformedPdf(f"dictionary key is not a name at {self.pos}")
            key = self._parse_name()
            d[str(key)] = self.parse_object()
        save = self.pos
        self.skip_ws()
        if self.data[self.pos:self.pos + 6] == b"stream":
            self.pos += 6
            if self.data[self.pos:self.pos + 2] == b"\r\n":
                self.pos += 2
            elif self.data[self.pos:self.pos + 1] == b"\n":
                self.pos += 1
            return ("__stream__", d, self.pos)
        self.pos = save
        return d


class Document:
    """A parsed PDF: object map, trailer, and page-tree access."""

    def __init__(self, data: bytes):
        self.data = data
        self.objects: dict[int, Any] = {}
        self.trailer: dict[str, Any] = {}
        self._xref: dict[int, int] = {}
        self._load()

    # --- loading ----------------------------------------------------------

    def _load(self) -> None:
        if not self.data.startswith(b"%PDF-"):
            raise MalformedPdf("missing %PDF header")
        try:
            self._load_via_xref()
        except MalformedPdf:
            self._load_via_scan()
        if "Encrypt" in self.trailer:
            raise EncryptedPdf("document has an /Encrypt dictionary")
        if "Root" not in self.trailer:
            raise MalformedPdf("trailer has no /Root")
        root = self.resolve(self.trailer["Root"])
        if not isinstance(root, dict) or "Pages" not in root:
            raise MalformedPdf("catalog missing /Pages")

    def _load_via_xref(self) -> None:
        tail = self.data[-2048:]
        idx = tail.rfind(b"startxref")
        if idx < 0:
            raise MalformedPdf("no startxref")
        m = re.search(rb"startxref\s+(\d+)", tail[idx:])
        if not m:
            raise MalformedPdf("unparseable startxref")
        offset = int(m.group(1))
        seen_sections = set()
        while True:
            if offset in seen_sections:
                break
            seen_sections.add(offset)
            if not self.data[offset:offset + 4] == b"xref":
                raise MalformedPdf("xref offset does not point at an xref table")
            pos = offset + 4
            lex = Lexer(self.data, pos)
            while True:
                lex.skip_ws()
                if self.data[lex.pos:lex.pos + 7] == b"trailer":
                    lex.pos += 7
                    break
                header = re.match(rb"(\d+)\s+(\d+)", self.data[lex.pos:lex.pos + 40])
                if not header:
                    raise MalformedPdf("bad xref subsection header")
                start, count = int(header.group(1)), int(header.group(2))
                lex.pos += header.end()
                lex.skip_ws()
                for i in range(count):
                    entry = self.data[lex.pos:lex.pos + 20]
                    em = re.match(rb"(\d{10})\s+(\d{5})\s+([nf])", entry)
                    if not em:
                        raise MalformedPdf("bad xref entry")
                    if em.group(3) == b"n":
                        num = start + i
                        if num not in self._xref:
                            self._xref[num] = int(em.group(1))
                    lex.pos += 20
                    while lex.pos < len(self.data) and self.data[lex.pos] in b"\r\n ":
                        if self.data[lex.pos - 1] in b"nf":
                            break
                        lex.pos += 1
            trailer = lex.parse_object()
            if not isinstance(trailer, dict):
                raise MalformedPdf("trailer is not a dictionary")
            for k, v in trailer.items():
                self.trailer.setdefault(k, v)
            if "Prev" in trailer and trailer["Prev"] not in seen_sections:
                offset = int(trailer["Prev"])
            else:
                break
        for num, off in sorted(self._xref.items()):
            if num == 0:
                continue
            self.objects[num] = self._parse_object_at(off, num)

    def _load_via_scan(self) -> None:
        """Rebuild the object map by scanning for `N G obj` markers."""
        self.objects.clear()
        found = False
        for m in re.finditer(rb"(?m)^\s*(\d+)\s+(\d+)\s+obj\b", self.data):
            num = int(m.group(1))
            try:
                self.objects[num] = self._parse_object_at(m.start(), num)
                found = True
            except MalformedPdf:
                continue
        if not found:
            raise MalformedPdf("no objects recoverable from file")
        tm = re.search(rb"trailer", self.data)
        if tm:
            lex = Lexer(self.data, tm.end())
            try:
                trailer = lex.parse_object()
                if isinstance(trailer, dict):
                    self.trailer.update(trailer)
            except MalformedPdf:
                pass
        if "Root" not in self.trailer:
            for num, obj in self.objects.items():
                if isinstance(obj, dict) and str(obj.get("Type", "")) == "Catalog":
                    self.trailer["Root"] = Ref(num, 0)
                    break

    def _parse_object_at(self, offset: int, expect_num: int) -> Any:
        m = re.match(rb"\s*(\d+)\s+(\d+)\s+obj", self.data[offset:offset + 40])
        if not m:
            raise MalformedPdf(f"object {expect_num}: no obj header at {offset}")
        lex = Lexer(self.data, offset + m.end())
        obj = lex.parse_object()
        if isinstance(obj, tuple) and obj and obj[0] == "__stream__":
            _, sdict, data_start = obj
            length = sdict.get("Length")
            if isinstance(length, Ref):
                length = self._parse_plain_int(length)
            if not isinstance(length, int):
                end = self.data.find(b"endstream", data_start)
                if end < 0:
                    raise MalformedPdf("stream without endstream")
                length = end - data_start
            raw = self.data[data_start:data_start + length]
            sdict["Length"] = length
            return PdfStream(sdict, raw)
        return obj

    def _parse_plain_int(self, ref: Ref) -> int:
        off = self._xref.get(ref.num)
        if off is None:
            raise MalformedPdf(f"length reference {ref.num} unresolvable")
        m = re.match(rb"\s*\d+\s+\d+\s+obj\s*(\d+)", self.data[off:off + 60])
        if not m:
            raise MalformedPdf(f"object {ref.num} is not a plain integer")
        return int(m.group(1))

    # --- graph access -------------------------------------------------------

    def resolve(self, obj: Any) -> Any:
        seen = 0
        while isinstance(obj, Ref):
            obj = self.objects.get(obj.num)
            seen += 1
            if seen > 64:
                raise MalformedPdf("reference cycle")
        return obj

    def catalog(self) -> dict:
        return self.resolve(self.trailer["Root"])

    def pages(self) -> list[dict]:
        """Flatten the page tree; inheritable attributes are pushed down."""
        pages: list[dict] = []
        inheritable = ("Resources", "MediaBox", "CropBox", "Rotate")

        def walk(node_ref: Any, inherited: dict) -> None:
            node = self.resolve(node_ref)
            if not isinstance(node, dict):
                raise MalformedPdf("page tree node is not a dictionary")
            ntype = str(node.get("Type", ""))
            merged = dict(inherited)
            for key in inheritable:
                if key in node:
                    merged[key] = node[key]
            if ntype == "Pages" or (ntype == "" and "Kids" in node):
                for kid in self.resolve(node.get("Kids", [])) or []:
                    walk(kid, merged)
            elif ntype == "Page":
                page = dict(node)
                for key in inheritable:
                    if key not in page and key in merged:
                        page[key] = merged[key]
                page["__ref__"] = node_ref if isinstance(node_ref, Ref) else None
                pages.append(page)
            else:
                raise MalformedPdf(f"unexpected page tree node type {ntype!r}")

        walk(self.catalog()["Pages"], {})
        if len(pages) < 1:
            raise MalformedPdf("document has no pages")
        return pages

    def page_content(self, page: dict) -> bytes:
        """Concatenated, decoded content stream(s) of a page."""
        contents = self.resolve(page.get("Contents"))
        if contents is None:
            return b""
        parts = []
        if isinstance(contents, list):
            for part in contents:
                stream = self.resolve(part)
                if not isinstance(stream, PdfStream):
                    raise MalformedPdf("page Contents entry is not a stream")
                parts.append(stream.decoded(self.resolve))
        elif isinstance(contents, PdfStream):
            parts.append(contents.decoded(self.resolve))
        else:
            raise MalformedPdf("page Contents is neither stream nor array")
        return b"\n".join(parts)

    def media_box(self, page: dict) -> tuple[float, float, float, float]:
        box = self.resolve(page.get("MediaBox"))
        if not isinstance(box, list) or len(box) != 4:
            raise MalformedPdf("page has no usable MediaBox")
        x0, y0, x1, y1 = (float(self.resolve(v)) for v in box)
        return (min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))

    def crop_box(self, page: dict) -> tuple[float, float, float, float]:
        box = self.resolve(page.get("CropBox"))
        if isinstance(box, list) and len(box) == 4:
            x0, y0, x1, y1 = (float(self.resolve(v)) for v in box)
            return (min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))
        return self.media_box(page)

    def add_object(self, obj: Any) -> Ref:
        num = max(self.objects, default=0) + 1
        self.objects[num] = obj
        return Ref(num, 0)


def load(data: bytes) -> Document:
    return Document(data)
