"""Structural lint for produced PDFs: well-formed xref, valid page tree."""

from __future__ import annotations

import re

from .model import PdfStream, Ref
from .parser import Document


def lint(data: bytes) -> list[str]:
    """Return a list of structural problems; empty means the file passes."""
    problems: list[str] = []
    if not data.startswith(b"%PDF-"):
        problems.append("missing %PDF header")
        return problems
    if b"%%EOF" not in data[-1024:]:
        problems.append("missing %%EOF marker")

    try:
        doc = Document(data)
    except Exception as exc:
        problems.append(f"document fails to parse: {exc}")
        return problems

    # xref table must cover every object referenced from the trailer graph
    declared = set(doc.objects)
    referenced: set[int] = set()

    def walk(obj, depth=0):
        if depth > 64:
            return
        if isinstance(obj, Ref):
            if obj.num in referenced:
                return
            referenced.add(obj.num)
            walk(doc.objects.get(obj.num), depth + 1)
        elif isinstance(obj, dict):
            for v in obj.values():
                walk(v, depth + 1)
        elif isinstance(obj, list):
            for v in obj:
                walk(v, depth + 1)
        elif isinstance(obj, PdfStream):
            walk(obj.dict, depth + 1)

    walk(doc.trailer.get("Root"))
    walk(doc.trailer.get("Info"))
    missing = referenced - declared
    if missing:
        problems.append(f"dangling references: {sorted(missing)[:8]}")

    try:
        pages = doc.pages()
    except Exception as exc:
        problems.append(f"page tree invalid: {exc}")
        return problems

    root = doc.catalog()
    tree = doc.resolve(root.get("Pages"))
    count = doc.resolve(tree.get("Count")) if isinstance(tree, dict) else None
    if isinstance(count, int) and count != len(pages):
        problems.append(f"/Count {count} does not match {len(pages)} leaf pages")

    for idx, page in enumerate(pages):
        if "MediaBox" not in page:
            problems.append(f"page {idx} lacks a MediaBox")
            continue
        try:
            doc.media_box(page)
        except Exception as exc:
            problems.append(f"page {idx} MediaBox unusable: {exc}")
        try:
            doc.page_content(page)
        except Exception as exc:
            problems.append(f"page {idx} content stream broken: {exc}")

    for num, obj in doc.objects.items():
        if isinstance(obj, PdfStream):
            declared_len = obj.dict.get("Length")
            if isinstance(declared_len, int) and declared_len != len(obj.raw):
                problems.append(f"object {num}: /Length {declared_len} != {len(obj.raw)}")

    # startxref must point at the final xref table
    m = re.search(rb"startxref\s+(\d+)\s+%%EOF\s*$", data[-256:])
    if m and data[int(m.group(1)):int(m.group(1)) + 4] != b"xref":
        problems.append("startxref does not point at an xref table")
    return problems
