"""Object model for the in-package PDF layer.

The toolkit operates directly on the PDF object graph, so it carries its own
small model: names, indirect references, and streams. Dictionaries are plain
``dict`` with name-text keys (no leading slash); strings are ``bytes``.
"""

from __future__ import annotations

import zlib
from typing import Any, NamedTuple

from ..errors import MalformedPdf


class Name(str):
    """A PDF name object (stored without the leading slash)."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"/{str(self)}"


class Ref(NamedTuple):
    num: int
    gen: int = 0


class PdfStream:
    """A stream object: dictionary plus raw (still encoded) data."""

    def __init__(self, sdict: dict[str, Any], raw: bytes):
        self.dict = sdict
        self.raw = raw

    def decoded(self, resolve=None) -> bytes:
        """Return the stream payload with filters applied.

        Only FlateDecode (optionally in a filter array) is supported; that is
        the only filter the toolkit emits and the only one the bundled fixture
        generator produces.
        """
        filt = self.dict.get("Filter")
        if resolve is not None:
            filt = resolve(filt)
        if filt is None:
            return self.raw
        if isinstance(filt, Name):
            filters = [filt]
        elif isinstance(filt, list):
            filters = filt
        else:
            raise MalformedPdf(f"unsupported Filter entry: {filt!r}")
        data = self.raw
        for f in filters:
            if str(f) == "FlateDecode":
                try:
                    data = zlib.decompress(data)
                except zlib.error as exc:
                    raise MalformedPdf(f"broken FlateDecode stream: {exc}") from exc
            else:
                raise MalformedPdf(f"unsupported stream filter /{f}")
        return data

    def replace_data(self, data: bytes, compress: bool = False) -> None:
        """Swap the payload; updates /Length and /Filter accordingly."""
        if compress:
            self.raw = zlib.compress(data, 6)
            self.dict["Filter"] = Name("FlateDecode")
        else:
            self.raw = data
            self.dict.pop("Filter", None)
        self.dict["Length"] = len(self.raw)

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"<PdfStream {self.dict.get('Type', '?')} len={len(self.raw)}>"


def fmt_number(value: float | int) -> str:
    """Serialize a number the way PDF expects (no exponent notation)."""
    if isinstance(value, bool):  # bool is an int subclass; guard explicitly
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-") else "0"
