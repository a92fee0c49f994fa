from .model import Name, PdfStream, Ref
from .parser import Document, load
from .writer import write

__all__ = ["Name", "PdfStream", "Ref", "Document", "load", "write"]
