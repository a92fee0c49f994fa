"""examwm: document-layer watermarking for assessment PDFs.

The toolkit instruments exam PDFs so machine parsers receive steering
payloads and recoverable signatures while the rendered appearance stays
unchanged, then scores submitted responses against the stored signatures.
"""

__version__ = "0.1.0"
