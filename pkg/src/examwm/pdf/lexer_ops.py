"""The PDF content-stream operator vocabulary (ISO 32000-1, table A.1)."""

OPERATORS = frozenset((
    # graphics state
    "q", "Q", "cm", "w", "J", "j", "M", "d", "ri", "i", "gs",
    # path construction
    "m", "l", "c", "v", "y", "h", "re",
    # path painting
    "S", "s", "f", "F", "f*", "B", "B*", "b", "b*", "n",
    # clipping
    "W", "W*",
    # text objects and state
    "BT", "ET", "Tc", "Tw", "Tz", "TL", "Tf", "Tr", "Ts",
    # text positioning
    "Td", "TD", "Tm", "T*",
    # text showing
    "Tj", "TJ", "'", '"',
    # type 3 fonts
    "d0", "d1",
    # color
    "CS", "cs", "SC", "SCN", "sc", "scn", "G", "g", "RG", "rg", "K", "k",
    # shading and xobjects
    "sh", "Do",
    # inline images (BI handled specially)
    "BI", "ID", "EI",
    # marked content
    "MP", "DP", "BMC", "BDC", "EMC",
    # compatibility
    "BX", "EX",
))
