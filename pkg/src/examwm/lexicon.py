"""Bundled domain-neutral phrase lexicon for long-form signatures.

Phrases are synthesized from word lists rather than stored verbatim, giving
a pool of tens of thousands of distinct 2-4 word combinations that are very
unlikely to occur in ordinary answer text by chance.
"""

from __future__ import annotations

ADJECTIVES = (
    "amber", "basalt", "cerulean", "cobalt", "crimson", "dappled", "ducted",
    "ebony", "faceted", "fluted", "gilded", "glacial", "hollow", "indigo",
    "jasper", "keeled", "lacquered", "lucent", "marbled", "mottled", "napped",
    "obsidian", "opaline", "pewter", "quilted", "ribbed", "russet", "saffron",
    "sable", "tessellated", "umber", "veiled", "verdant", "vaulted", "woven",
    "zoned", "argent", "burnished", "citrine", "damup", "etched", "ferric",
    "grained", "helical", "incised", "jointed", "knurled", "louvered",
)

NOUNS = (
    "meridian", "anchor", "lattice", "pennant", "gallery", "isthmus",
    "bastion", "cairn", "delta", "ember", "fresco", "gable", "harbor",
    "inlet", "junction", "keystone", "lantern", "mosaic", "nexus", "oriel",
    "parapet", "quarry", "rampart", "spire", "terrace", "underpass", "vault",
    "windrose", "yardarm", "zenith", "atrium", "breaker", "causeway",
    "dovetail", "escarpment", "foundry", "gantry", "headland", "ingot",
    "jetty", "kiln", "lintel", "mooring", "narthex", "outcrop", "pylon",
    "quoin", "rotunda",
)

TAILS = (
    "drift", "axis", "chord", "field", "gradient", "margin", "offset",
    "phase", "quotient", "ratio", "sector", "threshold", "vector", "datum",
    "interval", "locus",
)


def phrase_count() -> int:
    return len(ADJECTIVES) * len(NOUNS) * (1 + len(TAILS))


def phrase_at(index: int) -> str:
    """Deterministic index -> phrase mapping over the whole pool."""
    index %= phrase_count()
    tail_idx, rest = divmod(index, len(ADJECTIVES) * len(NOUNS))
    adj_idx, noun_idx = divmod(rest, len(NOUNS))
    words = [ADJECTIVES[adj_idx], NOUNS[noun_idx]]
    if tail_idx > 0:
        words.append(TAILS[tail_idx - 1])
    return " ".join(words)
