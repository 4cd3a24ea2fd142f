"""Text and code canonicalization shared by the loaders and the parsers."""

from __future__ import annotations

import re
import unicodedata

_QUOTE_MAP = str.maketrans(
    {
        "‘": "'",
        "’": "'",
        "‚": "'",
        "‛": "'",
        "′": "'",
        "´": "'",
        "`": "'",
        "“": '"',
        "”": '"',
        "„": '"',
        "‟": '"',
        "″": '"',
    }
)
_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Case-fold, map typographic quotes to ASCII and collapse whitespace.

    Punctuation other than quotes is left alone, so ``normalize_text`` is
    idempotent and safe to use as a lookup key.
    """
    text = unicodedata.normalize("NFC", text).translate(_QUOTE_MAP).casefold()
    return _WS.sub(" ", text).strip()


def canonical_code(code: str) -> str:
    """Canonical dotted upper-case form of an ICD-style code.

    >>> canonical_code(" b2789 ")
    'B27.89'
    """
    code = code.strip().upper()
    if len(code) > 3 and "." not in code:
        code = f"{code[:3]}.{code[3:]}"
    return code
