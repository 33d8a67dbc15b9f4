"""English Porter2 (Snowball English) stemmer.

Only lowercase input is expected. Tokens containing no letters, or of
length <= 2, are returned unchanged.
"""

from __future__ import annotations

from functools import lru_cache

_VOWELS = frozenset("aeiouy")
_DOUBLES = ("bb", "dd", "ff", "gg", "mm", "nn", "pp", "rr", "tt")
_LI_ENDINGS = frozenset("cdeghkmnrt")

_EXCEPTIONS = {
    "skis": "ski", "skies": "sky", "idly": "idl", "gently": "gentl",
    "ugly": "ugli", "early": "earli", "only": "onli", "singly": "singl",
    "sky": "sky", "news": "news", "howe": "howe",
    "atlas": "atlas", "cosmos": "cosmos", "bias": "bias", "andes": "andes",
}
# "ing" words left untouched when this is the whole remaining stem
_ING_KEEP = frozenset({"even", "cann", "inn", "earr", "herr", "out"})
_EED_KEEP = frozenset({"succ", "proc", "exc"})
_R1_PREFIXES = ("arsen", "commun", "emerg", "gener", "inter", "later", "organ", "past", "univers")

_STEP2 = (
    ("ization", "ize"), ("ational", "ate"), ("fulness", "ful"), ("ousness", "ous"),
    ("iveness", "ive"), ("tional", "tion"), ("biliti", "ble"), ("lessli", "less"),
    ("entli", "ent"), ("ation", "ate"), ("alism", "al"), ("aliti", "al"),
    ("ousli", "ous"), ("iviti", "ive"), ("fulli", "ful"), ("ogist", "og"), ("enci", "ence"),
    ("anci", "ance"), ("abli", "able"), ("izer", "ize"), ("ator", "ate"),
    ("alli", "al"), ("bli", "ble"), ("ogi", "og"), ("li", ""),
)
_STEP3 = (
    ("ational", "ate"), ("tional", "tion"), ("alize", "al"), ("icate", "ic"),
    ("iciti", "ic"), ("ative", ""), ("ical", "ic"), ("ness", ""), ("ful", ""),
)
_STEP4 = (
    "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ism", "ate",
    "iti", "ous", "ive", "ize", "ion", "al", "er", "ic",
)


def _is_vowel(ch: str) -> bool:
    return ch in _VOWELS


def _regions(word: str) -> tuple[int, int]:
    def after_vc(start: int) -> int:
        for i in range(start + 1, len(word)):
            if not _is_vowel(word[i]) and _is_vowel(word[i - 1]):
                return i + 1
        return len(word)

    r1 = None
    for prefix in _R1_PREFIXES:
        if word.startswith(prefix):
            r1 = len(prefix)
            break
    if r1 is None:
        r1 = after_vc(0)
    r2 = after_vc(r1) if r1 < len(word) else len(word)
    return r1, r2


def _ends_short_syllable(word: str) -> bool:
    if word.endswith("past"):
        return True
    n = len(word)
    if n == 2:
        return _is_vowel(word[0]) and not _is_vowel(word[1])
    if n >= 3:
        return (
            not _is_vowel(word[-3])
            and _is_vowel(word[-2])
            and not _is_vowel(word[-1])
            and word[-1] not in "wxY"
        )
    return False


def _has_vowel(s: str) -> bool:
    return any(_is_vowel(c) for c in s)


def _step0(w: str) -> str:
    for suf in ("'s'", "'s", "'"):
        if w.endswith(suf):
            return w[: -len(suf)]
    return w


def _step1a(w: str) -> str:
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith("ied") or w.endswith("ies"):
        return w[:-2] if len(w) > 4 else w[:-1]
    if w.endswith("us") or w.endswith("ss"):
        return w
    if w.endswith("s"):
        if _has_vowel(w[:-2]):
            return w[:-1]
    return w


def _step1b(w: str, r1: int) -> str:
    for suf in ("eedly", "eed"):
        if w.endswith(suf):
            stem = w[: -len(suf)]
            if len(stem) >= r1 and stem not in _EED_KEEP:
                return stem + "ee"
            return w
    for suf in ("ingly", "edly", "ing", "ed"):
        if not w.endswith(suf):
            continue
        stem = w[: -len(suf)]
        if suf == "ing":
            if len(stem) == 2 and stem[1] == "y" and not _is_vowel(stem[0]):
                return stem[0] + "ie"
            if stem in _ING_KEEP:
                return w
        if not _has_vowel(stem):
            return w
        if stem.endswith(("at", "bl", "iz")):
            return stem + "e"
        if stem.endswith(_DOUBLES):
            if len(stem) == 3 and stem[0] in "aeo":
                return stem
            return stem[:-1]
        if len(stem) == r1 and _ends_short_syllable(stem):
            return stem + "e"
        return stem
    return w


def _step1c(w: str) -> str:
    if len(w) > 2 and w[-1] in "yY" and not _is_vowel(w[-2]):
        return w[:-1] + "i"
    return w


def _step2(w: str, r1: int) -> str:
    for suf, rep in _STEP2:
        if w.endswith(suf):
            if len(w) - len(suf) < r1:
                return w
            if suf == "ogi":
                return w[:-1] if w[:-3].endswith("l") else w
            if suf == "li":
                return w[:-2] if w[-3] in _LI_ENDINGS else w
            return w[: -len(suf)] + rep
    return w


def _step3(w: str, r1: int, r2: int) -> str:
    for suf, rep in _STEP3:
        if w.endswith(suf):
            if len(w) - len(suf) < r1:
                return w
            if suf == "ative":
                return w[:-5] if len(w) - 5 >= r2 else w
            return w[: -len(suf)] + rep
    return w


def _step4(w: str, r2: int) -> str:
    for suf in _STEP4:
        if w.endswith(suf):
            if len(w) - len(suf) < r2:
                return w
            if suf == "ion":
                return w[:-3] if w[-4:-3] in ("s", "t") else w
            return w[: -len(suf)]
    return w


def _step5(w: str, r1: int, r2: int) -> str:
    if w.endswith("e"):
        pos = len(w) - 1
        if pos >= r2 or (pos >= r1 and not _ends_short_syllable(w[:-1])):
            return w[:-1]
        return w
    if w.endswith("l") and len(w) - 1 >= r2 and w[-2:-1] == "l":
        return w[:-1]
    return w


@lru_cache(maxsize=65536)
def stem(token: str) -> str:
    """Return the Porter2 stem of a lowercase token."""
    if len(token) <= 2 or not any(c.isalpha() for c in token):
        return token
    if token in _EXCEPTIONS:
        return _EXCEPTIONS[token]

    w = token[1:] if token.startswith("'") else token
    # y at the start or after a vowel is treated as a consonant
    chars = list(w)
    for i, ch in enumerate(chars):
        if ch == "y" and (i == 0 or chars[i - 1] in _VOWELS):
            chars[i] = "Y"
    w = "".join(chars)

    r1, r2 = _regions(w)
    w = _step0(w)
    w = _step1a(w)
    w = _step1b(w, r1)
    w = _step1c(w)
    w = _step2(w, r1)
    w = _step3(w, r1, r2)
    w = _step4(w, r2)
    w = _step5(w, r1, r2)
    return w.replace("Y", "y")
