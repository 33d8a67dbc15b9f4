"""Factuality cue lexicon: tokenization, stemmed matching and embedding-based extension."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from rumorlens.io import atomic_write_text
from rumorlens.stemmer import stem


class CueGroup(str, enum.Enum):
    KNOWLEDGE = "knowledge"
    REPORT = "report"
    BELIEF = "belief"
    DOUBT = "doubt"


GROUPS = tuple(CueGroup)


class LexiconError(ValueError):
    pass


_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_TOKEN_RE = re.compile(r"\?|[^\W_]+(?:'[^\W_]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens plus a separate token for every ``?``.

    Hashtag and mention markers are dropped (``#MartinPlace`` -> ``martinplace``),
    URLs are removed, all other punctuation is a separator.
    """
    text = _URL_RE.sub(" ", text.replace("’", "'"))
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Lexicon:
    groups: Mapping[CueGroup, frozenset[str]]
    stemmed_groups: Mapping[CueGroup, frozenset[str]] = field(init=False, repr=False)

    def __post_init__(self):
        groups = {}
        for g in GROUPS:
            if g not in self.groups:
                raise LexiconError(f"missing cue group {g.value!r}")
            cues = frozenset(self.groups[g])
            for cue in cues:
                if not cue or any(ch.isspace() for ch in cue):
                    raise LexiconError(f"cue {cue!r} in {g.value!r} is not a single token")
                if cue != cue.lower():
                    raise LexiconError(f"cue {cue!r} in {g.value!r} is not lowercase")
            groups[g] = cues
        object.__setattr__(self, "groups", groups)
        object.__setattr__(
            self, "stemmed_groups", {g: frozenset(stem(c) for c in cues) for g, cues in groups.items()}
        )

    def size(self) -> int:
        return sum(len(c) for c in self.groups.values())


@dataclass(frozen=True)
class CueCounts:
    matched: Mapping[CueGroup, tuple[str, ...]]

    @property
    def counts(self) -> dict[CueGroup, int]:
        return {g: len(self.matched[g]) for g in GROUPS}

    def __getitem__(self, group: CueGroup) -> int:
        return len(self.matched[group])

    @property
    def total(self) -> int:
        return sum(len(m) for m in self.matched.values())


def match_cues(text: str, lexicon: Lexicon) -> CueCounts:
    matched: dict[CueGroup, list[str]] = {g: [] for g in GROUPS}
    for token in tokenize(text):
        s = stem(token)
        for g in GROUPS:
            if s in lexicon.stemmed_groups[g]:
                matched[g].append(token)
    return CueCounts({g: tuple(v) for g, v in matched.items()})


def parse_lexicon(text: str) -> Lexicon:
    groups: dict[CueGroup, set[str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = re.fullmatch(r"\[(\w+)\]", line)
        if m:
            try:
                current = CueGroup(m.group(1).lower())
            except ValueError:
                raise LexiconError(f"line {lineno}: unknown section {line}") from None
            groups.setdefault(current, set())
            continue
        if current is None:
            raise LexiconError(f"line {lineno}: cue outside of a section")
        if any(ch.isspace() for ch in line):
            raise LexiconError(f"line {lineno}: multi-token cue {line!r}")
        groups[current].add(line.lower())
    return Lexicon(groups)


def load_lexicon(path: str | Path) -> Lexicon:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"))


def default_lexicon() -> Lexicon:
    text = resources.files("rumorlens").joinpath("data/seed_lexicon.txt").read_text(encoding="utf-8")
    return parse_lexicon(text)


def dumps_lexicon(lexicon: Lexicon) -> str:
    parts = []
    for g in GROUPS:
        parts.append(f"[{g.value}]")
        parts.extend(sorted(lexicon.groups[g]))
        parts.append("")
    return "\n".join(parts)


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    atomic_write_text(path, dumps_lexicon(lexicon))


@dataclass(frozen=True)
class EmbeddingTable:
    tokens: tuple[str, ...]
    vectors: np.ndarray
    index: Mapping[str, int] = field(init=False, repr=False)
    _unit: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        if vectors.ndim != 2 or vectors.shape[0] != len(self.tokens):
            raise LexiconError("embedding matrix must be (n_tokens, dim)")
        if vectors.shape[1] < 1:
            raise LexiconError("embedding dimension must be >= 1")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        index = {}
        for i, tok in enumerate(self.tokens):
            index.setdefault(tok, i)
        object.__setattr__(self, "index", index)
        norms = np.linalg.norm(vectors, axis=1)
        unit = np.divide(vectors, norms[:, None], out=np.zeros_like(vectors), where=norms[:, None] > 0)
        object.__setattr__(self, "_unit", unit)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def nearest(self, token: str, k: int) -> list[tuple[str, float]]:
        """k most cosine-similar tokens, excluding ``token``; ties keep vocabulary order."""
        sims = self._unit @ self._unit[self.index[token]]
        order = np.argsort(-sims, kind="stable")
        out = []
        for j in order:
            if self.tokens[j] == token:
                continue
            out.append((self.tokens[j], float(sims[j])))
            if len(out) == k:
                break
        return out


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read ``token v1 ... vd`` lines; an initial ``count dim`` header is optional."""
    tokens: list[str] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            try:
                vec = [float(v) for v in parts[1:]]
            except ValueError:
                raise LexiconError(f"line {lineno}: non-numeric vector component") from None
            if not vec:
                raise LexiconError(f"line {lineno}: token without a vector")
            if rows and len(vec) != len(rows[0]):
                raise LexiconError(f"line {lineno}: dimension {len(vec)} != {len(rows[0])}")
            tokens.append(parts[0])
            rows.append(vec)
    if not rows:
        raise LexiconError(f"{path}: empty embedding table")
    return EmbeddingTable(tuple(tokens), np.array(rows))


def missing_seed_cues(seed: Lexicon, emb: EmbeddingTable) -> dict[CueGroup, list[str]]:
    return {g: sorted(c for c in seed.groups[g] if c not in emb) for g in GROUPS}


def extend_lexicon(seed: Lexicon, emb: EmbeddingTable, k: int = 3) -> Lexicon:
    """Add each seed cue's k nearest embedding neighbours to the cue's group.

    Neighbours are kept only if they are purely alphabetic after lowercasing.
    Seed cues absent from the vocabulary are skipped (see ``missing_seed_cues``).
    """
    if k < 1:
        raise LexiconError("k must be >= 1")
    if len(emb) == 0:
        raise LexiconError("empty embedding table")
    groups = {}
    for g in GROUPS:
        cues = set(seed.groups[g])
        for cue in sorted(seed.groups[g]):
            if cue not in emb:
                continue
            for neighbour, _ in emb.nearest(cue, k):
                candidate = neighbour.lower()
                if candidate.isalpha():
                    cues.add(candidate)
        groups[g] = frozenset(cues)
    return Lexicon(groups)
