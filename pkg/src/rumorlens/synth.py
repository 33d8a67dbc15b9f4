"""Synthetic rumor corpora with planted resolution, veracity and certainty effects.

Every tweet's text is rendered from filler words plus cue surface forms, so the
planted effects only reach the features through tokenization, stemming and
lexicon lookup, exactly like real input.

Cue groups are drawn per cue slot from a probability vector that starts at
``base_rates`` and is shifted by the planted effects:

- falsified claims move ``dcr_boost_false`` of absolute probability mass
  into doubt cues
- from the resolving tweet onwards ``fcr_jump`` of absolute mass moves into
  knowledge/report cues (so expected FCR rises by ``fcr_jump`` when the other
  groups can supply it), and falsified claims get the doubt shift once more
- ``noise`` is a sampling temperature applied to the final vector

Certainty labels are drawn for a random subset of tweets from a binomial
annotator model whose mean moves with ``certainty_link * (kcr - dcr)``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from rumorlens.corpus import Corpus, Tweet, build_corpus
from rumorlens.lexicon import GROUPS, CueGroup, Lexicon, default_lexicon
from rumorlens.stemmer import stem

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

FILLER = (
    "the", "a", "at", "in", "on", "of", "to", "and", "from", "with", "near", "after",
    "cafe", "street", "city", "police", "people", "hostage", "hostages", "plane",
    "flight", "crash", "passengers", "crew", "gunman", "building", "parliament",
    "minutes", "hours", "today", "tonight", "now", "live", "update", "breaking",
    "scene", "area", "inside", "outside", "many", "two", "three", "several",
    "reporters", "witnesses", "alps", "sydney", "ottawa", "germanwings",
)
EVENT_TAGS = ("sydneysiege", "ottawashooting", "germanwings", "ferguson", "charliehebdo")
KNOWLEDGE, REPORT, BELIEF, DOUBT = range(4)


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_claims: int = 40
    tweets_min: int = 10
    tweets_max: int = 60
    frac_false_claims: float = 1 / 3
    fcr_jump: float = 0.3
    dcr_boost_false: float = 0.3
    certainty_link: float = 0.8
    noise: float = 1.0
    base_rates: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    cue_rate: float = 8.0
    annotate_frac: float = 0.3
    mean_gap: float = 90.0
    n_events: int = 3

    def validate(self) -> None:
        if self.n_claims < 1:
            raise SynthError("n_claims must be >= 1")
        if not 2 <= self.tweets_min <= self.tweets_max:
            raise SynthError("need 2 <= tweets_min <= tweets_max")
        for name in ("frac_false_claims", "fcr_jump", "dcr_boost_false", "certainty_link", "annotate_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SynthError(f"{name} must lie in [0, 1], got {v}")
        if self.noise <= 0:
            raise SynthError("noise (sampling temperature) must be > 0")
        if len(self.base_rates) != 4 or min(self.base_rates) < 0 or sum(self.base_rates) <= 0:
            raise SynthError("base_rates must be 4 non-negative numbers with a positive sum")
        if self.cue_rate < 0 or self.mean_gap <= 0 or self.n_events < 1:
            raise SynthError("cue_rate >= 0, mean_gap > 0 and n_events >= 1 required")


def load_synth_config(path: str | Path | None, **overrides) -> SynthConfig:
    """Read a TOML config (optional) and apply non-None keyword overrides on top."""
    values: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        data = data.get("synth", data)
        known = {f.name for f in fields(SynthConfig)}
        unknown = set(data) - known
        if unknown:
            raise SynthError(f"unknown synth config keys: {sorted(unknown)}")
        values.update(data)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in values:
        raise SynthError("a seed is required")
    if "base_rates" in values:
        values["base_rates"] = tuple(float(v) for v in values["base_rates"])
    return SynthConfig(**values)


def _shift(p: np.ndarray, targets: list[int], amount: float) -> np.ndarray:
    """Move ``amount`` of absolute mass into ``targets`` (split evenly), taken
    proportionally from the other groups; capped at what they hold."""
    others = [i for i in range(4) if i not in targets]
    avail = float(p[others].sum())
    amount = min(amount, avail)
    q = p.copy()
    if avail > 0:
        q[others] -= amount * p[others] / avail
    q[targets] += amount / len(targets)
    return np.clip(q, 0.0, None)


def group_probabilities(config: SynthConfig, post: bool, false_claim: bool) -> np.ndarray:
    p = np.asarray(config.base_rates, dtype=float)
    p = p / p.sum()
    d, j = config.dcr_boost_false, config.fcr_jump
    if false_claim:
        p = _shift(p, [DOUBT], d)
    if post:
        p = _shift(p, [KNOWLEDGE, REPORT], j)
        if false_claim:
            p = _shift(p, [DOUBT], d)
    with np.errstate(divide="ignore"):
        logits = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), -np.inf) / config.noise
    logits -= logits[np.isfinite(logits)].max()
    q = np.exp(logits)
    return q / q.sum()


def _surface_forms(lexicon: Lexicon) -> dict[CueGroup, list[list[str]]]:
    """Per group, per cue: inflected spellings that stem back to the cue and to no other group."""
    owner: dict[str, set[CueGroup]] = {}
    for g in GROUPS:
        for s in lexicon.stemmed_groups[g]:
            owner.setdefault(s, set()).add(g)
    forms: dict[CueGroup, list[list[str]]] = {}
    for g in GROUPS:
        per_cue = []
        for cue in sorted(lexicon.groups[g]):
            target = stem(cue)
            if owner.get(target) != {g}:
                continue
            if not cue.isalpha():
                per_cue.append([cue])
                continue
            if cue.endswith("e"):
                cands = [cue, cue + "s", cue + "d", cue[:-1] + "ing"]
            else:
                cands = [cue, cue + "s", cue + "ed", cue + "ing"]
            variants = sorted({c for c in cands if stem(c) == target})
            per_cue.append(variants)
        if not per_cue:
            raise SynthError(f"no usable cues for group {g.value!r}")
        forms[g] = per_cue
    return forms


def _filler(lexicon: Lexicon) -> list[str]:
    stems = set().union(*lexicon.stemmed_groups.values())
    return [w for w in FILLER if stem(w) not in stems]


def _labels(rng: np.random.Generator, mean: float) -> list[str]:
    names = ("uncertain", "somewhat-certain", "certain")
    out = []
    for _ in range(int(rng.integers(5, 8))):
        if rng.random() < 0.05:
            out.append("underspecified")
        else:
            out.append(names[int(rng.binomial(2, mean))])
    return out


def generate(config: SynthConfig, lexicon: Lexicon | None = None) -> Corpus:
    config.validate()
    lexicon = lexicon or default_lexicon()
    rng = np.random.default_rng(config.seed)
    forms = _surface_forms(lexicon)
    filler = _filler(lexicon)

    n_false = int(round(config.frac_false_claims * config.n_claims))
    false_flags = np.zeros(config.n_claims, dtype=bool)
    false_flags[rng.choice(config.n_claims, size=n_false, replace=False)] = True

    records = []
    for ci in range(config.n_claims):
        claim_id = f"claim{ci:03d}"
        event = EVENT_TAGS[ci % config.n_events % len(EVENT_TAGS)]
        is_false = bool(false_flags[ci])
        n = int(rng.integers(config.tweets_min, config.tweets_max + 1))
        lo, hi = max(1, int(np.ceil(0.2 * n))), max(1, int(np.floor(0.8 * n)))
        res_rank = int(rng.integers(lo, hi + 1))
        t = 1_400_000_000 + ci * 86_400
        for k in range(1, n + 1):
            if k > 1:
                t += int(round(rng.exponential(config.mean_gap)))
            post = k >= res_rank
            p = group_probabilities(config, post, is_false)
            m = int(rng.poisson(config.cue_rate))
            drawn = rng.choice(4, size=m, p=p)
            counts = np.bincount(drawn, minlength=4)
            words = [filler[i] for i in rng.choice(len(filler), size=int(rng.integers(3, 9)))]
            for gi in drawn:
                cues = forms[GROUPS[gi]]
                variants = cues[int(rng.integers(len(cues)))]
                words.append(variants[int(rng.integers(len(variants)))])
            order = rng.permutation(len(words))
            text = " ".join(words[i] for i in order) + f" #{event}"

            labels, stance = None, "commenting"
            if rng.random() < config.annotate_frac:
                total = counts.sum()
                kcr = counts[0] / total if total else 0.0
                dcr = counts[3] / total if total else 0.0
                mean = float(np.clip(0.5 + 0.5 * config.certainty_link * (kcr - dcr), 0.02, 0.98))
                labels = tuple(_labels(rng, mean))
                stance = "denying" if dcr > kcr else "supporting"
            tweet = Tweet(
                id=f"{claim_id}-t{k:04d}",
                claim_id=claim_id,
                text=text,
                timestamp=t,
                is_resolving=k == res_rank,
                certainty_labels=labels,
                stance=stance,
            )
            records.append((tweet, event, not is_false))
    return build_corpus(records)


def null_config(config: SynthConfig) -> SynthConfig:
    """Same corpus shape with every planted effect switched off."""
    return replace(config, fcr_jump=0.0, dcr_boost_false=0.0, certainty_link=0.0)
