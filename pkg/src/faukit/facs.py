"""FACS knowledge layer: action-unit catalog, emotion prototypes, matching.

Action units (AUs) are elementary facial muscle movements identified by
number; the catalog below covers the standard main codes with their common
names. Codes 1-7 sit on the upper face, codes 8 and above on the lower face.

Emotion labels carry fixed integer ids used everywhere in the toolkit:

    Anger=0, Disgust=1, Fear=2, Happiness=3, Sadness=4, Surprise=5, Neutral=6

An emotion prototype is the AU set whose joint activation encodes that
emotion. The shipped defaults are the common EMFACS sets (Happiness is
AU6+AU12, cheek raiser plus lip corner puller); Neutral is encoded by the
empty prototype. Prototypes are user-overridable through a JSON rules file,
see :func:`load_rules`.

Matching is superset-tolerant: an activation set fully matches an emotion
when it contains the whole prototype, extra active AUs do not break a match.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Collection, Iterator, Mapping, Sequence
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DimensionError, DomainError, FormatError
from .validation import check_open_unit, check_probability_vector

UPPER = "upper"
LOWER = "lower"


@dataclass(frozen=True)
class AUDescriptor:
    """One catalog entry: AU number, FACS name, face region."""

    code: int
    name: str
    region: str


def au_region(code: int) -> str:
    """Face region for an AU number: 1-7 upper face, 8+ lower face."""
    return UPPER if code <= 7 else LOWER


def _descriptor(code: int, name: str) -> AUDescriptor:
    return AUDescriptor(code, name, au_region(code))


AU_CATALOG: dict[int, AUDescriptor] = {
    d.code: d
    for d in (
        _descriptor(1, "inner brow raiser"),
        _descriptor(2, "outer brow raiser"),
        _descriptor(4, "brow lowerer"),
        _descriptor(5, "upper lid raiser"),
        _descriptor(6, "cheek raiser"),
        _descriptor(7, "lid tightener"),
        _descriptor(9, "nose wrinkler"),
        _descriptor(10, "upper lip raiser"),
        _descriptor(11, "nasolabial deepener"),
        _descriptor(12, "lip corner puller"),
        _descriptor(14, "dimpler"),
        _descriptor(15, "lip corner depressor"),
        _descriptor(16, "lower lip depressor"),
        _descriptor(17, "chin raiser"),
        _descriptor(18, "lip pucker"),
        _descriptor(20, "lip stretcher"),
        _descriptor(22, "lip funneler"),
        _descriptor(23, "lip tightener"),
        _descriptor(24, "lip pressor"),
        _descriptor(25, "lips part"),
        _descriptor(26, "jaw drop"),
        _descriptor(27, "mouth stretch"),
        _descriptor(28, "lip suck"),
    )
}


class EmotionLabel(enum.IntEnum):
    """The seven emotion classes with their fixed ids."""

    ANGER = 0
    DISGUST = 1
    FEAR = 2
    HAPPINESS = 3
    SADNESS = 4
    SURPRISE = 5
    NEUTRAL = 6

    @property
    def display_name(self) -> str:
        return self.name.title()

    @classmethod
    def from_name(cls, name: str) -> "EmotionLabel":
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise DomainError(f"unknown emotion name: {name!r}") from None


N_EMOTIONS = len(EmotionLabel)

EMOTION_NAMES = tuple(label.display_name for label in EmotionLabel)


class MatchResult(enum.Enum):
    """Outcome of comparing an activation set against an emotion prototype."""

    FULL = "full"
    PARTIAL = "partial"
    NONE = "none"


class AUVocabulary(Sequence):
    """Ordered set of AU codes with a bijective code <-> position index.

    The vocabulary fixes the channel order of feature tensors: position i of
    a probability vector (or channel i of a heatmap stack) belongs to
    ``vocab[i]``.
    """

    __slots__ = ("_codes", "_positions")

    def __init__(self, codes: Collection[int]):
        cleaned = []
        for code in codes:
            code = int(code)
            if code < 1:
                raise ConfigError(f"AU codes must be positive integers, got {code}")
            cleaned.append(code)
        if not cleaned:
            raise ConfigError("vocabulary must contain at least one AU code")
        if len(set(cleaned)) != len(cleaned):
            raise ConfigError("vocabulary contains duplicate AU codes")
        self._codes = tuple(cleaned)
        self._positions = {code: i for i, code in enumerate(cleaned)}

    @property
    def codes(self) -> tuple[int, ...]:
        return self._codes

    def position(self, code: int) -> int:
        try:
            return self._positions[code]
        except KeyError:
            raise DomainError(f"AU{code} is not in the vocabulary") from None

    def __len__(self) -> int:
        return len(self._codes)

    def __iter__(self) -> Iterator[int]:
        return iter(self._codes)

    def __contains__(self, code) -> bool:
        return code in self._positions

    def __getitem__(self, i):
        return self._codes[i]

    def __eq__(self, other) -> bool:
        if isinstance(other, AUVocabulary):
            return self._codes == other._codes
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._codes)

    def __repr__(self) -> str:
        return f"AUVocabulary({list(self._codes)!r})"


# The 8-AU subset commonly used by detectors trained on DISFA recordings.
DISFA8 = (1, 2, 4, 6, 9, 12, 25, 26)

# Default 10-channel vocabulary for heatmap-stack features.
HEATMAP10 = (1, 2, 4, 6, 7, 10, 12, 14, 15, 17)

BUILTIN_VOCABULARIES: dict[str, tuple[int, ...]] = {
    "disfa8": DISFA8,
    "heatmap10": HEATMAP10,
    "all": tuple(sorted(AU_CATALOG)),
}


def builtin_vocabulary(name: str) -> AUVocabulary:
    try:
        return AUVocabulary(BUILTIN_VOCABULARIES[name])
    except KeyError:
        known = ", ".join(sorted(BUILTIN_VOCABULARIES))
        raise ConfigError(f"unknown vocabulary {name!r} (builtins: {known})") from None


def load_vocabulary(source: str | Path) -> AUVocabulary:
    """Resolve a builtin vocabulary name or read a JSON file of AU codes."""
    if isinstance(source, str) and source in BUILTIN_VOCABULARIES:
        return builtin_vocabulary(source)
    path = Path(source)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"vocabulary file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"vocabulary file {path} is not valid JSON: {exc}") from None
    if not isinstance(payload, list):
        raise FormatError(f"vocabulary file {path} must hold a JSON list of AU codes")
    return AUVocabulary(payload)


DEFAULT_PROTOTYPES: dict[EmotionLabel, frozenset[int]] = {
    EmotionLabel.ANGER: frozenset({4, 5, 7, 23}),
    EmotionLabel.DISGUST: frozenset({9, 15}),
    EmotionLabel.FEAR: frozenset({1, 2, 4, 5, 7, 20, 26}),
    EmotionLabel.HAPPINESS: frozenset({6, 12}),
    EmotionLabel.SADNESS: frozenset({1, 4, 15}),
    EmotionLabel.SURPRISE: frozenset({1, 2, 5, 26}),
    EmotionLabel.NEUTRAL: frozenset(),
}

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class EmotionRuleSet:
    """Prototype AU set per emotion plus the activation threshold.

    Invariants checked at construction: all seven emotions have a prototype,
    every prototype AU resolves in the catalog, Neutral maps to the empty set
    while every other prototype is non-empty, and the threshold lies in (0,1).
    """

    prototypes: Mapping[EmotionLabel, frozenset[int]]
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        check_open_unit(self.threshold, "threshold")
        normalized: dict[EmotionLabel, frozenset[int]] = {}
        for label in EmotionLabel:
            if label not in self.prototypes:
                raise ConfigError(f"rule set has no prototype for {label.display_name}")
            proto = frozenset(int(c) for c in self.prototypes[label])
            unknown = sorted(c for c in proto if c not in AU_CATALOG)
            if unknown:
                raise ConfigError(
                    f"prototype for {label.display_name} uses AUs outside the catalog: {unknown}"
                )
            normalized[label] = proto
        if len(self.prototypes) != N_EMOTIONS:
            extra = set(self.prototypes) - set(EmotionLabel)
            raise ConfigError(f"rule set has prototypes for unknown labels: {extra}")
        if normalized[EmotionLabel.NEUTRAL]:
            raise ConfigError("Neutral must map to the empty prototype")
        for label, proto in normalized.items():
            if label is not EmotionLabel.NEUTRAL and not proto:
                raise ConfigError(f"prototype for {label.display_name} must not be empty")
        object.__setattr__(self, "prototypes", normalized)

    def prototype(self, emotion: EmotionLabel) -> frozenset[int]:
        return self.prototypes[emotion]

    def to_dict(self) -> dict:
        out: dict = {"threshold": self.threshold}
        for label in EmotionLabel:
            out[label.display_name] = sorted(self.prototypes[label])
        return out


def default_rules() -> EmotionRuleSet:
    return EmotionRuleSet(DEFAULT_PROTOTYPES, DEFAULT_THRESHOLD)


def rules_from_dict(payload: Mapping, origin: str = "rules") -> EmotionRuleSet:
    """Build a rule set from the JSON mapping {emotion name: [AU, ...], "threshold": t}."""
    if not isinstance(payload, Mapping):
        raise FormatError(f"{origin} must be a JSON object")
    threshold = DEFAULT_THRESHOLD
    prototypes: dict[EmotionLabel, frozenset[int]] = {}
    for key, value in payload.items():
        if key == "threshold":
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise FormatError(f"{origin}: threshold must be a number")
            threshold = float(value)
            continue
        try:
            label = EmotionLabel.from_name(key)
        except DomainError:
            raise FormatError(f"{origin}: unknown key {key!r}") from None
        if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            raise FormatError(f"{origin}: prototype for {key} must be a list of AU integers")
        prototypes[label] = frozenset(value)
    missing = [l.display_name for l in EmotionLabel if l not in prototypes]
    if missing:
        raise FormatError(f"{origin}: missing prototypes for {', '.join(missing)}")
    try:
        return EmotionRuleSet(prototypes, threshold)
    except (ConfigError, DomainError) as exc:
        raise FormatError(f"{origin}: {exc}") from None


def load_rules(source: str | Path = "default") -> EmotionRuleSet:
    """Load a rule set from a JSON file, or the shipped defaults for "default"."""
    if isinstance(source, str) and source == "default":
        text = resources.files("faukit.resources").joinpath("rules_default.json").read_text()
        return rules_from_dict(json.loads(text), origin="default rules")
    path = Path(source)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"rules file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"rules file {path} is not valid JSON: {exc}") from None
    return rules_from_dict(payload, origin=f"rules file {path}")


def save_rules(rules: EmotionRuleSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(rules.to_dict(), indent=2) + "\n")


def threshold_activations(p, vocab: AUVocabulary, tau: float) -> frozenset[int]:
    """Binarize per-AU probabilities: AU i is active iff p[i] >= tau.

    The comparison is inclusive, a probability exactly at the threshold
    counts as active.
    """
    tau = check_open_unit(tau, "tau")
    values = check_probability_vector(p, name="p")
    if values.shape[0] != len(vocab):
        raise DimensionError(
            f"probability vector has length {values.shape[0]}, vocabulary has {len(vocab)}"
        )
    return frozenset(code for code, value in zip(vocab, values) if value >= tau)


def match_emotion(
    active: Collection[int], rules: EmotionRuleSet, emotion: EmotionLabel
) -> MatchResult:
    """Compare an activation set against one emotion's prototype.

    FULL when the prototype is wholly contained in the active set, PARTIAL
    when it merely intersects it, NONE otherwise. The empty Neutral prototype
    matches fully exactly when nothing is active.
    """
    proto = rules.prototype(EmotionLabel(emotion))
    active = frozenset(int(c) for c in active)
    if not proto:
        return MatchResult.FULL if not active else MatchResult.NONE
    if proto <= active:
        return MatchResult.FULL
    if proto & active:
        return MatchResult.PARTIAL
    return MatchResult.NONE


def coverage(rules: EmotionRuleSet, vocab: Collection[int]) -> frozenset[EmotionLabel]:
    """Emotions whose full prototype lies inside the given AU vocabulary.

    Neutral (empty prototype) is never reported. An empty vocabulary covers
    nothing.
    """
    available = frozenset(int(c) for c in vocab)
    return frozenset(
        label
        for label in EmotionLabel
        if label is not EmotionLabel.NEUTRAL and rules.prototype(label) <= available
    )
