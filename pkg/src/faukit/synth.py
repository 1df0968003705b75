"""Synthetic AU datasets: Gaussian heatmap rendering and labeled generation.

Stands in for real AU-annotated corpora at desk scale. Each sample draws an
emotion uniformly over the seven labels, activates that emotion's prototype
AUs (intersected with the vocabulary) at random intensities, optionally adds
spurious activations and noise, and records the true activation set.

Two feature kinds are produced:

* ``heatmap``: one Gaussian response map per vocabulary AU on an HxW grid
  (default 24x24), peak value equal to the drawn intensity.
* ``probvec``: per-AU activation probabilities; active AUs carry their
  intensity, inactive AUs are zero before noise.

Generation is deterministic: sample i uses an RNG seeded from (seed, i), so
results are independent of iteration order and safe to shard.

Default AU center placement on the 24x24 grid keeps upper-face AUs in rows
4-9 and lower-face AUs in rows 14-20; only plausibility matters for
synthetic data, and the table is fully configurable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np

from . import featureio
from .errors import ConfigError, DataError, DomainError, FormatError
from .facs import AUVocabulary, EmotionLabel, EmotionRuleSet
from .validation import check_non_negative, check_unit_interval

KIND_HEATMAP = "heatmap"
KIND_PROBVEC = "probvec"
FEATURE_KINDS = (KIND_HEATMAP, KIND_PROBVEC)

DEFAULT_GRID = (24, 24)

DEFAULT_AU_CENTERS: dict[int, tuple[int, int]] = {
    # upper face, rows 4-9
    1: (4, 12),
    2: (4, 5),
    4: (5, 12),
    5: (6, 8),
    6: (9, 17),
    7: (7, 6),
    # lower face, rows 14-20
    9: (14, 12),
    10: (15, 9),
    11: (15, 15),
    12: (18, 17),
    14: (17, 5),
    15: (18, 7),
    16: (19, 9),
    17: (20, 12),
    18: (16, 12),
    20: (17, 19),
    22: (16, 14),
    23: (18, 12),
    24: (19, 12),
    25: (17, 12),
    26: (20, 14),
    27: (20, 10),
    28: (19, 15),
}


@dataclass(frozen=True)
class GenConfig:
    """Knobs for the synthetic generator.

    intensity_range bounds the peak activation strength of active AUs; keep
    its lower bound at or above the rule-set threshold if you want clean
    probability vectors to re-threshold exactly to the generating AU set.
    """

    n_samples: int = 700
    seed: int = 0
    noise_sigma: float = 0.0
    spurious_rate: float = 0.0
    intensity_range: tuple[float, float] = (0.6, 1.0)
    gaussian_sigma: float = 2.0
    height: int = DEFAULT_GRID[0]
    width: int = DEFAULT_GRID[1]
    au_centers: Mapping[int, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_AU_CENTERS)
    )

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        check_non_negative(self.noise_sigma, "noise_sigma")
        check_unit_interval(self.spurious_rate, "spurious_rate")
        lo, hi = self.intensity_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ConfigError(f"intensity_range must satisfy 0 < lo <= hi <= 1, got {lo, hi}")
        if self.gaussian_sigma <= 0.0:
            raise ConfigError(f"gaussian_sigma must be > 0, got {self.gaussian_sigma}")
        if self.height < 1 or self.width < 1:
            raise ConfigError(f"grid must be at least 1x1, got {self.height}x{self.width}")

    def center_of(self, code: int) -> tuple[int, int]:
        try:
            row, col = self.au_centers[code]
        except KeyError:
            raise ConfigError(f"no heatmap center configured for AU{code}") from None
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise ConfigError(
                f"center for AU{code} at ({row}, {col}) lies outside the "
                f"{self.height}x{self.width} grid"
            )
        return row, col


def render_heatmap(
    active: Mapping[int, float],
    vocab: AUVocabulary,
    cfg: GenConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Render a (K, H, W) stack of Gaussian AU response maps.

    Channel k follows the vocabulary order. Active AUs get an unnormalized
    Gaussian bump, peak equal to the AU's intensity, centered on the
    configured grid point; inactive channels stay zero. With noise_sigma > 0
    independent Gaussian noise is added per cell and the result is clamped
    at zero.
    """
    for code, intensity in active.items():
        if code not in vocab:
            raise DomainError(f"active AU{code} is not in the vocabulary")
        if not 0.0 < float(intensity) <= 1.0:
            raise DomainError(f"intensity for AU{code} must lie in (0, 1], got {intensity}")
    rows = np.arange(cfg.height, dtype=np.float64)[:, None]
    cols = np.arange(cfg.width, dtype=np.float64)[None, :]
    stack = np.zeros((len(vocab), cfg.height, cfg.width), dtype=np.float64)
    denom = 2.0 * cfg.gaussian_sigma**2
    for k, code in enumerate(vocab):
        if code not in active:
            continue
        r0, c0 = cfg.center_of(code)
        d2 = (rows - r0) ** 2 + (cols - c0) ** 2
        stack[k] = float(active[code]) * np.exp(-d2 / denom)
    if cfg.noise_sigma > 0.0:
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        stack += rng.normal(0.0, cfg.noise_sigma, stack.shape)
        np.maximum(stack, 0.0, out=stack)
    return stack


@dataclass
class Dataset:
    """In-memory labeled feature set.

    features is (n, K, H, W) for heatmaps or (n, K) for probability vectors,
    always float64. au_truth holds the generating activation set per sample
    when known.
    """

    kind: str
    vocab: AUVocabulary
    features: np.ndarray
    emotions: np.ndarray
    au_truth: tuple[frozenset[int] | None, ...] | None = None

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def feature_shape(self) -> tuple[int, ...]:
        return tuple(self.features.shape[1:])

    @property
    def has_au_truth(self) -> bool:
        return self.au_truth is not None and all(t is not None for t in self.au_truth)

    def as_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Model-ready matrix: heatmap stacks are flattened in C order."""
        X = self.features.reshape(len(self), -1)
        return X, self.emotions.copy()

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        truth = None
        if self.au_truth is not None:
            truth = tuple(self.au_truth[i] for i in idx)
        return Dataset(
            kind=self.kind,
            vocab=self.vocab,
            features=self.features[idx].copy(),
            emotions=self.emotions[idx].copy(),
            au_truth=truth,
        )


def _nonneg_seed(seed: int) -> int:
    # SeedSequence wants non-negative entropy; wrap negatives into 64-bit range.
    return int(seed) % 2**64


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    # Per-sample streams keyed on (seed, index) keep generation order-free.
    return np.random.default_rng([_nonneg_seed(seed), int(index)])


def generate_dataset(
    cfg: GenConfig,
    rules: EmotionRuleSet,
    vocab: AUVocabulary | Sequence[int],
    kind: str = KIND_PROBVEC,
) -> Dataset:
    """Draw a labeled synthetic dataset of the requested feature kind.

    Emotions are uniform over the seven labels. Each sample activates
    prototype(emotion) intersected with the vocabulary at intensities from
    cfg.intensity_range, plus each non-prototype vocabulary AU independently
    with probability cfg.spurious_rate. The realized activation set is stored
    as au_truth.
    """
    if kind not in FEATURE_KINDS:
        raise ConfigError(f"unknown feature kind {kind!r} (expected one of {FEATURE_KINDS})")
    if not isinstance(vocab, AUVocabulary):
        vocab = AUVocabulary(vocab)
    k = len(vocab)
    if kind == KIND_HEATMAP:
        features = np.zeros((cfg.n_samples, k, cfg.height, cfg.width), dtype=np.float64)
        for code in vocab:
            cfg.center_of(code)  # fail fast on missing or out-of-grid centers
    else:
        features = np.zeros((cfg.n_samples, k), dtype=np.float64)
    emotions = np.zeros(cfg.n_samples, dtype=np.int64)
    truth: list[frozenset[int]] = []
    lo, hi = cfg.intensity_range

    for i in range(cfg.n_samples):
        rng = _sample_rng(cfg.seed, i)
        emotion = EmotionLabel(int(rng.integers(0, len(EmotionLabel))))
        proto = rules.prototype(emotion)
        active: dict[int, float] = {}
        for code in vocab:
            if code in proto:
                active[code] = float(rng.uniform(lo, hi))
            elif cfg.spurious_rate > 0.0 and rng.random() < cfg.spurious_rate:
                active[code] = float(rng.uniform(lo, hi))
        emotions[i] = int(emotion)
        truth.append(frozenset(active))
        if kind == KIND_HEATMAP:
            features[i] = render_heatmap(active, vocab, cfg, rng)
        else:
            vec = np.zeros(k, dtype=np.float64)
            for code, intensity in active.items():
                vec[vocab.position(code)] = intensity
            if cfg.noise_sigma > 0.0:
                vec += rng.normal(0.0, cfg.noise_sigma, k)
            features[i] = np.clip(vec, 0.0, 1.0)

    return Dataset(kind=kind, vocab=vocab, features=features, emotions=emotions, au_truth=tuple(truth))


def split_sizes(n: int, ratios: Sequence[float]) -> list[int]:
    """Partition sizes by largest-remainder rounding, ties to earlier parts."""
    ratios = [float(r) for r in ratios]
    if any(r <= 0.0 for r in ratios):
        raise DomainError(f"split ratios must be positive, got {ratios}")
    if not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise DomainError(f"split ratios must sum to 1, got sum {sum(ratios)!r}")
    if n < len(ratios):
        raise DataError(f"cannot split {n} samples into {len(ratios)} non-empty partitions")
    floors = [int(math.floor(r * n)) for r in ratios]
    remainders = [r * n - f for r, f in zip(ratios, floors)]
    leftover = n - sum(floors)
    order = sorted(range(len(ratios)), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        floors[i] += 1
    return floors


def split_indices(
    n: int, ratios: Sequence[float], seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic shuffled index partition for (train, val, test) ratios."""
    if len(ratios) != 3:
        raise DomainError(f"expected 3 split ratios, got {len(ratios)}")
    sizes = split_sizes(n, ratios)
    perm = np.random.default_rng(_nonneg_seed(seed)).permutation(n)
    a, b = sizes[0], sizes[0] + sizes[1]
    return perm[:a], perm[a:b], perm[b:]


def split_dataset(
    ds: Dataset, ratios: Sequence[float], seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    idx_train, idx_val, idx_test = split_indices(len(ds), ratios, seed)
    return ds.subset(idx_train), ds.subset(idx_val), ds.subset(idx_test)


# --- manifest serialization -------------------------------------------------

MANIFEST_NAME = "manifest.json"
FEATURE_DIR = "features"


def _manifest_payload(ds: Dataset, paths: Sequence[str]) -> dict:
    samples = []
    for i, rel in enumerate(paths):
        entry: dict = {"path": rel, "emotion": EmotionLabel(int(ds.emotions[i])).display_name}
        if ds.au_truth is not None and ds.au_truth[i] is not None:
            entry["au_truth"] = sorted(ds.au_truth[i])
        samples.append(entry)
    return {
        "kind": ds.kind,
        "vocabulary": list(ds.vocab),
        "shape": list(ds.feature_shape),
        "samples": samples,
    }


def write_manifest(payload: Mapping, path: str | Path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def save_dataset(ds: Dataset, out_dir: str | Path, manifest_name: str = MANIFEST_NAME) -> Path:
    """Write one feature file per sample plus a manifest; returns its path."""
    out_dir = Path(out_dir)
    feat_dir = out_dir / FEATURE_DIR
    feat_dir.mkdir(parents=True, exist_ok=True)
    rel_paths = []
    for i in range(len(ds)):
        rel = f"{FEATURE_DIR}/sample_{i:05d}.faut"
        featureio.write_features(out_dir / rel, ds.features[i])
        rel_paths.append(rel)
    manifest_path = out_dir / manifest_name
    write_manifest(_manifest_payload(ds, rel_paths), manifest_path)
    return manifest_path


def save_split_manifests(
    ds: Dataset,
    out_dir: str | Path,
    ratios: Sequence[float],
    seed: int,
) -> dict[str, Path]:
    """Write the full manifest plus train/val/test manifests sharing the files."""
    out_dir = Path(out_dir)
    full = save_dataset(ds, out_dir)
    rel_paths = [f"{FEATURE_DIR}/sample_{i:05d}.faut" for i in range(len(ds))]
    parts = dict(zip(("train", "val", "test"), split_indices(len(ds), ratios, seed)))
    written = {"full": full}
    for name, idx in parts.items():
        sub = ds.subset(idx)
        payload = _manifest_payload(sub, [rel_paths[i] for i in idx])
        path = out_dir / f"{name}.json"
        write_manifest(payload, path)
        written[name] = path
    return written


def _parse_sample(entry: Mapping, shape: tuple[int, ...], base: Path, origin: str) -> np.ndarray:
    if "path" in entry:
        values = featureio.read_features(base / entry["path"])
    elif "values" in entry:
        values = np.asarray(entry["values"], dtype=np.float64)
    else:
        raise FormatError(f"{origin}: sample needs either 'path' or inline 'values'")
    try:
        return values.reshape(shape)
    except ValueError:
        raise FormatError(
            f"{origin}: sample has {values.size} values, expected shape {shape}"
        ) from None


def load_dataset(manifest_path: str | Path) -> Dataset:
    """Load a dataset from a manifest; feature paths resolve relative to it."""
    manifest_path = Path(manifest_path)
    origin = f"manifest {manifest_path}"
    try:
        payload = json.loads(manifest_path.read_text())
    except FileNotFoundError:
        raise DataError(f"manifest not found: {manifest_path}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{origin} is not valid JSON: {exc}") from None
    for key in ("kind", "vocabulary", "shape", "samples"):
        if key not in payload:
            raise FormatError(f"{origin}: missing key {key!r}")
    kind = payload["kind"]
    if kind not in FEATURE_KINDS:
        raise FormatError(f"{origin}: unknown feature kind {kind!r}")
    vocab = AUVocabulary(payload["vocabulary"])
    shape = tuple(int(d) for d in payload["shape"])
    expected_ndim = 3 if kind == KIND_HEATMAP else 1
    if len(shape) != expected_ndim:
        raise FormatError(f"{origin}: {kind} features need {expected_ndim} dims, got {shape}")
    if shape[0] != len(vocab):
        raise FormatError(
            f"{origin}: leading dimension {shape[0]} does not match vocabulary size {len(vocab)}"
        )
    samples = payload["samples"]
    if not isinstance(samples, list) or not samples:
        raise DataError(f"{origin}: no samples listed")
    base = manifest_path.parent
    features = np.zeros((len(samples), *shape), dtype=np.float64)
    emotions = np.zeros(len(samples), dtype=np.int64)
    truth: list[frozenset[int] | None] = []
    for i, entry in enumerate(samples):
        values = _parse_sample(entry, shape, base, origin)
        if kind == KIND_PROBVEC and (values.min() < 0.0 or values.max() > 1.0):
            raise FormatError(f"{origin}: sample {i} probabilities outside [0, 1]")
        if kind == KIND_HEATMAP and values.min() < 0.0:
            raise FormatError(f"{origin}: sample {i} has negative heatmap values")
        features[i] = values
        emotions[i] = int(EmotionLabel.from_name(entry.get("emotion", "")))
        if "au_truth" in entry and entry["au_truth"] is not None:
            aus = frozenset(int(c) for c in entry["au_truth"])
            stray = sorted(c for c in aus if c not in vocab)
            if stray:
                raise FormatError(f"{origin}: sample {i} au_truth outside vocabulary: {stray}")
            truth.append(aus)
        else:
            truth.append(None)
    au_truth = tuple(truth) if any(t is not None for t in truth) else None
    return Dataset(kind=kind, vocab=vocab, features=features, emotions=emotions, au_truth=au_truth)
