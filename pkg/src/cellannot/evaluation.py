"""Scoring harnesses for annotation quality.

Two strategies: a weighted manual rubric (human judgment ingested from a
review sheet) and embedding-based semantic scoring that min-max
normalizes within-group cosine similarities into five equal intervals.
Intra-group pairwise similarity quantifies output diversity.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import (
    EmptyBroad,
    EmptyGroup,
    GroupTooSmall,
    LengthMismatch,
    ZeroVector,
)
from .gateway import EmbeddingVector


class MatchLevel(Enum):
    """Manual rubric level; the weights are fixed by the rubric."""

    SUPER_FULLY = "super_fully"
    FULLY = "fully"
    PARTIALLY = "partially"
    MISMATCH = "mismatch"

    @property
    def weight(self) -> float:
        return _LEVEL_WEIGHTS[self]


_LEVEL_WEIGHTS = {
    MatchLevel.SUPER_FULLY: 1.5,
    MatchLevel.FULLY: 1.0,
    MatchLevel.PARTIALLY: 0.5,
    MatchLevel.MISMATCH: 0.0,
}

SEMANTIC_BUCKET_SCORES = (0.0, 0.25, 0.5, 0.75, 1.0)


class Embedder(Protocol):
    def embed(self, texts: list[str]) -> list[EmbeddingVector]: ...


# --- manual rubric ------------------------------------------------------------


def score_manual(levels: Sequence[MatchLevel]) -> float:
    """Arithmetic mean of the rubric weights; bounded in [0, 1.5]."""
    if not levels:
        raise EmptyGroup("manual score requires at least one level")
    return sum(level.weight for level in levels) / len(levels)


def combine_candidate(broad: str, features: Sequence[str]) -> str:
    """Candidate label for the intermediate-process review.

    Features join in their given order, then the broad type; the level
    judgment itself stays with the human reviewer.
    """
    if not broad.strip():
        raise EmptyBroad("candidate label requires a broad cell type")
    return " ".join([*features, broad.strip()]) if features else broad.strip()


@dataclass(frozen=True)
class ManualScoreItem:
    reference_label: str
    predicted_label: str
    level: MatchLevel


@dataclass(frozen=True)
class ManualScoreReport:
    group_id: str
    items: tuple[ManualScoreItem, ...]
    mean_score: float


def score_manual_sheet(rows: Iterable[tuple[str, str, str, MatchLevel]]) -> list[ManualScoreReport]:
    """Aggregate review-sheet rows (group, reference, predicted, level)."""
    grouped: dict[str, list[ManualScoreItem]] = {}
    for group_id, reference, predicted, level in rows:
        grouped.setdefault(group_id, []).append(ManualScoreItem(reference, predicted, level))
    reports = []
    for group_id in sorted(grouped):
        items = tuple(grouped[group_id])
        reports.append(
            ManualScoreReport(
                group_id=group_id,
                items=items,
                mean_score=score_manual([item.level for item in items]),
            )
        )
    return reports


# --- semantic scoring -----------------------------------------------------------


def cosine_similarity(u, v) -> float:
    """Standard cosine over two equal-length non-zero vectors."""
    u_values = np.asarray(u.values if isinstance(u, EmbeddingVector) else u, dtype=float)
    v_values = np.asarray(v.values if isinstance(v, EmbeddingVector) else v, dtype=float)
    if u_values.shape != v_values.shape:
        raise LengthMismatch(f"vector lengths differ: {u_values.shape} vs {v_values.shape}")
    u_norm = float(np.linalg.norm(u_values))
    v_norm = float(np.linalg.norm(v_values))
    if u_norm == 0.0 or v_norm == 0.0:
        raise ZeroVector("cosine similarity is undefined for all-zero vectors")
    return float(np.dot(u_values, v_values) / (u_norm * v_norm))


def bucket_score(normalized: float) -> float:
    """Map a min-max normalized value to one of the five interval scores.

    Intervals are half-open with the top interval closed, so 1.0 lands in
    the highest bucket.
    """
    return 0.25 * min(math.floor(normalized * 5), 4)


@dataclass(frozen=True)
class SemanticScoreItem:
    reference: str
    prediction: str
    cosine: float
    normalized: float
    score: float


@dataclass(frozen=True)
class SemanticScoreReport:
    group_id: str
    items: tuple[SemanticScoreItem, ...]
    mean_score: float


def _normalize_group(cosines: Sequence[float]) -> list[float]:
    low, high = min(cosines), max(cosines)
    if high == low:
        # Degenerate group (including singletons): identical similarity is a
        # perfect within-group match.
        return [1.0] * len(cosines)
    return [(c - low) / (high - low) for c in cosines]


def score_semantic_group(
    pairs: Sequence[tuple[str, str]],
    embedder: Embedder,
    group_id: str = "group",
) -> SemanticScoreReport:
    """Cosine, min-max normalize within the group, bucket into quintiles."""
    if not pairs:
        raise EmptyGroup("semantic score requires at least one pair")
    references = [ref for ref, _ in pairs]
    predictions = [pred for _, pred in pairs]
    vectors = embedder.embed(references + predictions)
    ref_vectors, pred_vectors = vectors[: len(pairs)], vectors[len(pairs) :]
    cosines = [cosine_similarity(r, p) for r, p in zip(ref_vectors, pred_vectors)]
    normalized = _normalize_group(cosines)
    items = tuple(
        SemanticScoreItem(
            reference=ref,
            prediction=pred,
            cosine=cosine,
            normalized=norm,
            score=bucket_score(norm),
        )
        for (ref, pred), cosine, norm in zip(pairs, cosines, normalized)
    )
    mean = sum(item.score for item in items) / len(items)
    return SemanticScoreReport(group_id=group_id, items=items, mean_score=mean)


def score_semantic_groups(
    rows: Sequence[tuple[str, str, str]],
    embedder: Embedder,
    pool_groups: bool = False,
) -> list[SemanticScoreReport]:
    """Score (group, reference, prediction) rows group by group.

    With ``pool_groups`` the min-max normalization spans every row at once
    instead of each group separately; reports stay per group.
    """
    if not rows:
        raise EmptyGroup("semantic scoring requires at least one row")
    if not pool_groups:
        grouped: dict[str, list[tuple[str, str]]] = {}
        for group_id, reference, prediction in rows:
            grouped.setdefault(group_id, []).append((reference, prediction))
        return [
            score_semantic_group(grouped[group_id], embedder, group_id=group_id)
            for group_id in sorted(grouped)
        ]
    references = [r for _, r, _ in rows]
    predictions = [p for _, _, p in rows]
    vectors = embedder.embed(references + predictions)
    cosines = [
        cosine_similarity(r, p)
        for r, p in zip(vectors[: len(rows)], vectors[len(rows) :])
    ]
    normalized = _normalize_group(cosines)
    by_group: dict[str, list[SemanticScoreItem]] = {}
    for (group_id, reference, prediction), cosine, norm in zip(rows, cosines, normalized):
        by_group.setdefault(group_id, []).append(
            SemanticScoreItem(
                reference=reference,
                prediction=prediction,
                cosine=cosine,
                normalized=norm,
                score=bucket_score(norm),
            )
        )
    return [
        SemanticScoreReport(
            group_id=group_id,
            items=tuple(items),
            mean_score=sum(i.score for i in items) / len(items),
        )
        for group_id, items in sorted(by_group.items())
    ]


def intra_group_similarity(labels: Sequence[str], embedder: Embedder) -> tuple[float, float]:
    """Mean and population variance of all pairwise label cosines.

    Lower mean similarity indicates more diverse annotations.
    """
    if len(labels) < 2:
        raise GroupTooSmall("intra-group similarity requires at least two labels")
    vectors = embedder.embed(list(labels))
    cosines = [
        cosine_similarity(vectors[i], vectors[j])
        for i in range(len(vectors))
        for j in range(i + 1, len(vectors))
    ]
    mean = float(np.mean(cosines))
    variance = float(np.var(cosines))
    return mean, variance


# --- sheet file formats ----------------------------------------------------------


def read_review_sheet(path: str | Path) -> list[tuple[str, str, str, MatchLevel]]:
    """Review sheet CSV: columns group, reference_label, predicted_label, level."""
    rows: list[tuple[str, str, str, MatchLevel]] = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            rows.append(
                (
                    row["group"],
                    row["reference_label"],
                    row["predicted_label"],
                    MatchLevel(row["level"].strip().lower()),
                )
            )
    return rows


def read_pairs_csv(path: str | Path) -> list[tuple[str, str, str]]:
    """Semantic pairs CSV: columns group, reference, prediction."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        return [
            (row["group"], row["reference"], row["prediction"])
            for row in csv.DictReader(handle)
        ]


def read_labels_csv(path: str | Path) -> dict[str, list[str]]:
    """Diversity labels CSV: columns group, label."""
    grouped: dict[str, list[str]] = {}
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            grouped.setdefault(row["group"], []).append(row["label"])
    return grouped
