"""ROUGE-1/2/L on token-id sequences (no stemming, no stopwords)."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from typing import Sequence

from .kernels import lcs_length


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return asdict(self)


ZERO = RougeScore(0.0, 0.0, 0.0)


def _score(overlap: int, n_cand: int, n_ref: int) -> RougeScore:
    if n_cand == 0 or n_ref == 0:
        return ZERO
    p = overlap / n_cand
    r = overlap / n_ref
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return RougeScore(p, r, f1)


def ngrams(seq: Sequence[int], n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def rouge_n(candidate: Sequence[int], reference: Sequence[int], n: int = 1) -> RougeScore:
    if n < 1:
        raise ValueError("n must be >= 1")
    cand, ref = ngrams(list(candidate), n), ngrams(list(reference), n)
    overlap = sum((cand & ref).values())  # clipped counts
    return _score(overlap, sum(cand.values()), sum(ref.values()))


def rouge_l(candidate: Sequence[int], reference: Sequence[int]) -> RougeScore:
    if len(candidate) == 0 or len(reference) == 0:
        return ZERO
    return _score(lcs_length(candidate, reference), len(candidate), len(reference))


def rouge_all(candidate: Sequence[int], reference: Sequence[int]) -> dict[str, RougeScore]:
    return {
        "rouge1": rouge_n(candidate, reference, 1),
        "rouge2": rouge_n(candidate, reference, 2),
        "rougeL": rouge_l(candidate, reference),
    }


def corpus_rouge(candidates: Sequence[Sequence[int]], references: Sequence[Sequence[int]]) -> dict[str, dict]:
    """Macro-average of per-sample precision/recall/F1."""
    if len(candidates) != len(references):
        raise ValueError("candidate and reference counts differ")
    if not candidates:
        raise ValueError("no sequences to score")
    totals = {k: [0.0, 0.0, 0.0] for k in ("rouge1", "rouge2", "rougeL")}
    for c, r in zip(candidates, references):
        for k, sc in rouge_all(c, r).items():
            totals[k][0] += sc.precision
            totals[k][1] += sc.recall
            totals[k][2] += sc.f1
    n = len(candidates)
    return {k: {"precision": v[0] / n, "recall": v[1] / n, "f1": v[2] / n} for k, v in totals.items()}
