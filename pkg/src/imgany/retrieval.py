"""Exact top-k cosine similarity search over an embedding bank.

Two implementations share one contract: a blocked kernel used by the
pipeline, and a deliberately naive full-sort oracle used to test it. Both
are exact (no approximation), score in float64, and order hits by the
same total key (score desc, then word asc, then bank index asc), so
results are reproducible bit-for-bit across calls.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bank import BankLike
from .core import as_vector, normalize
from .errors import DimMismatchError, EmptyBankError, ImgAnyError

# Upcasting float32 rows to float64 per block keeps the working set a few
# MB even at 1024-d while retaining 64-bit accumulation.
BLOCK_ROWS = 2048


@dataclass(frozen=True)
class RetrievalHit:
    word: str
    score: float
    bank_index: int


def _validated_query(bank: BankLike, query) -> np.ndarray:
    if bank.count == 0:
        raise EmptyBankError("bank has no entries (everything filtered out?)")
    q = as_vector(query)
    if q.shape[0] != bank.dim:
        raise DimMismatchError(f"query dim {q.shape[0]} != bank dim {bank.dim}")
    return normalize(q)


def _blocked_scores(matrix: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = np.empty(matrix.shape[0], dtype=np.float64)
    for start in range(0, matrix.shape[0], BLOCK_ROWS):
        stop = min(start + BLOCK_ROWS, matrix.shape[0])
        out[start:stop] = matrix[start:stop].astype(np.float64) @ q
    # float32 rows carry ~1e-7 norm slack; clamp before ranking so the
    # score range and the oracle's tie-breaks agree exactly
    np.clip(out, -1.0, 1.0, out=out)
    return out


def retrieve_top_k(bank: BankLike, query, k: int) -> list[RetrievalHit]:
    """Top ``min(k, count)`` hits by cosine similarity, deterministically ordered."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = _validated_query(bank, query)
    scores = _blocked_scores(bank.matrix, q)
    count = bank.count
    kk = min(k, count)
    if kk == count:
        candidates = range(count)
    else:
        top = np.argpartition(scores, count - kk)[count - kk:]
        boundary = scores[top].min()
        # pull in every boundary tie so the word/index tie-break sees them all
        candidates = np.flatnonzero(scores >= boundary).tolist()
    words = bank.words
    ranked = sorted(candidates, key=lambda i: (-scores[i], words[i], i))[:kk]
    return [RetrievalHit(word=words[i], score=float(scores[i]), bank_index=int(i))
            for i in ranked]


def retrieve_top_k_oracle(bank: BankLike, query, k: int) -> list[RetrievalHit]:
    """Reference implementation: score every entry, full sort, slice."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = _validated_query(bank, query)
    matrix = bank.matrix
    hits = []
    for i, word in enumerate(bank.words):
        s = float(np.dot(matrix[i].astype(np.float64), q))
        s = min(1.0, max(-1.0, s))
        hits.append(RetrievalHit(word=word, score=s, bank_index=i))
    hits.sort(key=lambda h: (-h.score, h.word, h.bank_index))
    return hits[:min(k, bank.count)]


def batch_retrieve(bank: BankLike, queries: Sequence, k: int) -> list[list[RetrievalHit]]:
    """One retrieval per query; result order matches query order."""
    results = []
    for i, query in enumerate(queries):
        try:
            results.append(retrieve_top_k(bank, query, k))
        except ImgAnyError as err:
            if err.stage is None:
                err.stage = f"query[{i}]"
            raise
    return results
