"""ROUGE-1/ROUGE-L, keyword Action F1 and cosine similarity.

Tokens are lowercase runs of letters and digits; everything else
(whitespace, punctuation, underscores) separates tokens. No stemming.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from gazeinterp.errors import InputError

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _prf(overlap: float, n_cand: int, n_ref: int) -> tuple[float, float, float]:
    if n_cand == 0 or n_ref == 0 or overlap == 0:
        return 0.0, 0.0, 0.0
    p = overlap / n_cand
    r = overlap / n_ref
    return p, r, 2 * p * r / (p + r)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int = 1) -> tuple[float, float, float]:
    """Clipped n-gram overlap as (precision, recall, f1)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand, ref = ngrams(candidate, n), ngrams(reference, n)
    overlap = sum((cand & ref).values())
    return _prf(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> tuple[float, float, float]:
    return _prf(lcs_length(candidate, reference), len(candidate), len(reference))


def load_lexicon(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        text = resources.files("gazeinterp").joinpath("assets", "action_lexicon.txt").read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read lexicon {str(path)!r}: {exc}") from exc
    terms = frozenset(" ".join(tokenize(line)) for line in text.splitlines() if tokenize(line))
    if not terms:
        raise InputError("action lexicon is empty")
    return terms


def keywords_in(text: str, lexicon: Iterable[str]) -> set[str]:
    """Lexicon entries (single words or phrases) that occur as whole tokens in ``text``."""
    padded = " " + " ".join(tokenize(text)) + " "
    return {term for term in lexicon if f" {term} " in padded}


def action_f1(candidate: str, reference: str, lexicon: Iterable[str]) -> float:
    lexicon = {" ".join(tokenize(t)) for t in lexicon} - {""}
    if not lexicon:
        raise ValueError("lexicon must be nonempty")
    pred, gold = keywords_in(candidate, lexicon), keywords_in(reference, lexicon)
    if not pred and not gold:
        # nothing to anticipate and nothing predicted: agreement
        return 1.0
    return _prf(len(pred & gold), len(pred), len(gold))[2]


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def term_frequency_vectors(texts: Sequence[str]) -> np.ndarray:
    """Rows of token counts over the sorted union vocabulary of ``texts``."""
    tokenized = [tokenize(t) for t in texts]
    vocab = sorted({tok for toks in tokenized for tok in toks})
    index = {tok: i for i, tok in enumerate(vocab)}
    out = np.zeros((len(texts), len(vocab)))
    for row, toks in enumerate(tokenized):
        for tok in toks:
            out[row, index[tok]] += 1
    return out


@dataclass
class MetricReport:
    rows: list[dict] = field(default_factory=list)

    KEYS = ("rouge1_f1", "rougeL_f1", "action_f1", "cosine_similarity")

    @property
    def means(self) -> dict[str, float | None]:
        out: dict[str, float | None] = {}
        for k in self.KEYS:
            vals = [r[k] for r in self.rows]
            out[k] = float(np.mean(vals)) if vals else None
        # not computed here; needs a pretrained contextual model
        out["bertscore_f1"] = None
        return out

    def to_dict(self) -> dict:
        return {"count": len(self.rows), "means": self.means, "rows": self.rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def score_pair(candidate: str, reference: str, lexicon: Iterable[str], embed_pair=None) -> dict:
    """All four metrics for one pair.

    ``embed_pair(candidate, reference)`` returns two vectors; it defaults to
    term-frequency vectors over the pair's joint vocabulary. A side with no
    tokens scores cosine 0.0 (1.0 if both are empty).
    """
    c, r = tokenize(candidate), tokenize(reference)
    if embed_pair is None:
        embed_pair = lambda x, y: tuple(term_frequency_vectors([x, y]))  # noqa: E731
    if not c or not r:
        cos = 1.0 if not c and not r else 0.0
    else:
        va, vb = embed_pair(candidate, reference)
        cos = cosine_similarity(va, vb)
    return {
        "rouge1_f1": rouge_n(c, r, 1)[2],
        "rougeL_f1": rouge_l(c, r)[2],
        "action_f1": action_f1(candidate, reference, lexicon),
        "cosine_similarity": cos,
    }


def evaluate_corpus(
    candidates: Sequence[str], references: Sequence[str], lexicon: Iterable[str], embed_pair=None
) -> MetricReport:
    if len(candidates) != len(references):
        raise InputError(f"{len(candidates)} candidates vs {len(references)} references; files must be line-aligned")
    lexicon = frozenset(lexicon)
    report = MetricReport()
    for i, (c, r) in enumerate(zip(candidates, references)):
        report.rows.append({"index": i, **score_pair(c, r, lexicon, embed_pair)})
    return report
