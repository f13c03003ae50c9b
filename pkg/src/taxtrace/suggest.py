"""Lexical class suggestion: rank taxonomy classes for a piece of text.

Pure token overlap weighted by inverse document frequency over the
taxonomy's own vocabulary.  No stemming, no learning: synonyms on the
taxonomy nodes are the mechanism for vocabulary that the class titles do
not use (an artifact saying "auxiliary power" only reaches a class that
lists it as a synonym).  A human confirms or rejects the suggestions;
nothing is assigned automatically.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .taxonomy import Taxonomy

TITLE = "title"
SYNONYM = "synonym"
DESCRIPTION = "description"

# Priority when one token occurs in several fields of the same node.
_SOURCE_RANK = {TITLE: 0, SYNONYM: 1, DESCRIPTION: 2}
_WEIGHTS = {TITLE: 1.0, SYNONYM: 1.0, DESCRIPTION: 0.5}

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Case-folded alphanumeric tokens, shortest ones dropped."""
    return [tok for tok in _TOKEN_RE.findall(text.casefold()) if len(tok) >= 2]


@dataclass
class Suggestion:
    code: str
    score: float
    matched_terms: list[tuple[str, str]]

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "score": self.score,
            "matched_terms": [{"term": t, "source": s} for t, s in self.matched_terms],
        }


def _index(t: Taxonomy) -> tuple[dict[str, dict[str, str]], dict[str, int]]:
    """Token -> {code -> best source field}, plus document frequencies."""
    postings: dict[str, dict[str, str]] = {}
    for code, node in t.nodes.items():
        fields = [(TITLE, node.title)]
        fields.extend((SYNONYM, s) for s in node.synonyms)
        if node.description:
            fields.append((DESCRIPTION, node.description))
        for source, text in fields:
            for token in tokenize(text):
                per_code = postings.setdefault(token, {})
                previous = per_code.get(code)
                if previous is None or _SOURCE_RANK[source] < _SOURCE_RANK[previous]:
                    per_code[code] = source
    df = {token: len(per_code) for token, per_code in postings.items()}
    return postings, df


def suggest(text: str, t: Taxonomy, n: int) -> list[Suggestion]:
    """Top ``n`` classes for ``text``, scored by summed token idf.

    Tokens occurring in every node carry no information (idf zero) and
    are skipped, so a positive score always has matched terms behind it.
    Ties break by code for determinism.
    """
    if n < 1:
        raise ValueError("suggestion count must be at least 1")
    total = len(t.nodes)
    if total == 0:
        return []
    postings, df = _index(t)
    matched: dict[str, list[tuple[str, str]]] = {}
    for token in sorted(set(tokenize(text))):
        per_code = postings.get(token)
        if not per_code or df[token] == total:
            continue
        for code, source in per_code.items():
            matched.setdefault(code, []).append((token, source))
    suggestions = []
    for code, terms in matched.items():
        score = 0.0
        for token, source in terms:
            score += _WEIGHTS[source] * math.log(total / df[token])
        suggestions.append(Suggestion(code=code, score=score, matched_terms=terms))
    suggestions.sort(key=lambda s: (-s.score, s.code))
    return suggestions[:n]
