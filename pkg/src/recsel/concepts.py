"""Concept extraction and the concept consistency graph.

Extraction is RAKE-style: stopwords and punctuation delimit word runs,
candidate phrases are the contiguous n-grams inside each run, and words
are scored degree/frequency over the candidate multiset. Vertex matching
uses character-trigram Jaccard similarity with a fixed threshold.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

DEFAULT_THETA = 0.75
DEFAULT_MAX_CONCEPTS = 10
DEFAULT_MIN_WORDS = 2
DEFAULT_MAX_WORDS = 4

_WORD_RE = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)?")


@lru_cache(maxsize=1)
def load_stopwords() -> frozenset[str]:
    text = resources.files("recsel.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def canonical_phrase(phrase: str) -> str:
    return " ".join(phrase.lower().split())


def _word_runs(text: str, stopwords: frozenset[str] | set[str]) -> list[list[str]]:
    runs: list[list[str]] = []
    current: list[str] = []
    pos = 0
    lowered = text.lower()
    for match in _WORD_RE.finditer(lowered):
        # Any gap that is not pure whitespace acts as a phrase delimiter.
        gap = lowered[pos:match.start()]
        if gap.strip() and current:
            runs.append(current)
            current = []
        pos = match.end()
        word = match.group()
        if word in stopwords:
            if current:
                runs.append(current)
                current = []
        else:
            current.append(word)
    if current:
        runs.append(current)
    return runs


def extract_concepts(
    instruction: str,
    output: str,
    stopwords: frozenset[str] | set[str] | None = None,
    max_concepts: int = DEFAULT_MAX_CONCEPTS,
    min_words: int = DEFAULT_MIN_WORDS,
    max_words: int = DEFAULT_MAX_WORDS,
) -> list[str]:
    """Top-scoring candidate phrases from instruction + output, deduplicated.

    Candidates are every contiguous min..max-word n-gram within each
    stopword/punctuation-delimited run. A phrase's score is the sum of its
    words' degree/frequency scores, accumulated over every occurrence;
    ties break by first occurrence.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    runs: list[list[str]] = []
    for text in (instruction, output):
        runs.extend(_word_runs(text, stopwords))
    candidates: list[tuple[str, ...]] = []
    for run in runs:
        for size in range(min_words, max_words + 1):
            for start in range(0, len(run) - size + 1):
                candidates.append(tuple(run[start:start + size]))
    if not candidates:
        return []
    freq: dict[str, int] = {}
    degree: dict[str, int] = {}
    for cand in candidates:
        for word in cand:
            freq[word] = freq.get(word, 0) + 1
            degree[word] = degree.get(word, 0) + len(cand)
    word_score = {w: degree[w] / freq[w] for w in freq}
    totals: dict[str, float] = {}
    first_seen: dict[str, int] = {}
    for order, cand in enumerate(candidates):
        phrase = " ".join(cand)
        base = 0.0
        for word in cand:
            base += word_score[word]
        totals[phrase] = totals.get(phrase, 0.0) + base
        if phrase not in first_seen:
            first_seen[phrase] = order
    ranked = sorted(totals, key=lambda ph: (-totals[ph], first_seen[ph]))
    return ranked[:max_concepts]


def _trigrams(phrase: str) -> dict[str, int]:
    if len(phrase) < 3:
        return {phrase: 1}
    grams: dict[str, int] = {}
    for i in range(len(phrase) - 2):
        g = phrase[i:i + 3]
        grams[g] = grams.get(g, 0) + 1
    return grams


def concept_similarity(a: str, b: str) -> float:
    """Jaccard similarity of character-trigram multisets, canonical forms."""
    ca = canonical_phrase(a)
    cb = canonical_phrase(b)
    if not ca or not cb:
        raise ValueError("phrases must be nonempty")
    ga = _trigrams(ca)
    gb = _trigrams(cb)
    inter = 0
    union = 0
    for g in set(ga) | set(gb):
        na = ga.get(g, 0)
        nb = gb.get(g, 0)
        inter += min(na, nb)
        union += max(na, nb)
    return inter / union


@dataclass
class ConceptGraph:
    """Undirected graph over canonical concept phrases."""

    vertices: set[str] = field(default_factory=set)
    edges: set[tuple[str, str]] = field(default_factory=set)

    @staticmethod
    def _edge(a: str, b: str) -> tuple[str, str]:
        return (a, b) if a <= b else (b, a)

    def has_edge(self, a: str, b: str) -> bool:
        return self._edge(a, b) in self.edges

    def n_vertices(self) -> int:
        return len(self.vertices)

    def n_edges(self) -> int:
        return len(self.edges)


def match_vertex(concept: str, graph: ConceptGraph, theta: float = DEFAULT_THETA) -> str | None:
    """Best vertex with similarity >= theta; lexicographic tie-break; else None."""
    phrase = canonical_phrase(concept)
    best: str | None = None
    best_sim = -1.0
    for vertex in sorted(graph.vertices):
        sim = concept_similarity(phrase, vertex)
        if sim >= theta and sim > best_sim:
            best = vertex
            best_sim = sim
    return best


def canonicalize_concepts(
    concepts: list[str], graph: ConceptGraph, theta: float = DEFAULT_THETA
) -> list[str]:
    """Replace fuzzy-matched concepts by their vertex label; dedup in order."""
    out: list[str] = []
    seen: set[str] = set()
    for concept in concepts:
        phrase = canonical_phrase(concept)
        matched = match_vertex(phrase, graph, theta)
        label = matched if matched is not None else phrase
        if label not in seen:
            seen.add(label)
            out.append(label)
    return out


def is_consistent(
    canonical: list[str], graph: ConceptGraph
) -> tuple[bool, tuple[str, str] | None]:
    """Check every concept pair: known vertices must share an edge.

    Input must already be canonicalized. On failure returns the first
    violating pair in lexicographic pair order.
    """
    present = sorted(c for c in set(canonical) if c in graph.vertices)
    for i in range(len(present)):
        for j in range(i + 1, len(present)):
            if not graph.has_edge(present[i], present[j]):
                return False, (present[i], present[j])
    return True, None


def update_ccg(graph: ConceptGraph, canonical: list[str]) -> ConceptGraph:
    """Insert the concepts as a clique; idempotent; mutates and returns graph."""
    unique = list(dict.fromkeys(canonical))
    for concept in unique:
        graph.vertices.add(concept)
    for i in range(len(unique)):
        for j in range(i + 1, len(unique)):
            if unique[i] != unique[j]:
                graph.edges.add(graph._edge(unique[i], unique[j]))
    return graph
