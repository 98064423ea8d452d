"""Word-analogy evaluation: solve a:b::c:? by vector offset and report.

Question files follow the questions-words convention: section headers are
lines ": name", questions are four whitespace-separated words.  The first
five sections are treated as semantic and the rest as syntactic unless a
sidecar kinds file overrides the assignment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from embkit.errors import ParseError
from embkit.store import EmbeddingStore, unit

SEMANTIC = "semantic"
SYNTACTIC = "syntactic"
KINDS = (SEMANTIC, SYNTACTIC)

DEFAULT_RESTRICT = 400_000
POSITIONAL_SEMANTIC_SECTIONS = 5


class AnalogyQuestion(NamedTuple):
    a: str
    b: str
    c: str
    d: str


@dataclass
class Section:
    name: str
    kind: str
    questions: list


@dataclass
class AnalogyDataset:
    sections: list

    @property
    def question_count(self) -> int:
        return sum(len(s.questions) for s in self.sections)


@dataclass
class AnalogyPrediction:
    offset: np.ndarray | None
    predicted: str | None
    correct: bool
    skipped: bool


@dataclass
class SectionResult:
    name: str
    kind: str
    evaluated: int
    skipped: int
    correct: int

    @property
    def accuracy(self):
        """Fraction correct among evaluated questions; None when none were."""
        if self.evaluated == 0:
            return None
        return self.correct / self.evaluated


@dataclass
class AnalogyReport:
    sections: list
    micro: dict
    macro: dict
    restrict: int
    exclude_inputs: bool

    def to_json_dict(self) -> dict:
        return {
            "restrict_vocab": self.restrict,
            "exclude_inputs": self.exclude_inputs,
            "sections": [
                {
                    "name": s.name,
                    "kind": s.kind,
                    "evaluated": s.evaluated,
                    "skipped": s.skipped,
                    "correct": s.correct,
                    "accuracy": s.accuracy,
                }
                for s in self.sections
            ],
            "micro": dict(self.micro),
            "macro": dict(self.macro),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def render_table(self) -> str:
        rows = [("section", "kind", "evaluated", "skipped", "accuracy")]
        for s in self.sections:
            acc = "-" if s.accuracy is None else f"{100 * s.accuracy:.2f}%"
            rows.append((s.name, s.kind, str(s.evaluated), str(s.skipped), acc))

        def pct(v):
            return "-" if v is None else f"{100 * v:.2f}%"

        summary = [
            ("micro semantic", pct(self.micro["semantic"])),
            ("micro syntactic", pct(self.micro["syntactic"])),
            ("micro total", pct(self.micro["total"])),
            ("macro semantic", pct(self.macro["semantic"])),
            ("macro syntactic", pct(self.macro["syntactic"])),
            ("macro total", pct(self.macro["total"])),
        ]
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = [
            "  ".join(col.ljust(widths[i]) for i, col in enumerate(row))
            for row in rows
        ]
        lines.append("")
        lines.extend(f"{name}: {value}" for name, value in summary)
        return "\n".join(lines) + "\n"


def load_kinds_file(path) -> dict:
    """Sidecar override: lines of "section-name<whitespace>kind"."""
    kinds = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in KINDS:
                raise ParseError(
                    f"expected 'section {SEMANTIC}|{SYNTACTIC}'", path, lineno
                )
            kinds[parts[0]] = parts[1]
    return kinds


def load_analogy_file(path, kinds_path=None) -> AnalogyDataset:
    """Parse a sectioned question file, lowercasing all words."""
    sections = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(":"):
                name = line[1:].strip()
                if not name:
                    raise ParseError("empty section name", path, lineno)
                if name in seen:
                    raise ParseError(f"duplicate section {name!r}", path, lineno)
                seen.add(name)
                sections.append(Section(name, SYNTACTIC, []))
                continue
            words = line.lower().split()
            if len(words) != 4:
                raise ParseError(
                    f"expected 4 words, got {len(words)}", path, lineno
                )
            if not sections:
                raise ParseError("question before any section header", path, lineno)
            sections[-1].questions.append(AnalogyQuestion(*words))
    for i, section in enumerate(sections):
        section.kind = SEMANTIC if i < POSITIONAL_SEMANTIC_SECTIONS else SYNTACTIC
    if kinds_path is not None:
        override = load_kinds_file(kinds_path)
        for section in sections:
            if section.name in override:
                section.kind = override[section.name]
    return AnalogyDataset(sections)


def solve(store: EmbeddingStore, q: AnalogyQuestion, exclude_inputs: bool = True) -> AnalogyPrediction:
    """Predict the fourth word from the normalized offset b - a + c.

    Questions with any unresolvable word are skipped rather than scored.
    """
    va, vb, vc = store.vector(q.a), store.vector(q.b), store.vector(q.c)
    if va is None or vb is None or vc is None or store.vector(q.d) is None:
        return AnalogyPrediction(None, None, correct=False, skipped=True)
    p = unit(vb) - unit(va) + unit(vc)
    exclude = {q.a, q.b, q.c} if exclude_inputs else set()
    hits = store.nearest(p, 1, exclude=exclude)
    predicted = hits[0][0] if hits else None
    return AnalogyPrediction(p, predicted, correct=predicted == q.d, skipped=False)


def aggregate_accuracies(entries):
    """Micro and macro accuracies from (kind, accuracy, weight) entries.

    ``accuracy`` may be None (nothing evaluated); such entries are excluded
    from both aggregates.  Micro weights each entry's accuracy by its weight;
    macro is the unweighted mean.  Returns {"micro": {...}, "macro": {...}}
    keyed by semantic / syntactic / total, with None where no entries apply.
    """
    micro, macro = {}, {}
    for key in (SEMANTIC, SYNTACTIC, "total"):
        chosen = [
            (acc, weight)
            for kind, acc, weight in entries
            if acc is not None and (key == "total" or kind == key)
        ]
        total_weight = sum(weight for _, weight in chosen)
        if not chosen or total_weight == 0:
            micro[key] = None
            macro[key] = None
            continue
        micro[key] = sum(acc * weight for acc, weight in chosen) / total_weight
        macro[key] = sum(acc for acc, _ in chosen) / len(chosen)
    return {"micro": micro, "macro": macro}


def evaluate(
    store: EmbeddingStore,
    dataset: AnalogyDataset,
    restrict: int = DEFAULT_RESTRICT,
    exclude_inputs: bool = True,
) -> AnalogyReport:
    """Score every question against the vocabulary-restricted store."""
    if restrict < 1:
        raise ValueError("restrict must be >= 1")
    restricted = store.restrict(restrict)
    results = []
    for section in dataset.sections:
        evaluated = skipped = correct = 0
        for q in section.questions:
            pred = solve(restricted, q, exclude_inputs=exclude_inputs)
            if pred.skipped:
                skipped += 1
            else:
                evaluated += 1
                correct += int(pred.correct)
        results.append(
            SectionResult(section.name, section.kind, evaluated, skipped, correct)
        )
    aggregates = aggregate_accuracies(
        [(r.kind, r.accuracy, r.evaluated) for r in results]
    )
    return AnalogyReport(
        sections=results,
        micro=aggregates["micro"],
        macro=aggregates["macro"],
        restrict=restrict,
        exclude_inputs=exclude_inputs,
    )
