"""Language-model coherence between neighbouring blocks.

Any object with ``score(context, target) -> float`` (mean negative
log-likelihood per token of ``target`` given ``context``, in nats) can back
the coherence features. Two are provided: a character n-gram model trained
on the training corpus, and an adapter that talks line-delimited JSON to a
child process so heavier models can be plugged in from outside.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import threading
from collections import defaultdict
from typing import Iterable, Protocol, Sequence

from .blocks import TextBlock

NGRAM_FORMAT_VERSION = 1
UNK = "\x00"
BOS = "\x02"
SEPARATOR = "\n"


class ScorerError(RuntimeError):
    pass


class Scorer(Protocol):
    def score(self, context: str, target: str) -> float: ...


class CharNGramModel:
    """Character n-gram model with additive smoothing over vocabulary + UNK."""

    def __init__(self, order: int, k: float, vocab: Sequence[str], counts: dict[str, dict[str, int]]):
        if order < 1:
            raise ValueError("order must be at least 1")
        self.order = order
        self.k = k
        self.vocab = tuple(sorted(set(vocab) | {UNK}))
        self._vocab_set = frozenset(self.vocab)
        self.counts = counts
        self.totals = {h: sum(c.values()) for h, c in counts.items()}

    def prob(self, history: str, ch: str) -> float:
        h = history[-(self.order - 1):] if self.order > 1 else ""
        h = h.rjust(self.order - 1, BOS) if self.order > 1 else ""
        if ch not in self._vocab_set:
            ch = UNK
        row = self.counts.get(h)
        c = row.get(ch, 0) if row else 0
        return (c + self.k) / (self.totals.get(h, 0) + self.k * len(self.vocab))

    def distribution(self, history: str) -> dict[str, float]:
        return {ch: self.prob(history, ch) for ch in self.vocab}

    def score(self, context: str, target: str) -> float:
        if not target:
            return 0.0
        history = context + SEPARATOR if context else ""
        total = 0.0
        for ch in target:
            total -= math.log(self.prob(history, ch))
            history += ch
        return total / len(target)

    def to_json(self) -> dict:
        return {
            "format": "vsdstruct-ngram",
            "version": NGRAM_FORMAT_VERSION,
            "order": self.order,
            "k": self.k,
            "vocab": [v for v in self.vocab if v != UNK],
            "counts": {h: dict(sorted(row.items())) for h, row in sorted(self.counts.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> CharNGramModel:
        if obj.get("version") != NGRAM_FORMAT_VERSION:
            raise ValueError(f"unsupported n-gram model version {obj.get('version')!r}")
        return cls(obj["order"], obj["k"], obj["vocab"], {h: dict(r) for h, r in obj["counts"].items()})


def train_ngram(corpus: Iterable[str], order: int = 5, k: float = 0.1) -> CharNGramModel:
    """Count characters in each text, padding its start with BOS."""
    counts: dict[str, dict[str, int]] = defaultdict(dict)
    vocab: set[str] = set()
    n_texts = 0
    for text in corpus:
        n_texts += 1
        padded = BOS * (order - 1) + text
        for pos in range(order - 1, len(padded)):
            h = padded[pos - order + 1 : pos]
            ch = padded[pos]
            row = counts[h]
            row[ch] = row.get(ch, 0) + 1
            vocab.add(ch)
    if n_texts == 0 or not vocab:
        raise ValueError("empty corpus")
    return CharNGramModel(order, k, sorted(vocab), dict(counts))


class ExternalScorer:
    """Scores via a child process speaking one JSON object per line.

    Request ``{"context": ..., "target": ...}``, response ``{"nll": ...}``.
    Requests are serialized; the process is started on first use.
    """

    def __init__(self, command: str | Sequence[str], timeout: float = 30.0):
        self.command = command
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.argv,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                    bufsize=1,
                )
            except OSError as exc:
                raise ScorerError(f"cannot start scorer {self.argv!r}: {exc}") from exc
        return self._proc

    def score(self, context: str, target: str) -> float:
        with self._lock:
            proc = self._ensure()
            try:
                proc.stdin.write(json.dumps({"context": context, "target": target}) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (OSError, ValueError) as exc:
                raise ScorerError(f"scorer I/O failed: {exc}") from exc
        if not line:
            raise ScorerError("scorer closed its output")
        try:
            nll = float(json.loads(line)["nll"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ScorerError(f"bad scorer response {line!r}") from exc
        if not math.isfinite(nll) or nll < 0:
            raise ScorerError(f"scorer returned invalid nll {nll!r}")
        return nll

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=self.timeout)
            self._proc = None


def coherence_features(
    prev: TextBlock | None,
    cur: TextBlock | None,
    nxt: TextBlock | None,
    scorer: Scorer | None,
) -> tuple[float, float] | None:
    """Return (f1, f2), or None when a slot is empty or the scorer fails.

    f1 compares the current block against the next one as a continuation of
    the previous block; f2 asks whether the next block follows the current
    one better than it follows the previous one. Negative means more coherent.
    """
    if prev is None or cur is None or nxt is None or scorer is None:
        return None
    try:
        prev_next = scorer.score(prev.text, nxt.text)
        f1 = scorer.score(prev.text, cur.text) - prev_next
        f2 = scorer.score(cur.text, nxt.text) - prev_next
    except ScorerError:
        return None
    return f1, f2
