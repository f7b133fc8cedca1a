"""Purity F1 and B-Cubed F1 for comparing a clustering with a gold labeling."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Hashable, Mapping

from .errors import ValidationError


def _harmonic(p: float, r: float) -> float:
    return 0.0 if p == 0 or r == 0 else 2 * p * r / (p + r)


def _contingency(pred: Mapping, gold: Mapping) -> tuple[Counter, Counter, Counter, int]:
    if pred.keys() != gold.keys():
        only_pred = sorted(map(str, pred.keys() - gold.keys()))
        only_gold = sorted(map(str, gold.keys() - pred.keys()))
        raise ValidationError(
            "prediction and gold cover different instances; "
            f"only in prediction: {only_pred[:10]}{' ...' if len(only_pred) > 10 else ''}; "
            f"only in gold: {only_gold[:10]}{' ...' if len(only_gold) > 10 else ''}")
    if not pred:
        raise ValidationError("cannot score an empty instance set")
    cells = Counter((pred[i], gold[i]) for i in pred)
    return cells, Counter(pred.values()), Counter(gold.values()), len(pred)


def purity_f1(pred: Mapping[Hashable, Hashable], gold: Mapping[Hashable, Hashable]) -> tuple[float, float, float]:
    """Return (purity, inverse purity, their harmonic mean)."""
    cells, _, _, n = _contingency(pred, gold)
    best_gold: dict = {}
    best_pred: dict = {}
    for (c, g), count in cells.items():
        best_gold[c] = max(best_gold.get(c, 0), count)
        best_pred[g] = max(best_pred.get(g, 0), count)
    purity = sum(best_gold.values()) / n
    inverse = sum(best_pred.values()) / n
    return purity, inverse, _harmonic(purity, inverse)


def bcubed_f1(pred: Mapping[Hashable, Hashable], gold: Mapping[Hashable, Hashable]) -> tuple[float, float, float]:
    """Return item-averaged (precision, recall, F1).

    Every instance in a (cluster, class) cell of size m has precision
    m / |cluster| and recall m / |class|.
    """
    cells, cluster_size, class_size, n = _contingency(pred, gold)
    precision = sum(m * m / cluster_size[c] for (c, _), m in cells.items()) / n
    recall = sum(m * m / class_size[g] for (_, g), m in cells.items()) / n
    return precision, recall, _harmonic(precision, recall)


@dataclass(frozen=True)
class ScoreReport:
    purity: float
    inverse_purity: float
    purity_f1: float
    bcubed_precision: float
    bcubed_recall: float
    bcubed_f1: float
    n: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    def table(self) -> str:
        rows = [(k, f"{v:.4f}" if isinstance(v, float) else str(v)) for k, v in asdict(self).items()]
        width = max(len(k) for k, _ in rows)
        return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


def evaluate(pred: Mapping, gold: Mapping) -> ScoreReport:
    pu, ipu, pf = purity_f1(pred, gold)
    bp, br, bf = bcubed_f1(pred, gold)
    return ScoreReport(pu, ipu, pf, bp, br, bf, len(pred))
