"""Three-class decision policy over calibrated predictive distributions.

Per head: red when the predicted mean is at or below the compliance
threshold, orange when the mean clears it but the mu - 2*kappa*sigma lower
bound does not, green otherwise. A structure takes the worst of its head
classes; ties on the worst class resolve to shear first, then bending
concrete, then bending steel.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .bnn.model import BnnModel, PredictiveDistribution, predict_batch
from .domain import (
    CSV_HEADER,
    HEADS,
    BridgeParams,
    FeatureSchema,
    default_schema,
    validate_params,
)

CLASS_SEVERITY = {"red": 2, "orange": 1, "green": 0}
GOVERNING_TIE_ORDER = ("v", "mc", "ms")
NEAR_BOUNDARY_MAX = 1.1


def classify_head(mu: float, sigma: float, kappa: float = 1.0) -> str:
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if mu <= 1.0:
        return "red"
    if mu - 2.0 * kappa * sigma < 1.0:
        return "orange"
    return "green"


@dataclass(frozen=True)
class HeadAssessment:
    head: str
    mu: float
    sigma_scaled: float
    lower_bound: float
    klass: str
    near_boundary: bool

    def to_json_dict(self) -> dict:
        return {"mu": self.mu, "sigma_scaled": self.sigma_scaled,
                "lower_bound": self.lower_bound, "class": self.klass,
                "near_boundary": self.near_boundary}


@dataclass(frozen=True)
class TriageResult:
    klass: str
    governing_head: str
    per_head: dict[str, HeadAssessment]
    margin: float

    def to_json_dict(self) -> dict:
        return {
            "class": self.klass,
            "governing_head": self.governing_head,
            "margin": self.margin,
            "heads": {h: a.to_json_dict() for h, a in self.per_head.items()},
        }


def triage(preds: dict[str, PredictiveDistribution],
           kappas: dict[str, float] | None = None) -> TriageResult:
    """Combine the three head predictions into one structure-level class."""
    missing = [h for h in HEADS if h not in preds]
    if missing:
        raise ValueError(f"missing heads: {', '.join(missing)}")
    per_head = {}
    for h in HEADS:
        p = preds[h]
        kappa = kappas[h] if kappas is not None else p.kappa
        klass = classify_head(p.mu, p.sigma, kappa)
        ks = kappa * p.sigma
        per_head[h] = HeadAssessment(
            head=h, mu=p.mu, sigma_scaled=ks, lower_bound=p.mu - 2.0 * ks,
            klass=klass, near_boundary=bool(1.0 < p.mu <= NEAR_BOUNDARY_MAX))
    worst = max(CLASS_SEVERITY[a.klass] for a in per_head.values())
    governing = next(h for h in GOVERNING_TIE_ORDER
                     if CLASS_SEVERITY[per_head[h].klass] == worst)
    return TriageResult(klass=per_head[governing].klass, governing_head=governing,
                        per_head=per_head,
                        margin=per_head[governing].lower_bound - 1.0)


@dataclass(frozen=True)
class BatchRow:
    row: int
    result: TriageResult | None
    error: str | None


def batch_triage(params: list[BridgeParams], models: dict[str, BnnModel],
                 schema: FeatureSchema | None = None, n_passes: int = 1000,
                 seed: int = 0) -> tuple[list[BatchRow], dict[str, int]]:
    """Triage every row; invalid rows are reported, not fatal.

    Row order is preserved. Predictions for all valid rows share one batched
    Monte Carlo evaluation per head, which matches per-row `predict` exactly.
    """
    schema = schema or default_schema()
    errors: dict[int, str] = {}
    valid_idx = []
    for i, p in enumerate(params):
        violations = validate_params(p, schema)
        if violations:
            errors[i] = "; ".join(str(v) for v in violations)
        else:
            valid_idx.append(i)

    results: dict[int, TriageResult] = {}
    if valid_idx:
        x = np.stack([params[i].as_array() for i in valid_idx])
        per_head_stats = {}
        for h in HEADS:
            mu, sig = predict_batch(models[h], x, n_passes=n_passes, seed=seed)
            per_head_stats[h] = (mu, sig)
        for j, i in enumerate(valid_idx):
            preds = {}
            for h in HEADS:
                mu, sig = per_head_stats[h]
                kappa = models[h].kappa
                preds[h] = PredictiveDistribution(
                    head=h, mu=float(mu[j]), sigma=float(sig[j]),
                    sigma_scaled=float(kappa * sig[j]), kappa=kappa,
                    n_passes=n_passes)
            results[i] = triage(preds)

    rows = [BatchRow(i, results.get(i), errors.get(i)) for i in range(len(params))]
    counts = {"n_red": 0, "n_orange": 0, "n_green": 0}
    for r in rows:
        if r.result is not None:
            counts["n_" + r.result.klass] += 1
    return rows, counts


BATCH_CSV_HEADER = ("row,klass,governing_head,mu_ms,sig_ms,mu_mc,sig_mc,"
                    "mu_v,sig_v,margin,errors")


def parse_portfolio_csv(text: str, schema: FeatureSchema | None = None) -> list[dict]:
    """Feature rows from a CSV whose header is the feature columns; the label
    columns may be present and are ignored. Unparseable cells become NaN so
    the row is flagged during validation instead of aborting the batch."""
    schema = schema or default_schema()
    reader = csv.reader(io.StringIO(text))
    try:
        header = [c.strip() for c in next(reader)]
    except StopIteration:
        raise ValueError("empty body") from None
    feature_cols = list(schema.names)
    label_cols = CSV_HEADER.split(",")[10:]
    if header != feature_cols and header != feature_cols + label_cols:
        raise ValueError("header must be the feature columns, labels optional")
    rows = []
    for line in reader:
        if not line:
            continue
        row = {}
        for name, cell in zip(header[:10], line[:10]):
            try:
                row[name] = float(cell)
            except ValueError:
                row[name] = float("nan")
        rows.append(row)
    return rows


def batch_to_csv(rows: list[BatchRow]) -> str:
    """CSV rendering; sig columns carry the kappa-scaled stddev."""
    lines = [BATCH_CSV_HEADER]
    for r in rows:
        if r.result is None:
            lines.append(f"{r.row},,,,,,,,,,\"{r.error}\"")
            continue
        t = r.result
        vals = []
        for h in HEADS:
            a = t.per_head[h]
            vals.extend([repr(a.mu), repr(a.sigma_scaled)])
        lines.append(",".join([str(r.row), t.klass, t.governing_head,
                               *vals, repr(t.margin), ""]))
    return "\n".join(lines) + "\n"
