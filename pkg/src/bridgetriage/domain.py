"""Feature space, label space, and the closed-form compliance oracle.

All structural quantities are per unit width (1 m strip). The oracle is a
deterministic stand-in for a high-fidelity analysis pipeline: it maps bridge
parameters to three code-compliance factors (resistance / demand), where a
factor >= 1 means that verification passes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

HEADS = ("ms", "mc", "v")

CONCRETE_UNIT_WEIGHT = 25.0  # kN/m^3, self-weight of the deck
COVER_M = 0.05               # fixed reinforcement cover, d = t_d - COVER_M


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    unit: str
    lo: float
    hi: float
    description: str


@dataclass(frozen=True)
class FeatureSchema:
    """Closed box of valid inputs; order of `features` fixes array layout."""

    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(names) != len(set(names)):
            raise ValueError("duplicate feature names in schema")
        for f in self.features:
            if not f.lo < f.hi:
                raise ValueError(f"feature {f.name}: lo must be < hi")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @property
    def k(self) -> int:
        return len(self.features)

    def spec(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def lo_array(self) -> np.ndarray:
        return np.array([f.lo for f in self.features], dtype=float)

    def hi_array(self) -> np.ndarray:
        return np.array([f.hi for f in self.features], dtype=float)

    def to_json_dict(self) -> dict:
        return {
            "features": [
                {"name": f.name, "unit": f.unit, "lo": f.lo, "hi": f.hi,
                 "description": f.description}
                for f in self.features
            ]
        }

    @staticmethod
    def from_json_dict(d: dict) -> "FeatureSchema":
        return FeatureSchema(tuple(
            FeatureSpec(f["name"], f["unit"], float(f["lo"]), float(f["hi"]),
                        f["description"])
            for f in d["features"]
        ))


def default_schema() -> FeatureSchema:
    """Canonical feature box; ranges are fixed for reproducibility."""
    return FeatureSchema((
        FeatureSpec("span_m", "m", 2.0, 20.0, "clear span of the frame"),
        FeatureSpec("deck_thickness_m", "m", 0.2, 1.2, "deck slab thickness"),
        FeatureSpec("wall_thickness_m", "m", 0.2, 1.0, "abutment wall thickness"),
        FeatureSpec("clear_height_m", "m", 2.0, 8.0, "clear height under the deck"),
        FeatureSpec("width_m", "m", 3.0, 15.0, "deck width"),
        FeatureSpec("concrete_fc_mpa", "MPa", 20.0, 50.0, "concrete compressive strength"),
        FeatureSpec("steel_fy_mpa", "MPa", 390.0, 550.0, "reinforcement yield strength"),
        FeatureSpec("reinf_ratio_long", "-", 0.002, 0.02, "longitudinal reinforcement ratio"),
        FeatureSpec("reinf_ratio_shear", "-", 0.0, 0.008, "shear reinforcement ratio"),
        FeatureSpec("load_kn_m2", "kN/m2", 10.0, 60.0, "imposed surface load"),
    ))


@dataclass(frozen=True)
class BridgeParams:
    span_m: float
    deck_thickness_m: float
    wall_thickness_m: float
    clear_height_m: float
    width_m: float
    concrete_fc_mpa: float
    steel_fy_mpa: float
    reinf_ratio_long: float
    reinf_ratio_shear: float
    load_kn_m2: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    @staticmethod
    def from_array(x: Sequence[float]) -> "BridgeParams":
        vals = [float(v) for v in x]
        if len(vals) != 10:
            raise ValueError(f"expected 10 values, got {len(vals)}")
        return BridgeParams(*vals)

    @staticmethod
    def from_dict(d: dict) -> "BridgeParams":
        names = [f.name for f in fields(BridgeParams)]
        missing = [n for n in names if n not in d]
        if missing:
            raise ValueError(f"missing features: {', '.join(missing)}")
        unknown = [n for n in d if n not in names]
        if unknown:
            raise ValueError(f"unknown features: {', '.join(unknown)}")
        return BridgeParams(**{n: float(d[n]) for n in names})


@dataclass(frozen=True)
class ComplianceFactors:
    """Resistance-to-demand ratios: bending steel, bending concrete, shear."""

    eta_ms: float
    eta_mc: float
    eta_v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.eta_ms, self.eta_mc, self.eta_v], dtype=float)

    @property
    def eta_min(self) -> float:
        return min(self.eta_ms, self.eta_mc, self.eta_v)


@dataclass(frozen=True)
class Violation:
    feature: str
    value: float
    lo: float
    hi: float

    def __str__(self) -> str:
        side = "below lo" if self.value < self.lo else "above hi"
        return (f"{self.feature}={self.value!r} {side} "
                f"(allowed [{self.lo!r}, {self.hi!r}])")


def validate_params(p: BridgeParams, schema: FeatureSchema | None = None) -> list[Violation]:
    """Check every field against its closed range; empty list means ok."""
    schema = schema or default_schema()
    x = p.as_array()
    out = []
    for spec, v in zip(schema.features, x):
        if not (spec.lo <= v <= spec.hi):
            out.append(Violation(spec.name, float(v), spec.lo, spec.hi))
    return out


def oracle_evaluate(p: BridgeParams) -> ComplianceFactors:
    """Closed-form demand/resistance evaluation per unit width.

    Bending demand uses a frame-corner correction growing with wall stiffness
    relative to the deck; shear resistance switches between the concrete and
    stirrup mechanisms (max of the two), which makes eta_v non-smooth in the
    shear reinforcement ratio.
    """
    eta = _oracle_batch(p.as_array()[None, :])[0]
    return ComplianceFactors(float(eta[0]), float(eta[1]), float(eta[2]))


def _oracle_batch(x: np.ndarray) -> np.ndarray:
    """Vectorized oracle: x of shape (n, 10) -> eta of shape (n, 3)."""
    L, t_d, t_w, h, _b, f_c, f_y, rl, rv, q = (x[:, i] for i in range(10))
    q_tot = q + CONCRETE_UNIT_WEIGHT * t_d
    d = t_d - COVER_M
    assert np.all(d > 0), "effective depth must be positive"
    m_e = q_tot * L**2 / 10.0 * (1.0 + 0.5 * (t_w * h) / (t_d * L))
    m_rs = rl * 1000.0 * f_y * d**2 * (1.0 - 0.59 * rl * f_y / f_c)
    m_rc = 0.35 * 1000.0 * f_c * d**2
    v_e = q_tot * L / 2.0 * (1.0 + 0.3 * h / L)
    v_rc = 300.0 * np.sqrt(f_c) * d
    v_rs = rv * 1000.0 * f_y * 0.9 * d * 2.5
    v_r = np.maximum(v_rc, v_rs)
    return np.stack([m_rs / m_e, m_rc / m_e, v_r / v_e], axis=1)


@dataclass(frozen=True)
class Dataset:
    """Labeled rows: x holds parameters (n, 10), y the factors (n, 3)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape[1] != 10:
            raise ValueError("x must have shape (n, 10)")
        if self.y.shape != (self.x.shape[0], 3):
            raise ValueError("y must have shape (n, 3)")

    def __len__(self) -> int:
        return self.x.shape[0]

    def params(self, i: int) -> BridgeParams:
        return BridgeParams.from_array(self.x[i])

    def factors(self, i: int) -> ComplianceFactors:
        return ComplianceFactors(*(float(v) for v in self.y[i]))

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx])


def generate_dataset(schema: FeatureSchema, samples: Iterable[BridgeParams]) -> Dataset:
    """Label every sample with the oracle; row order preserved."""
    rows = list(samples)
    for i, p in enumerate(rows):
        violations = validate_params(p, schema)
        if violations:
            msgs = "; ".join(str(v) for v in violations)
            raise ValueError(f"row {i}: {msgs}")
    if not rows:
        return Dataset(np.empty((0, 10)), np.empty((0, 3)))
    x = np.stack([p.as_array() for p in rows])
    return Dataset(x, _oracle_batch(x))


CSV_HEADER = ("span_m,deck_thickness_m,wall_thickness_m,clear_height_m,width_m,"
              "concrete_fc_mpa,steel_fy_mpa,reinf_ratio_long,reinf_ratio_shear,"
              "load_kn_m2,eta_ms,eta_mc,eta_v")


def dataset_to_csv(ds: Dataset) -> str:
    """UTF-8 CSV with LF line endings; floats keep full round-trip precision."""
    lines = [CSV_HEADER]
    for i in range(len(ds)):
        vals = [repr(float(v)) for v in ds.x[i]] + [repr(float(v)) for v in ds.y[i]]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def dataset_from_csv(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV") from None
    if [c.strip() for c in header] != CSV_HEADER.split(","):
        raise ValueError(f"unexpected CSV header: {','.join(header)!r}")
    xs, ys = [], []
    for row in reader:
        if not row:
            continue
        if len(row) != 13:
            raise ValueError(f"expected 13 columns, got {len(row)}")
        vals = [float(v) for v in row]
        xs.append(vals[:10])
        ys.append(vals[10:])
    if not xs:
        return Dataset(np.empty((0, 10)), np.empty((0, 3)))
    return Dataset(np.array(xs), np.array(ys))


def write_dataset(path, ds: Dataset) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dataset_to_csv(ds))


def read_dataset(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return dataset_from_csv(fh.read())
