"""Catalog of screening interventions and their probabilistic consequences.

Each intervention is described by its test accuracy (sensitivity/specificity),
unit cost in euros, an ordinal comfort level and a distribution over
procedure complications.  The default catalog carries the French cost and
accuracy figures for the six common CRC screening methods plus colonoscopy
and the no-screening option.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

PRED_TRUE = "PredictedTrue"
PRED_FALSE = "PredictedFalse"
NO_RESULT = "NoResult"
RESULT_STATES = (PRED_TRUE, PRED_FALSE, NO_RESULT)

NO_SCREENING = "NoScreening"
COLONOSCOPY = "Colonoscopy"

#: Catalog ids in canonical order (screening tests first, then colonoscopy).
STANDARD_IDS = ("gFOBT", "FIT", "BloodBased", "sDNA", "CTC", "CC",
                COLONOSCOPY, NO_SCREENING)

COMPLICATION_KINDS = ("None", "Bleeding", "Retention", "Perforation", "Other/Death")

_PROB_TOL = 1e-9


class CatalogError(ValueError):
    """Invalid intervention specification or catalog."""


@dataclass(frozen=True)
class Complication:
    kind: str
    probability: float
    cost: float

    def validate(self, owner: str) -> None:
        if self.kind not in COMPLICATION_KINDS:
            raise CatalogError(f"{owner}: unknown complication kind {self.kind!r}")
        if not 0.0 <= self.probability <= 1.0:
            raise CatalogError(f"{owner}: complication probability out of [0,1]")
        if self.cost < 0:
            raise CatalogError(f"{owner}: negative complication cost")


@dataclass(frozen=True)
class InterventionSpec:
    """One screening method, colonoscopy, or the no-screening option."""

    id: str
    sensitivity: float
    specificity: float
    unit_cost: float
    comfort: int
    complications: tuple[Complication, ...] = (Complication("None", 1.0, 0.0),)

    def __post_init__(self) -> None:
        if not 0.0 <= self.sensitivity <= 1.0:
            raise CatalogError(f"{self.id}: sensitivity out of [0,1]")
        if not 0.0 <= self.specificity <= 1.0:
            raise CatalogError(f"{self.id}: specificity out of [0,1]")
        if self.unit_cost < 0:
            raise CatalogError(f"{self.id}: negative unit cost")
        if self.comfort not in (1, 2, 3, 4):
            raise CatalogError(f"{self.id}: comfort level must be 1..4")
        for c in self.complications:
            c.validate(self.id)
        total = sum(c.probability for c in self.complications)
        if abs(total - 1.0) > _PROB_TOL:
            raise CatalogError(f"{self.id}: complication probabilities sum to {total}")

    @property
    def is_test(self) -> bool:
        return self.id != NO_SCREENING

    def expected_complication_cost(self) -> float:
        return sum(c.probability * c.cost for c in self.complications)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "unitCost": self.unit_cost,
            "comfort": self.comfort,
            "complications": [
                {"kind": c.kind, "probability": c.probability, "cost": c.cost}
                for c in self.complications
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "InterventionSpec":
        try:
            comps = tuple(
                Complication(c["kind"], float(c["probability"]), float(c["cost"]))
                for c in raw.get("complications", [{"kind": "None", "probability": 1.0, "cost": 0.0}])
            )
            return cls(
                id=str(raw["id"]),
                sensitivity=float(raw["sensitivity"]),
                specificity=float(raw["specificity"]),
                unit_cost=float(raw["unitCost"]),
                comfort=int(raw["comfort"]),
                complications=comps,
            )
        except (KeyError, TypeError) as exc:
            raise CatalogError(f"malformed intervention record: {exc}") from exc


@dataclass
class InterventionCatalog:
    """Immutable-by-convention lookup of intervention specs, extendable with new devices."""

    specs: dict[str, InterventionSpec] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, spec in self.specs.items():
            if key != spec.id:
                raise CatalogError(f"catalog key {key!r} does not match spec id {spec.id!r}")

    def __getitem__(self, intervention_id: str) -> InterventionSpec:
        try:
            return self.specs[intervention_id]
        except KeyError:
            raise CatalogError(f"unknown intervention {intervention_id!r}") from None

    def __contains__(self, intervention_id: str) -> bool:
        return intervention_id in self.specs

    @property
    def tests(self) -> list[InterventionSpec]:
        """The screening tests: everything except no-screening and colonoscopy."""
        return [s for s in self.specs.values() if s.id not in (NO_SCREENING, COLONOSCOPY)]

    @property
    def colonoscopy(self) -> InterventionSpec:
        return self[COLONOSCOPY]

    def with_device(self, spec: InterventionSpec) -> "InterventionCatalog":
        """Catalog extended with a new device; rejects id collisions."""
        if spec.id in self.specs:
            raise CatalogError(f"intervention id {spec.id!r} already present")
        merged = dict(self.specs)
        merged[spec.id] = spec
        return InterventionCatalog(merged)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps([self.specs[i].to_dict() for i in self.specs], indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "InterventionCatalog":
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("[")):
            text = Path(source).read_text()
        else:
            text = str(source)
        try:
            records = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"catalog file does not parse: {exc}") from exc
        specs = {}
        for raw in records:
            spec = InterventionSpec.from_dict(raw)
            if spec.id in specs:
                raise CatalogError(f"duplicate intervention {spec.id!r}")
            specs[spec.id] = spec
        return cls(specs)


def result_distribution(spec: InterventionSpec, performed: bool, crc: bool) -> dict[str, float]:
    """Distribution of the test/colonoscopy report given CRC status.

    Not performed gives a point mass on NoResult; performed splits between
    the true/false predictions via sensitivity (diseased) or specificity
    (healthy).
    """
    if not performed:
        return {PRED_TRUE: 0.0, PRED_FALSE: 0.0, NO_RESULT: 1.0}
    if not spec.is_test:
        raise CatalogError("no-screening cannot be performed as a test")
    if crc:
        return {PRED_TRUE: spec.sensitivity, PRED_FALSE: 1.0 - spec.sensitivity, NO_RESULT: 0.0}
    return {PRED_TRUE: 1.0 - spec.specificity, PRED_FALSE: spec.specificity, NO_RESULT: 0.0}


def complication_distribution(spec: InterventionSpec) -> tuple[Complication, ...]:
    """The spec's complication outcomes; stool/blood tests carry (None, 0)."""
    return spec.complications


def combined_comfort(screen: InterventionSpec | None, colonoscopy_performed: bool) -> int:
    """Realized comfort of a path: colonoscopy's level 1 overrides the test's own."""
    if colonoscopy_performed:
        return 1
    if screen is None:
        return 4
    return screen.comfort


def default_catalog() -> InterventionCatalog:
    """The eight standard interventions with the published accuracy/cost figures."""
    none = (Complication("None", 1.0, 0.0),)
    specs = {
        "gFOBT": InterventionSpec("gFOBT", 0.45, 0.978, 12.14, 3, none),
        "FIT": InterventionSpec("FIT", 0.75, 0.966, 14.34, 3, none),
        "BloodBased": InterventionSpec("BloodBased", 0.66, 0.91, 123.13, 3, none),
        "sDNA": InterventionSpec("sDNA", 0.923, 0.866, 236.88, 3, none),
        "CTC": InterventionSpec(
            "CTC", 0.8, 0.89, 95.41, 2,
            (Complication("None", 0.9996, 0.0), Complication("Perforation", 0.0004, 2810.0)),
        ),
        "CC": InterventionSpec(
            "CC", 0.87, 0.92, 510.24, 2,
            (Complication("None", 0.9997, 0.0), Complication("Retention", 0.0003, 1241.0)),
        ),
        COLONOSCOPY: InterventionSpec(
            COLONOSCOPY, 0.97, 0.99, 1000.0, 1,
            (
                Complication("None", 0.998, 0.0),
                Complication("Bleeding", 0.0006, 1241.0),
                Complication("Perforation", 0.001, 2810.0),
                Complication("Other/Death", 0.0004, 6621.0),
            ),
        ),
        NO_SCREENING: InterventionSpec(NO_SCREENING, 0.0, 1.0, 0.0, 4, none),
    }
    return InterventionCatalog(specs)


__all__ = [
    "PRED_TRUE", "PRED_FALSE", "NO_RESULT", "RESULT_STATES",
    "NO_SCREENING", "COLONOSCOPY", "STANDARD_IDS",
    "CatalogError", "Complication", "InterventionSpec", "InterventionCatalog",
    "result_distribution", "complication_distribution", "combined_comfort",
    "default_catalog",
]
