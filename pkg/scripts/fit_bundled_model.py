"""Construct the bundled 14-node example network.

The CRC table is a capped multiplicative-risk model over the target's
parents (age, sex, bmi, diabetes, hypertension, hypercholesterolemia).
Four free constants are solved in closed form so that the model reproduces
the posteriors the engine's documentation quotes for its reference
profiles:

    benchmark profile                      -> 0.00085
    benchmark + diabetes + hypertension    -> 0.0039
    54-64 profile (cholesterol unknown)    -> 0.0022
    44-54 risky-lifestyle profile          -> 0.0018

Run from the repo root:  python3 scripts/fit_bundled_model.py
Writes src/crcscreen/models/crc14.json and prints verification posteriors.
"""

from __future__ import annotations

import itertools
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from crcscreen.bn import PatientEvidence, load_network, posterior_crc  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "src" / "crcscreen" / "models" / "crc14.json"

SEX = ["male", "female"]
AGE = ["under_44", "44_54", "54_64", "over_64"]
SES = ["low", "medium", "high"]
YN = ["no", "yes"]
SLEEP = ["normal", "short", "long"]
PA = ["active", "inactive"]
ALCOHOL = ["low", "moderate", "high"]
SMOKING = ["non_smoker", "ex_smoker", "smoker"]
BMI = ["normal", "overweight", "obese"]
CRC = ["present", "absent"]

# Condition CPT entries that the CRC fit depends on (kept explicit).
P_CHOL = {  # (age, smoking) -> P(yes)
    ("under_44", "non_smoker"): 0.06, ("under_44", "ex_smoker"): 0.09, ("under_44", "smoker"): 0.11,
    ("44_54", "non_smoker"): 0.14, ("44_54", "ex_smoker"): 0.22, ("44_54", "smoker"): 0.26,
    ("54_64", "non_smoker"): 0.25, ("54_64", "ex_smoker"): 0.33, ("54_64", "smoker"): 0.38,
    ("over_64", "non_smoker"): 0.34, ("over_64", "ex_smoker"): 0.42, ("over_64", "smoker"): 0.47,
}
P_DIABETES = {  # (age, bmi, pa) -> P(yes)
    "age": {"under_44": 0.5, "44_54": 1.0, "54_64": 1.7, "over_64": 2.4},
    "bmi": {"normal": 1.0, "overweight": 1.8, "obese": 3.0},
    "pa": {"active": 1.0, "inactive": 1.4},
    "base": 0.05,
}
P_HYPERTENSION = {  # (age, bmi, alcohol) -> P(yes)
    "age": {"under_44": 0.45, "44_54": 1.0, "54_64": 1.7, "over_64": 2.3},
    "bmi": {"normal": 1.0, "overweight": 1.5, "obese": 2.1},
    "alcohol": {"low": 1.0, "moderate": 1.2, "high": 1.55},
    "base": 0.12,
}

# CRC multiplicative risk model: fixed relative-risk factors ...
CRC_SEX = {"male": 1.0, "female": 0.62}
CRC_BMI_OBESE = 1.62
CRC_DIABETES = 2.4
CRC_CHOL = 1.6
CRC_BASE_UNDER44 = 0.00030
CRC_BASE_OVER64 = 0.0042

# ... and the published posteriors the free constants must reproduce.
TARGET_BENCHMARK = 0.00085          # 44_54 male, all parents at baseline
TARGET_DIAB_HYP = 0.0039            # benchmark + diabetes + hypertension
TARGET_5464 = 0.0022                # 54_64 profile, cholesterol marginalized
TARGET_RISKY = 0.0018               # 44_54 overweight/inactive/high-alcohol/ex-smoker


def p_diabetes(age: str, bmi: str, pa: str) -> float:
    d = P_DIABETES
    return min(0.95, d["base"] * d["age"][age] * d["bmi"][bmi] * d["pa"][pa])


def p_hypertension(age: str, bmi: str, alcohol: str) -> float:
    d = P_HYPERTENSION
    return min(0.95, d["base"] * d["age"][age] * d["bmi"][bmi] * d["alcohol"][alcohol])


def solve_crc_constants() -> dict:
    base_44 = TARGET_BENCHMARK
    # benchmark + both conditions pins diabetes_rr * hypertension_rr.
    rr_hyp = TARGET_DIAB_HYP / (base_44 * CRC_DIABETES)
    # 54-64 case marginalizes cholesterol: base_5464 * (1 + (rr_chol-1) q) = target.
    q_chol = P_CHOL[("54_64", "non_smoker")]
    base_5464 = TARGET_5464 / (1.0 + (CRC_CHOL - 1.0) * q_chol)
    # risky-lifestyle case marginalizes all three conditions; solve the
    # overweight relative risk from the product of condition expectations.
    qd = p_diabetes("44_54", "overweight", "inactive")
    qh = p_hypertension("44_54", "overweight", "high")
    qc = P_CHOL[("44_54", "ex_smoker")]
    e_d = 1.0 + (CRC_DIABETES - 1.0) * qd
    e_h = 1.0 + (rr_hyp - 1.0) * qh
    e_c = 1.0 + (CRC_CHOL - 1.0) * qc
    rr_overweight = TARGET_RISKY / (base_44 * e_d * e_h * e_c)
    return {
        "base": {"under_44": CRC_BASE_UNDER44, "44_54": base_44,
                 "54_64": base_5464, "over_64": CRC_BASE_OVER64},
        "rr_hypertension": rr_hyp,
        "rr_bmi": {"normal": 1.0, "overweight": rr_overweight, "obese": CRC_BMI_OBESE},
    }


def crc_probability(consts: dict, age: str, sex: str, bmi: str,
                    diab: str, hyp: str, chol: str) -> float:
    p = consts["base"][age] * CRC_SEX[sex] * consts["rr_bmi"][bmi]
    if diab == "yes":
        p *= CRC_DIABETES
    if hyp == "yes":
        p *= consts["rr_hypertension"]
    if chol == "yes":
        p *= CRC_CHOL
    return min(0.95, p)


def binary_cpt(p_yes_by_combo: list[float]) -> list[float]:
    out = []
    for p in p_yes_by_combo:
        out.extend([1.0 - p, p])  # states (no, yes)
    return out


def build_model() -> dict:
    consts = solve_crc_constants()
    variables = []

    def add(name, states, parents, cpt):
        variables.append({"name": name, "states": states, "parents": parents, "cpt": cpt})

    add("sex", SEX, [], [0.52, 0.48])
    add("age", AGE, [], [0.40, 0.26, 0.21, 0.13])
    add("ses", SES, [], [0.30, 0.50, 0.20])
    add("anxiety", YN, ["ses"], binary_cpt([0.22, 0.15, 0.11]))
    add("depression", YN, ["anxiety"], binary_cpt([0.06, 0.38]))
    add("sleep", SLEEP, ["anxiety"],
        [0.74, 0.18, 0.08,   # anxiety = no
         0.48, 0.42, 0.10])  # anxiety = yes
    add("physical_activity", PA, ["ses"], binary_cpt([0.52, 0.42, 0.30]))
    add("alcohol", ALCOHOL, ["sex"],
        [0.58, 0.30, 0.12,   # male
         0.72, 0.22, 0.06])  # female
    add("smoking", SMOKING, ["ses", "sex"],
        [0.52, 0.20, 0.28,  0.62, 0.18, 0.20,    # ses=low: male, female
         0.58, 0.22, 0.20,  0.68, 0.18, 0.14,    # ses=medium
         0.66, 0.22, 0.12,  0.74, 0.18, 0.08])   # ses=high
    add("bmi", BMI, ["physical_activity", "age"],
        [  # active
         0.62, 0.28, 0.10, 0.55, 0.32, 0.13, 0.50, 0.35, 0.15, 0.48, 0.36, 0.16,
           # inactive
         0.48, 0.34, 0.18, 0.40, 0.38, 0.22, 0.36, 0.39, 0.25, 0.34, 0.40, 0.26])

    combos = list(itertools.product(AGE, SMOKING))
    add("hypercholesterolemia", YN, ["age", "smoking"],
        binary_cpt([P_CHOL[c] for c in combos]))
    combos = list(itertools.product(AGE, BMI, PA))
    add("diabetes", YN, ["age", "bmi", "physical_activity"],
        binary_cpt([p_diabetes(*c) for c in combos]))
    combos = list(itertools.product(AGE, BMI, ALCOHOL))
    add("hypertension", YN, ["age", "bmi", "alcohol"],
        binary_cpt([p_hypertension(*c) for c in combos]))

    crc_parents = ["age", "sex", "bmi", "diabetes", "hypertension", "hypercholesterolemia"]
    cpt = []
    for age, sex, bmi, d, h, c in itertools.product(AGE, SEX, BMI, YN, YN, YN):
        p = crc_probability(consts, age, sex, bmi, d, h, c)
        cpt.extend([p, 1.0 - p])  # states (present, absent)
    add("CRC", CRC, crc_parents, cpt)

    return {"target": "CRC", "variables": variables}


def verify(doc: dict) -> None:
    net = load_network(doc)
    benchmark = {
        "sex": "male", "age": "44_54", "sleep": "normal",
        "physical_activity": "active", "bmi": "normal", "smoking": "non_smoker",
        "alcohol": "low", "diabetes": "no", "hypertension": "no",
        "hypercholesterolemia": "no",
    }
    cases = {
        "benchmark": (benchmark, TARGET_BENCHMARK),
        "diab+hyp": ({**benchmark, "diabetes": "yes", "hypertension": "yes"}, TARGET_DIAB_HYP),
        "54_64": ({k: v for k, v in {**benchmark, "age": "54_64"}.items()
                   if k != "hypercholesterolemia"}, TARGET_5464),
        "risky": ({k: v for k, v in {**benchmark, "bmi": "overweight", "alcohol": "high",
                                     "physical_activity": "inactive",
                                     "smoking": "ex_smoker"}.items()
                   if k not in ("diabetes", "hypertension", "hypercholesterolemia")},
                  TARGET_RISKY),
    }
    for label, (ev, want) in cases.items():
        got = posterior_crc(net, PatientEvidence(ev))
        status = "ok" if abs(got - want) < 5e-7 else "MISMATCH"
        print(f"  {label:10s} p(CRC)={got:.8f} target={want}  [{status}]")
    marginal = posterior_crc(net, PatientEvidence())
    print(f"  marginal   p(CRC)={marginal:.8f}")


def main() -> None:
    doc = build_model()
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1))
    print(f"wrote {OUT}")
    verify(doc)


if __name__ == "__main__":
    main()
