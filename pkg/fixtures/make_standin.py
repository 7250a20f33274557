"""Write the synthetic stand-in fixtures shipped in this directory.

The genuine study dataset and the catalog exports are not redistributable
from an offline build, so these files are seeded synthetic substitutes with
the same layout: realistic year ranges, trends and gaps, but no claim to
reproduce any published value. ``manifest.json`` marks them synthetic; the
acceptance suite refuses to treat them as the genuine data.

Run from the repository root:  python fixtures/make_standin.py
"""

import csv
import json
from pathlib import Path

import numpy as np

SEED = 20190415
HERE = Path(__file__).parent
YEARS = np.arange(1800, 2001)


def ar1(rng, n, phi, scale):
    e = rng.normal(scale=scale, size=n)
    u = np.empty(n)
    u[0] = e[0] / np.sqrt(1 - phi * phi)
    for t in range(1, n):
        u[t] = phi * u[t - 1] + e[t]
    return u


def study(rng):
    u = (YEARS - 1800) / 200.0
    n = len(YEARS)
    cols = {
        "tightness": 1.2 - 1.6 * u**1.2 + 0.15 * np.sin(2.5 * np.pi * u) + ar1(rng, n, 0.9, 0.02),
        "collectivism": 0.6 - 0.3 * u + 0.08 * np.cos(3 * np.pi * u) + ar1(rng, n, 0.8, 0.02),
        "wealth": np.exp(2.8 * u) + ar1(rng, n, 0.9, 0.05),
        "religiosity": 0.9 - 0.4 * u**2 + ar1(rng, n, 0.8, 0.03),
        "congress_laws": 200 + 600 * np.exp(-((u - 0.6) / 0.25) ** 2) + ar1(rng, n, 0.7, 40),
        "supreme_court_cases": 20 + 180 * u**1.5 + ar1(rng, n, 0.8, 8),
        "execution_rates": 1.0 + ar1(rng, n, 0.85, 0.2),
        "profanity": 0.1 + 3.0 * np.clip(u - 0.75, 0, None) ** 1.5 + ar1(rng, n, 0.6, 0.02),
        "patent_rates": 5 + 60 * u**2 + ar1(rng, n, 0.9, 2),
        "trademark_rates": 1 + 40 * u**3 + ar1(rng, n, 0.85, 1),
        "feature_films": 300 + 400 * np.sin(np.pi * u) + ar1(rng, n, 0.8, 40),
        "baby_naming_conformity": 0.5 - 0.3 * u + ar1(rng, n, 0.9, 0.02),
        "household_debt": 10 + 90 * u**4 + ar1(rng, n, 0.9, 2),
        "adolescent_pregnancy": 60 + 40 * np.sin(2 * np.pi * (u - 0.6)) + ar1(rng, n, 0.8, 3),
        "crimes": 100 + 300 * np.exp(-((u - 0.95) / 0.1) ** 2) + ar1(rng, n, 0.85, 15),
        "high_school_enrolment": 5 + 90 / (1 + np.exp(-(u - 0.6) / 0.08)) + ar1(rng, n, 0.7, 1),
    }
    ranges = {
        "religiosity": (1850, 2000),
        "profanity": (1950, 2000),
        "trademark_rates": (1870, 2000),
        "feature_films": (1910, 2000),
        "baby_naming_conformity": (1880, 2000),
        "household_debt": (1945, 2000),
        "adolescent_pregnancy": (1940, 2000),
        "crimes": (1930, 2000),
        "high_school_enrolment": (1870, 2000),
    }
    gaps = {"execution_rates": (1917, 1918)}
    order = ["year", *cols]
    with open(HERE / "study.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(order)
        for i, year in enumerate(YEARS):
            row = [int(year)]
            for name, values in cols.items():
                lo, hi = ranges.get(name, (1800, 2000))
                g = gaps.get(name)
                missing = not lo <= year <= hi or (g and g[0] <= year <= g[1])
                row.append("" if missing else f"{values[i]:.6g}")
            w.writerow(row)
    with open(HERE / "tightness.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["year", "tightness"])
        for year, v in zip(YEARS, cols["tightness"]):
            w.writerow([int(year), f"{v:.6g}"])


def logistic(u, centre, width):
    return 1.0 / (1.0 + np.exp(-(u - centre) / width))


def write_owid(name, column, rows):
    path = HERE / "owid" / f"{name}.csv"
    path.parent.mkdir(exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Entity", "Code", "Year", column])
        for entity, code, years, values in rows:
            for y, v in zip(years, values):
                w.writerow([entity, code, int(y), f"{v:.6g}"])


def catalog(rng):
    yrs = np.arange(1900, 2021)
    u = (yrs - 1900) / 120.0
    rows = []
    for ent, code, mid in [("Costa Rica", "CRI", 0.4), ("Chile", "CHL", 0.45),
                           ("Uruguay", "URY", 0.35), ("Panama", "PAN", 0.45)]:
        v = 35 + 45 * logistic(u, mid, 0.15) + ar1(rng, len(yrs), 0.8, 0.4)
        rows.append((ent, code, yrs, v))
    write_owid("life-expectancy", "Life expectancy (years)", rows)

    yrs = np.arange(1960, 2019)
    u = (yrs - 1960) / 58.0
    v = 1e6 * (1 + 80 * u**2.5) * np.exp(ar1(rng, len(yrs), 0.5, 0.03))
    write_owid("aquaculture-seafood-production", "Aquaculture production (tonnes)",
               [("World", "OWID_WRL", yrs, v)])

    yrs = np.arange(1800, 2021)
    rows = []
    for ent, code, rate in [("Uganda", "UGA", 0.025), ("Kenya", "KEN", 0.024), ("Rwanda", "RWA", 0.02)]:
        growth = np.where(yrs < 1900, 0.004, rate) + ar1(rng, len(yrs), 0.5, 0.002)
        rows.append((ent, code, yrs, 1e6 * np.exp(np.cumsum(growth))))
    write_owid("population", "Population", rows)

    yrs = np.arange(1961, 2009)
    u = (yrs - 1961) / 47.0
    v = 4e6 + 3e6 * np.sin(np.pi * u * 0.8) + ar1(rng, len(yrs), 0.8, 1e5)
    write_owid("tractors", "Agricultural tractors in use", [("OECD members", "", yrs, v)])

    yrs = np.arange(1961, 2019)
    u = (yrs - 1961) / 57.0
    v = 1.5e6 * np.exp(3.8 * u) * np.exp(ar1(rng, len(yrs), 0.6, 0.04))
    write_owid("palm-oil-production", "Palm oil production (tonnes)", [("World", "OWID_WRL", yrs, v)])

    yrs = np.arange(1961, 2019)
    rows = []
    for ent, code, k in [("India", "IND", 1.8), ("Pakistan", "PAK", 2.2)]:
        u = (yrs - 1961) / 57.0
        rows.append((ent, code, yrs, 1e8 * (1 + k * u) * np.exp(ar1(rng, len(yrs), 0.7, 0.03))))
    write_owid("slaughtered-livestock", "Livestock slaughtered for meat (head)", rows)

    yrs = np.arange(1960, 2018)
    u = (yrs - 1960) / 57.0
    rows = []
    for i in range(115):
        mid = rng.uniform(0.15, 0.75)
        peak = rng.uniform(5, 60)
        level = peak * logistic(u, mid, rng.uniform(0.05, 0.15))
        decline = np.where(u > 0.75, 1 - rng.uniform(0, 1.2) * (u - 0.75), 1.0)
        v = np.clip(level * decline + ar1(rng, len(yrs), 0.6, 0.2), 0.01, None)
        rows.append((f"Region {i + 1:03d}", f"R{i + 1:03d}", yrs, v))
    write_owid("fixed-landline-telephone-subscriptions", "Fixed telephone subscriptions (per 100)", rows)


def main():
    rng = np.random.default_rng(SEED)
    study(rng)
    catalog(rng)
    manifest = {
        "synthetic": True,
        "seed": SEED,
        "generator": "fixtures/make_standin.py",
        "note": (
            "Seeded synthetic stand-ins with the layout of the study dataset and of "
            "long-format catalog exports. Replace this directory (or point "
            "SPURCHECK_FIXTURES elsewhere) with genuine data and a manifest whose "
            "'synthetic' flag is false to run the data-dependent acceptance checks."
        ),
        "files": {
            "study": "study.csv",
            "tightness": "tightness.csv",
            "catalog": "owid",
        },
    }
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
