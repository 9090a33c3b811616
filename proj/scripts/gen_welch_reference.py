#!/usr/bin/env python3
"""Generates tests/data/welch_reference.json: 50 random sample pairs with
Welch t-test results from scipy, frozen as the reference for the C++
implementation. Rerun only if the reference set itself needs to change."""

import json
import pathlib

import numpy as np
from scipy import stats

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "welch_reference.json"


def main() -> None:
    rng = np.random.default_rng(20260823)
    cases = []
    for i in range(50):
        na = int(rng.integers(5, 200))
        nb = int(rng.integers(5, 200))
        loc_a = float(rng.uniform(-2, 2))
        loc_b = loc_a + float(rng.uniform(-1, 1))
        scale_a = float(rng.uniform(0.1, 3))
        scale_b = float(rng.uniform(0.1, 3))
        a = rng.normal(loc_a, scale_a, na)
        b = rng.normal(loc_b, scale_b, nb)
        res = stats.ttest_ind(a, b, equal_var=False)
        cases.append(
            {
                "a": [float(v) for v in a],
                "b": [float(v) for v in b],
                "t": float(res.statistic),
                "p": float(res.pvalue),
                "df": float(res.df),
            }
        )
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(cases) + "\n")
    print(f"wrote {len(cases)} cases to {OUT}")

    hand = stats.ttest_ind([1, 2, 3, 4, 5], [2, 3, 4, 5, 6], equal_var=False)
    print(f"hand case: t={hand.statistic!r} p={hand.pvalue!r} df={hand.df!r}")


if __name__ == "__main__":
    main()
