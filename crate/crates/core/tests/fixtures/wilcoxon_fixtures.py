"""Regenerates wilcoxon.txt with scipy.stats.wilcoxon.

Each case is four lines: `case <name> <method>`, `x ...`, `y ...` and
`expect <w_plus> <two-sided p>`.
"""
import numpy as np
from scipy.stats import wilcoxon

rng = np.random.default_rng(20240611)


def case(name, x, y, method):
    x = np.round(np.asarray(x, dtype=float), 6)
    y = np.round(np.asarray(y, dtype=float), 6)
    two = wilcoxon(x, y, zero_method="wilcox", correction=True, method=method)
    plus = wilcoxon(x, y, zero_method="wilcox", correction=True, method=method, alternative="greater")
    lines = [
        f"case {name} {method}",
        "x " + " ".join(repr(float(v)) for v in x),
        "y " + " ".join(repr(float(v)) for v in y),
        f"expect {float(plus.statistic)!r} {float(two.pvalue)!r}",
    ]
    return "\n".join(lines)


cases = []
base = rng.normal(0, 1, 100)
cases.append(case("shift_1_sd_0.1", base + 1 + rng.normal(0, 0.1, 100), base, "approx"))
a = np.round(rng.normal(0, 1, 40), 1)
cases.append(case("rounded_ties_zeros", a + np.round(rng.normal(0.2, 0.6, 40), 1), a, "approx"))
a = rng.normal(0, 1, 25)
cases.append(case("weak_effect_25", a + rng.normal(0.1, 1, 25), a, "approx"))
a = rng.normal(0, 1, 60)
cases.append(case("no_effect_60", a + rng.normal(0, 1, 60), a, "approx"))
a = rng.normal(0, 1, 12)
cases.append(case("exact_12", a + rng.normal(0.5, 1, 12), a, "exact"))
a = rng.normal(0, 1, 18)
cases.append(case("exact_18", a - rng.normal(0.8, 1, 18), a, "exact"))
a = rng.normal(0, 1, 7)
cases.append(case("exact_7", a + rng.normal(0, 1, 7), a, "exact"))

with open("wilcoxon.txt", "w") as f:
    f.write("\n".join(cases) + "\n")
