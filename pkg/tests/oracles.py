"""Independent reference implementations used to cross-check the library.

These deliberately avoid the library's own code paths: weights come from
character arithmetic instead of the table, repeat counts from prefix scans,
and shortest paths from Floyd-Warshall instead of per-source Dijkstra.
"""

from fractions import Fraction


def brute_force_kwm(d):
    """Per-position prefix scan with its own weight derivation."""
    total = Fraction(0)
    for i, ch in enumerate(d):
        if "a" <= ch <= "z":
            weight = ord(ch) - ord("a")
        elif "A" <= ch <= "Z":
            weight = 26 + ord(ch) - ord("A")
        elif "0" <= ch <= "9":
            weight = 52 + ord(ch) - ord("0")
        else:
            raise ValueError(ch)
        repeats = d[:i].count(ch)
        total += Fraction(weight) * Fraction(1, 5) ** repeats
    return total


def linear_fit_r_squared(xs, ys):
    """Coefficient of determination of the least-squares line through the data."""
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = sum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    return 1.0 - ss_res / ss_tot
