#!/usr/bin/env python3
"""Regenerates tests/fixtures/calculator_cases.json with exact Fraction results."""
import json
import random
import re
from decimal import Decimal, ROUND_HALF_EVEN, getcontext
from fractions import Fraction
from pathlib import Path

getcontext().prec = 200
DIGITS = 20


def fmt(v: Fraction) -> str:
    den = v.denominator
    rest = den
    while rest % 2 == 0:
        rest //= 2
    while rest % 5 == 0:
        rest //= 5
    d = Decimal(v.numerator) / Decimal(den)
    if rest != 1:
        d = d.quantize(Decimal(1).scaleb(-DIGITS), rounding=ROUND_HALF_EVEN)
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("-0", ""):
        s = "0"
    return s


def literal(rng):
    if rng.random() < 0.3:
        whole = rng.randint(0, 999)
        frac = rng.randint(0, 999)
        return f"{whole}.{frac:03d}".rstrip("0").rstrip(".") if rng.random() < 0.5 else f"{whole}.{frac}"
    return str(rng.randint(0, 60))


def expr(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return literal(rng)
    kind = rng.random()
    if kind < 0.15:
        return "(" + expr(rng, depth - 1) + ")"
    if kind < 0.22:
        return "-" + expr(rng, depth - 1)
    op = rng.choice(["+", "-", "*", "/"])
    return expr(rng, depth - 1) + f" {op} " + expr(rng, depth - 1)


def main():
    rng = random.Random(20240611)
    cases = []
    while len(cases) < 300:
        e = expr(rng, 4)
        # Evaluate with Fractions by wrapping every literal.
        py = re.sub(r"(\d+(?:\.\d+)?)", r"Fraction('\1')", e)
        try:
            v = eval(py, {"Fraction": Fraction})
        except ZeroDivisionError:
            continue
        cases.append({"expr": e, "result": fmt(v)})
    out = Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "calculator_cases.json"
    out.write_text(json.dumps(cases, indent=1) + "\n")


if __name__ == "__main__":
    main()
