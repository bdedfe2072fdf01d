"""Shared randomized-input helpers.

All randomness is driven by ``random.Random`` instances seeded from the
``FMAN_SEED`` environment variable (default 0), so failures reproduce exactly.
"""

from __future__ import annotations

import os
import random
from fractions import Fraction

from fmanlin.symcore import Poly, RatFunc

SEED = int(os.environ.get("FMAN_SEED", "0"))


def rng_for(name: str) -> random.Random:
    """A deterministic RNG stream, independent per test-site name."""
    return random.Random(f"{SEED}:{name}")


def rand_fraction(rng: random.Random, span: int = 4) -> Fraction:
    num = rng.randint(-span, span)
    den = rng.randint(1, span)
    return Fraction(num, den)


def rand_poly(
    rng: random.Random,
    variables: tuple[str, ...],
    max_deg: int = 2,
    max_terms: int = 4,
    nonzero: bool = False,
) -> Poly:
    terms = {}
    for _ in range(rng.randint(1 if nonzero else 0, max_terms)):
        exp = [0] * len(variables)
        for _ in range(rng.randint(0, max_deg)):
            if variables:
                exp[rng.randrange(len(variables))] += 1
        terms[tuple(exp)] = rand_fraction(rng)
    p = Poly(variables, terms)
    if nonzero and p.is_zero():
        return Poly((), {(): Fraction(1)})
    return p


def rand_ratfunc(
    rng: random.Random,
    variables: tuple[str, ...],
    max_deg: int = 2,
    with_den: bool = True,
) -> RatFunc:
    num = rand_poly(rng, variables, max_deg)
    if with_den and rng.random() < 0.5:
        den = rand_poly(rng, variables, max_deg=1, max_terms=2, nonzero=True)
        return RatFunc(num, den)
    return RatFunc(num)
