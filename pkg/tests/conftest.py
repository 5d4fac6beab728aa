import random

import numpy as np
import pytest

from branchlab import expr as ex

CORPUS_SEED = 977112


def random_expression(rng, depth=3, allow_nu=False):
    """Random expression tree, bounded on |x| <= pi so derivatives stay finite.

    exp and cosh only appear applied to small multiples of x; everything else
    is built from sums, differences, products, small integer powers, negation,
    and the bounded calls.
    """
    if depth == 0:
        roll = rng.random()
        if roll < 0.35:
            return ex.Num(round(rng.uniform(-2.0, 2.0), 3))
        if allow_nu and roll < 0.45:
            return ex.nu
        if roll < 0.80:
            return ex.x
        scale = ex.Num(round(rng.uniform(-0.7, 0.7), 3))
        fn = rng.choice(("exp", "cosh"))
        return ex.Call(fn, scale * ex.x)
    roll = rng.random()
    if roll < 0.22:
        return random_expression(rng, depth - 1, allow_nu) + random_expression(
            rng, depth - 1, allow_nu
        )
    if roll < 0.40:
        return random_expression(rng, depth - 1, allow_nu) - random_expression(
            rng, depth - 1, allow_nu
        )
    if roll < 0.60:
        return random_expression(rng, depth - 1, allow_nu) * random_expression(
            rng, depth - 1, allow_nu
        )
    if roll < 0.70:
        return random_expression(rng, depth - 1, allow_nu) ** rng.choice((2, 3))
    if roll < 0.78:
        inner = random_expression(rng, depth - 1, allow_nu)
        # the parser folds a negated literal into the literal itself
        if isinstance(inner, ex.Num):
            return ex.Num(-inner.value)
        return -inner
    fn = rng.choice(("sin", "cos", "tanh"))
    return ex.Call(fn, random_expression(rng, depth - 1, allow_nu))


def gauss_rank(matrix, rel_tol=1e-8):
    """Row-echelon rank by Gaussian elimination with partial pivoting.

    Independent of the SVD-based rank used by the package.
    """
    work = np.array(matrix, dtype=float, copy=True)
    rows, cols = work.shape
    threshold = rel_tol * max(np.max(np.abs(work)), 1e-300)
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        pivot = rank + int(np.argmax(np.abs(work[rank:, col])))
        if abs(work[pivot, col]) <= threshold:
            continue
        work[[rank, pivot]] = work[[pivot, rank]]
        work[rank + 1 :] -= (
            work[rank + 1 :, col : col + 1] / work[rank, col]
        ) * work[rank : rank + 1]
        rank += 1
    return rank


@pytest.fixture
def rng():
    return random.Random(CORPUS_SEED)


@pytest.fixture(scope="session")
def expression_corpus():
    """100 random nu-free expressions shared by the derivative suites."""
    corpus_rng = random.Random(CORPUS_SEED)
    return [random_expression(corpus_rng, depth=3) for _ in range(100)]
