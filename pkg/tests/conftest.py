import pytest

from nikmop.equilibrium import solve_equilibrium
from nikmop.numerics import PrecCtx


@pytest.fixture(scope="session")
def ctx():
    return PrecCtx(256)


@pytest.fixture(scope="session")
def eqsol(ctx):
    # one production-resolution solve shared by every test module
    return solve_equilibrium(308, 182, ctx)


@pytest.fixture(scope="session")
def qcache(ctx):
    from nikmop.mop import compute_Q

    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = compute_Q(n, ctx)
        return cache[n]

    return get
