import numpy as np
import pytest
from hypothesis import strategies as st

from casecontrol import ContingencyTable, Schema
from casecontrol.data import bundled_table


@pytest.fixture(scope="session")
def study():
    """The bundled 64-cell table over (L, V, C, R, A, E)."""
    return bundled_table()


@pytest.fixture(scope="session")
def cases(study):
    return study.slice_l("L", 1)


@pytest.fixture(scope="session")
def controls(study):
    return study.slice_l("L", 0)


def table_strategy(min_vars=2, max_vars=4, min_count=0, max_count=60):
    """Random small tables with integer counts and a positive total."""
    names = "ABCDEFGH"

    @st.composite
    def build(draw):
        k = draw(st.integers(min_vars, max_vars))
        counts = draw(
            st.lists(st.integers(min_count, max_count),
                     min_size=2 ** k, max_size=2 ** k)
            .filter(lambda xs: sum(xs) > 0))
        return ContingencyTable(Schema(tuple(names[:k])), np.array(counts, float))

    return build()
