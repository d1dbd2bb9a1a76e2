"""Hypothesis strategies shared across the test modules."""
from fractions import Fraction

from hypothesis import strategies as st

from blochlab.lattice import build_model
from blochlab.laurent import LaurentPoly

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def models(draw, max_d=2, max_period=3, max_cells=6):
    d = draw(st.integers(1, max_d))
    p = tuple(draw(st.integers(1, max_period)) for _ in range(d))
    P = 1
    for pj in p:
        P *= pj
    if P > max_cells:
        p = (min(p[0], max_cells),) + (1,) * (d - 1)
        P = p[0]
    vals = draw(st.lists(st.integers(-6, 6), min_size=P, max_size=P, unique=True))
    den = draw(st.integers(1, 3))
    return build_model(d, p, [Fraction(v, den) for v in vals])


@st.composite
def polys(draw, d=1, max_terms=4, span=3):
    terms = draw(
        st.dictionaries(
            st.tuples(*[st.integers(-span, span)] * d), rationals, max_size=max_terms
        )
    )
    return LaurentPoly(d, terms)
