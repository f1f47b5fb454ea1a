from fractions import Fraction

from hypothesis import strategies as st

rationals = st.builds(Fraction, st.integers(-20, 20), st.integers(1, 6))


def elements(dim, elems=rationals):
    return st.tuples(*[elems] * dim)
