import numpy as np
import pytest

from amc_codes.exceptions import GroupMismatchError, ParseError
from amc_codes.gf2 import BitMatrix, GF2Poly
from amc_codes.group_algebra import (
    AbelianGroup,
    GroupAlgebraElement,
    automorphism_apply,
    group_trace,
    hat,
    multiply,
    parse_elements,
    regular_rep,
)


def element(group, text):
    return GroupAlgebraElement.parse(group, text)


@pytest.mark.parametrize("text, orders", [
    ("C7", (7,)),
    ("C3xC5", (3, 5)),
    ("C2^4", (2, 2, 2, 2)),
])
def test_AbelianGroup_parse(text, orders):
    assert AbelianGroup.parse(text).orders == orders


def test_AbelianGroup_parse_rejects_garbage():
    with pytest.raises(ParseError):
        AbelianGroup.parse("D7")


def test_AbelianGroup_from_relators_reduces_to_cyclic_factors():
    group, _ = AbelianGroup.from_relators([[2, 0], [0, 3]])
    assert group.order == 6


def test_AbelianGroup_index_and_exponents_are_inverse():
    group = AbelianGroup.parse("C3xC5")
    for i in range(group.order):
        assert group.index(group.exponents(i)) == i


def test_multiplication_by_one_is_identity(c7):
    a = element(c7, "1+x")
    assert a * GroupAlgebraElement.one(c7) == a


def test_square_of_one_plus_x_drops_cross_terms(c7):
    assert element(c7, "1+x") * element(c7, "1+x") == element(c7, "1+x^2")


def test_one_plus_x_annihilates_the_all_ones_element(c7):
    everything = element(c7, "+".join(["1"] + [f"x^{e}" for e in range(1, 7)]))
    assert (element(c7, "1+x") * everything) == GroupAlgebraElement.zero(c7)


def test_hat_inverts_exponents(c7):
    assert GroupAlgebraElement.one(c7).hat() == GroupAlgebraElement.one(c7)
    assert element(c7, "1+x").hat() == element(c7, "1+x^6")
    group = AbelianGroup.parse("C3xC5")
    assert element(group, "x^2*y").hat() == element(group, "x*y^4")


def test_trace(c7):
    assert element(c7, "1+x").trace() == 1
    assert element(c7, "x+x^3").trace() == 0


def test_regular_rep_of_one_and_generator():
    group = AbelianGroup.cyclic(3)
    assert GroupAlgebraElement.one(group).regular_rep() == BitMatrix.identity(3)
    shift = element(group, "x").regular_rep().to_dense()
    assert shift.tolist() == [[0, 0, 1], [1, 0, 0], [0, 1, 0]]


def test_regular_rep_is_a_ring_homomorphism():
    group = AbelianGroup.parse("C3xC5")
    a, b = element(group, "1+x*y+y^3"), element(group, "x^2+y")
    assert (a * b).regular_rep() == a.regular_rep() @ b.regular_rep()
    assert (a + b).regular_rep() == a.regular_rep() + b.regular_rep()
    assert a.hat().regular_rep() == a.regular_rep().T


def test_automorphism(c7):
    a = element(c7, "1+x")
    assert a.automorphism(1) == a
    assert a.automorphism(2) == element(c7, "1+x^2")
    with pytest.raises(ValueError):
        element(AbelianGroup.cyclic(6), "1+x").automorphism(2)


def test_translate(c7):
    assert element(c7, "1+x").translate((6,)) == element(c7, "1+x^6")


def test_elements_over_different_groups_do_not_mix(c7):
    with pytest.raises(GroupMismatchError):
        element(c7, "1+x") * element(AbelianGroup.cyclic(5), "1+x")


def test_lift_embeds_into_power_group():
    group = AbelianGroup.cyclic(2)
    target = group.power(4)
    lifted = element(group, "1+x").lift(target, 2)
    assert lifted == element(target, "1+z")


def test_as_poly_and_from_poly(c7):
    a = element(c7, "1+x^3")
    assert a.as_poly() == GF2Poly.parse("1+x^3")
    assert GroupAlgebraElement.from_poly(c7, a.as_poly()) == a


def test_to_vector_and_from_vector(c7):
    a = element(c7, "x+x^4")
    assert np.flatnonzero(a.to_vector()).tolist() == [1, 4]
    assert GroupAlgebraElement.from_vector(c7, a.to_vector()) == a


def test_str_uses_generator_names():
    group = AbelianGroup.parse("C3xC5")
    assert str(element(group, "1+x*y^2")) == "1+x*y^2"
    assert str(GroupAlgebraElement.zero(group)) == "0"


def test_parse_elements_rejects_unknown_generators(c7):
    assert len(parse_elements(c7, "1+x, 1+x^2")) == 2
    with pytest.raises(ParseError):
        parse_elements(c7, "1+y")


def test_module_level_operations(c7):
    a, b = element(c7, "1+x"), element(c7, "x^2")
    assert multiply(a, b) == element(c7, "x^2+x^3")
    assert hat(a) == element(c7, "1+x^6")
    assert group_trace(a) == 1 and group_trace(b) == 0
    assert automorphism_apply(a, 3) == element(c7, "1+x^3")
    assert regular_rep(multiply(a, b)) == regular_rep(a) @ regular_rep(b)


GROUPS = ["C7", "C12", "C3xC5", "C2^3", "C2xC4"]


def random_elements(group, rng, count):
    return [GroupAlgebraElement.from_vector(group, rng.integers(0, 2, size=group.order)) for _ in range(count)]


@pytest.mark.parametrize("text", GROUPS)
def test_multiplication_is_commutative_and_associative(text):
    group = AbelianGroup.parse(text)
    rng = np.random.default_rng(group.order)
    for _ in range(20):
        a, b, c = random_elements(group, rng, 3)
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c


@pytest.mark.parametrize("text", GROUPS)
def test_dot_product_is_the_trace_of_hat_times(text):
    group = AbelianGroup.parse(text)
    rng = np.random.default_rng(100 + group.order)
    for _ in range(30):
        a, b = random_elements(group, rng, 2)
        assert int(a.to_vector() @ b.to_vector()) % 2 == (a.hat() * b).trace()
        assert a.hat().hat() == a
