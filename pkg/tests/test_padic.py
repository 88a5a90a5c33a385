"""Exact arithmetic, quotient-group, and embedding tests."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padicwalk.padic import (
    Ball,
    GroupElement,
    PadicValue,
    PrecisionError,
    PrimeParams,
    ball_relation,
    character,
    coset_section,
    digit_expansion,
    embed_spacetime,
    frac_part,
    grid_embed,
    grid_properties_check,
    group_project,
    padic_abs,
    rescale_to_level,
    to_base_level,
    value_from_digit_json,
    value_from_string,
    value_to_digit_json,
    value_to_string,
)


def V(p, mantissa, valuation=0):
    return PadicValue(p, mantissa, valuation)


def G(p, level, digits):
    return GroupElement.from_digits(p, level, digits)


# -- values drawn over a range that respects the digit cap
padic_values = st.builds(
    V,
    st.just(2),
    st.integers(min_value=-(2**40), max_value=2**40),
    st.integers(min_value=-12, max_value=12),
)


class TestPrimeParams:
    def test_accepts_primes(self):
        for p in (2, 3, 5, 7, 11, 97):
            PrimeParams(p, 1.0, 1.0)

    @pytest.mark.parametrize("p", [0, 1, 4, 6, 9, 100])
    def test_rejects_composites(self, p):
        with pytest.raises(ValueError):
            PrimeParams(p, 1.0, 1.0)

    def test_rejects_bad_exponents(self):
        with pytest.raises(ValueError):
            PrimeParams(2, 0.0, 1.0)
        with pytest.raises(ValueError):
            PrimeParams(2, 1.0, -1.0)


class TestPadicAbs:
    def test_zero(self):
        assert padic_abs(V(3, 0)) == 0

    def test_prime_power(self):
        assert padic_abs(V(3, 9)) == Fraction(1, 9)

    def test_negative_valuation(self):
        # |3 * 2^-2|_2 = 2^2: the 2-adic valuation of 3 is 0
        assert padic_abs(V(2, 3, -2)) == 4

    def test_canonicalization(self):
        x = V(2, 12, 0)  # 12 = 3 * 2^2
        assert (x.mantissa, x.valuation) == (3, 2)
        assert padic_abs(x) == Fraction(1, 4)

    @given(padic_values, padic_values)
    def test_ultrametric(self, x, y):
        s = padic_abs(x + y)
        assert s <= max(padic_abs(x), padic_abs(y))
        if padic_abs(x) != padic_abs(y):
            assert s == max(padic_abs(x), padic_abs(y))

    @given(padic_values, padic_values)
    def test_subtraction_inverts_addition(self, x, y):
        assert (x + y) - y == x

    def test_digit_cap_fails_loudly(self):
        with pytest.raises(PrecisionError):
            V(2, 2**70 + 1)


class TestDigits:
    def test_round_trip(self):
        for x in (V(2, 5), V(2, 3, -1), V(5, 17, -1), V(3, 0), V(7, 2, 3)):
            total = sum(Fraction(d) * Fraction(x.p) ** k for k, d in digit_expansion(x).items())
            assert total == x.to_fraction()

    @given(st.integers(min_value=0, max_value=2**50), st.integers(min_value=-10, max_value=10))
    def test_round_trip_random(self, mantissa, valuation):
        x = V(2, mantissa, valuation)
        total = sum(Fraction(d) * Fraction(2) ** k for k, d in digit_expansion(x).items())
        assert total == x.to_fraction()

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            digit_expansion(V(2, -3))


class TestFracPart:
    def test_integer(self):
        assert frac_part(V(2, 5)) == 0

    def test_half_integer(self):
        assert frac_part(V(2, 3, -1)) == Fraction(1, 2)

    def test_negative_value(self):
        # -1/3 agrees with 2/3 modulo Z_3
        assert frac_part(V(3, -1, -1)) == Fraction(2, 3)


class TestCharacter:
    def test_integer_is_one(self):
        assert character(V(2, 7)) == 1

    def test_half(self):
        assert abs(character(V(2, 1, -1)) - (-1)) < 1e-14

    def test_third(self):
        import cmath, math

        assert abs(character(V(3, 1, -1)) - cmath.exp(2j * math.pi / 3)) < 1e-14

    def test_unit_modulus(self):
        for x in (V(2, 3, -5), V(3, 7, -4), V(5, -9, -3)):
            assert abs(abs(character(x)) - 1) < 1e-14

    @given(padic_values, padic_values)
    @settings(max_examples=60)
    def test_additive(self, x, y):
        assert abs(character(x + y) - character(x) * character(y)) < 1e-12


class TestGroupProject:
    def test_multiple_of_pm_is_identity(self):
        for m in (0, 1, 3):
            assert group_project(V(2, 1, m), m).is_identity()

    def test_integer_part_discarded(self):
        assert group_project(V(2, 3, -1), 0) == G(2, 0, {-1: 1})

    def test_keeps_digits_below_level(self):
        x = V(3, 1, -1) + V(3, 2)  # 1/3 + 2
        assert group_project(x, 1) == G(3, 1, {-1: 1, 0: 2})

    @given(padic_values, padic_values, st.integers(min_value=0, max_value=4))
    @settings(max_examples=80)
    def test_homomorphism(self, x, y, m):
        assert group_project(x + y, m) == group_project(x, m) + group_project(y, m)


class TestGroupArithmetic:
    def test_carry_discarded_at_top(self):
        g = G(2, 0, {-1: 1})
        assert (g + g).is_identity()

    def test_carry_propagates(self):
        g = G(3, 0, {-2: 2})
        h = G(3, 0, {-2: 1, -1: 1})
        assert g + h == G(3, 0, {-1: 2})

    def test_neg_inverts(self):
        g = G(5, 0, {-3: 2, -1: 4})
        assert (g + (-g)).is_identity()
        assert g - g == GroupElement.identity(5, 0)

    def test_abs(self):
        assert G(2, 0, {-3: 1, -1: 1}).abs_value() == 8
        assert GroupElement.identity(2, 0).abs_value() == 0
        assert G(2, 3, {1: 1}).abs_value() == Fraction(1, 2)

    def test_level_mismatch_is_error(self):
        with pytest.raises(ValueError):
            G(2, 0, {-1: 1}) + G(2, 1, {-1: 1})

    def test_fold_order_irrelevant(self):
        import functools

        gs = [G(2, 0, {-k: 1}) for k in (1, 2, 3, 2, 1)]
        left = functools.reduce(lambda a, b: a + b, gs)
        right = functools.reduce(lambda a, b: b + a, reversed(gs))
        assert left == right


class TestRescale:
    def test_identity(self):
        assert rescale_to_level(GroupElement.identity(2, 0), 3).is_identity()

    def test_index_shift(self):
        assert rescale_to_level(G(2, 0, {-1: 1}), 3) == G(2, 3, {2: 1})
        assert rescale_to_level(G(3, 0, {-2: 2, -1: 1}), 1) == G(3, 1, {-1: 2, 0: 1})

    def test_isomorphism_on_samples(self):
        pairs = [(G(3, 0, {-1: 2}), G(3, 0, {-1: 1})), (G(3, 0, {-2: 1}), G(3, 0, {-2: 2, -1: 1}))]
        for a, b in pairs:
            assert rescale_to_level(a + b, 2) == rescale_to_level(a, 2) + rescale_to_level(b, 2)

    def test_round_trip(self):
        g = G(5, 0, {-2: 3, -1: 4})
        assert to_base_level(rescale_to_level(g, 4)) == g

    def test_requires_level_zero(self):
        with pytest.raises(ValueError):
            rescale_to_level(G(2, 1, {0: 1}), 2)


class TestSection:
    def test_identity_maps_to_zero(self):
        assert coset_section(GroupElement.identity(3, 2)).is_zero()

    def test_single_digit(self):
        assert coset_section(G(2, 0, {-2: 1})).to_fraction() == Fraction(1, 4)

    def test_digit_sum(self):
        assert coset_section(G(5, 1, {0: 3, -1: 2})).to_fraction() == Fraction(17, 5)

    def test_project_after_section_is_identity_map(self):
        for z in (G(2, 0, {-3: 1, -1: 1}), G(3, 2, {1: 2, -1: 1}), GroupElement.identity(7, 1)):
            assert group_project(coset_section(z), z.level) == z


class TestGridEmbed:
    def test_identity(self):
        assert grid_embed(GroupElement.identity(2, 0), 5).is_zero()

    def test_scaling_examples(self):
        g = G(2, 0, {-1: 1})
        assert grid_embed(g, 0).to_fraction() == Fraction(1, 2)
        assert grid_embed(g, 2).to_fraction() == 2
        assert grid_embed(G(3, 0, {-2: 1}), 1).to_fraction() == Fraction(1, 3)

    def test_equals_scaled_section(self):
        for g in (G(2, 0, {-4: 1, -2: 1}), G(3, 0, {-1: 2})):
            for m in (0, 1, 3):
                assert grid_embed(g, m) == coset_section(g).shift(m)

    def test_scaling_identity_for_sums(self):
        gs = [G(3, 0, {-1: 1}), G(3, 0, {-2: 2}), G(3, 0, {-1: 2, -2: 1})]
        total = GroupElement.identity(3, 0)
        for g in gs:
            total = total + g
        for m in (0, 1, 2, 5):
            assert padic_abs(grid_embed(total, m)) == total.abs_value() / 3**m

    def test_grid_nesting(self):
        # every level-m grid point is a level-m' grid point for m < m'
        for g in (G(2, 0, {-1: 1}), G(2, 0, {-3: 1, -1: 1})):
            for m, m2 in ((0, 1), (1, 4)):
                x = grid_embed(g, m)
                g2 = to_base_level(group_project(x, m2))
                assert grid_embed(g2, m2) == x


class TestEmbedSpacetime:
    def test_origin(self):
        pt = embed_spacetime(0, GroupElement.identity(2, 0), 3, 0.1875)
        assert pt.time == 0 and pt.position.is_zero()

    def test_step_scaling(self):
        # p=2, b=1, sigma=1: alpha = 3/2, tau_0 = alpha/sigma = 3/2
        pt = embed_spacetime(1, G(2, 0, {-1: 1}), 0, 1.5)
        assert pt.time == 1.5
        assert pt.position.to_fraction() == Fraction(1, 2)

    def test_tau_scaling_level_one(self):
        # tau_1 = (alpha/sigma) p^-b = 3/4
        pt = embed_spacetime(4, GroupElement.identity(2, 0), 1, 0.75)
        assert pt.time == 3.0 and pt.position.is_zero()

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            embed_spacetime(-1, GroupElement.identity(2, 0), 0, 1.0)


def _ball_sample(p, max_abs_exp):
    """All level-0 elements with |g| <= p^max_abs_exp."""
    out = [GroupElement.identity(p, 0)]
    for n in range(1, p**max_abs_exp):
        digits = {}
        k = -max_abs_exp
        v = n
        while v:
            v, d = divmod(v, p)
            if d:
                digits[k] = d
            k += 1
        out.append(G(p, 0, digits))
    return out


class TestGridProperties:
    @pytest.mark.parametrize("p,m", [(2, 0), (2, 2), (3, 0), (3, 1)])
    def test_full_ball_passes(self, p, m):
        sample = _ball_sample(p, 2)
        probes = [PadicValue(p, 7, -5), PadicValue(p, 1, -1), PadicValue(p, -3, -4)]
        report = grid_properties_check(p, m, sample, probes)
        assert report.ok, report.violations
        assert report.min_distance == Fraction(p) / Fraction(p) ** m  # p * mesh
        # neighbor counts at the minimal distance are p-1 everywhere
        assert set(report.neighbor_counts_at_min_distance) == {p - 1}
        assert set(report.neighbor_counts_at_mesh) <= {0}

    def test_empty_sample_passes(self):
        assert grid_properties_check(2, 1, []).ok

    def test_duplicates_pass(self):
        g = G(2, 0, {-1: 1})
        assert grid_properties_check(2, 1, [g, g, GroupElement.identity(2, 0)]).ok


class TestBall:
    def test_membership(self):
        ball = Ball(PadicValue.zero(2), 0)
        assert ball.contains(V(2, 3))
        assert ball.contains(V(2, 0))
        assert not ball.contains(V(2, 1, -1))

    def test_membership_offcenter(self):
        ball = Ball(V(2, 1, -1), -1)  # center 1/2, radius 1/2
        assert ball.contains(V(2, 1, -1))
        assert ball.contains(V(2, 5, -1))  # 5/2 = 1/2 + 2, |2| = 1/2
        assert not ball.contains(V(2, 3, -1))  # |3/2 - 1/2| = |1| = 1
        assert not ball.contains(V(2, 1, -2))

    def test_trichotomy(self):
        a = Ball(PadicValue.zero(2), 0)
        b = Ball(V(2, 1), 0)  # same ball: |1| = 1 <= radius
        c = Ball(V(2, 1, -1), -1)
        d = Ball(PadicValue.zero(2), 2)
        assert ball_relation(a, b) == "equal"
        assert ball_relation(c, a) == "disjoint"
        assert ball_relation(a, d) == "a_in_b"
        assert ball_relation(d, a) == "b_in_a"


class TestSerialization:
    def test_string_round_trip(self):
        for x in (V(2, 3, -2), V(3, -7, 4), V(5, 0)):
            assert value_from_string(value_to_string(x), x.p) == x

    def test_string_forms(self):
        assert value_to_string(V(2, 3, -2)) == "3*2^-2"
        assert value_to_string(V(7, 0)) == "0"
        assert value_from_string("3*2^-2") == V(2, 3, -2)

    def test_digit_json_round_trip(self):
        for x in (V(2, 3, -2), V(2, -5, -3), V(3, 14, 2), V(5, 0)):
            assert value_from_digit_json(value_to_digit_json(x)) == x

    def test_digit_json_shape(self):
        import json

        payload = json.loads(value_to_digit_json(V(2, 3, -1)))
        assert payload == {"p": 2, "digits": {"-1": 1, "0": 1}}
