from __future__ import annotations

import pytest

from crjet.hypersurface import GeometryError, build_frame, from_defining
from crjet.invariants import h_tensor
from crjet.operators import (
    apply_commutator,
    apply_table,
    apply_word,
    bracket_reduction,
    choose_conjugate_index,
    commutator_table,
    operator_certificates,
    weighted_certificate,
)
from crjet.series import CScalar
from tests.conftest import (
    heisenberg_rho,
    m2_rho,
    m3_rho,
    m4_rho,
    random_model,
    random_nondegenerate_model,
)


def frame_for(rho, N):
    return build_frame(from_defining(rho, N))


class TestCommutatorTable:
    def test_single_letter_is_levi_row(self):
        F = frame_for(heisenberg_rho(2, 8), 2)
        table = commutator_table(F, (0,), 0)
        assert set(table) == {()}
        assert table[()].constant_term() == CScalar(0, -2)

    def test_matches_direct_application(self):
        # the decomposition [L^W, L_Fb] = sum d_K L^K T holds as operators,
        # not just at the origin; probe it on a few series
        F = build_frame(random_model(400, 2, 7))
        for word in [(0,), (0, 0), (0, 0, 0)]:
            table = commutator_table(F, word, 0)
            for mono in [(1, 0, 0), (0, 1, 0), (1, 1, 1)]:
                f = monomial(F, mono)
                lhs = apply_commutator(F, word, 0, f)
                rhs = apply_table(F, table, f)
                assert agree(lhs, rhs)

    def test_mixed_letters(self):
        F = build_frame(random_model(401, 3, 7))
        table = commutator_table(F, (0, 1), 1)
        f = monomial(F, (0, 1, 0, 0, 1))
        assert agree(apply_commutator(F, (0, 1), 1, f),
                     apply_table(F, table, f))


def monomial(F, exps):
    from crjet.series import TruncatedSeries

    order = F.order - 1
    return TruncatedSeries(len(exps), order, {tuple(exps): CScalar(1)})


def agree(a, b):
    o = min(a.order, b.order)
    return a.truncate(o) == b.truncate(o)


class TestChooseConjugateIndex:
    def test_heisenberg(self):
        F = frame_for(heisenberg_rho(3, 6), 3)
        assert choose_conjugate_index(F) == 0

    def test_degenerate_origin_raises(self):
        F = frame_for(m2_rho(6), 2)
        with pytest.raises(GeometryError):
            choose_conjugate_index(F)

    def test_zero_levi_raises(self):
        F = frame_for(m4_rho(6), 3)
        with pytest.raises(GeometryError):
            choose_conjugate_index(F)


class TestBracketReduction:
    def test_heisenberg_pure_word(self):
        F = frame_for(heisenberg_rho(2, 8), 2)
        cert = bracket_reduction(F, (0, 0), verify_degree=4)
        assert cert.verified
        assert cert.p == 1
        assert set(cert.leading) == {(0,)}
        lead = cert.leading[(0,)]
        h11 = h_tensor(F, 1).h((0,), 0)
        assert agree(lead, 2 * h11)

    def test_mixed_word_leading_shape(self):
        # length-two word with distinct letters: both drop-one words carry
        # the matching Levi entry
        F = build_frame(random_nondegenerate_model(410, 3, 8))
        Fb = choose_conjugate_index(F)
        t1 = h_tensor(F, 1)
        cert = bracket_reduction(F, (0, 1), Fbar=Fb, verify_degree=3)
        assert cert.verified
        assert set(cert.leading) == {(0,), (1,)}
        assert agree(cert.leading[(1,)], t1.h((Fb,), 0))
        assert agree(cert.leading[(0,)], t1.h((Fb,), 1))

    def test_three_letter_multiplicity(self):
        F = build_frame(random_nondegenerate_model(411, 2, 8))
        t1 = h_tensor(F, 1)
        cert = bracket_reduction(F, (0, 0, 0), verify_degree=3)
        assert cert.verified
        assert agree(cert.leading[(0, 0)], 3 * t1.h((0,), 0))

    def test_verification_on_monomials(self):
        for seed, N in [(412, 2), (413, 3)]:
            F = build_frame(random_nondegenerate_model(seed, N, 7))
            cert = bracket_reduction(F, (0,) * 2, verify_degree=4)
            assert cert.verified


class TestWeightedCertificate:
    def test_heisenberg_single_letter(self):
        F = frame_for(heisenberg_rho(2, 8), 2)
        cert = weighted_certificate(F, (0,), verify_degree=5)
        assert cert.verified
        assert cert.p == 2
        assert cert.word == (0,)

    def test_weight_counts_nonminimal_letters(self):
        F = build_frame(random_nondegenerate_model(420, 3, 8))
        Fb = choose_conjugate_index(F)
        c1 = weighted_certificate(F, (0, 0), Fbar=Fb, verify_degree=3)
        c2 = weighted_certificate(F, (0, 1), Fbar=Fb, verify_degree=3)
        c3 = weighted_certificate(F, (1, 1), Fbar=Fb, verify_degree=3)
        assert (c1.p, c2.p, c3.p) == (2, 3, 4)
        assert c1.verified and c2.verified and c3.verified

    def test_bracket_words_cover_lengths(self):
        F = frame_for(heisenberg_rho(2, 8), 2)
        cert = weighted_certificate(F, (0, 0), verify_degree=4)
        assert cert.verified
        lengths = {len(w) for w in cert.bracket_coeffs}
        assert max(lengths) == 3

    def test_random_models(self):
        for seed in (421, 422):
            F = build_frame(random_nondegenerate_model(seed, 2, 8))
            cert = weighted_certificate(F, (0, 0), verify_degree=3)
            assert cert.verified


class TestOperatorCertificates:
    def test_heisenberg_m2(self):
        F = frame_for(heisenberg_rho(2, 8), 2)
        certs = operator_certificates(F, 2, verify_degree=5)
        kinds = {c.kind for c in certs}
        assert kinds == {"reduction", "weighted"}
        assert all(c.verified for c in certs)

    def test_heisenberg_m3(self):
        F = frame_for(heisenberg_rho(2, 8), 2)
        certs = operator_certificates(F, 3, verify_degree=5)
        assert all(c.verified for c in certs)

    def test_two_variable_m2(self):
        F = frame_for(m3_rho(8), 3)
        certs = operator_certificates(F, 2, verify_degree=3)
        assert len(certs) == 3 + 2  # words of length 2, weights of length 1
        assert all(c.verified for c in certs)
