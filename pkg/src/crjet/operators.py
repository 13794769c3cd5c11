"""Commutator certificates for words of CR fields against one conjugate field.

In a graph frame the fields L_A commute exactly, [T, L_A] is a multiple of
T, and [L_A, L_Abar] is a function times T.  Consequently every commutator
[L^W, L_Fbar] decomposes exactly as sum_K d_K L^K T over sorted words K with
|K| < |W|, and the decomposition is computable by a two-rule recursion.
This module computes such decompositions, the resulting reduction
identities, and the weighted-word certificates solved triangularly over the
word lattice, then re-verifies everything by acting on a monomial basis
through independent operator compositions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .hypersurface import Frame, GeometryError, exterior_derivative
from .series import OrderExhausted, TruncatedSeries


def _sorted_word(word):
    return tuple(sorted(word))


def _dadd(table: dict, key, series: TruncatedSeries):
    cur = table.get(key)
    out = series if cur is None else cur + series
    if out.is_zero():
        table.pop(key, None)
    else:
        table[key] = out


def _scale_table(table: dict, factor) -> dict:
    out = {}
    for key, series in table.items():
        _dadd(out, key, factor * series)
    return out


def _left_compose(F: Frame, E: int, table: dict) -> dict:
    """Table for L_E composed with sum_K f_K L^K T."""
    out = {}
    for K, f in table.items():
        _dadd(out, _sorted_word(K + (E,)), f)
        _dadd(out, K, F.L[E].apply(f))
    return out


def _t_pushdown(F: Frame, word: tuple, _memo: dict) -> dict:
    """T composed with L^word, rewritten as sum_K f_K L^K T."""
    word = tuple(word)
    if word in _memo:
        return _memo[word]
    nv = 2 * F.n + 1
    if not word:
        out = {(): TruncatedSeries.constant(nv, 1, F.order)}
    else:
        head, rest = word[0], word[1:]
        inner = _t_pushdown(F, rest, _memo)
        out = _left_compose(F, head, inner)
        # [T, L_head] is the s-derivative of L_head's transverse coefficient
        # times T
        c_head = F.L[head].coeffs[2 * F.n].derive(2 * F.n)
        if not c_head.is_zero():
            for K, f in _scale_table(inner, c_head).items():
                _dadd(out, K, f)
    _memo[word] = out
    return out


def _h_row(F: Frame, Fbar: int):
    """Series h_{FbarE} for all E, via the characteristic two-form."""
    ev = exterior_derivative(F.theta)
    return [ev(F.Lbar[Fbar], F.L[E]) for E in range(F.n)]


def commutator_table(F: Frame, word, Fbar: int) -> dict:
    """Exact decomposition of [L^word, L_Fbar] as sum_K d_K L^K T."""
    word = tuple(word)
    h_row = _h_row(F, Fbar)
    memo = {}

    def rec(w):
        if not w:
            return {}
        head, rest = w[0], w[1:]
        out = _left_compose(F, head, rec(rest))
        for K, f in _scale_table(_t_pushdown(F, rest, memo),
                                 h_row[head]).items():
            _dadd(out, K, f)
        return out

    return rec(word)


def apply_word(F: Frame, word, f: TruncatedSeries) -> TruncatedSeries:
    for E in reversed(tuple(word)):
        f = F.L[E].apply(f)
    return f


def apply_table(F: Frame, table: dict, f: TruncatedSeries) -> TruncatedSeries:
    tf = F.T.apply(f)
    out = None
    for K, coeff in sorted(table.items()):
        term = coeff * apply_word(F, K, tf)
        out = term if out is None else out + term
    if out is None:
        return TruncatedSeries.zero(f.nvars, f.order - 1)
    return out


def apply_commutator(F: Frame, word, Fbar: int,
                     f: TruncatedSeries) -> TruncatedSeries:
    """[L^word, L_Fbar] f by direct composition; independent of the tables."""
    return apply_word(F, word, F.Lbar[Fbar].apply(f)) \
        - F.Lbar[Fbar].apply(apply_word(F, word, f))


@dataclass(frozen=True)
class CommutatorCertificate:
    """Solved operator identity with its coefficient tables.

    kind "reduction": mult-weighted leading words of [L^W, L_Fbar] with the
    lower-order tail moved to the other side.  kind "weighted": a single
    bracket combination equal to h^p L^J T.
    """

    kind: str
    target: str
    word: tuple
    Fbar: int
    p: int
    leading: dict
    tail: dict
    bracket_coeffs: dict
    verified: bool


def choose_conjugate_index(F: Frame):
    """Lexicographically smallest index with nonzero pairing against L_1."""
    h_at0 = [_h_row(F, Fb)[0].constant_term() for Fb in range(F.n)]
    for Fb, val in enumerate(h_at0):
        if not val.is_zero():
            return Fb
    raise GeometryError(
        "no conjugate index pairs with the first field at 0; "
        "the construction needs a nonzero first-column pairing "
        "(reorder the frame so a nondegenerate direction comes first)")


def bracket_reduction(F: Frame, word, Fbar=None,
                      verify_degree=None) -> CommutatorCertificate:
    """[L^W, L_Fbar] = sum_E mult_E(W) h_{FbarE} L^{W - E} T - tail.

    The leading coefficients are forced exactly; the tail collects every
    shorter word of the decomposition.  Raises when the decomposition
    disagrees with the forced leading shape (a build bug, not a data error).
    """
    word = _sorted_word(word)
    if Fbar is None:
        Fbar = choose_conjugate_index(F)
    m = len(word)
    table = commutator_table(F, word, Fbar)
    h_row = _h_row(F, Fbar)
    leading = {}
    for E in sorted(set(word)):
        shorter = list(word)
        shorter.remove(E)
        leading[tuple(shorter)] = word.count(E) * h_row[E]
    tail = {}
    for K, d in table.items():
        if len(K) == m - 1:
            want = leading.get(K)
            if want is None:
                raise GeometryError(f"unexpected leading word {K}")
            o = min(want.order, d.order)
            if want.truncate(o) != d.truncate(o):
                raise GeometryError(f"leading coefficient mismatch at {K}")
        else:
            _dadd(tail, K, -d)
    for K in leading:
        if K not in table:
            raise GeometryError(f"missing leading word {K}")
    verified = False
    if verify_degree is not None:
        verified = _verify_reduction(F, word, Fbar, leading, tail,
                                     verify_degree)
        if not verified:
            raise GeometryError("reduction failed monomial verification")
    label = " + ".join(
        f"{word.count(E)}*h[{Fbar + 1}b,{E + 1}] L^{_word_label(_drop(word, E))} T"
        for E in sorted(set(word)))
    one = TruncatedSeries.constant(2 * F.n + 1, 1, F.order)
    return CommutatorCertificate(
        kind="reduction", target=label, word=word, Fbar=Fbar, p=1,
        leading=leading, tail=tail, bracket_coeffs={word: one},
        verified=verified)


def _drop(word, E):
    out = list(word)
    out.remove(E)
    return tuple(out)


def _word_label(word):
    return "(" + ",".join(str(E + 1) for E in word) + ")"


def weighted_certificate(F: Frame, J, Fbar=None,
                         verify_degree=None) -> CommutatorCertificate:
    """Solve sum_W b_W [L^W, L_Fbar] = h^p L^J T with p = |J| - |J|_1 + 2.

    The system over sorted words is triangular when processed by length
    descending, then by non-1 content descending: producing the output word
    K uses the bracket word K + (1,), whose pivot coefficient
    (count_1(K) + 1) h_{Fbar1} is a unit at the origin.
    """
    J = _sorted_word(J)
    if Fbar is None:
        Fbar = choose_conjugate_index(F)
    h_row = _h_row(F, Fbar)
    if h_row[0].constant_term().is_zero():
        raise GeometryError("pivot pairing vanishes at 0 for this index")
    p = len(J) - sum(1 for E in J if E == 0) + 2
    nv = 2 * F.n + 1

    h1 = h_row[0]
    target = h1
    for _ in range(p - 1):
        target = target * h1
    rhs = {J: target}

    def order_key(K):
        return (-len(K), -sum(1 for E in K if E != 0), K)

    all_words = set()
    for length in range(len(J) + 1):
        for w in itertools.combinations_with_replacement(range(F.n), length):
            all_words.add(w)
    b_coeffs = {}
    for K in sorted(all_words, key=order_key):
        resid = rhs.pop(K, None)
        if resid is None or resid.is_zero():
            continue
        pivot_word = _sorted_word(K + (0,))
        pivot = (K.count(0) + 1) * h1
        b = resid * pivot.invert_unit()
        _dadd(b_coeffs, pivot_word, b)
        for K2, d in commutator_table(F, pivot_word, Fbar).items():
            if K2 == K:
                o = min(d.order, pivot.order)
                if d.truncate(o) != pivot.truncate(o):
                    raise GeometryError(f"pivot coefficient mismatch at {K}")
            else:
                _dadd(rhs, K2, -(b * d))
    leftovers = {K: v for K, v in rhs.items() if not v.is_zero()}
    if leftovers:
        raise GeometryError(f"triangular solve left residuals at "
                            f"{sorted(leftovers)}")
    verified = False
    if verify_degree is not None:
        verified = _verify_weighted(F, J, Fbar, p, b_coeffs, verify_degree)
        if not verified:
            raise GeometryError("certificate failed monomial verification")
    return CommutatorCertificate(
        kind="weighted", target=f"h[{Fbar + 1}b,1]^{p} L^{_word_label(J)} T",
        word=J, Fbar=Fbar, p=p, leading={}, tail={},
        bracket_coeffs=b_coeffs, verified=verified)


def _monomials(nvars: int, degree: int, order: int):
    for total in range(degree + 1):
        for alpha in itertools.combinations_with_replacement(
                range(nvars), total):
            exps = [0] * nvars
            for v in alpha:
                exps[v] += 1
            yield TruncatedSeries(nvars, order, {tuple(exps): 1})


def _agree(a: TruncatedSeries, b: TruncatedSeries) -> bool:
    o = min(a.order, b.order)
    return a.truncate(o) == b.truncate(o)


def _verify_reduction(F: Frame, word, Fbar, leading, tail, degree) -> bool:
    nv = 2 * F.n + 1
    basis_order = degree + len(word) + 2
    for mono in _monomials(nv, degree, basis_order):
        lhs = apply_commutator(F, word, Fbar, mono)
        tf = F.T.apply(mono)
        rhs = None
        for K, coeff in sorted(leading.items()):
            term = coeff * apply_word(F, K, tf)
            rhs = term if rhs is None else rhs + term
        for K, coeff in sorted(tail.items()):
            rhs = rhs - coeff * apply_word(F, K, tf)
        if not _agree(lhs, rhs):
            return False
    return True


def _verify_weighted(F: Frame, J, Fbar, p, b_coeffs, degree) -> bool:
    nv = 2 * F.n + 1
    basis_order = degree + len(J) + 3
    h1 = _h_row(F, Fbar)[0]
    hp = TruncatedSeries.constant(nv, 1, h1.order)
    for _ in range(p):
        hp = hp * h1
    for mono in _monomials(nv, degree, basis_order):
        lhs = None
        for W, b in sorted(b_coeffs.items()):
            term = b * apply_commutator(F, W, Fbar, mono)
            lhs = term if lhs is None else lhs + term
        rhs = hp * apply_word(F, J, F.T.apply(mono))
        if lhs is None:
            lhs = TruncatedSeries.zero(nv, rhs.order)
        if not _agree(lhs, rhs):
            return False
    return True


def operator_certificates(F: Frame, m: int, Fbar=None, verify_degree=None):
    """Certificates for every sorted word of length m and target of length
    m - 1: the reduction identities and the weighted-word identities."""
    if m < 1:
        raise OrderExhausted("word length must be at least 1")
    certs = []
    for word in itertools.combinations_with_replacement(range(F.n), m):
        certs.append(bracket_reduction(F, word, Fbar, verify_degree))
    for J in itertools.combinations_with_replacement(range(F.n), m - 1):
        certs.append(weighted_certificate(F, J, Fbar, verify_degree))
    return certs
