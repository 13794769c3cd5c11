"""Formal infinitesimal symmetries of a graph germ by exact linear algebra.

A holomorphic polynomial vector field Y = sum a_j(z, w) d/dz_j (the last
slot differentiates along the transverse variable) is tangent to the germ
when the defining series divides Y rho; on a graph chart divisibility is
plain restriction, so the condition is that Y rho composed with the graph
substitution vanishes.  Two linear problems on truncated data follow.
The complex one asks for Y rho = 0 on M: a nonzero solution is a
holomorphic direction the germ does not see, and evidence of holomorphic
degeneracy.  The real one asks for Re Y tangent to M, encoded as
Y rho + conj(Y rho) = 0 on M with the coefficient space split into real
unknowns; its solution space is the polynomial symmetry algebra cut at a
degree.  Both reduce to exact nullspace computations over the rationals.
aut_bound is the closed-form ceiling for the real dimension on finitely
nondegenerate minimal germs.

Truncated runs certify truncated statements only: a zero dimension rules
out candidates up to the stated degree and order, while a positive one is
an obstruction witness, never a degeneracy certificate.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .hypersurface import Hypersurface, ambient_pairing, intrinsic_pairing
from .linalg import nullspace
from .series import CS_I, CS_ONE, CScalar, TruncatedSeries


class AutError(ValueError):
    """Raised on a malformed or vacuously truncated tangency problem."""


def aut_bound(N: int) -> int:
    """Ceiling for the real symmetry dimension of a germ in C^N."""
    if N < 2:
        raise AutError("the bound needs an ambient dimension of at least 2")
    return (2 * N - 1) * comb(4 * N - 3, 2 * N - 2)


class FormalVectorField:
    """Holomorphic polynomial field sum a_j d/dz_j on the ambient chart.

    Coefficients are N truncated series in the holomorphic variables only;
    the field acts on ambient series as a derivation.
    """

    __slots__ = ("N", "order", "coeffs")

    def __init__(self, coeffs):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise AutError("need at least one coefficient")
        N = len(coeffs)
        for c in coeffs:
            if not isinstance(c, TruncatedSeries) or c.nvars != 2 * N:
                raise AutError("coefficients must live on the ambient chart")
            if any(any(a[N:]) for a in c.coeffs):
                raise AutError("coefficients must be holomorphic")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "order", min(c.order for c in coeffs))
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("FormalVectorField is immutable")

    def apply(self, f: TruncatedSeries) -> TruncatedSeries:
        out = None
        for j, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            term = c * f.derive(j)
            out = term if out is None else out + term
        if out is None:
            return TruncatedSeries.zero(2 * self.N, max(f.order - 1, 0))
        return out

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, FormalVectorField):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __repr__(self):
        return f"FormalVectorField(N={self.N}, order={self.order})"


def holomorphic_residual(M: Hypersurface, Y: FormalVectorField):
    """Y rho restricted to the graph; zero iff rho divides Y rho."""
    return M.restrict(Y.apply(M.rho))


def real_residual(M: Hypersurface, Y: FormalVectorField):
    """(Y rho + conj(Y rho)) restricted to the graph; zero iff Re Y is
    tangent."""
    r = Y.apply(M.rho)
    return M.restrict(r + r.conjugate(ambient_pairing(M.N)))


@dataclass(frozen=True)
class TangencySystem:
    """Solved truncated tangency problem with its certificate data.

    unknowns lists the candidate coefficient monomials, (j, alpha) for the
    complex problem and (j, alpha, part) with part 0/1 for the real and
    imaginary split; equations holds the exact constraint rows in the same
    column order.  solution_dim is the nullspace dimension (complex or
    real, matching the problem) and basis realizes it as vector fields.
    """

    kind: str
    d: int
    order: int
    weights: tuple | None
    unknowns: tuple
    equations: tuple
    solution_dim: int
    basis: tuple
    note: str


def _holo_exponents(N: int, d: int, weights, j: int):
    """Candidate monomial exponents for coefficient j, ambient layout.

    Plain runs bound the total degree by d for every coefficient; weighted
    runs bound the weighted degree of the whole field by d, which allows
    coefficient j the extra weight of its own variable.
    """
    if weights is None:
        wt, bound = [1] * N, d
    else:
        wt = list(weights)
        if len(wt) != N or any(w < 1 for w in wt):
            raise AutError("weights must give a positive weight per "
                           "holomorphic variable")
        bound = d + wt[j]
    out = []

    def rec(pos, left, acc):
        if pos == N:
            out.append(tuple(acc) + (0,) * N)
            return
        e = 0
        while e * wt[pos] <= left:
            rec(pos + 1, left - e * wt[pos], acc + [e])
            e += 1

    rec(0, bound, [])
    return sorted(out)


def _solve_tangency(M: Hypersurface, d: int, order: int, weights, real):
    N, W = M.N, M.order
    if d < 0:
        raise AutError("degree bound must be non-negative")
    if order > W - 1:
        raise AutError(
            f"order {order} exceeds the germ's usable truncation {W - 1}")
    pairing = intrinsic_pairing(N - 1)
    grads = [M.rho.derive(j) for j in range(N)]
    # A candidate monomial constrains nothing unless its product with the
    # gradient entry reaches the cutoff; a variable absent from rho gives
    # genuinely free candidates and stays exempt.
    mindeg = [min((sum(e) for e in g.coeffs), default=None) for g in grads]

    unknowns, residuals = [], []
    for j in range(N):
        for alpha in _holo_exponents(N, d, weights, j):
            if mindeg[j] is not None and sum(alpha) + mindeg[j] > order:
                raise AutError(
                    f"order {order} is too small for degree bound {d}: "
                    f"coefficient {j} candidate {alpha} cannot contribute "
                    f"below the cutoff (needs order "
                    f">= {sum(alpha) + mindeg[j]})")
            mono = TruncatedSeries(2 * N, W, {alpha: CS_ONE})
            Rc = M.restrict(mono * grads[j])
            if real:
                Rcc = Rc.conjugate(pairing)
                unknowns.append((j, alpha, 0))
                residuals.append(Rc + Rcc)
                unknowns.append((j, alpha, 1))
                residuals.append(CS_I * (Rc - Rcc))
            else:
                unknowns.append((j, alpha))
                residuals.append(Rc)

    cut = []
    support = set()
    for key, Rfull in zip(unknowns, residuals):
        Req = Rfull.truncate(order)
        if Req.is_zero() and not Rfull.is_zero():
            raise AutError(
                f"order {order} is too small for degree bound {d}: "
                f"candidate {key} only contributes beyond it, so the "
                "system is vacuous there")
        cut.append(Req)
        support.update(Req.coeffs)

    rows = []
    for e in sorted(support):
        col = [R.coeff(e) for R in cut]
        if real:
            re_row = tuple(CScalar(c.re) for c in col)
            im_row = tuple(CScalar(c.im) for c in col)
            if any(re_row):
                rows.append(re_row)
            if any(im_row):
                rows.append(im_row)
        else:
            rows.append(tuple(col))

    vecs = nullspace([list(r) for r in rows], ncols=len(unknowns))
    fields = []
    for v in vecs:
        comps = [TruncatedSeries.zero(2 * N, W) for _ in range(N)]
        for t, key in enumerate(unknowns):
            if v[t].is_zero():
                continue
            c = v[t] * CS_I if real and key[2] else v[t]
            comps[key[0]] = comps[key[0]] + TruncatedSeries(
                2 * N, W, {key[1]: c})
        fields.append(FormalVectorField(comps))
    return tuple(unknowns), tuple(rows), tuple(fields)


def holomorphic_degeneracy_test(M: Hypersurface, d: int, order: int,
                                weights=None) -> TangencySystem:
    """Complex tangency problem Y rho = 0 on M for degree-d coefficients.

    A zero dimension certifies there is no tangent holomorphic field
    within the degree and order tested; a positive dimension exhibits
    witnesses and is evidence of degeneracy, not a proof, since the
    defect could appear above the truncation.
    """
    unknowns, rows, fields = _solve_tangency(M, d, order, weights, False)
    dim = len(fields)
    if dim == 0:
        note = (f"no tangent holomorphic field with coefficient degree "
                f"<= {d}: no obstruction found up to order {order}")
    else:
        note = (f"{dim} independent tangent fields up to order {order}; "
                "degeneracy evidence at this truncation")
    return TangencySystem(kind="holomorphic", d=d, order=order,
                          weights=weights, unknowns=unknowns,
                          equations=rows, solution_dim=dim, basis=fields,
                          note=note)


def infinitesimal_aut_dim(M: Hypersurface, d: int, order: int,
                          weights=None) -> TangencySystem:
    """Real dimension of degree-d fields with Re Y tangent to the germ.

    Each complex coefficient splits into two real unknowns, so the
    dimension is over the reals; the basis realizes one field per
    dimension and every member has zero real tangency residual to the
    stated order.
    """
    unknowns, rows, fields = _solve_tangency(M, d, order, weights, True)
    dim = len(fields)
    return TangencySystem(kind="real", d=d, order=order, weights=weights,
                          unknowns=unknowns, equations=rows,
                          solution_dim=dim, basis=fields,
                          note=f"real tangency dimension {dim} at degree "
                               f"{d}, order {order}")
