"""CR maps between graph germs: transport data and reflection identities.

A map enters in ambient form, as N holomorphic truncated series sending one
graph hypersurface into another.  Restricting to the source chart and
pulling the target coframe back through the restriction yields the frame
transport

    f_*(T, L_B, L_Bb) = (That, Lhat_A, Lhat_Ab) [[xi,     0,     0    ],
                                                 [eta,    gamma, 0    ],
                                                 [etabar, 0,     gbar ]],

with xi real and gamma invertible at 0.  The verify functions confirm the
first-order identities these data satisfy against the h tensors of both
germs, and solve_levi_reflection inverts the Levi-step identity: with both
Levi pairings nondegenerate at 0 it reconstructs (gamma, eta) from xi and
the conjugated data alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .hypersurface import (
    Frame,
    Hypersurface,
    OneForm,
    ambient_pairing,
    ambient_var,
    from_defining,
    intrinsic_pairing,
)
from .invariants import CheckReport, h_tensor
from .linalg import rank, series_solve
from .series import SeriesError, TruncatedSeries

HALF = Fraction(1, 2)


class MappingError(ValueError):
    """Raised when a map fails a precondition of this module."""


class AmbientMap:
    """Holomorphic truncated map between two graph germs.

    Components are N series in the ambient chart of the source, holomorphic
    (no conjugated variables).  A map whose origin image q is a nonzero
    point of the target is accepted when q lies exactly on the target: the
    target germ is recentered at q and the components are conjugated by the
    same coordinate change, so the stored map always fixes the origin.  The
    absorbed point is kept in base_point.
    """

    __slots__ = ("N", "n", "order", "components", "source", "target",
                 "base_point")

    def __init__(self, components, source: Hypersurface,
                 target: Hypersurface):
        components = list(components)
        N = source.N
        if target.N != N:
            raise MappingError("source and target dimensions differ")
        if len(components) != N:
            raise MappingError(f"need {N} components, got {len(components)}")
        for c in components:
            if not isinstance(c, TruncatedSeries) or c.nvars != 2 * N:
                raise MappingError("components must live on the ambient chart")
            if any(any(a[N:]) for a in c.coeffs):
                raise MappingError("components must be holomorphic")

        q = [c.constant_term() for c in components]
        if any(not v.is_zero() for v in q):
            p = q + [v.conj() for v in q]
            if not target.rho.eval_at(p).is_zero():
                raise MappingError(
                    "origin image is not exactly on the target germ")
            target = from_defining(target.rho.recenter(p), N)
            P = target.change
            shifted = [c - v for c, v in zip(components, q)]
            components = []
            for r in range(N):
                acc = TruncatedSeries.zero(2 * N, shifted[0].order)
                for c in range(N):
                    if not P[r][c].is_zero():
                        acc = acc + P[r][c] * shifted[c]
                components.append(acc)
            base_point = tuple(q)
        else:
            base_point = ()

        order = min(min(c.order for c in components),
                    source.order, target.order)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "n", N - 1)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "components",
                           tuple(c.truncate(order) for c in components))
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "base_point", base_point)

    def __setattr__(self, name, value):
        raise AttributeError("AmbientMap is immutable")

    def conjugate_components(self):
        pairing = ambient_pairing(self.N)
        return tuple(c.conjugate(pairing) for c in self.components)

    def jacobian_at0(self):
        """Holomorphic Jacobian matrix at the origin."""
        return [[self.components[r].derive(c).constant_term()
                 for c in range(self.N)] for r in range(self.N)]

    def __repr__(self):
        return f"AmbientMap(N={self.N}, order={self.order})"


def identity_map(M: Hypersurface, order=None) -> AmbientMap:
    W = M.order if order is None else order
    comps = [ambient_var(M.N, j, W) for j in range(M.n)]
    comps.append(ambient_var(M.N, M.N - 1, W))
    return AmbientMap(comps, M, M)


def compose_maps(F: AmbientMap, G: AmbientMap) -> AmbientMap:
    """The map F after G; the middle germs must be the same chart."""
    if F.source.rho != G.target.rho:
        raise MappingError("composition needs a matching middle germ")
    subs = list(G.components) + list(G.conjugate_components())
    comps = [c.compose(subs) for c in F.components]
    return AmbientMap(comps, G.source, F.target)


def tangency_residual(F: AmbientMap) -> TruncatedSeries:
    """Target defining series pulled through the map, restricted to the
    source graph; the zero series exactly when F sends source into target."""
    subs = list(F.components) + list(F.conjugate_components())
    pulled = F.target.rho.compose(subs)
    return F.source.restrict(pulled)


def restrict(F: AmbientMap):
    """Intrinsic components (z'_A, zb'_A, s') of the map on the source chart.

    Raises when the tangency residual is nonzero: the image then leaves the
    target germ and no chart restriction exists.
    """
    if not tangency_residual(F).is_zero():
        raise MappingError(
            "map does not send the source germ into the target "
            "(tangency residual is nonzero)")
    subs = F.source.graph_substitution()
    zprime = [F.components[j].compose(subs) for j in range(F.n)]
    wprime = F.components[F.N - 1].compose(subs)
    pairing = intrinsic_pairing(F.n)
    zbar = [c.conjugate(pairing) for c in zprime]
    sprime = HALF * (wprime + wprime.conjugate(pairing))
    return tuple(zprime) + tuple(zbar) + (sprime,)


@dataclass(frozen=True)
class PushforwardData:
    """Transport data (xi, eta^A, gamma^A_B) of a map between framed germs.

    gamma[A][B] is the coefficient of the target field A in the image of
    the source field B.  imap carries the intrinsic components so target
    quantities can be composed with the map.
    """

    xi: TruncatedSeries
    eta: tuple
    gamma: tuple
    imap: tuple
    source_frame: Frame
    target_frame: Frame

    @property
    def n(self):
        return len(self.eta)

    def conjugated(self) -> "ConjugateData":
        pairing = intrinsic_pairing(self.n)
        gbar = tuple(tuple(self.gamma[C][A].conjugate(pairing)
                           for A in range(self.n)) for C in range(self.n))
        ebar = tuple(e.conjugate(pairing) for e in self.eta)
        return ConjugateData(xi=self.xi, gammabar=gbar, etabar=ebar,
                             imap=self.imap)


@dataclass(frozen=True)
class ConjugateData:
    """The reflected inputs: xi together with conj(gamma) and conj(eta)."""

    xi: TruncatedSeries
    gammabar: tuple
    etabar: tuple
    imap: tuple


def _pullback(form: OneForm, imap) -> OneForm:
    subs = list(imap)
    nv = len(subs)
    coeffs = []
    for v in range(nv):
        acc = TruncatedSeries.zero(nv, subs[0].order - 1)
        for u in range(nv):
            cu = form.coeffs[u]
            if cu.is_zero():
                continue
            acc = acc + cu.compose(subs) * imap[u].derive(v)
        coeffs.append(acc)
    return OneForm(coeffs)


def pushforward_data(F: AmbientMap, frame_src: Frame,
                     frame_tgt: Frame) -> PushforwardData:
    """Transport data from the pulled-back target coframe.

    The pullback of theta-hat must be a multiple of theta and the pullback
    of each theta-hat^A must have no antiholomorphic component; both are
    checked, since together they say the map is CR.  gamma must be
    invertible at 0 and xi real and nonzero at 0.
    """
    imap = restrict(F)
    n = F.n
    f_theta = _pullback(frame_tgt.theta, imap)
    f_thetaA = [_pullback(th, imap) for th in frame_tgt.thetaA]

    for B in range(n):
        if not f_theta.pair(frame_src.L[B]).is_zero() or \
                not f_theta.pair(frame_src.Lbar[B]).is_zero():
            raise MappingError(
                "pulled-back characteristic form is not proportional to "
                "the source one; the map is not CR")
        for A in range(n):
            if not f_thetaA[A].pair(frame_src.Lbar[B]).is_zero():
                raise MappingError(
                    "pulled-back holomorphic coframe has an antiholomorphic "
                    "component; the map is not CR")

    xi = f_theta.pair(frame_src.T)
    eta = tuple(f_thetaA[A].pair(frame_src.T) for A in range(n))
    gamma = tuple(tuple(f_thetaA[A].pair(frame_src.L[B]) for B in range(n))
                  for A in range(n))

    xi0 = xi.constant_term()
    if xi0.is_zero() or not xi0.is_real():
        raise MappingError("transverse factor must be real and nonzero at 0")
    pairing = intrinsic_pairing(n)
    if xi.conjugate(pairing) != xi:
        raise MappingError("transverse factor came out non-real")
    g0 = [[gamma[A][B].constant_term() for B in range(n)] for A in range(n)]
    if rank(g0) != n:
        raise MappingError("map is not a diffeomorphism at 0 "
                           "(CR Jacobian singular)")
    return PushforwardData(xi=xi, eta=eta, gamma=gamma, imap=tuple(imap),
                           source_frame=frame_src, target_frame=frame_tgt)


def _through(series: TruncatedSeries, imap) -> TruncatedSeries:
    return series.compose(list(imap))


def verify_reflection_base(data: PushforwardData, tensors) -> CheckReport:
    """Residuals of the five first-order transport identities.

    tensors is the pair (source length-1 tensor, target length-1 tensor).
    Each identity must give the zero series; violations carry an identity
    label and the offending indices.
    """
    src, tgt = tensors
    n = data.n
    Fm = data.source_frame
    pairing = intrinsic_pairing(n)
    xi, eta, gamma = data.xi, data.eta, data.gamma
    gbar = [[gamma[C][A].conjugate(pairing) for A in range(n)]
            for C in range(n)]
    hhat = [[_through(tgt.h((C,), D), data.imap) for D in range(n)]
            for C in range(n)]
    hhatT = [_through(tgt.transverse((C,)), data.imap) for C in range(n)]

    checked, violations = 0, []

    def record(label, idx, res):
        nonlocal checked
        checked += 1
        if not res.is_zero():
            violations.append((label, idx))

    for A in range(n):
        for B in range(n):
            res = xi * src.h((A,), B)
            for C in range(n):
                for D in range(n):
                    res = res - gamma[D][B] * gbar[C][A] * hhat[C][D]
            record("levi-transport", (A, B), res)
    for A in range(n):
        for B in range(n):
            for E in range(n):
                res = Fm.Lbar[A].apply(gamma[E][B]) + eta[E] * src.h((A,), B)
                record("gamma-derivative", (A, B, E), res)
    for A in range(n):
        res = Fm.Lbar[A].apply(xi) + xi * src.transverse((A,))
        for C in range(n):
            res = res - xi * gbar[C][A] * hhatT[C]
            for D in range(n):
                res = res - gbar[C][A] * eta[D] * hhat[C][D]
        record("xi-derivative", (A,), res)
    for A in range(n):
        for C in range(n):
            res = Fm.Lbar[A].apply(eta[C]) + eta[C] * src.transverse((A,))
            record("eta-derivative", (A, C), res)
    for A in range(n):
        for C in range(n):
            res = Fm.T.apply(gamma[C][A]) - Fm.L[A].apply(eta[C]) \
                - eta[C] * src.transverse((A,)).conjugate(pairing)
            record("transverse-derivative", (A, C), res)
    return CheckReport(name="reflection-base", ok=not violations,
                       checked=checked, violations=tuple(violations))


def verify_transport_recursion(data: PushforwardData, tensors,
                               k: int) -> CheckReport:
    """Residuals of the two k-indexed transport identities.

    For each bar tuple of length k, differentiating the gamma- or
    eta-contracted target entry along a conjugate field must reproduce the
    length-(k+1) entry minus the transverse and Levi correction terms.
    tensors is (source length-1, target length-1, target length-k, target
    length-(k+1)); pass None to compute all four from the stored frames.
    """
    if tensors is None:
        src = h_tensor(data.source_frame, 1)
        tensors = (src, h_tensor(data.target_frame, 1),
                   h_tensor(data.target_frame, k),
                   h_tensor(data.target_frame, k + 1))
    src, tgt1, tgtk, tgtk1 = tensors
    n = data.n
    Fm = data.source_frame
    pairing = intrinsic_pairing(n)
    eta, gamma = data.eta, data.gamma
    gbar = [[gamma[C][A].conjugate(pairing) for A in range(n)]
            for C in range(n)]
    h1 = [[_through(tgt1.h((I,), H), data.imap) for H in range(n)]
          for I in range(n)]

    checked, violations = 0, []
    for abar in product(range(n), repeat=k):
        hk = [_through(tgtk.h(abar, D), data.imap) for D in range(n)]
        hkT = _through(tgtk.transverse(abar), data.imap)
        hk1 = [[_through(tgtk1.h(abar + (I,), H), data.imap)
                for H in range(n)] for I in range(n)]
        for B in range(n):
            for C in range(n):
                inner = gamma[0][B] * hk[0]
                for D in range(1, n):
                    inner = inner + gamma[D][B] * hk[D]
                res = Fm.Lbar[C].apply(inner)
                for H in range(n):
                    for I in range(n):
                        res = res - gamma[H][B] * gbar[I][C] * hk1[I][H] \
                            + gamma[H][B] * gbar[I][C] * hkT * h1[I][H]
                    res = res + eta[H] * hk[H] * src.h((C,), B)
                checked += 1
                if not res.is_zero():
                    violations.append(("gamma-recursion", abar, B, C))
        for C in range(n):
            inner = eta[0] * hk[0]
            for D in range(1, n):
                inner = inner + eta[D] * hk[D]
            res = Fm.Lbar[C].apply(inner)
            for H in range(n):
                for I in range(n):
                    res = res - eta[H] * gbar[I][C] * hk1[I][H] \
                        + eta[H] * gbar[I][C] * hkT * h1[I][H]
                res = res + eta[H] * hk[H] * src.transverse((C,))
            checked += 1
            if not res.is_zero():
                violations.append(("eta-recursion", abar, C))
    return CheckReport(name="transport-recursion", ok=not violations,
                       checked=checked, violations=tuple(violations))


def solve_levi_reflection(conj: ConjugateData, tensors, frame_src: Frame):
    """Reconstruct (gamma, eta) from xi and the conjugated data.

    Inverts the Levi-transport identity: the pairing matrix
    sum_C gammabar^C_A hhat_{CbD} is a unit matrix at 0 exactly when both
    germs are Levi-nondegenerate there, and then gamma solves the
    Levi-transport rows while eta solves the xi-derivative rows.
    """
    src, tgt = tensors
    n = frame_src.n
    xi = conj.xi
    G = [[None] * n for _ in range(n)]
    for A in range(n):
        for D in range(n):
            acc = conj.gammabar[0][A] * _through(tgt.h((0,), D), conj.imap)
            for C in range(1, n):
                acc = acc + conj.gammabar[C][A] * \
                    _through(tgt.h((C,), D), conj.imap)
            G[A][D] = acc
    try:
        cols = []
        for B in range(n):
            rhs = [xi * src.h((A,), B) for A in range(n)]
            cols.append(series_solve(G, rhs))
        gamma = tuple(tuple(cols[B][D] for B in range(n)) for D in range(n))
        rhs = []
        for A in range(n):
            r = frame_src.Lbar[A].apply(xi) + xi * src.transverse((A,))
            for C in range(n):
                r = r - xi * conj.gammabar[C][A] * \
                    _through(tgt.transverse((C,)), conj.imap)
            rhs.append(r)
        eta = tuple(series_solve(G, rhs))
    except SeriesError as exc:
        raise MappingError(
            "Levi pairing is singular at 0; reconstruction needs "
            "1-nondegenerate germs") from exc
    return gamma, eta
