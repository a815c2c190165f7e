##############################################################################
#
# Copyright polyspec Contributors.
# All Rights Reserved.
#
# This software is subject to the provisions of the Zope Public License,
# Version 2.1 (ZPL).  A copy of the ZPL should accompany this distribution.
# THIS SOFTWARE IS PROVIDED "AS IS" AND ANY AND ALL EXPRESS OR IMPLIED
# WARRANTIES ARE DISCLAIMED, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
# WARRANTIES OF TITLE, MERCHANTABILITY, AGAINST INFRINGEMENT, AND FITNESS
# FOR A PARTICULAR PURPOSE.
#
##############################################################################
"""Analytic constants reducing the polygonal problem to finitely many
computations.

Every value is computed with mpmath at `PRECISION` decimal digits.
The constants are far too large to be practical; they document that
the reduction is finite, nothing more.

K is an upper bound of ``l_n* / pi`` where ``l_n*`` is the optimal value
of ``|P| lambda_1(P)`` among n-gons.  A certified upper bound of
``lambda_1`` of the regular n-gon of area pi is an admissible K as well.
"""

# Public names:
__all__ = (
    'CoveringPlan',
    'PRECISION',
    'SurgeryConstants',
    'covering_plan',
    'edge_constant',
    'inradius_min',
    'lambda_lipschitz',
    'makai_rejects',
    'min_edge_threshold',
    'report',
    'surgery_constants',
)

import collections
import contextlib
import logging

from mpmath import iv
from mpmath import mp

from polyspec import InvalidArgument


log = logging.getLogger(__name__)

PRECISION = 50


@contextlib.contextmanager
def _interval_precision():
    saved = iv.dps
    iv.dps = PRECISION
    try:
        yield iv
    finally:
        iv.dps = saved


def _positive(**values):
    for name, value in sorted(values.items()):
        if not value > 0:
            raise InvalidArgument("%s must be positive" % name,
                                  **{name: float(value)})


def _c(ctx, K):
    return 1 / (2 * ctx.pi * (8 + 12 * ctx.log(2))
                * ctx.exp(1 / (4 * ctx.pi)) * K ** 2)


def _root(ctx, c):
    # positive root of C0**2 + C0 - c
    return (-1 + ctx.sqrt(1 + 4 * c)) / 2


class SurgeryConstants(collections.namedtuple(
        'SurgeryConstants', 'K c C0 r0 k e_star d_star')):
    """Constants of the diameter estimate for optimal n-gons.

    ``c`` bounds the torsion mass, ``C0`` solves ``C0 (C0 + 1) = c`` and
    is also the strip radius ``r0``.  ``k`` strips of width ``8 C0`` are
    needed, ``e_star`` is a power of two with ``2 sqrt(2 e_star) < C0**2``
    and ``d_star = pi / e_star``.  Values are mpmath numbers.
    """

    __slots__ = ()

    def d_max(self, n):
        """Upper bound of the diameter of an optimal n-gon of area pi."""
        with mp.workdps(PRECISION):
            return 2 * self.d_star + (self.k + n - 2) * 8 * self.C0

    def intervals(self):
        """``c`` and ``C0`` recomputed in interval arithmetic."""
        with _interval_precision():
            c = _c(iv, iv.mpf(self.K))
            return dict(c=c, C0=_root(iv, c))

    def residual(self):
        """Enclosure of ``C0**2 + C0 - c``."""
        with _interval_precision():
            C0 = iv.mpf(self.C0)
            return C0 ** 2 + C0 - self.intervals()['c']

    def as_dict(self, n=None):
        result = collections.OrderedDict(
            (name, float(value) if name != 'k' else value)
            for name, value in zip(self._fields, self))
        if n is not None:
            result['D_max'] = float(self.d_max(n))
        return result


def surgery_constants(K):
    _positive(K=K)
    with mp.workdps(PRECISION):
        K = mp.mpf(K)
        c = _c(mp, K)
        C0 = _root(mp, c)
        k = int(mp.floor(1 / (16 * C0 ** 4))) + 1

        def admissible(e):
            return 2 * mp.sqrt(2) * mp.sqrt(e) < C0 ** 2

        power = int(mp.floor(mp.log(C0 ** 4 / 8, 2)))
        while not admissible(mp.ldexp(1, power)):
            power -= 1
        while admissible(mp.ldexp(1, power + 1)):
            power += 1
        e_star = mp.ldexp(1, power - 1)
        d_star = mp.pi / e_star
        log.debug("K=%s c=%s C0=%s k=%s", K, c, C0, k)
        return SurgeryConstants(K, c, C0, C0, k, e_star, d_star)


def inradius_min(l_star_upper, area):
    """Smallest inradius an n-gon of the given area can have while
    ``|P| lambda_1(P) <= l_star_upper``, using ``lambda_1 >= 1 / (4 rho**2)``.
    """
    _positive(l_star_upper=l_star_upper, area=area)
    with mp.workdps(PRECISION):
        return float(mp.sqrt(mp.mpf(area) / (4 * mp.mpf(l_star_upper))))


def makai_rejects(area, inradius, l_star):
    """True when ``rho**2 >= |P| / l*``: such a P cannot be optimal."""
    _positive(area=area, inradius=inradius, l_star=l_star)
    with mp.workdps(PRECISION):
        return bool(mp.mpf(inradius) ** 2 >= mp.mpf(area) / mp.mpf(l_star))


def _lipschitz_factor():
    return 4 * mp.sqrt(2) * mp.pi * mp.exp(1 / (4 * mp.pi))


def lambda_lipschitz(lambda_P, lambda_Q, lambda_cap, delta):
    """Bound of ``|lambda_1(Q) - lambda_1(P)|`` when the vertices of the
    two polygons of area pi are at most delta apart.

    ``lambda_cap`` is the eigenvalue of the intersection of P and Q.
    """
    _positive(lambda_P=lambda_P, lambda_Q=lambda_Q, lambda_cap=lambda_cap)
    if delta < 0:
        raise InvalidArgument("delta must be >= 0", delta=delta)
    with mp.workdps(PRECISION):
        top = max(mp.mpf(lambda_P), mp.mpf(lambda_Q))
        return float(_lipschitz_factor() * top ** 2 * mp.mpf(lambda_cap)
                     * mp.sqrt(delta))


def edge_constant(l_star_prev, delta):
    """The constant C with ``pi lambda_1(P) >= l*_{n-1} - C delta**(1/2)``
    for polygons of area pi having an edge shorter than delta.

    The eigenvalue after collapsing the short edge is at most
    ``lambda_1(B_1) / (rho - 2 delta)**2`` where ``rho**2 > pi / (4 l*)``.
    """
    _positive(l_star_prev=l_star_prev, delta=delta)
    with mp.workdps(PRECISION):
        rho = mp.sqrt(mp.pi / (4 * mp.mpf(l_star_prev))) - 2 * mp.mpf(delta)
        if rho <= 0:
            raise InvalidArgument("delta is too large for the inradius bound",
                                  delta=delta, l_star_prev=l_star_prev)
        disk = mp.besseljzero(0, 1) ** 2
        cap = disk / rho ** 2
        return float(mp.pi * _lipschitz_factor() * cap ** 3)


def min_edge_threshold(l_star_prev, l_star, C):
    """delta_0 = ((l*_{n-1} - l*_n) / C)**2."""
    _positive(C=C)
    gap = l_star_prev - l_star
    if not gap > 0:
        raise InvalidArgument("l_star_prev must exceed l_star",
                              l_star_prev=l_star_prev, l_star=l_star)
    with mp.workdps(PRECISION):
        return float((mp.mpf(gap) / mp.mpf(C)) ** 2)


CoveringPlan = collections.namedtuple(
    'CoveringPlan', 'dimension log10_count log10_constant')


def covering_plan(D_max, delta, n):
    """Number of delta balls covering the admissible polygons,
    ``(sqrt(2n - 4) D / (2 delta))**(2n - 4) (D / delta)**(2n - 4)``.

    Only logarithms are reported.
    """
    _positive(D_max=D_max, delta=delta)
    if n < 3:
        raise InvalidArgument("n must be >= 3", n=n)
    dimension = 2 * n - 4
    with mp.workdps(PRECISION):
        D, delta = mp.mpf(D_max), mp.mpf(delta)
        constant = dimension * mp.log10(
            mp.sqrt(dimension) * D / (2 * delta))
        count = constant + dimension * mp.log10(D / delta)
        return CoveringPlan(dimension, float(count), float(constant))


def report(K, n, delta, l_star_prev=None, l_star=None):
    """Every constant of the reduction for n-gons, as a mapping."""
    constants = surgery_constants(K)
    D = constants.d_max(n)
    result = constants.as_dict(n)
    result['n'] = n
    result['delta'] = delta
    result['covering'] = covering_plan(D, delta, n)._asdict()
    if l_star is not None:
        result['inradius_min'] = inradius_min(l_star, float(mp.pi))
    if l_star_prev is not None:
        C = edge_constant(l_star_prev, delta)
        result['edge_constant'] = C
        if l_star is not None:
            result['delta_0'] = min_edge_threshold(l_star_prev, l_star, C)
    return result
