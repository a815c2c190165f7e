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
"""Certified enclosures of the Hessian spectrum at the regular polygon.

The finite element values computed by `polyspec.hessian` are turned into
intervals guaranteed to contain the exact block entries ``alpha_k``,
``beta_k`` and ``gamma_k``, and from those into intervals containing the
eigenvalues of the Hessian of J.  The error cascade runs in three
stages:

1. the eigenpair: an enclosure of lambda_1 from the interpolation
   constant C_1 of the mesh, then bounds on the gradient and L2 errors
   of the discrete eigenfunction;

2. the material derivatives: every right-hand side is split into an L2
   part and a part supported on the rays of the fan, which lies in
   ``H^(-1/2-gamma)`` for every ``0 < gamma < 1/2``.  The singular part
   converges at order ``h**(1/2-gamma)``;

3. the bilinear form ``a(U, W) = int grad U.grad W - lambda int U W``
   evaluated on the pairs of functions giving each coefficient, whose
   error is of order ``h**(1-2 gamma)``.

All the arithmetic is done with `Interval`, which inflates every
result by one unit in the last place in each direction.
"""

# Public names:
__all__ = (
    'EigenErrors',
    'EigenfunctionError',
    'ErrorBudget',
    'Interval',
    'NormBounds',
    'RHSBounds',
    'UErrors',
    'Verdict',
    'bilinear_error',
    'c_gamma',
    'certify_local_min',
    'coefficient_intervals',
    'eigen_errors',
    'eigenfunction_error',
    'eigenvalue_interval',
    'error_budget',
    'gradient_norm_bounds',
    'material_rhs_bounds',
    'mu_interval',
    'projection_bounds',
    'rhs_norm_bounds',
    'segment_norm_bound',
    'u_error_bounds',
    'verdict_from_json',
    'verdict_to_json',
)

import collections
import concurrent.futures
import fractions
import json
import logging
import math
import numbers

import numpy
from mpmath import iv

import polyspec
from polyspec import BoundUnavailable
from polyspec import DivisionByZero
from polyspec import InvalidArgument
from polyspec import InvalidMesh
from polyspec import fem
from polyspec import hessian
from polyspec import meshgen


log = logging.getLogger(__name__)

_INF = float('inf')

KINDS = ('alpha', 'beta', 'gamma1', 'gamma2')


def _down(x):
    return float(numpy.nextafter(x, -_INF))


def _up(x):
    return float(numpy.nextafter(x, _INF))


def _product(a, b):
    if a == 0 or b == 0:
        return 0.0
    return a * b


class Interval:
    """A closed interval ``[lo, hi]`` of extended reals.

    Arithmetic on intervals returns an interval containing every result
    of the operation on members of the operands.  Each primitive
    operation is computed in floating point and its endpoints then
    moved outward by one unit in the last place; results known to be
    exact (sums with zero, products with zero, negation) are not
    inflated.

    Numbers mix freely with intervals.  A number that is not a binary
    float (a `fractions.Fraction`, say) becomes the tightest float
    interval around it.
    """

    __slots__ = ('lo', 'hi')

    def __init__(self, lo, hi=None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if not lo <= hi:
            raise InvalidArgument("Invalid interval [%r, %r]" % (lo, hi),
                                  lo=lo, hi=hi)
        self.lo = lo
        self.hi = hi

    @classmethod
    def coerce(class_, value):
        if isinstance(value, Interval):
            return value
        try:
            exact = fractions.Fraction(value)
        except (TypeError, ValueError):
            raise InvalidArgument("Not a real number: %r" % (value, ))
        f = float(exact)
        if fractions.Fraction(f) == exact:
            return class_(f)
        return class_(_down(f), _up(f))

    @classmethod
    def from_center(class_, center, radius):
        """The interval ``center +- radius``."""
        radius = class_.coerce(radius)
        if radius.lo < 0:
            raise InvalidArgument("Negative radius", radius=radius.lo)
        center = class_.coerce(center)
        return class_((center - radius.hi).lo, (center + radius.hi).hi)

    @classmethod
    def _rounded(class_, lo, hi):
        return class_(_down(lo), _up(hi))

    @property
    def is_zero(self):
        return self.lo == 0 and self.hi == 0

    @property
    def is_positive(self):
        return self.lo > 0

    @property
    def contains_zero(self):
        return self.lo <= 0 <= self.hi

    def width(self):
        return _up(self.hi - self.lo)

    def midpoint(self):
        return .5 * (self.lo + self.hi)

    def radius(self):
        return _up(.5 * (self.hi - self.lo))

    def contains(self, value):
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        if isinstance(value, fractions.Fraction):
            return (fractions.Fraction(self.lo) <= value
                    <= fractions.Fraction(self.hi))
        return self.lo <= value <= self.hi

    __contains__ = contains

    def hull(self, *others):
        lo, hi = self.lo, self.hi
        for other in others:
            other = Interval.coerce(other)
            lo, hi = min(lo, other.lo), max(hi, other.hi)
        return Interval(lo, hi)

    def intersection(self, other):
        """The common part, or None for disjoint intervals."""
        other = Interval.coerce(other)
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def max(self, other):
        other = Interval.coerce(other)
        return Interval(max(self.lo, other.lo), max(self.hi, other.hi))

    def min(self, other):
        other = Interval.coerce(other)
        return Interval(min(self.lo, other.lo), min(self.hi, other.hi))

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def __add__(self, other):
        other = Interval.coerce(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        return Interval._rounded(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-Interval.coerce(other))

    def __rsub__(self, other):
        return Interval.coerce(other) + (-self)

    def __mul__(self, other):
        other = Interval.coerce(other)
        if self.is_zero or other.is_zero:
            return Interval(0.0)
        products = [_product(a, b)
                    for a in (self.lo, self.hi)
                    for b in (other.lo, other.hi)]
        return Interval._rounded(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = Interval.coerce(other)
        if other.contains_zero:
            raise DivisionByZero("Interval divisor contains zero",
                                 lo=other.lo, hi=other.hi)
        if self.is_zero:
            return self
        quotients = [a / b
                     for a in (self.lo, self.hi)
                     for b in (other.lo, other.hi)]
        return Interval._rounded(min(quotients), max(quotients))

    def __rtruediv__(self, other):
        return Interval.coerce(other) / self

    def __pow__(self, exponent):
        if isinstance(exponent, numbers.Integral):
            return self._integer_power(int(exponent))
        exponent = float(exponent)
        if self.lo < 0:
            raise InvalidArgument(
                "Real powers need a nonnegative interval", lo=self.lo)
        if exponent == 0:
            return Interval(1.0)
        if self.lo > 0:
            return (exponent * self.log()).exp()
        if self.hi == 0:
            if exponent < 0:
                raise DivisionByZero("Negative power of zero",
                                     exponent=exponent)
            return Interval(0.0)
        top = (exponent * Interval(self.hi).log()).exp()
        if exponent > 0:
            return Interval(0.0, top.hi)
        return Interval(top.lo, _INF)

    def _integer_power(self, p):
        if p == 0:
            return Interval(1.0)
        if p < 0:
            return 1 / self._integer_power(-p)
        if p % 2 == 0:
            a = abs(self)
            return Interval(_point_power(a.lo, p).lo,
                            _point_power(a.hi, p).hi)
        if self.lo >= 0:
            lo = _point_power(self.lo, p).lo
        else:
            lo = -_point_power(-self.lo, p).hi
        if self.hi >= 0:
            hi = _point_power(self.hi, p).hi
        else:
            hi = -_point_power(-self.hi, p).lo
        return Interval(lo, hi)

    def sqrt(self):
        if self.hi < 0:
            raise InvalidArgument("Square root of a negative interval",
                                  hi=self.hi)
        if self.is_zero:
            return self
        lo = max(self.lo, 0.0)
        return Interval(_down(math.sqrt(lo)) if lo > 0 else 0.0,
                        _up(math.sqrt(self.hi)))

    def exp(self):
        lo = max(_down(math.exp(min(self.lo, 709.0))), 0.0)
        return Interval(lo, _up(math.exp(self.hi)) if self.hi < 709 else _INF)

    def log(self):
        if self.hi <= 0:
            raise InvalidArgument("Logarithm of a nonpositive interval",
                                  hi=self.hi)
        lo = _down(math.log(self.lo)) if self.lo > 0 else -_INF
        return Interval(lo, _up(math.log(self.hi)))

    def cos(self):
        return self._periodic(math.cos, 0.0)

    def sin(self):
        if self.is_zero:
            return self
        return self._periodic(math.sin, .5 * math.pi)

    def _periodic(self, f, shift):
        # Extremes of f lie at shift + j pi: maxima for even j, minima
        # for odd j.
        if self.width() >= 2 * math.pi:
            return Interval(-1.0, 1.0)
        values = (f(self.lo), f(self.hi))
        lo, hi = min(values), max(values)
        slack = 1e-12 * max(1.0, abs(self.lo), abs(self.hi))
        first = math.ceil((self.lo - slack - shift) / math.pi)
        last = math.floor((self.hi + slack - shift) / math.pi)
        for j in range(first, last + 1):
            if j % 2:
                lo = -1.0
            else:
                hi = 1.0
        return Interval(max(_down(lo), -1.0), min(_up(hi), 1.0))

    def as_list(self):
        return [self.lo, self.hi]

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return "Interval(%r, %r)" % (self.lo, self.hi)


def _point_power(x, p):
    """Enclosure of ``x**p`` for a float x >= 0 and an integer p >= 1."""
    result = Interval(1.0)
    base = Interval(x)
    while p:
        if p & 1:
            result = result * base
        p >>= 1
        if p:
            base = base * base
    return result


PI = Interval(math.pi, _up(math.pi))
SQRT2 = Interval(2.0).sqrt()


def _theta(n):
    return 2 * PI / n


def _one_minus_cos(n, k):
    """``1 - cos(k theta)`` as ``2 sin(k theta / 2)**2``."""
    return 2 * (Interval(k) * PI / n).sin() ** 2


GAMMA_PRECISION = 30


def _gamma(x):
    saved = iv.dps
    iv.dps = GAMMA_PRECISION
    try:
        value = iv.gamma(iv.mpf(x))
    finally:
        iv.dps = saved
    return Interval._rounded(float(value.a), float(value.b))


def c_gamma(gamma):
    """The trace constant ``sqrt(Gamma(g) / (2 sqrt(pi) Gamma(1/2 + g)))``.

    It bounds the ``H^(-1/2-g)`` norm of a measure carried by a segment
    by the L2 norm of its density.  Returns an `Interval`.
    """
    gamma = float(gamma)
    if not 0 < gamma < .5:
        raise InvalidArgument("The exponent must lie in (0, 1/2)",
                              gamma=gamma)
    return (_gamma(gamma) / (2 * PI.sqrt() * _gamma(.5 + gamma))).sqrt()


def eigenvalue_interval(lambda_h, C1, h):
    """``[lambda_h / (1 + C1**2 h**2 lambda_h**2), lambda_h]``.

    The exact eigenvalue lies in it when lambda_h is the P1 Galerkin
    value on a mesh with interpolation constant ``C1 h``.
    """
    if not lambda_h > 0:
        raise InvalidArgument("The discrete eigenvalue must be positive",
                              eigenvalue=lambda_h)
    lam = Interval(lambda_h)
    lower = lam / (1 + (Interval.coerce(C1) * h * lam) ** 2)
    return Interval(lower.lo, float(lambda_h))


def projection_bounds(lambda1, C1, h):
    """Bounds of ``|grad (u - P_h u)|`` and ``|u - P_h u|`` for the
    eigenfunction u and its elliptic projection P_h u.
    """
    ch = Interval.coerce(C1) * h
    lam = Interval.coerce(lambda1)
    return ch * lam, ch * ch * lam


EigenfunctionError = collections.namedtuple(
    'EigenfunctionError', 'gradient l2 alpha p_bar_gradient p_bar')


def eigenfunction_error(lambda1, lambda1_h, lambda2_h, C1, h):
    """Gradient and L2 errors of the normalized discrete eigenfunction.

    ``P_h u = alpha u_h + p_bar`` with p_bar orthogonal to u_h.  The
    bound on p_bar uses the discrete gap, alpha is bounded below from
    ``|1 - alpha| <= |p_bar|**2 + |u - P_h u| (2 + |u - P_h u|)``.
    """
    lam = Interval.coerce(lambda1)
    lam1h, lam2h = Interval(lambda1_h), Interval(lambda2_h)
    gap_h = lam2h - lam1h
    if not gap_h.is_positive:
        raise BoundUnavailable("The discrete spectral gap is not positive",
                               term='discrete-gap', gap=gap_h.lo)
    grad_p, l2_p = projection_bounds(lam, C1, h)
    drift = abs(lam1h - lam)
    p_bar_gradient = lam2h.sqrt() / gap_h * (drift + lam1h * l2_p)
    p_bar = p_bar_gradient / lam2h.sqrt()
    p_norm = 1 + l2_p
    p_gradient = (lam * p_norm).sqrt()
    one_minus_alpha = p_bar ** 2 + l2_p * (2 + l2_p)
    alpha = 1 - one_minus_alpha
    if not alpha.is_positive:
        raise BoundUnavailable(
            "The mesh is too coarse to bound the eigenfunction error",
            term='alpha', alpha=alpha.lo)
    alpha_lo = Interval(alpha.lo)
    gradient = (grad_p + one_minus_alpha / alpha_lo * p_gradient
                + p_bar_gradient / alpha_lo)
    l2 = l2_p + one_minus_alpha / alpha_lo * p_norm + p_bar / alpha_lo
    return EigenfunctionError(
        Interval(0.0, gradient.hi), Interval(0.0, l2.hi), alpha,
        p_bar_gradient, p_bar)


class EigenErrors(collections.namedtuple(
        'EigenErrors',
        'lambda1_h lambda2_h lambda1 lambda2 eigenvalue lambda2_error '
        'gradient l2')):
    """Everything known about the first eigenpair of a mesh.

    ``lambda1`` and ``lambda2`` enclose the exact eigenvalues,
    ``eigenvalue`` and ``lambda2_error`` bound their distance to the
    discrete ones, ``gradient`` and ``l2`` the eigenfunction errors.
    """

    __slots__ = ()


def eigen_errors(lambda1_h, lambda2_h, C1, h):
    lambda1 = eigenvalue_interval(lambda1_h, C1, h)
    lambda2 = eigenvalue_interval(lambda2_h, C1, h)
    error = eigenfunction_error(lambda1, lambda1_h, lambda2_h, C1, h)
    return EigenErrors(
        float(lambda1_h), float(lambda2_h), lambda1, lambda2,
        Interval(0.0, abs(Interval(lambda1_h) - lambda1).hi),
        Interval(0.0, abs(Interval(lambda2_h) - lambda2).hi),
        error.gradient, error.l2)


def segment_norm_bound(n, segment_norm_h, gradient_error):
    """Bound of the L2 norm of u on the segment [0, 1] x {0}.

    The error on the segment is controlled by the y derivative of the
    error on the unit square above it, which covers at most
    ``floor((n + 1) / 2)`` of the 2n half slices.
    """
    share = Interval((n + 1) // 2) / (2 * n)
    return Interval.coerce(segment_norm_h) + (share.sqrt()
                                              * gradient_error)


RHSBounds = collections.namedtuple(
    'RHSBounds', 'dual regular singular difference')
RHSBounds.__doc__ = """Norms of a right-hand side f = f_reg + f_sing.

dual
    ``|f|`` in H^-1
regular
    ``|f_reg|`` in L2
singular
    ``|f_sing|`` in ``H^(-1/2-gamma)``
difference
    ``|f - f_h|`` in H^-1, or None when no eigenpair errors were given
"""


def _difference_terms(errors):
    if errors is None:
        return None
    return errors.eigenvalue + errors.lambda1_h * errors.l2


def rhs_norm_bounds(n, lambda1, segment_norm, k, gamma, errors=None):
    """`RHSBounds` of the right-hand sides of the W functions for k.

    The W function of a kind sums the rotated material derivatives with
    the weights of that kind: ``cos(j k theta)`` on the radial
    component for alpha, on the tangential one for beta, and
    ``sin(j k theta)`` on the tangential (gamma1) or radial (gamma2)
    component.  Returns a mapping kind -> `RHSBounds`.
    """
    lam = Interval.coerce(lambda1)
    theta = _theta(n)
    sin, cos = theta.sin(), theta.cos()
    cot = cos / sin
    om = _one_minus_cos(n, k)
    op = 2 - om
    cos_sum = sin_sum = Interval(0.0)
    for j in range(n):
        angle = Interval(j * k) * theta
        cos_sum = cos_sum + abs(angle.cos())
        sin_sum = sin_sum + abs(angle.sin())
    trace = lam.sqrt() * Interval.coerce(segment_norm) * c_gamma(gamma)
    drift = _difference_terms(errors)
    root_lam = (lam * om).sqrt() / sin
    tangential = SQRT2 / sin * om.sqrt() * lam
    even = (op / (1 + lam)).sqrt()
    odd = (om / (1 + lam)).sqrt()

    def difference(factor):
        if errors is None:
            return None
        return factor * drift + om.sqrt() / sin * errors.gradient

    return dict(
        alpha=RHSBounds(
            lam * even + root_lam,
            op.sqrt() * lam + tangential,
            2 * cot * cos_sum * om * trace,
            difference(even)),
        beta=RHSBounds(
            lam * cot * odd + root_lam,
            cot * om.sqrt() * lam + tangential,
            2 * cos_sum * om * trace,
            difference(cot * odd)),
        gamma1=RHSBounds(
            lam * cot * odd + root_lam,
            cot * om.sqrt() * lam + tangential,
            2 * sin_sum * om * trace,
            difference(cot * odd)),
        gamma2=RHSBounds(
            lam * even + root_lam,
            op.sqrt() * lam + tangential,
            2 * cot * sin_sum * om * trace,
            difference(even)),
    )


def material_rhs_bounds(n, lambda1, segment_norm, gamma, errors=None):
    """`RHSBounds` of the two material derivatives of vertex 0."""
    lam = Interval.coerce(lambda1)
    theta = _theta(n)
    sin, cos = theta.sin(), theta.cos()
    trace = lam.sqrt() * Interval.coerce(segment_norm) * c_gamma(gamma)
    dual = 2 / sin * (2 * lam / n).sqrt()
    regular = 2 * lam / sin * (Interval(2) / n).sqrt()
    difference = None
    if errors is not None:
        difference = (
            2 * SQRT2 / (Interval(n).sqrt() * sin) * errors.gradient
            + 1 / (1 + lam).sqrt() * (2 * errors.eigenvalue / n
                                      + 2 * lam / n * errors.l2))
    return (
        RHSBounds(dual, regular + 2 * lam / n,
                  2 * (1 + cos) / sin * trace, difference),
        RHSBounds(dual, regular, 2 * trace, difference),
    )


NormBounds = collections.namedtuple(
    'NormBounds', 'U_gradient U V_gradient V Uh_gradient Uh')
NormBounds.__doc__ = """Upper bounds of the norms of U, its projection V
(also valid for the deflated projection) and its discrete solution U_h.
"""


def _gaps(errors):
    gap = errors.lambda2 - errors.lambda1
    if not gap.is_positive:
        raise BoundUnavailable("The spectral gap enclosure contains zero",
                               term='gap', gap=gap.lo)
    gap_h = Interval(errors.lambda2_h) - errors.lambda1_h
    if not gap_h.is_positive:
        raise BoundUnavailable("The discrete spectral gap is not positive",
                               term='discrete-gap', gap=gap_h.lo)
    return gap, gap_h


def gradient_norm_bounds(f, errors):
    """`NormBounds` for the solution with right-hand side bounds f."""
    gap, gap_h = _gaps(errors)
    l1, l2 = errors.lambda1, errors.lambda2
    l2h = Interval(errors.lambda2_h)
    U_gradient = (l2 * (l2 + 1)).sqrt() / gap * f.dual
    discrete = f.dual if f.difference is None else f.dual + f.difference
    Uh_gradient = (l2h * (1 + l2h)).sqrt() / gap_h * discrete
    return NormBounds(
        U_gradient, U_gradient / l2.sqrt(),
        U_gradient, U_gradient / l1.sqrt(),
        Uh_gradient, Uh_gradient / l2h.sqrt())


class UErrors(collections.namedtuple(
        'UErrors',
        'gradient l2 projection_gradient projection_l2 tilde_gradient '
        'tilde_l2 discrete regular norms')):
    """Error bounds of a material derivative type solution U.

    gradient, l2
        ``|grad (U - U_h)|`` and ``|U - U_h|``
    projection_gradient, projection_l2
        the same for the elliptic projection V of U
    tilde_gradient, tilde_l2
        distance from V to its deflation along u_h
    discrete
        ``|grad (V~ - U_h)|``
    regular
        ``|lambda U + f_reg|``
    """

    __slots__ = ()


def u_error_bounds(f, errors, C1, h, gamma):
    """Bounds of the errors of U and U_h for right-hand side bounds f."""
    if f.difference is None:
        raise InvalidArgument("The right-hand side bounds lack |f - f_h|")
    gamma = float(gamma)
    _, gap_h = _gaps(errors)
    norms = gradient_norm_bounds(f, errors)
    l1 = errors.lambda1
    l1h, l2h = Interval(errors.lambda1_h), Interval(errors.lambda2_h)
    ch = Interval.coerce(C1) * h
    regular = l1 * norms.U + f.regular
    weight = (1 + 1 / l1) ** (.5 + gamma)
    projection_gradient = ch * regular + (
        f.singular * ch ** (.5 - gamma) * weight)
    projection_l2 = ch * ch * regular + (
        f.singular * ch ** (1.5 - gamma) * weight)
    tilde_l2 = projection_l2 + norms.V * errors.l2
    tilde_gradient = l1h.sqrt() * tilde_l2
    discrete = l2h.sqrt() / gap_h * (
        errors.eigenvalue * norms.U + l1h * projection_l2
        + (1 + l2h).sqrt() * f.difference)
    gradient = projection_gradient + tilde_gradient + discrete
    l2 = (2 * ch * projection_gradient + norms.V * errors.l2
          + discrete / l2h.sqrt())
    return UErrors(gradient, l2, projection_gradient, projection_l2,
                   tilde_gradient, tilde_l2, discrete, regular, norms)


BilinearError = collections.namedtuple(
    'BilinearError', 'first second third total')


def bilinear_error(a, b, errors, parity=False):
    """Bound of ``|a(U^a, U^b) - a_h(U^a_h, U^b_h)|``.

    With ``parity`` the singular part of the right-hand side of U^b
    vanishes against ``U^a - V^a``, and the product of the projection
    gradient errors is replaced by ``|lambda U^b + f^b_reg| |U^a - V^a|``.
    """
    l1 = errors.lambda1
    if parity:
        first = b.regular * a.projection_l2
    else:
        first = a.projection_gradient * b.projection_gradient
    first = (first + l1 * b.norms.V * a.projection_l2
             + l1 * a.norms.U * b.projection_l2)
    second = (a.norms.V_gradient * b.tilde_gradient
              + b.norms.V_gradient * a.tilde_gradient
              + errors.eigenvalue * a.norms.V * b.norms.V
              + l1 * b.norms.V * a.tilde_l2
              + l1 * a.norms.V * b.tilde_l2)
    third = (a.norms.V_gradient * b.discrete
             + b.norms.Uh_gradient * a.discrete)
    return BilinearError(first, second, third, first + second + third)


# kind -> (component of U_0 paired with W, parity shortcut)
_PAIRINGS = dict(alpha=(0, False), beta=(1, True), gamma1=(0, True))


class ErrorBudget:
    """All bound terms of one certification at one exponent gamma.

    eigen
        `EigenErrors` of the first eigenpair
    segment_norm
        bound of ``|u|`` on the segment from the center to vertex 0
    slice_error
        bounds of ``|A_xx - A_xx,h|`` and ``|A_yy - A_yy,h|``
    material, material_errors
        `RHSBounds` and `UErrors` of the two material derivatives
    rhs, w_errors, bilinear
        per k and kind: `RHSBounds`, `UErrors` and `BilinearError`
    """

    def __init__(self, n, h, C1, gamma, eigen, segment_norm, slice_error,
                 material, material_errors, rhs, w_errors, bilinear,
                 tolerance):
        self.n, self.h, self.C1 = n, h, C1
        self.gamma = gamma
        self.c_gamma = c_gamma(gamma)
        self.eigen = eigen
        self.segment_norm = segment_norm
        self.slice_error = slice_error
        self.material = material
        self.material_errors = material_errors
        self.rhs = rhs
        self.w_errors = w_errors
        self.bilinear = bilinear
        self.tolerance = tolerance

    def terms(self):
        """Upper bounds of all terms by name, in a stable order."""
        result = collections.OrderedDict()
        e = self.eigen
        result['eigenvalue'] = e.eigenvalue.hi
        result['lambda2'] = e.lambda2_error.hi
        result['gradient'] = e.gradient.hi
        result['l2'] = e.l2.hi
        for name, errors in zip(('U0x', 'U0y'), self.material_errors):
            result[name + '.gradient'] = errors.gradient.hi
            result[name + '.l2'] = errors.l2.hi
        for k in sorted(self.rhs):
            for kind in KINDS:
                f = self.rhs[k][kind]
                prefix = '%s[%s].' % (kind, k)
                result[prefix + 'dual'] = f.dual.hi
                result[prefix + 'regular'] = f.regular.hi
                result[prefix + 'singular'] = f.singular.hi
                result[prefix + 'difference'] = f.difference.hi
            for kind in sorted(self.w_errors[k]):
                errors = self.w_errors[k][kind]
                prefix = 'W_%s[%s].' % (kind, k)
                result[prefix + 'gradient'] = errors.gradient.hi
                result[prefix + 'l2'] = errors.l2.hi
        return result

    def as_dict(self):
        return dict(
            n=self.n, h=self.h, C1=self.C1, gamma=self.gamma,
            c_gamma=_jsonable(self.c_gamma),
            eigen=_jsonable(self.eigen),
            segment_norm=_jsonable(self.segment_norm),
            slice_error=_jsonable(self.slice_error),
            material=_jsonable(self.material),
            material_errors=_jsonable(self.material_errors),
            rhs=_jsonable(self.rhs),
            w_errors=_jsonable(self.w_errors),
            bilinear=_jsonable(self.bilinear),
        )

    def __repr__(self):
        return "<ErrorBudget n=%s h=%.3g gamma=%.3g>" % (
            self.n, self.h, self.gamma)


def _jsonable(value):
    if isinstance(value, Interval):
        return value.as_list()
    if isinstance(value, tuple) and hasattr(value, '_fields'):
        return dict((name, _jsonable(getattr(value, name)))
                    for name in value._fields)
    if isinstance(value, dict):
        return dict((str(key), _jsonable(item))
                    for key, item in value.items())
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, numpy.generic):
        return value.item()
    return value


SliceError = collections.namedtuple('SliceError', 'xx yy')


def _slice_error(n, slices, errors):
    # The error on slice 0 is a 1/n share of the total by symmetry.
    share = errors.gradient / Interval(n).sqrt()
    return SliceError(
        (2 * Interval(max(slices.xx, 0.0)).sqrt() + share) * share,
        (2 * Interval(max(slices.yy, 0.0)).sqrt() + share) * share)


def error_budget(n, h, C1, lambda1_h, lambda2_h, segment_norm_h, slices,
                 gamma, ks=None, tolerance=0.0):
    """Assemble the `ErrorBudget` of a symmetric mesh at exponent gamma.

    ``segment_norm_h`` is the L2 norm of u_h on the segment from the
    center to vertex 0 and ``slices`` the `polyspec.hessian.slice_integrals`
    of u_h.
    """
    eigen = eigen_errors(lambda1_h, lambda2_h, C1, h)
    segment_norm = segment_norm_bound(n, segment_norm_h, eigen.gradient)
    material = material_rhs_bounds(n, eigen.lambda1, segment_norm, gamma,
                                   eigen)
    material_errors = tuple(u_error_bounds(f, eigen, C1, h, gamma)
                            for f in material)
    rhs, w_errors, bilinear = {}, {}, {}
    for k in (range(1, n) if ks is None else ks):
        if k == 0:
            continue
        rhs[k] = rhs_norm_bounds(n, eigen.lambda1, segment_norm, k, gamma,
                                 eigen)
        w_errors[k] = {}
        bilinear[k] = {}
        for kind, (component, parity) in _PAIRINGS.items():
            w = u_error_bounds(rhs[k][kind], eigen, C1, h, gamma)
            w_errors[k][kind] = w
            bilinear[k][kind] = bilinear_error(
                material_errors[component], w, eigen, parity)
    return ErrorBudget(n, h, C1, float(gamma), eigen, segment_norm,
                       _slice_error(n, slices, eigen), material,
                       material_errors, rhs, w_errors, bilinear, tolerance)


def _around_zero(value, tolerance):
    return Interval(min(value, 0.0), max(value, 0.0)) + Interval(
        -tolerance, tolerance)


def coefficient_intervals(coefficients, budget):
    """Intervals containing the exact alpha_k, beta_k and gamma_k.

    The computed value is the center.  The radius is ``2 |P|`` times the
    bilinear form error of the pairing, plus ``q_k`` times the error of
    the slice integral for alpha and beta.  All three vanish at k = 0,
    where the intervals only account for the solver tolerance.
    """
    c = coefficients
    k = c.k
    if k == 0:
        return tuple(_around_zero(value, budget.tolerance)
                     for value in (c.alpha, c.beta, c.gamma))
    n = budget.n
    theta = _theta(n)
    area = Interval(n) / 2 * theta.sin()
    scale = 2 * area
    q = 2 * n * _one_minus_cos(n, k) / theta.sin()
    bilinear = budget.bilinear[k]
    alpha = scale * bilinear['alpha'].total + q * budget.slice_error.xx
    beta = scale * bilinear['beta'].total + q * budget.slice_error.yy
    gamma = scale * bilinear['gamma1'].total
    return (Interval.from_center(c.alpha, alpha.hi),
            Interval.from_center(c.beta, beta.hi),
            Interval.from_center(c.gamma, gamma.hi))


def mu_interval(alpha, beta, gamma):
    """Enclosures of both eigenvalues of ``[[a, i g], [-i g, b]]``."""
    alpha, beta, gamma = map(Interval.coerce, (alpha, beta, gamma))
    mean = (alpha + beta) / 2
    root = (((alpha - beta) / 2) ** 2 + gamma ** 2).sqrt()
    return mean - root, mean + root


VerdictEntry = collections.namedtuple(
    'VerdictEntry', 'k alpha beta gamma mu_lo mu_hi point')


class Verdict:
    """Outcome of a local minimality certification.

    entries
        One `VerdictEntry` per k with the coefficient intervals, the two
        eigenvalue intervals and the floating point eigenvalues.
    certified
        True when exactly four intervals contain 0 (the kernel of
        translations, rotation and scaling) and all others are
        positive.
    """

    def __init__(self, n, m, h, gamma, entries, budget=None, config=None):
        self.n, self.m, self.h = n, m, h
        self.gamma = gamma
        self.entries = list(entries)
        self.budget = budget
        self.config = config

    @property
    def intervals(self):
        result = []
        for entry in self.entries:
            result.extend((entry.mu_lo, entry.mu_hi))
        return result

    @property
    def positive(self):
        return sum(1 for i in self.intervals if i.is_positive)

    @property
    def zero(self):
        return sum(1 for i in self.intervals if i.contains_zero)

    @property
    def negative(self):
        return sum(1 for i in self.intervals if i.hi < 0)

    @property
    def certified(self):
        return self.zero == 4 and self.positive == len(self.intervals) - 4

    def total_width(self):
        return sum(i.width() for i in self.intervals
                   if not i.contains_zero)

    def as_dict(self):
        budget = self.budget
        if isinstance(budget, ErrorBudget):
            budget = budget.as_dict()
        config = self.config
        if isinstance(config, polyspec.Configuration):
            config = config.as_dict()
        return dict(
            n=self.n, m=self.m, h=self.h, gamma=self.gamma,
            certified=self.certified, positive=self.positive,
            zero=self.zero, negative=self.negative,
            entries=[dict(k=e.k, alpha=e.alpha.as_list(),
                          beta=e.beta.as_list(), gamma=e.gamma.as_list(),
                          mu_lo=e.mu_lo.as_list(), mu_hi=e.mu_hi.as_list(),
                          point=list(e.point))
                     for e in self.entries],
            budget=budget, config=config,
        )

    def __repr__(self):
        return "<Verdict n=%s m=%s certified=%s positive=%s zero=%s>" % (
            self.n, self.m, self.certified, self.positive, self.zero)


def verdict_to_json(verdict):
    return json.dumps(verdict.as_dict(), indent=2, sort_keys=True)


def verdict_from_json(text):
    data = json.loads(text)

    def interval(pair):
        return Interval(*pair)

    entries = [VerdictEntry(e['k'], interval(e['alpha']),
                            interval(e['beta']), interval(e['gamma']),
                            interval(e['mu_lo']), interval(e['mu_hi']),
                            tuple(e['point']))
               for e in data['entries']]
    return Verdict(data['n'], data['m'], data['h'], data['gamma'], entries,
                   data.get('budget'), data.get('config'))


def _verdict(spectrum, budget, config):
    entries = []
    for c in spectrum.coefficients:
        alpha, beta, gamma = coefficient_intervals(c, budget)
        lo, hi = mu_interval(alpha, beta, gamma)
        entries.append(VerdictEntry(c.k, alpha, beta, gamma, lo, hi,
                                    c.mu()))
    return Verdict(spectrum.n, spectrum.m, spectrum.h, budget.gamma,
                   entries, budget, config)


def certify_local_min(n, m, config=None, mesh=None):
    """Certify that the regular n-gon is a local minimum of J.

    The spectrum is computed on ``symmetric_mesh(n, m)`` with a fixed
    center node (or on the given symmetric mesh, whose center must be
    fixed as well) and the error budget evaluated at every exponent of
    the ``gamma_grid`` option.  The verdict with the fewest intervals
    containing zero, then the smallest total width, is returned.
    """
    config = polyspec.configuration(config)
    if n < 5:
        raise InvalidArgument("Certification needs n >= 5", n=n)
    M = (mesh if mesh is not None
         else meshgen.symmetric_mesh(n, m, center_weight=0))
    if M.hats is None or M.hats.center_weight:
        raise InvalidMesh("Certification needs hat functions vanishing "
                          "at the center")
    first, second = fem.eigenpairs(M, 2, config)
    e = hessian.symmetrize(M, first)
    spectrum = hessian.hessian_spectrum(n, M.m, config, mesh=M, e=e)
    C1 = meshgen.mesh_constant_C1(M)
    segment = math.sqrt(fem.segment_mass(M, e.vector))
    slices = hessian.slice_integrals(M, e)

    def attempt(gamma):
        budget = error_budget(n, M.h, C1, e.value, second.value, segment,
                              slices, gamma, tolerance=config.formula_tol)
        verdict = _verdict(spectrum, budget, config)
        log.debug("gamma=%.4g: %s positive, %s containing zero",
                  gamma, verdict.positive, verdict.zero)
        return verdict

    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(config.threads) as pool:
            verdicts = list(pool.map(attempt, config.gamma_grid))
    else:
        verdicts = [attempt(gamma) for gamma in config.gamma_grid]
    best = min(verdicts, key=lambda v: (v.zero, v.total_width()))
    log.info("n=%s m=%s gamma=%.4g certified=%s (%s positive, %s zero)",
             n, M.m, best.gamma, best.certified, best.positive, best.zero)
    return best
