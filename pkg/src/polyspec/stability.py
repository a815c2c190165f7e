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
"""Explicit perturbation estimates around the regular polygon.

A polygon P whose vertices lie within epsilon of those of the regular
n-gon has a first eigenpair close to the regular one.  The bounds here
are evaluated with `polyspec.certify.Interval`; the empirical checks
measure the same quantities with finite elements.
"""

# Public names:
__all__ = (
    'ContinuityProbe',
    'DriftSample',
    'PerturbationBudget',
    'e_bounds',
    'eps0',
    'gap_lower_bound',
    'hessian_continuity_probe',
    'inradius_regular',
    'measured_drift',
    'perturbation_budget',
    'random_displacement',
    'ratio_bound',
    'report',
    'torsion_gap',
    'write_drift_csv',
)

import collections
import csv
import logging
import math

import numpy
import scipy.special

import polyspec
from polyspec import BoundUnavailable
from polyspec import InvalidArgument
from polyspec import fem
from polyspec import hessian
from polyspec import meshgen
from polyspec import polygeom
from polyspec.certify import PI
from polyspec.certify import Interval


log = logging.getLogger(__name__)


def eps0(n):
    """Largest vertex displacement keeping the perturbations convex
    with a margin: ``sin(pi / n)**2 / 4``.
    """
    return .25 * math.sin(math.pi / n) ** 2


def inradius_regular(n):
    return math.cos(math.pi / n)


def gap_lower_bound(diameter):
    """``lambda_2 - lambda_1 >= 3 pi**2 / diam**2`` for convex sets."""
    return 3 * PI ** 2 / Interval.coerce(diameter) ** 2


def ratio_bound():
    """Upper bound ``(j_11 / j_01)**2`` of lambda_2 / lambda_1."""
    j01 = float(scipy.special.jn_zeros(0, 1)[0])
    j11 = float(scipy.special.jn_zeros(1, 1)[0])
    return (Interval.coerce(j11) / j01) ** 2


class PerturbationBudget(collections.namedtuple(
        'PerturbationBudget',
        'epsilon n lambda_star lambda1 gap r_n')):
    """Inputs of the perturbation bounds.

    lambda_star
        first eigenvalue of the regular n-gon
    lambda1, gap
        first eigenvalue of the perturbed polygon and its gap
        ``lambda_2 - lambda_1`` (a lower bound suffices)
    """

    __slots__ = ()


def perturbation_budget(n, epsilon, lambda_star, lambda1=None,
                        lambda2=None):
    """Build a `PerturbationBudget`.

    Without lambda1 the inclusion of the scaled polygons gives
    ``lambda1 <= (r / (r - epsilon))**2 lambda_star``.  Without lambda2
    the gap is bounded below by `gap_lower_bound` of the diameter
    ``2 (1 + epsilon)``.
    """
    epsilon = float(epsilon)
    if not 0 <= epsilon <= eps0(n):
        raise InvalidArgument(
            "epsilon must lie in [0, eps0(n)] = [0, %.6g]" % eps0(n),
            epsilon=epsilon, n=n)
    r = (PI / n).cos()
    lambda_star = Interval.coerce(lambda_star)
    if lambda1 is None:
        lambda1 = (r / (r - epsilon)) ** 2 * lambda_star
    lambda1 = Interval.coerce(lambda1)
    if lambda2 is None:
        gap = gap_lower_bound(2 * (1 + Interval(epsilon)))
    else:
        gap = Interval.coerce(lambda2) - lambda1
    return PerturbationBudget(epsilon, n, lambda_star, lambda1, gap, r)


EBounds = collections.namedtuple('EBounds', 'E1 E2 E3 E4')


def e_bounds(budget):
    """The four perturbation terms.

    ``|lambda_1 - lambda_1*|`` and ``int |grad (u_1 - u_1*)|**2`` are
    both at most ``2 (E1 + E3)``; E4 bounds ``|psi - u_1|**2`` for the
    solution psi on P with the regular eigenfunction as load.
    """
    b = budget
    if not b.gap.is_positive:
        raise BoundUnavailable("The spectral gap enclosure contains zero",
                               term='gap', gap=b.gap.lo)
    eps = Interval(b.epsilon)
    lam_star, lam, r = b.lambda_star, b.lambda1, b.r_n
    # |u_1*|_inf**2 <= lambda_1*
    E1 = eps * lam_star ** 2 * lam_star * (
        2 * PI + 2 * PI * (1 + eps) ** 3)
    widened = lam_star / (1 + eps) ** 2
    t = (E1 / widened).sqrt()
    grown = r + eps
    # (r + e)**4 - r**4 and 1 - (r / (r + e))**2, factored
    quartic = eps * (2 * r + eps) * (grown ** 2 + r ** 2)
    E2 = lam / b.gap * quartic / r ** 4 + 2 * (lam + b.gap) / b.gap * t
    alpha = Interval(max(0.0, (1 - E2).lo)).sqrt()
    shrink = eps * (2 * r + eps) / grown ** 2
    E3 = 2 * lam * E2 / (1 + alpha) + lam_star * shrink + lam_star * t
    E4 = 2 * E2 / (1 + alpha) + 2 * t + t ** 2
    return EBounds(E1, E2, E3, E4)


def torsion_gap(f_inf, areas, diams, d_H):
    """Bound of ``int |grad v_a - grad v_b|**2`` for the solutions of
    ``-Delta v = f`` on two convex domains with a common load f >= 0.
    """
    (area_a, area_b), (diam_a, diam_b) = areas, diams
    bound = Interval.coerce(d_H) * Interval.coerce(f_inf) ** 2 * (
        Interval.coerce(area_a) * diam_a + Interval.coerce(area_b) * diam_b)
    return bound.hi


def random_displacement(n, epsilon, rng):
    """n vectors drawn uniformly from the disk of radius epsilon."""
    radius = epsilon * numpy.sqrt(rng.uniform(size=n))
    angle = rng.uniform(0, 2 * math.pi, size=n)
    return numpy.column_stack((radius * numpy.cos(angle),
                               radius * numpy.sin(angle)))


DriftSample = collections.namedtuple(
    'DriftSample', 'epsilon displacement eigenvalue drift')


def measured_drift(n, epsilon, trials=20, seed=None, levels=3,
                   config=None):
    """Finite element values of ``|lambda_1(P) - lambda_1*|`` for random
    perturbations P, on morphs of one mesh of the regular polygon.
    """
    config = polyspec.configuration(config)
    rng = numpy.random.default_rng(config.seed if seed is None else seed)
    base = meshgen.fan_refined_mesh(polygeom.regular_polygon(n), levels)
    reference = fem.eigenpairs(base, 1, config)[0].value
    samples = []
    for _ in range(trials):
        d = random_displacement(n, epsilon, rng)
        M = meshgen.morph_mesh(base, None, d)
        value = fem.eigenpairs(M, 1, config)[0].value
        samples.append(DriftSample(
            epsilon, float(numpy.hypot(*d.T).max()), value,
            abs(value - reference)))
    return samples


ContinuityProbe = collections.namedtuple(
    'ContinuityProbe', 'rows exponent')
ProbeRow = collections.namedtuple('ProbeRow', 'epsilon drift kernel')


def hessian_continuity_probe(n, epsilons, trials=3, seed=None, levels=2,
                             config=None):
    """Drift of the Hessian of J away from the regular polygon.

    For every epsilon the largest entrywise difference between the
    Hessian at a random perturbation and at the regular polygon is
    recorded, together with ``|H t_x| / |H|`` at the perturbation.  The
    exponent is the slope of log drift against log epsilon.
    """
    config = polyspec.configuration(config)
    rng = numpy.random.default_rng(config.seed if seed is None else seed)
    base = meshgen.fan_refined_mesh(polygeom.regular_polygon(n), levels)
    reference = hessian.hessian_blocks_direct(None, base, config=config)
    t_x = polygeom.kernel_basis(n).t_x
    rows = []
    for epsilon in epsilons:
        drift = kernel = 0.0
        for _ in range(trials):
            d = random_displacement(n, epsilon, rng)
            M = meshgen.morph_mesh(base, None, d)
            H = hessian.hessian_blocks_direct(None, M, config=config)
            drift = max(drift, float(
                numpy.abs(H.matrix - reference.matrix).max()))
            kernel = max(kernel, float(
                numpy.linalg.norm(H.matrix @ t_x)) / H.norm())
        log.debug("epsilon=%.3g drift=%.3g kernel=%.3g",
                  epsilon, drift, kernel)
        rows.append(ProbeRow(float(epsilon), drift, kernel))
    exponent = None
    usable = [row for row in rows if row.drift > 0 and row.epsilon > 0]
    if len(usable) >= 2:
        exponent = float(numpy.polyfit(
            numpy.log([row.epsilon for row in usable]),
            numpy.log([row.drift for row in usable]), 1)[0])
    return ContinuityProbe(rows, exponent)


def write_drift_csv(rows, stream):
    """CSV of `DriftSample` or continuity probe rows."""
    rows = list(rows)
    writer = csv.writer(stream, lineterminator='\n')
    if not rows:
        return
    writer.writerow(rows[0]._fields)
    for row in rows:
        writer.writerow(tuple('%.9g' % value for value in row))


def report(n, epsilon, trials=20, levels=3, config=None):
    """Bounds and measurements for perturbations of size epsilon.

    The regular eigenvalue is the finite element value widened with
    `polyspec.certify.eigenvalue_interval`.
    """
    from polyspec import certify
    config = polyspec.configuration(config)
    M = meshgen.fan_refined_mesh(polygeom.regular_polygon(n), levels)
    value = fem.eigenpairs(M, 1, config)[0].value
    lambda_star = certify.eigenvalue_interval(
        value, meshgen.mesh_constant_C1(M), M.h)
    bounds = e_bounds(perturbation_budget(n, epsilon, lambda_star))
    samples = measured_drift(n, epsilon, trials, None, levels, config)
    limit = (2 * (bounds.E1 + bounds.E3)).hi
    drift = max(sample.drift for sample in samples)
    if drift > limit:
        log.warning("Measured drift %.3g exceeds the bound %.3g",
                    drift, limit)
    return dict(
        n=n, epsilon=epsilon, eps0=eps0(n),
        lambda_star=lambda_star.as_list(),
        E1=bounds.E1.hi, E2=bounds.E2.hi, E3=bounds.E3.hi,
        E4=bounds.E4.hi, limit=limit, measured=drift, trials=trials,
        config=config.as_dict(),
    )
