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
"""Gradient descent of ``J(P) = |P| lambda_1(P)`` over vertex coordinates.

Every iterate is meshed from scratch with
`polyspec.meshgen.fan_refined_mesh` and the step is chosen by Armijo
backtracking.  Accepted iterates are centered and scaled to area pi,
which leaves J unchanged.
"""

# Public names:
__all__ = (
    'ARMIJO',
    'DescentRun',
    'MIN_STEP',
    'REFERENCE_J',
    'Step',
    'descend',
    'normalized',
    'polygon_diagnostics',
    'random_polygon',
)

import collections
import csv
import json
import logging
import math

import numpy

import polyspec
from polyspec import GenerationFailure
from polyspec import InfeasibleStep
from polyspec import InvalidArgument
from polyspec import Stalled
from polyspec import fem
from polyspec import hessian
from polyspec import meshgen
from polyspec import polygeom


log = logging.getLogger(__name__)

# Sufficient decrease constant of the line search.
ARMIJO = 1e-4

MIN_STEP = 1e-14

# Optimal values of J found by descent from random polygons; they agree
# with the regular polygons to better than 2e-6.
REFERENCE_J = {
    5: 18.919104,
    6: 18.590116,
    7: 18.429994,
    8: 18.342161,
    9: 18.289808,
    10: 18.256613,
    11: 18.234528,
    12: 18.219257,
    13: 18.208358,
    14: 18.200368,
    15: 18.194378,
}

RADII = (.5, 1.5)


def random_polygon(n, seed=None, attempts=1000):
    """A random star-shaped n-gon around the origin.

    Vertex k sits at angle ``2 pi k / n`` plus a uniform jitter of at
    most ``pi / n`` and at a radius drawn from `RADII`.
    """
    if not isinstance(n, (int, numpy.integer)) or n < 3:
        raise InvalidArgument("n must be an integer >= 3", n=n)
    rng = numpy.random.default_rng(seed)
    base = 2 * math.pi * numpy.arange(n) / n
    for _ in range(attempts):
        angles = base + rng.uniform(-math.pi / n, math.pi / n, size=n)
        radii = rng.uniform(*RADII, size=n)
        try:
            return polygeom.Polygon(numpy.column_stack(
                (radii * numpy.cos(angles), radii * numpy.sin(angles))))
        except InvalidArgument:
            continue
    raise GenerationFailure("No simple polygon in %s attempts" % attempts,
                            n=n, attempts=attempts)


def normalized(P):
    """P centered at its vertex mean and scaled to area pi."""
    v = P.vertices - P.vertices.mean(axis=0)
    return polygeom.Polygon(
        v * math.sqrt(math.pi / polygeom.polygon_area(P)))


def polygon_diagnostics(P):
    """Spread of the edge lengths and angles of P scaled to area pi."""
    P = normalized(P)
    sides = polygeom.edge_lengths(P)
    angles = polygeom.interior_angles(P)
    return dict(diff_sides=float(sides.max() - sides.min()),
                diff_angles=float(angles.max() - angles.min()))


Step = collections.namedtuple(
    'Step', 'iteration J gradient_norm step trials')


class _Evaluation:

    def __init__(self, P, config):
        self.polygon = P
        self.mesh = meshgen.fan_refined_mesh(P, config.descent_levels)
        self.pair = fem.eigenpairs(self.mesh, 2, config)[0]
        self.J = polygeom.polygon_area(P) * self.pair.value

    def gradient(self, config):
        return hessian.scale_invariant_gradient(
            None, self.mesh, self.pair, config)


class DescentRun:
    """The iterates of one descent, with their J values and steps."""

    def __init__(self, config):
        self.config = config
        self.polygons = []
        self.steps = []
        self.converged = False

    @property
    def polygon(self):
        return self.polygons[-1]

    @property
    def values(self):
        return [step.J for step in self.steps]

    @property
    def iterations(self):
        return len(self.steps) - 1

    def write_log(self, stream):
        """CSV with one row per iterate."""
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(Step._fields)
        for step in self.steps:
            writer.writerow((step.iteration, '%.12g' % step.J,
                             '%.6g' % step.gradient_norm,
                             '%.6g' % step.step, step.trials))

    def diagnostics(self, extrapolate=False):
        """The final polygon's J, spreads and gap to `REFERENCE_J`.

        With extrapolate, J is also computed one refinement finer and
        Richardson extrapolated.
        """
        P = self.polygon
        n = P.n
        result = dict(n=n, J=self.steps[-1].J,
                      iterations=self.iterations,
                      converged=self.converged,
                      gradient_norm=self.steps[-1].gradient_norm)
        result.update(polygon_diagnostics(P))
        if extrapolate:
            fine = self.config.replace(
                descent_levels=str(self.config.descent_levels + 1))
            result['J_extrapolated'] = fem.richardson(
                result['J'], _Evaluation(P, fine).J)
        reference = REFERENCE_J.get(n)
        if reference is not None:
            result['reference'] = reference
            result['gap'] = result.get('J_extrapolated',
                                       result['J']) - reference
        result['vertices'] = P.vertices.tolist()
        return result

    def diagnostics_json(self, **options):
        return json.dumps(self.diagnostics(**options), indent=2,
                          sort_keys=True)

    def __repr__(self):
        return "<DescentRun n=%s iterations=%s J=%.9g>" % (
            self.polygon.n, self.iterations, self.steps[-1].J)


def _trial(P, d, config):
    try:
        Q = polygeom.Polygon(P.vertices + d.reshape(-1, 2))
    except InvalidArgument:
        return None
    return _Evaluation(normalized(Q), config)


def descend(P0, config=None):
    """Minimize J from P0.

    Stops when the gradient norm drops to ``descent_tol`` or after
    ``descent_maxiter`` iterations.  Raises `polyspec.Stalled` when
    the step falls below `MIN_STEP` without sufficient decrease and
    `polyspec.InfeasibleStep` when no trial step gave a simple polygon.
    A multiple first eigenvalue aborts the run with
    `polyspec.Unsupported`.
    """
    config = polyspec.configuration(config)
    if not isinstance(P0, polygeom.Polygon):
        P0 = polygeom.Polygon(P0)
    run = DescentRun(config)
    current = _Evaluation(normalized(P0), config)
    t = config.descent_step
    trials = 0
    for iteration in range(config.descent_maxiter + 1):
        g = current.gradient(config)
        norm = float(numpy.linalg.norm(g))
        run.polygons.append(current.polygon)
        run.steps.append(Step(iteration, current.J, norm,
                              t if iteration else 0.0, trials))
        log.debug("iteration %s J=%.12g |g|=%.3g", iteration, current.J,
                  norm)
        if norm <= config.descent_tol:
            run.converged = True
            break
        if iteration == config.descent_maxiter:
            break
        t = min(2 * t, config.descent_step)
        trials = 0
        feasible = False
        while True:
            if t < MIN_STEP:
                if feasible:
                    raise Stalled("Line search found no decrease",
                                  iteration=iteration, J=current.J,
                                  gradient_norm=norm)
                raise InfeasibleStep("Every trial step leaves the simple "
                                     "polygons", iteration=iteration)
            trials += 1
            candidate = _trial(current.polygon, -t * g, config)
            if candidate is not None:
                feasible = True
                if candidate.J <= current.J - ARMIJO * t * norm * norm:
                    current = candidate
                    break
            t /= 2
    log.info("descent n=%s: %s iterations, J=%.10g, |g|=%.3g",
             P0.n, run.iterations, run.steps[-1].J,
             run.steps[-1].gradient_norm)
    return run
