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
"""Spectral geometry of polygons.

The package computes the first Dirichlet-Laplace eigenpair of polygons
with P1 finite elements, the shape gradient and shape Hessian of the
scale-invariant functional ``J(P) = |P| * lambda_1(P)`` with respect to
the vertex coordinates, certified enclosures of the Hessian spectrum at
the regular polygon, and the explicit bounds surrounding them.

This module holds what every submodule shares: the exception
hierarchy and the run configuration.
"""

# Public names:
__all__ = (
    'BoundUnavailable',
    'Configuration',
    'DivisionByZero',
    'FormulaMismatch',
    'GenerationFailure',
    'InconsistentRHS',
    'InfeasibleStep',
    'InvalidArgument',
    'InvalidMesh',
    'PolyspecError',
    'ResourceError',
    'SolverFailure',
    'Stalled',
    'StepTooLarge',
    'SymmetryViolation',
    'Unsupported',
)

import configparser
import logging
import os

import numpy


log = logging.getLogger(__name__)

THREADS_ENVIRONMENT_VARIABLE = 'POLYSPEC_THREADS'


class PolyspecError(Exception):
    """Base class of all errors raised by polyspec.

    Keyword arguments are kept as attributes, so callers (and the
    command-line front end) can report the offending quantities.
    """

    kind = 'error'

    def __init__(self, message, **details):
        Exception.__init__(self, message)
        self.message = message
        self.details = details
        for name, value in details.items():
            setattr(self, name, value)

    def __str__(self):
        return self.message

    def as_dict(self):
        result = dict(error=self.kind, message=self.message)
        for name, value in sorted(self.details.items()):
            if isinstance(value, numpy.generic):
                value = value.item()
            result[name] = value
        return result


class InvalidArgument(PolyspecError, ValueError):
    kind = 'invalid-argument'


class DivisionByZero(PolyspecError, ZeroDivisionError):
    kind = 'division-by-zero'


class ResourceError(PolyspecError):
    """A requested discretization is too large to represent.

    The ``required`` attribute holds the count that was asked for.
    """
    kind = 'resource'


class InvalidMesh(PolyspecError):
    kind = 'invalid-mesh'


class StepTooLarge(PolyspecError):
    kind = 'step-too-large'


class SolverFailure(PolyspecError):
    kind = 'solver-failure'


class InconsistentRHS(PolyspecError):
    kind = 'inconsistent-rhs'


class SymmetryViolation(PolyspecError):
    kind = 'symmetry-violation'


class FormulaMismatch(PolyspecError):
    kind = 'formula-mismatch'


class Unsupported(PolyspecError):
    kind = 'unsupported'


class BoundUnavailable(PolyspecError):
    kind = 'bound-unavailable'


class Stalled(PolyspecError):
    kind = 'stalled'


class InfeasibleStep(PolyspecError):
    kind = 'infeasible-step'


class GenerationFailure(PolyspecError):
    kind = 'generation-failure'


def _uncomment(text, split=False):
    result = list(filter(None, (
        line.split('#', 1)[0].strip()
        for line in text.strip().split('\n')
    )))
    if split:
        return result
    return '\n'.join(result)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise ValueError(text)
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise ValueError(text)
    return value


def _choice(*choices):
    def parse(text):
        if text not in choices:
            raise ValueError(text)
        return text
    parse.choices = choices
    return parse


def _gamma_grid(text):
    start, stop, count = _uncomment(text).split()
    start, stop, count = float(start), float(stop), int(count)
    if not (0 < start <= stop < .5 and count >= 1):
        raise ValueError(text)
    return tuple(float(g) for g in numpy.linspace(start, stop, count))


# name -> (parser, default string)
_options = dict(
    threads=(_positive_int, None),
    seed=(int, '0'),
    eig_method=(_choice('auto', 'dense', 'lobpcg', 'shift-invert'), 'auto'),
    preconditioner=(_choice('factorized', 'jacobi'), 'factorized'),
    eig_tol=(_positive_float, '1e-10'),
    eig_maxiter=(_positive_int, '500'),
    cg_rtol=(_positive_float, '1e-12'),
    cg_maxiter=(_positive_int, '2000'),
    deflation=(_choice('cg', 'bordered'), 'cg'),
    rhs_form=(_choice('slice', 'full'), 'slice'),
    zero_tol=(_positive_float, '1e-4'),
    formula_tol=(_positive_float, '1e-6'),
    symmetry_tol=(_positive_float, '1e-8'),
    gamma_grid=(_gamma_grid, '0.01 0.49 49'),
    dense_limit=(_positive_int, '1500'),
    descent_levels=(int, '2'),
    descent_step=(_positive_float, '0.05'),
    descent_tol=(_positive_float, '1e-6'),
    descent_maxiter=(_positive_int, '200'),
)


class Configuration:
    """Options controlling a polyspec computation.

    The DEFAULT argument, if given, is a dictionary of options.
    Keyword options override options given in the DEFAULT options.

    Option values are strings, typically read from ConfigParser files
    or given as ``name=value`` arguments on the command line, and are
    parsed when accessed as attributes.  Non-string values are
    converted with ``str`` first.  Values can have comments: lines are
    truncated at the first '#' character.

    threads
       Worker threads used by parallel stages.  Defaults to the
       ``POLYSPEC_THREADS`` environment variable, then 1.

    seed
       Seed of every random generator (initial eigen-solver blocks,
       random polygons, perturbation trials).

    eig_method
       ``auto`` (dense below ``dense_limit`` unknowns, ``lobpcg``
       otherwise), ``dense``, ``lobpcg`` or ``shift-invert``.

    preconditioner
       LOBPCG preconditioner: ``factorized`` (sparse LU of the
       stiffness matrix) or ``jacobi``.

    eig_tol, eig_maxiter
       LOBPCG residual tolerance and iteration cap.

    cg_rtol, cg_maxiter
       Relative residual tolerance and iteration cap of the deflated
       conjugate gradients.

    deflation
       ``cg`` (projected conjugate gradients) or ``bordered`` (direct
       solve of the bordered saddle-point system).

    rhs_form
       Right-hand side of the material derivative equations used at
       the regular polygon: ``slice`` or ``full``.

    zero_tol
       Relative size below which a Hessian eigenvalue counts as zero.

    formula_tol
       Relative gap allowed between the redundant coefficient formulas.

    symmetry_tol
       Largest orthogonality or parity defect accepted on symmetric
       meshes.

    gamma_grid
       ``start stop count`` of the uniform grid of singular exponents.

    dense_limit
       Largest number of unknowns for which dense solvers are used.

    descent_levels
       Refinements of the ear clipping mesh of every descent iterate.

    descent_step, descent_tol, descent_maxiter
       First trial step of the backtracking line search, gradient norm
       at which a descent stops and its iteration cap.
    """

    def __init__(self, DEFAULT=None, **options):
        if DEFAULT:
            DEFAULT = dict(DEFAULT)
            DEFAULT.update(options)
            options = DEFAULT

        unknown = sorted(set(options) - set(_options))
        if unknown:
            raise InvalidArgument(
                "Unknown configuration options: %s" % ', '.join(unknown),
                options=unknown)

        self.options = dict(
            (name, _uncomment(str(value)))
            for (name, value) in options.items()
            if value is not None
        )
        for name in self.options:
            getattr(self, name)

    @classmethod
    def from_file(class_, path, section='polyspec', **options):
        parser = configparser.ConfigParser()
        with open(path) as f:
            parser.read_file(f)
        if not parser.has_section(section):
            raise InvalidArgument(
                "No [%s] section in %s" % (section, path), path=path)
        return class_(dict(parser.items(section)), **options)

    def __getattr__(self, name):
        try:
            parse, default = _options[name]
        except KeyError:
            raise AttributeError(name)
        text = self.options.get(name, default)
        if name == 'threads' and text is None:
            text = os.environ.get(THREADS_ENVIRONMENT_VARIABLE) or '1'
        try:
            return parse(text)
        except ValueError:
            raise InvalidArgument(
                "Invalid value for %s: %r" % (name, text),
                option=name, value=text)

    def replace(self, **options):
        """Return a copy with some options overridden."""
        return self.__class__(self.options, **options)

    def as_dict(self):
        """The effective options, as strings, for provenance records."""
        result = {}
        for name in sorted(_options):
            value = getattr(self, name)
            if isinstance(value, tuple):
                value = self.options.get(name, _options[name][1])
            result[name] = str(value)
        return result

    def __repr__(self):
        return "Configuration(%s)" % ', '.join(
            '%s=%r' % item for item in sorted(self.options.items()))


def configuration(config=None):
    """Normalize a configuration argument.

    ``None`` gives the defaults, a mapping is turned into a
    `Configuration`.
    """
    if config is None:
        return Configuration()
    if isinstance(config, Configuration):
        return config
    return Configuration(config)
