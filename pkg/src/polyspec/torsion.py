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
"""Torsional rigidity of polygons and its vertex derivatives.

The torsion function w solves ``-Delta w = 1`` with w = 0 on the
boundary and ``T(P) = int w``.  Derivatives are those of the discrete
rigidity ``T_h = b.w`` under `polyspec.meshgen.morph_mesh`, so they
agree with finite differences up to roundoff.  The scale-invariant
functional is ``G(P) = -T(P) / |P|**2``.
"""

# Public names:
__all__ = (
    'TorsionSpectrum',
    'TorsionState',
    'fd_torsion_gradient',
    'fd_torsion_hessian',
    'saint_venant_gradient',
    'saint_venant_hessian',
    'solve_torsion',
    'torsion_gradient',
    'torsion_hessian',
    'torsion_spectrum',
    'write_torsion_csv',
)

import collections
import csv
import logging

import numpy
import scipy.sparse.linalg

import polyspec
from polyspec import InvalidArgument
from polyspec import InvalidMesh
from polyspec import SolverFailure
from polyspec import fem
from polyspec import meshgen
from polyspec import polygeom
from polyspec.hessian import HessianBlocks


log = logging.getLogger(__name__)


class TorsionState:
    """The torsion function of a mesh and its per hat-triangle sums.

    mass[t] = int w, energy[t] = sum |T| |grad w|**2 and
    stress[t] = sum |T| grad w (x) grad w over the mesh triangles in
    hat triangle t.
    """

    def __init__(self, M, w, rigidity):
        self.mesh = M
        self.w = w
        self.rigidity = rigidity
        self.g = fem.nodal_gradients(M, w)
        if M.hats is not None:
            tags = len(M.hats.triangles)
            areas = M.areas
            self.mass = numpy.bincount(
                M.tags, areas / 3 * w[M.triangles].sum(axis=1),
                minlength=tags)
            self.energy = numpy.bincount(
                M.tags, areas * (self.g * self.g).sum(axis=1),
                minlength=tags)
            self.stress = numpy.zeros((tags, 2, 2))
            numpy.add.at(self.stress, M.tags,
                         areas[:, None, None]
                         * self.g[:, :, None] * self.g[:, None, :])

    def S(self):
        """``int (w - |grad w|**2 / 2) Id + grad w (x) grad w`` per hat
        triangle, shape (tags, 2, 2).
        """
        scalar = self.mass - .5 * self.energy
        return scalar[:, None, None] * numpy.eye(2) + self.stress

    def __repr__(self):
        return "<TorsionState T=%.10g nodes=%s>" % (
            self.rigidity, self.mesh.node_count)


def _factor(M):
    try:
        return M.cache['torsion-factor']
    except KeyError:
        pass
    A, _ = fem.assemble(M)
    try:
        solve = scipy.sparse.linalg.factorized(A.tocsc())
    except RuntimeError as v:
        raise SolverFailure("Stiffness factorization failed: %s" % v)
    M.cache['torsion-factor'] = solve
    return solve


def solve_torsion(M):
    """Solve ``-Delta w = 1`` on M and return a `TorsionState`."""
    if not len(M.free):
        raise InvalidMesh("Mesh has no interior nodes")
    b = fem.load_vector(M, 1.0)
    x = _factor(M)(b)
    w = M.expand(x)
    lowest = float(x.min())
    if lowest < 0:
        log.warning("Torsion function is negative (%.3g) at interior "
                    "nodes; the mesh has obtuse triangles", lowest)
    return TorsionState(M, w, float(b @ x))


def _state(M, state):
    if M.hats is None:
        raise InvalidMesh("Mesh has no hat functions")
    return solve_torsion(M) if state is None else state


def torsion_gradient(P, M, state=None):
    """``2 int S grad phi_i`` for every vertex, flattened as (x0, y0, ...)."""
    if P is not None and P != M.polygon:
        raise InvalidArgument("The mesh does not mesh the given polygon")
    state = _state(M, state)
    G = 2 * numpy.einsum('tac,tic->ia', state.S(), M.hats.gradients)
    return G.reshape(-1)


def _directions(M):
    # D[t, k] = e_a (x) grad phi_i on hat triangle t, k = 2 i + a
    p = M.hats.gradients
    tags, n = p.shape[:2]
    D = numpy.zeros((tags, n, 2, 2, 2))
    for a in range(2):
        D[:, :, a, a, :] = p
    return D.reshape(tags, 2 * n, 2, 2)


def _explicit(state, D):
    """Second derivative of the pulled-back energy at fixed w."""
    trace = numpy.einsum('tkaa->tk', D)
    DD = numpy.einsum('tkab,tlbc->tklac', D, D)
    Jts = trace[:, :, None] * trace[:, None, :] - numpy.einsum(
        'tklaa->tkl', DD)
    sym = D + D.transpose(0, 1, 3, 2)
    Q = state.stress
    symQ = numpy.einsum('tkab,tab->tk', sym, Q)
    outer = numpy.einsum('tkab,tlcb->tklac', D, D)
    Mts = (DD + DD.transpose(0, 2, 1, 3, 4)
           + DD.transpose(0, 1, 2, 4, 3) + DD.transpose(0, 2, 1, 4, 3)
           + outer + outer.transpose(0, 2, 1, 3, 4))
    energy = (Jts * state.energy[:, None, None]
              - trace[:, :, None] * symQ[:, None, :]
              - symQ[:, :, None] * trace[:, None, :]
              + numpy.einsum('tklab,tab->tkl', Mts, Q))
    return (2 * Jts * state.mass[:, None, None] - energy).sum(axis=0)


def _residuals(M, state):
    """``db/dt - dA/dt w`` on the free nodes, one row per direction."""
    p = M.hats.gradients
    tags, n = p.shape[:2]
    grads, areas = M.geometry()
    g = state.g
    dot = numpy.einsum('ec,elc->el', g, grads)
    c = (grads[:, :, :, None] * g[:, None, None, :]
         + g[:, None, :, None] * grads[:, :, None, :])
    c += (1 / 3 - dot)[:, :, None, None] * numpy.eye(2)
    c *= areas[:, None, None, None]
    N = M.node_count
    index = (M.tags[:, None] * N + M.triangles).reshape(-1)
    R = numpy.empty((tags, 2, 2, N))
    for a in range(2):
        for d in range(2):
            R[:, a, d] = numpy.bincount(
                index, c[:, :, a, d].reshape(-1), minlength=tags * N
            ).reshape(tags, N)
    r = numpy.einsum('tadk,tid->iak', R, p)
    return r.reshape(2 * n, N)[:, M.free]


def torsion_hessian(P, M, state=None):
    """Hessian of the discrete rigidity (2n x 2n `HessianBlocks`).

    Each direction costs one solve with the stiffness matrix.
    """
    if P is not None and P != M.polygon:
        raise InvalidArgument("The mesh does not mesh the given polygon")
    state = _state(M, state)
    r = _residuals(M, state)
    solve = _factor(M)
    U = numpy.array([solve(f) for f in r])
    H = _explicit(state, _directions(M)) + 2 * r @ U.T
    H = .5 * (H + H.T)
    return HessianBlocks(H, torsion_gradient(None, M, state),
                         state.rigidity)


def saint_venant_gradient(P, M, state=None):
    """Gradient of ``G = -T / |P|**2``."""
    state = _state(M, state)
    polygon = M.polygon
    A = polygeom.polygon_area(polygon)
    dA = polygeom.area_gradient(polygon)
    dT = torsion_gradient(P, M, state)
    return -dT / A ** 2 + 2 * state.rigidity * dA / A ** 3


def saint_venant_hessian(P, M, state=None):
    """Hessian of ``G = -T / |P|**2``, invariant under similarities."""
    state = _state(M, state)
    T = torsion_hessian(P, M, state)
    polygon = M.polygon
    A = polygeom.polygon_area(polygon)
    dA = polygeom.area_gradient(polygon)
    HA = polygeom.area_hessian(polygon.n)
    dT = T.gradient
    cross = numpy.outer(dT, dA)
    H = (-T.matrix / A ** 2 + 2 * (cross + cross.T) / A ** 3
         + 2 * state.rigidity * HA / A ** 3
         - 6 * state.rigidity * numpy.outer(dA, dA) / A ** 4)
    H = .5 * (H + H.T)
    return HessianBlocks(H, saint_venant_gradient(P, M, state),
                         -state.rigidity / A ** 2)


class TorsionSpectrum(collections.namedtuple(
        'TorsionSpectrum', 'n m h rigidity values zero_tol')):
    """Sorted eigenvalues of the Hessian of G at the regular n-gon."""

    __slots__ = ()

    def threshold(self):
        return self.zero_tol * float(numpy.abs(self.values).max())

    @property
    def zero_count(self):
        return int(numpy.sum(numpy.abs(self.values) <= self.threshold()))

    @property
    def positive_count(self):
        return int(numpy.sum(self.values > self.threshold()))


def torsion_spectrum(n, m, config=None, mesh=None):
    """Numeric spectrum of the Hessian of G on ``symmetric_mesh(n, m)``.

    Not certified.
    """
    config = polyspec.configuration(config)
    M = mesh if mesh is not None else meshgen.symmetric_mesh(n, m)
    state = solve_torsion(M)
    H = saint_venant_hessian(None, M, state)
    result = TorsionSpectrum(n, M.m, M.h, state.rigidity,
                             numpy.sort(H.eigenvalues()), config.zero_tol)
    log.info("n=%s m=%s T=%.10g torsion spectrum %s", n, M.m,
             state.rigidity, ', '.join('%.6g' % v for v in result.values))
    if result.zero_count != 4:
        log.warning("Torsion spectrum for n=%s has %s numeric zeros",
                    n, result.zero_count)
    return result


def _objective(M, which):
    state = solve_torsion(M)
    if which == 'T':
        return state.rigidity
    if which == 'G':
        return -state.rigidity / polygeom.polygon_area(M.polygon) ** 2
    raise InvalidArgument("Unknown objective", objective=which)


def _gradient_of(M, which):
    if which == 'T':
        return torsion_gradient(None, M)
    return saint_venant_gradient(None, M)


def fd_torsion_gradient(M, which='T', step=1e-5):
    """Central differences of T or G through `morph_mesh`."""
    size = 2 * M.polygon.n
    result = numpy.empty(size)
    for i in range(size):
        d = numpy.zeros(size)
        d[i] = step
        plus = _objective(meshgen.morph_mesh(M, None, d), which)
        minus = _objective(meshgen.morph_mesh(M, None, -d), which)
        result[i] = (plus - minus) / (2 * step)
    return result


def fd_torsion_hessian(M, which='T', step=1e-4):
    """Central differences of the exact discrete gradient."""
    size = 2 * M.polygon.n
    H = numpy.empty((size, size))
    for i in range(size):
        d = numpy.zeros(size)
        d[i] = step
        plus = _gradient_of(meshgen.morph_mesh(M, None, d), which)
        minus = _gradient_of(meshgen.morph_mesh(M, None, -d), which)
        H[:, i] = (plus - minus) / (2 * step)
    return .5 * (H + H.T)


def write_torsion_csv(spectrum, stream):
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(('index', 'value', 'zero', 'value_hex'))
    threshold = spectrum.threshold()
    for index, value in enumerate(spectrum.values):
        writer.writerow((index, '%.9g' % value,
                         int(abs(value) <= threshold), float(value).hex()))
