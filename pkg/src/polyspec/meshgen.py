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
"""Triangular meshes of polygons.

Two families of meshes are built here:

- symmetric meshes of the regular n-gon, in which every slice
  ``T_j = (0, a_j, a_{j+1})`` is subdivided into m**2 congruent copies
  of ``T_j / m``, and

- refined ear meshes of arbitrary simple polygons: an ear clipping
  triangulation followed by uniform midpoint refinement.

Every triangle carries a tag naming the hat-function triangle (slice or
ear) containing it, so the hat functions are affine on every mesh
triangle and morphing a mesh by vertex displacements is exact.

Node numbering of symmetric meshes
----------------------------------

Node 0 is the center.  Slice j owns the lattice points ``(p, q)`` with
``p >= 1``, ``q >= 0`` and ``p + q <= m``, i.e. the points
``(p a_j + q a_{j+1}) / m``; a point with ``p = 0`` belongs to the next
slice as ``(q, 0)``.  With ``K = m (m + 1) / 2`` points per slice the
index of ``(j, p, q)`` is ``1 + j K + (p - 1)(m + 1) - (p - 1) p / 2 + q``,
so rotating by one slice adds K and the symmetry maps are index
arithmetic.
"""

# Public names:
__all__ = (
    'SymmetryMaps',
    'TriMesh',
    'dump_mesh',
    'fan_refined_mesh',
    'hat_values',
    'load_mesh',
    'mesh_area',
    'mesh_constant_C1',
    'morph_mesh',
    'refine',
    'symmetric_mesh',
    'symmetric_mesh_size',
    'triangle_shapes',
)

import logging

import numpy
import scipy.sparse

from polyspec import InvalidArgument
from polyspec import InvalidMesh
from polyspec import ResourceError
from polyspec import StepTooLarge
from polyspec import polygeom


log = logging.getLogger(__name__)

MAX_NODES = 20000000

# Constant of the interpolation error estimate on a triangle.
INTERPOLATION_CONSTANT = 0.493


class SymmetryMaps:
    """Node permutations of a symmetric mesh.

    ``rotation[i]`` is the index of the node obtained by rotating node i
    by 2 pi / n about the center, ``reflection[i]`` the index of its
    mirror image in the x axis.
    """

    def __init__(self, n, rotation, reflection):
        self.n = n
        self.rotation = rotation
        self.reflection = reflection

    @staticmethod
    def inverse(permutation):
        result = numpy.empty_like(permutation)
        result[permutation] = numpy.arange(len(permutation))
        return result

    def rotation_power(self, k):
        """Permutation of the rotation by k slices (k may be negative)."""
        base = self.rotation if k >= 0 else self.inverse(self.rotation)
        result = numpy.arange(len(base))
        for _ in range(abs(k)):
            result = base[result]
        return result

    def group(self):
        """All 2n permutations of the dihedral group, identity first."""
        identity = numpy.arange(len(self.rotation))
        rotations = [identity]
        for _ in range(self.n - 1):
            rotations.append(self.rotation[rotations[-1]])
        return rotations + [self.reflection[r] for r in rotations]


class TriMesh:
    """A conforming triangle mesh of a polygon.

    nodes
        (N, 2) coordinates.
    triangles
        (T, 3) counter-clockwise node index triples.
    boundary
        (N,) flags of the nodes on the polygon boundary.
    tags
        (T,) index of the hat-function triangle containing each triangle
        (the slice j on symmetric meshes).
    h
        Mesh size: the largest median edge length of the triangles.
    polygon, hats
        The meshed `polygeom.Polygon` and its `polygeom.HatFunctionSet`.
    symmetry
        `SymmetryMaps` of symmetric meshes, None otherwise.
    """

    def __init__(self, nodes, triangles, boundary, tags, polygon=None,
                 hats=None, symmetry=None, h=None, m=None, check=True):
        self.nodes = numpy.asarray(nodes, dtype=float)
        self.triangles = numpy.asarray(triangles, dtype=numpy.intp)
        self.boundary = numpy.asarray(boundary, dtype=bool)
        self.tags = numpy.asarray(tags, dtype=numpy.intp)
        self.polygon = polygon
        self.hats = hats
        self.symmetry = symmetry
        self.m = m
        self._geometry = None
        self._hat_values = None
        self.cache = {}
        if check:
            grads, areas = self.geometry()
            if not numpy.all(areas > 0):
                bad = int(numpy.sum(~(areas > 0)))
                raise InvalidMesh(
                    "Mesh has %s degenerate or inverted triangles" % bad,
                    triangles=bad)
        self.h = float(h) if h is not None else float(
            triangle_shapes(self)[2].max())
        self.free = numpy.nonzero(~self.boundary)[0]

    @property
    def node_count(self):
        return len(self.nodes)

    @property
    def n(self):
        return self.polygon.n if self.polygon is not None else None

    def geometry(self):
        """Barycentric gradients (T, 3, 2) and areas (T,) of triangles."""
        if self._geometry is None:
            self._geometry = polygeom.barycentric_gradients(
                self.nodes[self.triangles])
        return self._geometry

    @property
    def areas(self):
        return self.geometry()[1]

    @property
    def edges(self):
        """Unique (sorted) node pairs of all triangle edges."""
        t = self.triangles
        pairs = numpy.vstack((t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]))
        return numpy.unique(numpy.sort(pairs, axis=1), axis=0)

    def expand(self, values):
        """Nodal field on all nodes from values on the free nodes."""
        values = numpy.asarray(values)
        result = numpy.zeros((self.node_count,) + values.shape[1:],
                             dtype=values.dtype)
        result[self.free] = values
        return result

    def restrict(self, field):
        return numpy.asarray(field)[self.free]

    def __repr__(self):
        return "<TriMesh %s nodes, %s triangles, h=%.4g>" % (
            self.node_count, len(self.triangles), self.h)


def symmetric_mesh_size(n, m):
    """Node and triangle counts of ``symmetric_mesh(n, m)``."""
    return 1 + n * (m * (m + 1) // 2), n * m * m


def _slice_index(n, m, j, p, q):
    # vectorized; handles p == 0 by moving to the next slice
    j, p, q = numpy.broadcast_arrays(*map(numpy.asarray, (j, p, q)))
    on_ray = p == 0
    j = numpy.where(on_ray, (j + 1) % n, j % n)
    p, q = numpy.where(on_ray, q, p), numpy.where(on_ray, 0, q)
    K = m * (m + 1) // 2
    local = (p - 1) * (m + 1) - ((p - 1) * p) // 2 + q
    return numpy.where(p == 0, 0, 1 + j * K + local)


def symmetric_mesh(n, m, max_nodes=MAX_NODES, center_weight=None):
    """Symmetric structured mesh of the regular n-gon.

    Each slice is cut into m**2 triangles congruent to ``T_j / m``, so
    the mesh size (the median edge, the slice radius being 1) is 1/m.
    ``center_weight`` is passed to the fan hat functions; 0 keeps the
    center node fixed under morphing.
    """
    if not isinstance(n, (int, numpy.integer)) or n < 3:
        raise InvalidArgument("n must be an integer >= 3", n=n)
    if not isinstance(m, (int, numpy.integer)) or m < 1:
        raise InvalidArgument("m must be an integer >= 1", m=m)
    node_count, triangle_count = symmetric_mesh_size(n, m)
    if node_count > max_nodes:
        raise ResourceError(
            "A symmetric mesh with n=%s, m=%s needs %s nodes (limit %s)"
            % (n, m, node_count, max_nodes),
            required=node_count, limit=max_nodes)

    P = polygeom.regular_polygon(n)
    a = P.vertices
    K = m * (m + 1) // 2

    # lattice points owned by one slice, in index order
    p = numpy.repeat(numpy.arange(1, m + 1), numpy.arange(m, 0, -1))
    q = numpy.arange(K) - ((p - 1) * (m + 1) - ((p - 1) * p) // 2)

    nodes = numpy.zeros((node_count, 2))
    boundary = numpy.zeros(node_count, dtype=bool)
    for j in range(n):
        block = slice(1 + j * K, 1 + (j + 1) * K)
        nodes[block] = (numpy.outer(p, a[j])
                        + numpy.outer(q, a[(j + 1) % n])) / m
        boundary[block] = p + q == m

    # up triangles (p, q), (p+1, q), (p, q+1) with p + q <= m - 1,
    # down triangles (p+1, q), (p+1, q+1), (p, q+1) with p + q <= m - 2
    up_p, up_q = (x.ravel() for x in numpy.meshgrid(
        numpy.arange(m), numpy.arange(m), indexing='ij'))
    keep = up_p + up_q <= m - 1
    up_p, up_q = up_p[keep], up_q[keep]
    down = up_p + up_q <= m - 2
    dn_p, dn_q = up_p[down], up_q[down]

    triangles = []
    tags = []
    for j in range(n):
        up = numpy.column_stack((
            _slice_index(n, m, j, up_p, up_q),
            _slice_index(n, m, j, up_p + 1, up_q),
            _slice_index(n, m, j, up_p, up_q + 1),
        ))
        dn = numpy.column_stack((
            _slice_index(n, m, j, dn_p + 1, dn_q),
            _slice_index(n, m, j, dn_p + 1, dn_q + 1),
            _slice_index(n, m, j, dn_p, dn_q + 1),
        ))
        triangles.extend((up, dn))
        tags.append(numpy.full(len(up) + len(dn), j))

    index = numpy.arange(1, node_count)
    rotation = numpy.concatenate(([0], 1 + (index - 1 + K) % (n * K)))
    j = (index - 1) // K
    local = (index - 1) % K
    reflection = numpy.concatenate(([0], _slice_index(
        n, m, -j - 1, q[local], p[local])))
    symmetry = SymmetryMaps(n, rotation, reflection)

    hats = polygeom.hat_functions(P, 'fan', center=(0.0, 0.0),
                                  center_weight=center_weight)
    mesh = TriMesh(
        nodes, numpy.vstack(triangles), boundary, numpy.concatenate(tags),
        polygon=P, hats=hats, symmetry=symmetry, h=1.0 / m, m=m)
    log.debug("symmetric mesh n=%s m=%s: %s nodes", n, m, node_count)
    return mesh


def refine(M):
    """One uniform midpoint refinement; tags are inherited.

    Symmetry maps are not carried over: ``symmetric_mesh(n, 2 m)`` is
    the symmetric refinement.
    """
    t = M.triangles
    pairs = numpy.vstack((t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]))
    edges, inverse, counts = numpy.unique(
        numpy.sort(pairs, axis=1), axis=0, return_inverse=True,
        return_counts=True)
    inverse = inverse.reshape(-1)
    N = M.node_count
    midpoints = .5 * (M.nodes[edges[:, 0]] + M.nodes[edges[:, 1]])
    nodes = numpy.vstack((M.nodes, midpoints))
    T = len(t)
    ab, bc, ca = (N + inverse[:T], N + inverse[T:2 * T],
                  N + inverse[2 * T:])
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    triangles = numpy.vstack((
        numpy.column_stack((a, ab, ca)),
        numpy.column_stack((ab, b, bc)),
        numpy.column_stack((ca, bc, c)),
        numpy.column_stack((ab, bc, ca)),
    ))
    tags = numpy.tile(M.tags, 4)
    # an edge of a single triangle lies on the boundary
    boundary = numpy.concatenate((M.boundary, counts == 1))
    return TriMesh(nodes, triangles, boundary, tags, polygon=M.polygon,
                   hats=M.hats, h=M.h / 2)


def fan_refined_mesh(P, levels=0):
    """Ear clipping triangulation of P refined ``levels`` times."""
    if not isinstance(P, polygeom.Polygon):
        P = polygeom.Polygon(P)
    if levels < 0:
        raise InvalidArgument("levels must be >= 0", levels=levels)
    hats = polygeom.hat_functions(P, 'ear')
    boundary = numpy.ones(P.n, dtype=bool)
    M = TriMesh(P.vertices.copy(), hats.triangles,
                boundary, numpy.arange(len(hats.triangles)),
                polygon=P, hats=hats)
    for _ in range(levels):
        M = refine(M)
    return M


def mesh_area(M):
    return float(M.areas.sum())


def triangle_shapes(M):
    """Per triangle: (alpha, tau, L).

    L is the median edge length, alpha the ratio of the shortest to the
    median edge and tau the angle between those two edges.
    """
    corners = M.nodes[M.triangles]
    # edge k is opposite corner k
    vectors = numpy.stack((
        corners[:, 2] - corners[:, 1],
        corners[:, 0] - corners[:, 2],
        corners[:, 1] - corners[:, 0],
    ), axis=1)
    lengths = numpy.sqrt((vectors ** 2).sum(axis=2))
    order = numpy.argsort(lengths, axis=1, kind='stable')
    rows = numpy.arange(len(lengths))
    shortest = lengths[rows, order[:, 0]]
    median = lengths[rows, order[:, 1]]
    # The angle between the two shorter edges is the one opposite the
    # longest edge (law of cosines).
    longest = lengths[rows, order[:, 2]]
    with numpy.errstate(divide='ignore', invalid='ignore'):
        cos_tau = (shortest ** 2 + median ** 2 - longest ** 2) / (
            2 * shortest * median)
        alpha = shortest / median
    tau = numpy.arccos(numpy.clip(cos_tau, -1, 1))
    return alpha, tau, median


def mesh_constant_C1(M):
    """The interpolation constant C_1 = max C(T) / h of a mesh.

    ``C(T) = 0.493 L (1 + a**2 + r) / sqrt(2 (1 + a**2 - r))`` with
    ``r = sqrt(1 + 2 a**2 cos(2 tau) + a**4)``.
    """
    if not numpy.all(M.areas > 0):
        raise InvalidMesh("Mesh has degenerate triangles")
    alpha, tau, L = triangle_shapes(M)
    a2 = alpha ** 2
    root = numpy.sqrt(numpy.maximum(
        1 + 2 * a2 * numpy.cos(2 * tau) + a2 ** 2, 0))
    C = INTERPOLATION_CONSTANT * L * (1 + a2 + root) / numpy.sqrt(
        2 * (1 + a2 - root))
    return float(C.max() / M.h)


def hat_values(M):
    """Sparse (N, n) matrix of the hat functions at the mesh nodes."""
    if M._hat_values is None:
        owner = numpy.empty(M.node_count, dtype=numpy.intp)
        owner[M.triangles.reshape(-1)] = numpy.repeat(
            numpy.arange(len(M.triangles)), 3)
        values = M.hats.values(M.nodes, M.tags[owner])
        values[numpy.abs(values) < 1e-14] = 0.0
        M._hat_values = scipy.sparse.csr_matrix(values)
    return M._hat_values


def morph_mesh(M, base=None, displacement=None):
    """Move every node x by sum_i d_i phi_i(x).

    Vertex i of the polygon moves exactly by d_i, connectivity is kept.
    Raises `polyspec.StepTooLarge` when a triangle would be inverted
    or the displaced polygon is not simple.
    """
    if base is None:
        base = M.polygon
    elif base != M.polygon:
        raise InvalidArgument("The mesh does not mesh the base polygon")
    n = base.n
    d = numpy.asarray(displacement, dtype=float).reshape(n, 2)
    Phi = hat_values(M)
    nodes = M.nodes + Phi @ d
    try:
        polygon = base.displaced(d)
    except InvalidArgument:
        raise StepTooLarge("Displaced polygon is not simple",
                           norm=float(numpy.abs(d).max()))
    corners = nodes[M.triangles]
    _, areas = polygeom.barycentric_gradients(corners)
    if not numpy.all(areas > 0):
        raise StepTooLarge(
            "Morph inverts %s triangles" % int(numpy.sum(~(areas > 0))),
            norm=float(numpy.abs(d).max()))
    center = M.hats.center
    if center is not None:
        center = center + M.hats.center_weight * d.sum(axis=0)
    hats = polygeom.HatFunctionSet(polygon, M.hats.triangles,
                                   M.hats.role, center,
                                   M.hats.center_weight)
    result = TriMesh(nodes, M.triangles, M.boundary, M.tags,
                     polygon=polygon, hats=hats,
                     symmetry=M.symmetry if not d.any() else None,
                     m=M.m, check=False)
    result._hat_values = Phi
    return result


def dump_mesh(M):
    """Text form with ``polygon``, ``hats``, ``nodes``, ``triangles``
    and ``boundary`` sections.
    """
    lines = ['polygon %s' % M.polygon.n]
    lines.extend('%r %r' % (float(x), float(y))
                 for (x, y) in M.polygon.vertices)
    if M.hats.center is None:
        lines.append('hats %s' % M.hats.role)
    else:
        lines.append('hats %s %r %r %r' % ((M.hats.role,) + tuple(
            float(c) for c in M.hats.center) + (M.hats.center_weight,)))
    lines.append('nodes %s' % M.node_count)
    lines.extend('%r %r' % (float(x), float(y)) for (x, y) in M.nodes)
    lines.append('triangles %s' % len(M.triangles))
    lines.extend('%s %s %s %s' % (a, b, c, t)
                 for ((a, b, c), t) in zip(M.triangles, M.tags))
    boundary = numpy.nonzero(M.boundary)[0]
    lines.append('boundary %s' % len(boundary))
    lines.extend(str(i) for i in boundary)
    return '\n'.join(lines) + '\n'


def load_mesh(text):
    lines = iter(text.strip().split('\n'))

    def section(name):
        header = next(lines).split()
        if header[0] != name:
            raise InvalidMesh("Expected a %s section, got %r"
                              % (name, header[0]))
        return header[1:]

    count, = section('polygon')
    polygon = polygeom.Polygon([
        [float(w) for w in next(lines).split()] for _ in range(int(count))])
    hats_header = section('hats')
    center = weight = None
    if len(hats_header) >= 3:
        center = [float(w) for w in hats_header[1:3]]
    if len(hats_header) == 4:
        weight = float(hats_header[3])
    hats = polygeom.hat_functions(polygon, hats_header[0], center, weight)
    count, = section('nodes')
    nodes = [[float(w) for w in next(lines).split()]
             for _ in range(int(count))]
    count, = section('triangles')
    rows = numpy.array([[int(w) for w in next(lines).split()]
                        for _ in range(int(count))], dtype=numpy.intp)
    count, = section('boundary')
    boundary = numpy.zeros(len(nodes), dtype=bool)
    boundary[[int(next(lines)) for _ in range(int(count))]] = True
    return TriMesh(nodes, rows[:, :3], boundary, rows[:, 3],
                   polygon=polygon, hats=hats)
