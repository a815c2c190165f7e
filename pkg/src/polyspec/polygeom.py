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
"""Exact polygon geometry.

Polygons are ordered, counter-clockwise, simple vertex lists.  The
coordinates vector of an n-gon is ``x = (a_0, ..., a_{n-1})`` flattened
to length 2n, and every vector or matrix indexed by vertex coordinates
in polygeom uses that order.

The hat functions ``phi_i`` are piecewise affine on a triangulation of
the polygon whose vertices are the polygon vertices, plus possibly one
extra center vertex.  ``phi_i`` is 1 at vertex i and 0 at the other
vertices.  At the center every ``phi_i`` takes the same value, 1/n by
default, so the hats sum to 1 and translations of the polygon move the
whole triangulation rigidly.  A center weight of 0 keeps the center
fixed.
"""

# Public names:
__all__ = (
    'HatFunctionSet',
    'KernelBasis',
    'Polygon',
    'area_gradient',
    'area_hessian',
    'barycentric_gradients',
    'diameter',
    'dump_polygon',
    'ear_clip',
    'edge_lengths',
    'hat_functions',
    'hausdorff_distance',
    'inradius',
    'interior_angles',
    'is_simple',
    'kernel_basis',
    'load_polygon',
    'orientation',
    'perimeter',
    'polygon_area',
    'regular_polygon',
    'scale_invariant_value',
    'signed_area',
)

import collections
import fractions
import logging
import math

import numpy
import scipy.optimize

from polyspec import InvalidArgument


log = logging.getLogger(__name__)

# Shewchuk's first-stage bound for the 2x2 orientation determinant.
_epsilon = 2.0 ** -53
_ccw_error_bound = (3.0 + 16.0 * _epsilon) * _epsilon


def orientation(a, b, c):
    """Exact sign of the orientation of the point triple (a, b, c).

    Returns 1 for a counter-clockwise turn, -1 for a clockwise turn and
    0 for collinear points.  The floating point determinant is trusted
    when it clears the rounding error bound; otherwise the determinant
    is evaluated exactly in rational arithmetic on the double inputs.
    There is no tie tolerance: a zero is exactly zero.
    """
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    bound = _ccw_error_bound * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if -det > bound:
        return -1

    ax, ay, bx, by, cx, cy = map(
        fractions.Fraction,
        (a[0], a[1], b[0], b[1], c[0], c[1]))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (det > 0) - (det < 0)


def _exact_dot_sign(u0, u1, v0, v1):
    dot = (fractions.Fraction(u0) * fractions.Fraction(v0)
           + fractions.Fraction(u1) * fractions.Fraction(v1))
    return (dot > 0) - (dot < 0)


def _between(p, q, r):
    # r collinear with p and q
    return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))


def _segments_meet(p1, p2, p3, p4):
    d1 = orientation(p3, p4, p1)
    d2 = orientation(p3, p4, p2)
    d3 = orientation(p1, p2, p3)
    d4 = orientation(p1, p2, p4)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return ((d1 == 0 and _between(p3, p4, p1))
            or (d2 == 0 and _between(p3, p4, p2))
            or (d3 == 0 and _between(p1, p2, p3))
            or (d4 == 0 and _between(p1, p2, p4)))


def _as_vertices(P):
    if isinstance(P, Polygon):
        return P.vertices
    vertices = numpy.asarray(P, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise InvalidArgument(
            "Vertices must be an n x 2 array", shape=vertices.shape)
    return vertices


def is_simple(P):
    """Is the closed polygonal chain free of improper intersections?

    Non-adjacent edges may not meet at all (touching counts as an
    intersection), adjacent edges may only share their common vertex
    and no edge may have zero length.  Orientation predicates are
    exact.
    """
    v = _as_vertices(P)
    n = len(v)
    if n < 3:
        raise InvalidArgument("A polygon needs at least 3 vertices", n=n)

    nxt = numpy.roll(v, -1, axis=0)
    if numpy.any(numpy.all(v == nxt, axis=1)):
        return False

    for i in range(n):
        a, b, c = v[i], v[(i + 1) % n], v[(i + 2) % n]
        if (orientation(a, b, c) == 0
                and _exact_dot_sign(a[0] - b[0], a[1] - b[1],
                                    c[0] - b[0], c[1] - b[1]) > 0):
            return False

    lo = numpy.minimum(v, nxt)
    hi = numpy.maximum(v, nxt)
    overlap = ((lo[:, None, 0] <= hi[None, :, 0])
               & (lo[None, :, 0] <= hi[:, None, 0])
               & (lo[:, None, 1] <= hi[None, :, 1])
               & (lo[None, :, 1] <= hi[:, None, 1]))
    for i, j in zip(*numpy.nonzero(numpy.triu(overlap, 2))):
        if i == 0 and j == n - 1:
            continue
        if _segments_meet(v[i], nxt[i], v[j], nxt[j]):
            return False
    return True


def signed_area(vertices):
    v = numpy.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return .5 * float(numpy.dot(x, numpy.roll(y, -1))
                      - numpy.dot(numpy.roll(x, -1), y))


class Polygon:
    """A simple polygon with counter-clockwise vertices.

    The constructor validates the vertex list and raises
    `polyspec.InvalidArgument` for fewer than 3 vertices, non-finite or
    repeated coordinates, clockwise orientation or self-intersection.
    Polygons are immutable.
    """

    __slots__ = ('vertices',)

    def __init__(self, vertices):
        v = numpy.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidArgument(
                "A polygon needs at least 3 planar vertices",
                shape=v.shape)
        if not numpy.all(numpy.isfinite(v)):
            raise InvalidArgument("Polygon vertices must be finite")
        if not is_simple(v):
            raise InvalidArgument("Polygon is not simple")
        if not signed_area(v) > 0:
            raise InvalidArgument(
                "Polygon vertices must be counter-clockwise")
        v.setflags(write=False)
        object.__setattr__(self, 'vertices', v)

    def __setattr__(self, name, value):
        raise AttributeError("Polygons are immutable")

    @property
    def n(self):
        return len(self.vertices)

    def __len__(self):
        return len(self.vertices)

    @property
    def coordinates(self):
        """The coordinates vector (x_0, y_0, x_1, y_1, ...)."""
        return self.vertices.reshape(-1).copy()

    def displaced(self, displacement):
        d = numpy.asarray(displacement, dtype=float).reshape(self.n, 2)
        return Polygon(self.vertices + d)

    def scaled(self, t):
        return Polygon(self.vertices * float(t))

    def translated(self, vector):
        return Polygon(self.vertices + numpy.asarray(vector, dtype=float))

    def __eq__(self, other):
        return (isinstance(other, Polygon)
                and self.vertices.shape == other.vertices.shape
                and bool(numpy.all(self.vertices == other.vertices)))

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def __repr__(self):
        return "Polygon(%s)" % ', '.join(
            '(%.6g, %.6g)' % tuple(a) for a in self.vertices)


def regular_polygon(n):
    """The regular n-gon inscribed in the unit circle, vertex 0 at (1, 0).
    """
    if not isinstance(n, (int, numpy.integer)) or n < 3:
        raise InvalidArgument(
            "A regular polygon needs an integer n >= 3", n=n)
    angles = 2 * math.pi * numpy.arange(n) / n
    v = numpy.column_stack((numpy.cos(angles), numpy.sin(angles)))
    # Keep the exact zeros and ones of the axis-aligned vertices.
    v[numpy.abs(v) < 1e-15] = 0.0
    return Polygon(v)


def polygon_area(P):
    return signed_area(_as_vertices(P))


def scale_invariant_value(area, eigenvalue):
    """J = |P| lambda_1(P)."""
    return area * eigenvalue


def area_gradient(P):
    v = _as_vertices(P)
    nxt = numpy.roll(v, -1, axis=0)
    prv = numpy.roll(v, 1, axis=0)
    g = numpy.empty_like(v)
    g[:, 0] = .5 * (nxt[:, 1] - prv[:, 1])
    g[:, 1] = .5 * (prv[:, 0] - nxt[:, 0])
    return g.reshape(-1)


def area_hessian(n):
    """The constant 2n x 2n Hessian of the area.

    Block (i, i+1) is [[0, 1/2], [-1/2, 0]] and block (i+1, i) its
    transpose; all other blocks vanish.
    """
    if n < 3:
        raise InvalidArgument("n must be at least 3", n=n)
    H = numpy.zeros((2 * n, 2 * n))
    for i in range(n):
        j = (i + 1) % n
        H[2 * i, 2 * j + 1] += .5
        H[2 * i + 1, 2 * j] -= .5
        H[2 * j + 1, 2 * i] += .5
        H[2 * j, 2 * i + 1] -= .5
    return H


class KernelBasis(collections.namedtuple('KernelBasis', 't_x t_y s r')):
    """Translations, scaling and rotation as coordinate vectors."""

    __slots__ = ()

    @property
    def matrix(self):
        return numpy.vstack(self)


def kernel_basis(n):
    if n < 3:
        raise InvalidArgument("n must be at least 3", n=n)
    angles = 2 * math.pi * numpy.arange(n) / n
    c, s = numpy.cos(angles), numpy.sin(angles)
    t_x = numpy.zeros(2 * n)
    t_x[0::2] = 1
    t_y = numpy.zeros(2 * n)
    t_y[1::2] = 1
    return KernelBasis(
        t_x, t_y,
        numpy.column_stack((c, s)).reshape(-1),
        numpy.column_stack((s, -c)).reshape(-1),
    )


def edge_lengths(P):
    v = _as_vertices(P)
    return numpy.hypot(*(numpy.roll(v, -1, axis=0) - v).T)


def perimeter(P):
    return float(edge_lengths(P).sum())


def interior_angles(P):
    """Interior angle at every vertex, in (0, 2 pi)."""
    v = _as_vertices(P)
    to_prev = numpy.roll(v, 1, axis=0) - v
    to_next = numpy.roll(v, -1, axis=0) - v
    cross = to_next[:, 0] * to_prev[:, 1] - to_next[:, 1] * to_prev[:, 0]
    dot = (to_next * to_prev).sum(axis=1)
    angles = numpy.arctan2(cross, dot)
    return numpy.where(angles < 0, angles + 2 * math.pi, angles)


def diameter(P):
    v = _as_vertices(P)
    d = v[:, None, :] - v[None, :, :]
    return float(numpy.sqrt((d ** 2).sum(axis=2)).max())


def inradius(P):
    """Radius of the largest disk contained in a convex polygon.

    Solved as the linear program maximizing r subject to the disk
    staying on the inner side of every edge line.
    """
    v = _as_vertices(P)
    if numpy.any(interior_angles(v) >= math.pi):
        raise InvalidArgument("inradius requires a convex polygon")
    edges = numpy.roll(v, -1, axis=0) - v
    lengths = numpy.hypot(edges[:, 0], edges[:, 1])
    normals = numpy.column_stack((edges[:, 1], -edges[:, 0]))
    normals /= lengths[:, None]
    A = numpy.column_stack((normals, numpy.ones(len(v))))
    b = (normals * v).sum(axis=1)
    result = scipy.optimize.linprog(
        [0, 0, -1], A_ub=A, b_ub=b,
        bounds=[(None, None), (None, None), (0, None)], method='highs')
    if not result.success:
        raise InvalidArgument("inradius: " + result.message)
    return float(result.x[2])


def _sample_boundary(v, samples):
    t = numpy.arange(samples) / samples
    nxt = numpy.roll(v, -1, axis=0)
    return (v[:, None, :] + t[None, :, None]
            * (nxt - v)[:, None, :]).reshape(-1, 2)


def _distance_to_boundary(points, v):
    a = v
    b = numpy.roll(v, -1, axis=0)
    ab = b - a
    ap = points[:, None, :] - a[None, :, :]
    t = numpy.clip((ap * ab).sum(axis=2) / (ab * ab).sum(axis=1), 0, 1)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    return numpy.sqrt(((points[:, None, :] - closest) ** 2)
                      .sum(axis=2)).min(axis=1)


def hausdorff_distance(P, Q, samples=64):
    """Hausdorff distance between the boundaries of two polygons.

    Each boundary is sampled with ``samples`` points per edge, vertices
    included; distances to the other boundary are exact.
    """
    p, q = _as_vertices(P), _as_vertices(Q)
    return float(max(
        _distance_to_boundary(_sample_boundary(p, samples), q).max(),
        _distance_to_boundary(_sample_boundary(q, samples), p).max(),
    ))


def _min_angle(a, b, c):
    best = math.pi
    for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
        u, w = q - p, r - p
        best = min(best, math.atan2(abs(u[0] * w[1] - u[1] * w[0]),
                                    u[0] * w[0] + u[1] * w[1]))
    return best


def _in_closed_triangle(p, a, b, c):
    return (orientation(a, b, p) >= 0 and orientation(b, c, p) >= 0
            and orientation(c, a, p) >= 0)


def ear_clip(P):
    """Triangulate a simple polygon without interior vertices.

    Returns an (n-2) x 3 integer array of counter-clockwise vertex
    index triples.  Among the available ears, the one with the largest
    minimum angle is clipped first (lowest index on ties), which keeps
    the result deterministic and reasonably shaped.
    """
    v = _as_vertices(P)
    remaining = list(range(len(v)))
    triangles = []
    while len(remaining) > 3:
        best = None
        count = len(remaining)
        for k in range(count):
            i, j, l = (remaining[k - 1], remaining[k],
                       remaining[(k + 1) % count])
            if orientation(v[i], v[j], v[l]) <= 0:
                continue
            if any(_in_closed_triangle(v[o], v[i], v[j], v[l])
                   for o in remaining
                   if o not in (i, j, l)
                   and not any(numpy.all(v[o] == v[t]) for t in (i, j, l))
                   ):
                continue
            quality = _min_angle(v[i], v[j], v[l])
            if best is None or quality > best[0]:
                best = quality, k, (i, j, l)
        if best is None:
            raise InvalidArgument("Polygon has no ear; is it simple?")
        triangles.append(best[2])
        del remaining[best[1]]
    triangles.append(tuple(remaining))
    return numpy.array(triangles, dtype=numpy.intp)


def barycentric_gradients(corners):
    """Gradients of the barycentric coordinates of triangles.

    ``corners`` has shape (T, 3, 2); the result has the same shape,
    entry [t, k] being the (constant) gradient of the k-th barycentric
    coordinate of triangle t.  The second return value holds the signed
    areas.
    """
    x = corners[:, :, 0]
    y = corners[:, :, 1]
    area = .5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
                 - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    grads = numpy.empty_like(corners)
    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        grads[:, k, 0] = y[:, k1] - y[:, k2]
        grads[:, k, 1] = x[:, k2] - x[:, k1]
    with numpy.errstate(divide='ignore', invalid='ignore'):
        grads /= (2 * area)[:, None, None]
    return grads, area


class HatFunctionSet:
    """The hat functions of a polygon for one triangulation.

    ``triangles`` index the polygon vertices; the index n denotes the
    center vertex of a fan, where every phi_i equals ``center_weight``.
    ``gradients[t, i]`` is the gradient of phi_i on triangle t (zero
    where phi_i vanishes).
    """

    def __init__(self, polygon, triangles, role, center=None,
                 center_weight=0.0):
        self.polygon = polygon
        self.role = role
        self.center_weight = float(center_weight)
        self.triangles = numpy.asarray(triangles, dtype=numpy.intp)
        self.center = (None if center is None
                       else numpy.asarray(center, dtype=float))
        n = polygon.n
        if self.center is None and numpy.any(self.triangles >= n):
            raise InvalidArgument("Fan triangulation without a center")
        grads, area = barycentric_gradients(self.corners)
        if numpy.any(area <= 0):
            raise InvalidArgument(
                "Hat triangulation has inverted or flat triangles",
                role=role)
        self.areas = area
        self.gradients = numpy.zeros((len(self.triangles), n, 2))
        for k in range(3):
            ids = self.triangles[:, k]
            vertex = ids < n
            self.gradients[numpy.nonzero(vertex)[0], ids[vertex]] += (
                grads[vertex, k])
            if self.center_weight and not vertex.all():
                self.gradients[~vertex] += (
                    self.center_weight * grads[~vertex, k][:, None, :])

    @property
    def n(self):
        return self.polygon.n

    @property
    def points(self):
        if self.center is None:
            return self.polygon.vertices
        return numpy.vstack((self.polygon.vertices, self.center))

    @property
    def corners(self):
        return self.points[self.triangles]

    def barycentric(self, points, tags):
        """Barycentric coordinates of points within their hat triangles.
        """
        points = numpy.asarray(points, dtype=float)
        corners = self.corners[tags]
        grads, _ = barycentric_gradients(corners)
        return numpy.einsum('tkc,tc->tk', grads,
                            points - corners[:, 0, :]) + [1., 0., 0.]

    def values(self, points, tags):
        """Dense (len(points), n) array of phi_i at the given points."""
        bary = self.barycentric(points, tags)
        result = numpy.zeros((len(bary), self.n))
        rows = numpy.arange(len(bary))
        for k in range(3):
            ids = self.triangles[tags, k]
            vertex = ids < self.n
            result[rows[vertex], ids[vertex]] += bary[vertex, k]
            if self.center_weight and not vertex.all():
                result[~vertex] += (
                    self.center_weight * bary[~vertex, k][:, None])
        return result

    def gradient_sum(self):
        """Sum over i of grad phi_i on every triangle."""
        return self.gradients.sum(axis=1)

    def area_hessian(self):
        """Sum over triangles of |T| (grad phi_i x grad phi_j - transpose).

        Equals `area_hessian` for every admissible triangulation.
        """
        g = self.gradients
        blocks = numpy.einsum('t,tia,tjb->iajb', self.areas, g, g)
        blocks = blocks - blocks.transpose(0, 3, 2, 1)
        n = self.n
        return blocks.reshape(2 * n, 2 * n)


def hat_functions(P, role='ear', center=None, center_weight=None):
    """Build the hat functions of a polygon.

    role ``ear`` uses `ear_clip` (no interior vertex, so the hats sum
    to 1).  role ``fan`` joins every edge to a center vertex, by
    default the area centroid; on the regular polygon with center 0
    this is the symmetric fan of congruent slices.  Every fan hat is
    ``center_weight`` at the center, 1/n unless given.
    """
    if not isinstance(P, Polygon):
        P = Polygon(P)
    n = P.n
    if role == 'ear':
        return HatFunctionSet(P, ear_clip(P), role)
    if role == 'fan':
        if center is None:
            v = P.vertices
            nxt = numpy.roll(v, -1, axis=0)
            cross = v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]
            center = ((v + nxt) * cross[:, None]).sum(axis=0) / (
                3 * cross.sum())
        triangles = numpy.column_stack((
            numpy.full(n, n), numpy.arange(n), (numpy.arange(n) + 1) % n))
        if center_weight is None:
            center_weight = 1.0 / n
        return HatFunctionSet(P, triangles, role, center, center_weight)
    raise InvalidArgument("Unknown hat triangulation role", role=role)


def load_polygon(source):
    """Read a polygon from text: one ``x y`` vertex per line.

    ``source`` is either the text itself (if it contains a newline) or a
    file name.  Blank lines and ``#`` comments are ignored.
    """
    if '\n' not in source:
        with open(source) as f:
            source = f.read()
    vertices = []
    for number, line in enumerate(source.split('\n'), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        try:
            x, y = (float(word) for word in line.split())
        except ValueError:
            raise InvalidArgument(
                "Line %s is not of the form 'x y'" % number, line=number)
        vertices.append((x, y))
    return Polygon(vertices)


def dump_polygon(P):
    return ''.join('%r %r\n' % (float(x), float(y))
                   for (x, y) in _as_vertices(P))
