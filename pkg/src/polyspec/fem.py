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
"""P1 finite elements on `polyspec.meshgen.TriMesh` meshes.

Matrices returned by `assemble` act on the free (interior) nodes of a
mesh; nodal fields on all nodes are mapped back and forth with
``TriMesh.expand`` and ``TriMesh.restrict``.  Gradients of P1 functions
are constant on triangles and all element integrals are exact.
"""

# Public names:
__all__ = (
    'BoundaryEnergy',
    'EigenPair',
    'assemble',
    'assemble_full',
    'boundary_energy_per_edge',
    'deflated_solve',
    'dump_matrix',
    'eigenpairs',
    'element_products',
    'load_vector',
    'nodal_gradients',
    'richardson',
    'segment_mass',
    'slice_gradient_products',
    'solve_eigs',
)

import collections
import concurrent.futures
import logging
import warnings

import numpy
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

import polyspec
from polyspec import InconsistentRHS
from polyspec import InvalidArgument
from polyspec import InvalidMesh
from polyspec import SolverFailure
from polyspec import Unsupported
from polyspec import meshgen


log = logging.getLogger(__name__)

# Relative eigen-residual above which an iterative result is rejected.
ACCEPT_RESIDUAL = 1e-7

# Smallest relative gap lambda_2 - lambda_1 treated as a simple lambda_1.
GAP_TOLERANCE = 1e-8


class EigenPair(collections.namedtuple('EigenPair', 'value vector residual')):
    """An eigenvalue, its B-normalized vector and ``|Au - lBu| / |u|_B``.
    """

    __slots__ = ()


BoundaryEnergy = collections.namedtuple(
    'BoundaryEnergy', 'edges energy length normal hat_integrals')


def _element_matrices(grads, areas):
    stiffness = areas[:, None, None] * numpy.einsum(
        'tkc,tlc->tkl', grads, grads)
    mass = areas[:, None, None] * (numpy.ones((3, 3)) + numpy.eye(3)) / 12
    return stiffness, mass


def _coo(triangles, values, size):
    rows = numpy.repeat(triangles, 3, axis=1).reshape(-1)
    cols = numpy.tile(triangles, (1, 3)).reshape(-1)
    return scipy.sparse.coo_matrix(
        (values.reshape(-1), (rows, cols)), shape=(size, size))


def assemble_full(M, threads=1):
    """Stiffness and mass matrices on all nodes of M (CSR).

    With several threads the triangles are cut into contiguous chunks,
    each chunk is assembled separately and the chunks are summed in
    order, so results depend only on the thread count.
    """
    grads, areas = M.geometry()
    if not numpy.all(areas > 0):
        raise InvalidMesh("Mesh has degenerate triangles")
    N = M.node_count

    def chunk(bounds):
        lo, hi = bounds
        k, m = _element_matrices(grads[lo:hi], areas[lo:hi])
        t = M.triangles[lo:hi]
        return _coo(t, k, N).tocsr(), _coo(t, m, N).tocsr()

    T = len(M.triangles)
    if threads <= 1 or T < 1000:
        return chunk((0, T))
    edges = numpy.linspace(0, T, threads + 1).astype(int)
    with concurrent.futures.ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(chunk, zip(edges[:-1], edges[1:])))
    stiffness, mass = parts[0]
    for k, m in parts[1:]:
        stiffness = stiffness + k
        mass = mass + m
    return stiffness, mass


def assemble(M, threads=1):
    """Stiffness and mass matrices with Dirichlet nodes eliminated.

    The matrices are cached on the mesh.
    """
    try:
        return M.cache['assemble']
    except KeyError:
        pass
    stiffness, mass = assemble_full(M, threads)
    free = M.free
    result = M.cache['assemble'] = (
        stiffness[free][:, free].tocsr(), mass[free][:, free].tocsr())
    return result


def load_vector(M, f=1.0):
    """Load vector ``(f, v_k)`` on the free nodes.

    ``f`` is a constant or a nodal field on all nodes.
    """
    areas = M.areas
    if numpy.ndim(f) == 0:
        b = numpy.bincount(M.triangles.reshape(-1),
                           numpy.repeat(areas * f / 3, 3),
                           minlength=M.node_count)
    else:
        _, mass = assemble_full(M)
        b = mass @ numpy.asarray(f, dtype=float)
    return b[M.free]


def nodal_gradients(M, u):
    """Constant gradients of a P1 field on every triangle.

    A scalar field gives shape (T, 2), a field with c components per
    node gives (T, c, 2).
    """
    grads, _ = M.geometry()
    values = numpy.asarray(u)[M.triangles]
    if values.ndim == 2:
        return numpy.einsum('tk,tkc->tc', values, grads)
    return numpy.einsum('tkd,tkc->tdc', values, grads)


def element_products(M, u, v):
    """Exact integrals of u v over every triangle (P1 fields)."""
    a = numpy.asarray(u)[M.triangles]
    b = numpy.asarray(v)[M.triangles]
    return M.areas / 12 * (a.sum(axis=1) * b.sum(axis=1)
                           + (a * b).sum(axis=1))


def slice_gradient_products(M, u, v):
    """Per-slice tables ``S[j, a, b] = int_{T_j} d_a u d_b v``.

    ``v`` may be a scalar field or a field with c components, in which
    case the result has shape (slices, c, 2, 2).
    """
    if M.tags is None or len(M.tags) != len(M.triangles):
        raise InvalidMesh("Mesh has no slice tags")
    slices = int(M.tags.max()) + 1 if M.hats is None else len(
        M.hats.triangles)
    gu = nodal_gradients(M, u)
    gv = nodal_gradients(M, v)
    if gv.ndim == 2:
        per_triangle = numpy.einsum('t,ta,tb->tab', M.areas, gu, gv)
    else:
        per_triangle = numpy.einsum('t,ta,tdb->tdab', M.areas, gu, gv)
    result = numpy.zeros((slices,) + per_triangle.shape[1:])
    numpy.add.at(result, M.tags, per_triangle)
    return result


def segment_mass(M, u, segment=((0.0, 0.0), (1.0, 0.0)), tolerance=1e-12):
    """Exact integral of u**2 along a segment made of mesh edges."""
    a, b = (numpy.asarray(p, dtype=float) for p in segment)
    direction = b - a
    length = float(numpy.hypot(*direction))
    if not length > 0:
        raise InvalidArgument("Empty segment")
    edges = M.edges
    rel = M.nodes - a
    cross = (direction[0] * rel[:, 1] - direction[1] * rel[:, 0]) / length
    along = (rel @ direction) / length ** 2
    on = ((numpy.abs(cross) <= tolerance * max(1.0, length))
          & (along >= -tolerance) & (along <= 1 + tolerance))
    edges = edges[on[edges[:, 0]] & on[edges[:, 1]]]
    ends = M.nodes[edges]
    lengths = numpy.hypot(*(ends[:, 1] - ends[:, 0]).T)
    if abs(lengths.sum() - length) > 1e-9 * length:
        raise InvalidArgument(
            "Segment is not resolved by mesh edges",
            covered=float(lengths.sum()), length=length)
    u = numpy.asarray(u, dtype=float)
    ua, ub = u[edges[:, 0]], u[edges[:, 1]]
    return float((lengths / 3 * (ua * ua + ua * ub + ub * ub)).sum())


def boundary_energy_per_edge(M, u):
    """Boundary edges with the energy density of their triangle.

    For every boundary edge: its end nodes (in the counter-clockwise
    order of the adjacent triangle), ``|grad u|**2`` on that triangle,
    the edge length, the outward unit normal and the exact integrals of
    the polygon hat functions along the edge.
    """
    t = M.triangles
    oriented = numpy.vstack((t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]))
    owner = numpy.tile(numpy.arange(len(t)), 3)
    _, inverse, counts = numpy.unique(
        numpy.sort(oriented, axis=1), axis=0, return_inverse=True,
        return_counts=True)
    single = counts[inverse.reshape(-1)] == 1
    edges, owner = oriented[single], owner[single]
    g = nodal_gradients(M, u)[owner]
    vectors = M.nodes[edges[:, 1]] - M.nodes[edges[:, 0]]
    length = numpy.hypot(*vectors.T)
    normal = numpy.column_stack((vectors[:, 1], -vectors[:, 0])) / (
        length[:, None])
    phi = meshgen.hat_values(M)
    hat_integrals = (phi[edges[:, 0]] + phi[edges[:, 1]]).toarray() * (
        length[:, None] / 2)
    return BoundaryEnergy(edges, (g * g).sum(axis=1), length, normal,
                          hat_integrals)


def _normalize(A, B, values, vectors):
    pairs = []
    for value, x in zip(values, vectors.T):
        x = x / numpy.sqrt(x @ (B @ x))
        if x[numpy.argmax(numpy.abs(x))] < 0:
            x = -x
        value = float(x @ (A @ x))
        residual = float(numpy.linalg.norm(A @ x - value * (B @ x)))
        pairs.append(EigenPair(value, x, residual))
    return pairs


def _dense(A, B, count, config):
    values, vectors = scipy.linalg.eigh(
        A.toarray(), B.toarray(), subset_by_index=[0, count - 1])
    return values, vectors


def _shift_invert(A, B, count, config):
    values, vectors = scipy.sparse.linalg.eigsh(
        A.tocsc(), k=count, M=B.tocsc(), sigma=0, which='LM',
        tol=config.eig_tol)
    order = numpy.argsort(values)
    return values[order], vectors[:, order]


def _lobpcg(A, B, count, config):
    rng = numpy.random.default_rng(config.seed)
    X = rng.random((A.shape[0], count + 1))
    if config.preconditioner == 'factorized':
        lu = scipy.sparse.linalg.splu(A.tocsc())
        preconditioner = scipy.sparse.linalg.LinearOperator(
            A.shape, matvec=lu.solve, matmat=lu.solve, dtype=float)
    else:
        preconditioner = scipy.sparse.diags(1 / A.diagonal())
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', UserWarning)
        values, vectors = scipy.sparse.linalg.lobpcg(
            A, X, B=B, M=preconditioner, tol=config.eig_tol,
            maxiter=config.eig_maxiter, largest=False)
    order = numpy.argsort(values)[:count]
    return values[order], vectors[:, order]


_methods = {
    'dense': _dense,
    'lobpcg': _lobpcg,
    'shift-invert': _shift_invert,
}


def _accepted(pairs):
    return all(p.residual <= ACCEPT_RESIDUAL * max(1.0, p.value)
               for p in pairs)


def solve_eigs(A, B, count=2, config=None):
    """The ``count`` smallest eigenpairs of ``A x = l B x``.

    Vectors are B-orthonormal, sign-fixed so the entry of largest
    magnitude is positive, and eigenvalues are recomputed as Rayleigh
    quotients.  When ``count >= 2`` the first eigenvalue must be simple,
    otherwise `polyspec.Unsupported` is raised.
    """
    config = polyspec.configuration(config)
    size = A.shape[0]
    if count < 1 or count > size:
        raise InvalidArgument("Cannot compute %s eigenpairs of a %s-system"
                              % (count, size), count=count)
    method = config.eig_method
    if method == 'auto':
        method = 'dense' if size <= config.dense_limit else 'lobpcg'
    if method == 'lobpcg' and size < 5 * (count + 1):
        method = 'dense'
    values, vectors = _methods[method](A, B, count, config)
    pairs = _normalize(A, B, values, vectors)
    if not _accepted(pairs) and method == 'lobpcg':
        log.warning(
            "LOBPCG did not converge (residuals %s); "
            "falling back to shift-invert",
            ', '.join('%.3g' % p.residual for p in pairs))
        values, vectors = _shift_invert(A, B, count, config)
        pairs = _normalize(A, B, values, vectors)
    if not _accepted(pairs):
        worst = max(p.residual for p in pairs)
        raise SolverFailure(
            "Eigen-solver did not converge (residual %.3g)" % worst,
            residual=worst, method=method)
    pairs.sort(key=lambda p: p.value)
    if count >= 2:
        gap = pairs[1].value - pairs[0].value
        if gap <= GAP_TOLERANCE * pairs[0].value:
            raise Unsupported(
                "The first eigenvalue is not simple (gap %.3g)" % gap,
                gap=gap)
    log.debug("eigenvalues %s (method %s)",
              ', '.join('%.10g' % p.value for p in pairs), method)
    return pairs


def eigenpairs(M, count=2, config=None):
    """Assemble and solve on a mesh; vectors are returned on all nodes.
    """
    config = polyspec.configuration(config)
    A, B = assemble(M, config.threads)
    return [EigenPair(p.value, M.expand(p.vector), p.residual)
            for p in solve_eigs(A, B, count, config)]


DeflatedSolution = collections.namedtuple(
    'DeflatedSolution', 'solution multiplier iterations residual')


def deflated_solve(A, B, lam, deflation, rhs, config=None, strict=True,
                   full_output=False):
    """Solve ``(A - lam B) U = rhs - l B u`` with ``u' B U = 0``.

    ``u`` is the deflation vector (normalized here in the B norm) and
    ``l = u' rhs`` the multiplier.  The ``cg`` method runs preconditioned
    conjugate gradients on the B-orthogonal complement of u, projecting
    in every iteration; ``bordered`` solves the bordered system
    ``[[A - lam B, B u], [u' B, 0]]`` directly.

    With ``strict`` a right-hand side whose component along u exceeds
    ``symmetry_tol`` (relative) raises `polyspec.InconsistentRHS`.
    """
    config = polyspec.configuration(config)
    rhs = numpy.asarray(rhs, dtype=float)
    u = numpy.asarray(deflation, dtype=float)
    u = u / numpy.sqrt(u @ (B @ u))
    Bu = B @ u
    multiplier = float(u @ rhs)
    scale = numpy.linalg.norm(rhs) * numpy.linalg.norm(Bu)
    if strict and abs(multiplier) > config.symmetry_tol * max(scale, 1e-300):
        raise InconsistentRHS(
            "Right-hand side is not orthogonal to the deflation vector",
            defect=abs(multiplier) / scale)
    target = rhs - multiplier * Bu
    shifted = (A - lam * B).tocsr()
    iterations = 0

    if not target.any():
        U = numpy.zeros_like(target)
    elif config.deflation == 'bordered':
        border = scipy.sparse.csr_matrix(Bu[None, :])
        system = scipy.sparse.bmat(
            [[shifted, border.T], [border, None]], format='csc')
        U = scipy.sparse.linalg.spsolve(
            system, numpy.concatenate((target, [0.0])))[:-1]
    else:
        def project(x):
            return x - u * (Bu @ x)

        def project_t(y):
            return y - Bu * (u @ y)

        lu = scipy.sparse.linalg.splu(A.tocsc())
        size = A.shape[0]
        operator = scipy.sparse.linalg.LinearOperator(
            (size, size), dtype=float,
            matvec=lambda x: project_t(shifted @ project(x)))
        preconditioner = scipy.sparse.linalg.LinearOperator(
            (size, size), dtype=float,
            matvec=lambda r: project(lu.solve(project_t(r))))

        def count(xk):
            nonlocal iterations
            iterations += 1

        y, info = scipy.sparse.linalg.cg(
            operator, project_t(target), rtol=config.cg_rtol,
            maxiter=config.cg_maxiter, M=preconditioner, callback=count)
        if info != 0:
            residual = float(numpy.linalg.norm(
                operator @ y - project_t(target)))
            raise SolverFailure(
                "Deflated conjugate gradients stagnated after %s "
                "iterations" % iterations,
                residual=residual, iterations=iterations)
        U = project(y)

    residual = float(numpy.linalg.norm(shifted @ U - target))
    if full_output:
        return DeflatedSolution(U, multiplier, iterations, residual)
    return U


def richardson(coarse, fine, order=2):
    """One extrapolation step for values at h and h/2."""
    return fine + (fine - coarse) / (2 ** order - 1)


def dump_matrix(A):
    """Coordinate text form: a ``rows cols nnz`` header, then
    ``i j value`` lines in row-major order.
    """
    A = scipy.sparse.coo_matrix(A)
    A.sum_duplicates()
    order = numpy.lexsort((A.col, A.row))
    lines = ['%s %s %s' % (A.shape[0], A.shape[1], A.nnz)]
    lines.extend('%s %s %r' % (A.row[k], A.col[k], float(A.data[k]))
                 for k in order)
    return '\n'.join(lines) + '\n'
