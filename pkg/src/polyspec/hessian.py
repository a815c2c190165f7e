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
"""Shape gradient and shape Hessian of the first eigenvalue.

A displacement d of the polygon vertices moves every mesh node x by
``sum_i d_i phi_i(x)`` (see `polyspec.meshgen.morph_mesh`).  The
discrete eigenvalue is then a smooth function of the vertex coordinates
and everything here is its exact derivative, written with the
per-triangle constant gradients:

- ``g``, the gradient of the eigenfunction u on a mesh triangle,
- ``p``, the gradient of the hat function phi_i on the hat triangle
  containing it.

The first derivative with respect to coordinate a of vertex i is::

   G_ia = sum_T ((|T| |g|**2 - lambda int_T u**2) p_a - 2 |T| (p.g) g_a)

The second derivative needs the material derivatives ``U_ia``, which
solve ``a_h(U_ia, v) = f_ia(v)`` on the complement of u, where
``a_h(U, V) = int grad U . grad V - lambda int U V`` and::

   f_ia(v) = int (-p_a g.grad v + g_a p.grad v + (p.g) d_a v)
             + (G_ia + lambda p_a) int u v                      (full)

   f_ia(v) = int (g_a p.grad v + (p.g) d_a v) + G_ia int u v     (slice)

The two forms coincide when u is invariant under the symmetries of a
symmetric mesh.  With ``anti = p_a q_b - p_b q_a`` (q for vertex j,
direction b) the Hessian of lambda is::

   N = -2 a_h(U_ia, U_jb)
       + sum_T ((-|T| |g|**2 - lambda int_T u**2) anti
                + 2 |T| (p.q) g_a g_b
                - int_T u**2 (p_a G_jb + G_ia q_b))

and the Hessian of ``J = |P| lambda`` follows by the product rule.

At the regular polygon the Hessian of J is block circulant in the
local radial/tangential frames, so its spectrum is that of n Hermitian
2x2 blocks ``[[alpha_k, i gamma_k], [-i gamma_k, beta_k]]``.  Only the
two material derivatives of vertex 0 are solved; those of vertex j are
node permutations of them.
"""

# Public names:
__all__ = (
    'Coefficients',
    'CriticalityDefects',
    'HessianBlocks',
    'HessianSpectrum',
    'MaterialSolution',
    'coefficients',
    'criticality_defects',
    'eig_gradient',
    'eigenvalue_hessian',
    'fd_gradient',
    'fd_hessian',
    'hessian_blocks_direct',
    'hessian_spectrum',
    'material_rhs',
    'scale_invariant_gradient',
    'slice_integrals',
    'solve_U0',
    'symmetrize',
    'write_spectrum_csv',
)

import collections
import concurrent.futures
import csv
import logging
import math

import numpy

import polyspec
from polyspec import FormulaMismatch
from polyspec import InvalidArgument
from polyspec import InvalidMesh
from polyspec import SymmetryViolation
from polyspec import fem
from polyspec import meshgen
from polyspec import polygeom


log = logging.getLogger(__name__)


def _check_mesh(P, M):
    if M.hats is None:
        raise InvalidMesh("Mesh has no hat functions")
    if P is not None and P != M.polygon:
        raise InvalidArgument("The mesh does not mesh the given polygon")


def _eigenpair(M, e, config):
    if e is None:
        e = fem.eigenpairs(M, 2, config)[0]
        if M.symmetry is not None:
            e = symmetrize(M, e)
    return e


class _TagSums:
    """Per hat-triangle sums of the eigenfunction data.

    energy[t] = sum |T| |g|**2, mass[t] = sum int_T u**2,
    stress[t] = sum |T| g (x) g, all over mesh triangles in hat
    triangle t; p[t, i] is the gradient of phi_i on hat triangle t.
    """

    def __init__(self, M, e):
        self.value = e.value
        u = e.vector
        g = fem.nodal_gradients(M, u)
        areas = M.areas
        tags = len(M.hats.triangles)
        self.energy = numpy.bincount(
            M.tags, areas * (g * g).sum(axis=1), minlength=tags)
        self.mass = numpy.bincount(
            M.tags, fem.element_products(M, u, u), minlength=tags)
        self.stress = numpy.zeros((tags, 2, 2))
        numpy.add.at(self.stress, M.tags,
                     areas[:, None, None] * g[:, :, None] * g[:, None, :])
        self.p = M.hats.gradients
        self.g = g

    def gradient(self):
        lam = self.value
        scalar = self.energy - lam * self.mass
        G = (numpy.einsum('t,tia->ia', scalar, self.p)
             - 2 * numpy.einsum('tac,tic->ia', self.stress, self.p))
        return G

    def explicit_hessian(self, G):
        """The part of the Hessian of lambda not involving U."""
        lam = self.value
        p = self.p
        n = p.shape[1]
        pq = numpy.einsum('tia,tjb->tiajb', p, p)
        anti = pq - pq.transpose(0, 1, 4, 3, 2)
        N = numpy.einsum('t,tiajb->iajb', -self.energy - lam * self.mass,
                         anti)
        N += 2 * numpy.einsum('tic,tjc,tab->iajb', p, p, self.stress)
        N -= numpy.einsum('t,tia,jb->iajb', self.mass, p, G)
        N -= numpy.einsum('t,ia,tjb->iajb', self.mass, G, p)
        return N.reshape(2 * n, 2 * n)


def eig_gradient(P, M, e=None, method='distributed', config=None):
    """Gradient of the discrete eigenvalue with respect to the vertices.

    ``distributed`` is the exact derivative of the discrete eigenvalue
    under the morph.  ``boundary`` evaluates
    ``-sum_edges int_edge |grad u|**2 phi_i n`` and converges at O(h).
    """
    _check_mesh(P, M)
    e = _eigenpair(M, e, config)
    if method == 'distributed':
        return _TagSums(M, e).gradient().reshape(-1)
    if method == 'boundary':
        b = fem.boundary_energy_per_edge(M, e.vector)
        G = -numpy.einsum('e,ei,ea->ia', b.energy, b.hat_integrals,
                          b.normal)
        return G.reshape(-1)
    raise InvalidArgument("Unknown gradient method", method=method)


def scale_invariant_gradient(P, M, e=None, config=None):
    """Gradient of J = |P| lambda: lambda grad|P| + |P| grad lambda."""
    e = _eigenpair(M, e, config)
    polygon = M.polygon if P is None else P
    return (e.value * polygeom.area_gradient(polygon)
            + polygeom.polygon_area(polygon) * eig_gradient(
                P, M, e, config=config))


def symmetrize(M, e):
    """Average a nodal field (or eigenpair) over the dihedral group.

    An eigenpair is renormalized in the mass norm and its eigenvalue
    replaced by the Rayleigh quotient of the averaged vector.
    """
    if M.symmetry is None:
        raise InvalidArgument("Mesh has no symmetry maps")
    group = M.symmetry.group()
    if not isinstance(e, fem.EigenPair):
        u = numpy.asarray(e, dtype=float)
        return sum(u[g] for g in group) / len(group)
    u = sum(e.vector[g] for g in group) / len(group)
    A, B = fem.assemble(M)
    x = M.restrict(u)
    x = x / numpy.sqrt(x @ (B @ x))
    value = float(x @ (A @ x))
    residual = float(numpy.linalg.norm(A @ x - value * (B @ x)))
    drift = float(numpy.abs(M.expand(x) - e.vector).max())
    log.debug("symmetrized eigenvector moved by %.3g", drift)
    return fem.EigenPair(value, M.expand(x), residual)


SliceIntegrals = collections.namedtuple('SliceIntegrals', 'xx yy xy')


def slice_integrals(M, e):
    """``(A_xx, A_yy, A_xy)``: the integrals over slice 0 of
    ``(d_x u)**2``, ``(d_y u)**2`` and ``d_x u d_y u``.
    """
    S = fem.slice_gradient_products(M, e.vector, e.vector)[0]
    return SliceIntegrals(float(S[0, 0]), float(S[1, 1]), float(S[0, 1]))


CriticalityDefects = collections.namedtuple(
    'CriticalityDefects', 'trace symmetry criticality multiplier s')


def criticality_defects(M, e):
    """Defects of the discrete identities at the regular polygon.

    trace
        ``A_xx + A_yy - lambda / n``
    symmetry
        ``-sin t A_xx + sin t A_yy + 2 cos t A_xy``
    criticality
        ``A_xx - cot t A_xy - lambda / (2 n)``
    multiplier
        ``s + 2 lambda / n`` where ``(s, 0)`` is the eigenvalue gradient
        at vertex 0.

    All vanish to roundoff for a symmetrized eigenpair.
    """
    n = M.polygon.n
    theta = 2 * math.pi / n
    A = slice_integrals(M, e)
    lam = e.value
    G = _TagSums(M, e).gradient()
    sin, cos = math.sin(theta), math.cos(theta)
    return CriticalityDefects(
        A.xx + A.yy - lam / n,
        -sin * A.xx + sin * A.yy + 2 * cos * A.xy,
        A.xx - cos / sin * A.xy - lam / (2 * n),
        G[0, 0] + 2 * lam / n,
        float(G[0, 0]),
    )


def _rhs(M, e, vertices, form, G=None, sums=None):
    """Material right-hand sides on the free nodes, shape (v, 2, F)."""
    if form not in ('full', 'slice'):
        raise InvalidArgument("Unknown right-hand side form", form=form)
    sums = sums or _TagSums(M, e)
    if G is None:
        G = sums.gradient()
    lam = e.value
    p = sums.p[:, vertices]
    tags = numpy.nonzero(numpy.abs(p).sum(axis=(1, 2)) > 0)[0]
    tag_index = numpy.full(len(sums.p), -1)
    tag_index[tags] = numpy.arange(len(tags))
    elements = numpy.nonzero(tag_index[M.tags] >= 0)[0]
    local_tag = tag_index[M.tags[elements]]

    grads, areas = M.geometry()
    grads, areas = grads[elements], areas[elements]
    g = sums.g[elements]
    u = e.vector[M.triangles[elements]]
    # c[e, l, a, d] = |T| (g_a dl_d + g_d dl_a [- delta_ad g.dl])
    c = (g[:, None, :, None] * grads[:, :, None, :]
         + grads[:, :, :, None] * g[:, None, None, :])
    if form == 'full':
        c -= (numpy.einsum('ec,elc->el', g, grads)[:, :, None, None]
              * numpy.eye(2))
    c *= areas[:, None, None, None]
    mass = areas[:, None] / 12 * (u.sum(axis=1)[:, None] + u)

    N = M.node_count
    index = (local_tag[:, None] * N + M.triangles[elements]).reshape(-1)
    size = len(tags) * N
    R = numpy.empty((len(tags), 2, 2, N))
    for a in range(2):
        for d in range(2):
            R[:, a, d] = numpy.bincount(
                index, c[:, :, a, d].reshape(-1), minlength=size
            ).reshape(len(tags), N)
    m = numpy.bincount(index, mass.reshape(-1), minlength=size).reshape(
        len(tags), N)

    p = p[tags]
    rhs = numpy.einsum('tadk,tid->iak', R, p)
    coefficient = numpy.broadcast_to(G[vertices][None], p.shape).copy()
    if form == 'full':
        coefficient += lam * p
    rhs += numpy.einsum('tia,tk->iak', coefficient, m)
    # the G term lives on all hat triangles, not only those near the
    # selected vertices
    rest = numpy.setdiff1d(numpy.arange(len(sums.p)), tags)
    if len(rest):
        others = numpy.nonzero(numpy.isin(M.tags, rest))[0]
        uo = e.vector[M.triangles[others]]
        rest_mass = numpy.bincount(
            M.triangles[others].reshape(-1),
            (M.areas[others, None] / 12
             * (uo.sum(axis=1)[:, None] + uo)).reshape(-1),
            minlength=N)
        rhs += G[vertices][:, :, None] * rest_mass
    return rhs[:, :, M.free]


def material_rhs(M, e=None, vertex=0, form=None, config=None):
    """The pair of right-hand sides (f^1, f^2) of one vertex.

    Returns ``(rhs, G)``: rhs of shape (2, F) on the free nodes and the
    eigenvalue gradient G at the vertex (``(s, 0)`` at vertex 0 of a
    symmetric mesh).  Raises `polyspec.SymmetryViolation` when a
    component is not mass-orthogonal to u.
    """
    config = polyspec.configuration(config)
    form = form or config.rhs_form
    e = _eigenpair(M, e, config)
    sums = _TagSums(M, e)
    G = sums.gradient()
    rhs = _rhs(M, e, [vertex], form, G, sums)[0]
    _check_orthogonal(M, e, rhs, config)
    return rhs, G[vertex]


def _check_orthogonal(M, e, rhs, config):
    u = M.restrict(e.vector)
    for f in rhs.reshape(-1, rhs.shape[-1]):
        scale = numpy.linalg.norm(f) * numpy.linalg.norm(u)
        defect = abs(float(f @ u)) / max(scale, 1e-300)
        if defect > config.symmetry_tol:
            raise SymmetryViolation(
                "Material right-hand side is not orthogonal to u "
                "(defect %.3g)" % defect, defect=defect)


class MaterialSolution(collections.namedtuple(
        'MaterialSolution', 'U s multipliers parity_defect')):
    """Material derivatives of vertex 0 on all nodes, shape (2, N).

    ``U[0]`` is even and ``U[1]`` odd in y on a symmetric mesh.
    """

    __slots__ = ()


def _solve(M, e, rhs, config):
    A, B = fem.assemble(M, config.threads)
    u = M.restrict(e.vector)
    results = [fem.deflated_solve(A, B, e.value, u, f, config,
                                  strict=False, full_output=True)
               for f in rhs]
    return results


def solve_U0(M, e, rhs, s=None, config=None):
    """Solve the two material derivative equations of vertex 0."""
    config = polyspec.configuration(config)
    results = _solve(M, e, rhs, config)
    U = numpy.array([M.expand(r.solution) for r in results])
    defect = 0.0
    if M.symmetry is not None:
        r = M.symmetry.reflection
        scale = max(float(numpy.abs(U).max()), 1e-300)
        defect = max(float(numpy.abs(U[0][r] - U[0]).max()),
                     float(numpy.abs(U[1][r] + U[1]).max())) / scale
        if defect > config.symmetry_tol:
            log.warning("Material derivatives violate parity by %.3g",
                        defect)
    return MaterialSolution(U, s, tuple(r.multiplier for r in results),
                            defect)


def eigenvalue_hessian(P, M, e=None, form=None, config=None,
                       full_output=False):
    """Hessian N of the discrete eigenvalue (2n x 2n)."""
    config = polyspec.configuration(config)
    _check_mesh(P, M)
    e = _eigenpair(M, e, config)
    if form is None:
        form = 'full' if M.symmetry is None else config.rhs_form
    n = M.polygon.n
    sums = _TagSums(M, e)
    G = sums.gradient()
    rhs = _rhs(M, e, list(range(n)), form, G, sums).reshape(2 * n, -1)
    A, B = fem.assemble(M, config.threads)
    u = M.restrict(e.vector)

    def solve(f):
        return fem.deflated_solve(A, B, e.value, u, f, config,
                                  strict=False)

    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(config.threads) as pool:
            U = numpy.array(list(pool.map(solve, rhs)))
    else:
        U = numpy.array([solve(f) for f in rhs])
    shifted = A - e.value * B
    ah = U @ (shifted @ U.T)
    N = -2 * ah + sums.explicit_hessian(G)
    N = .5 * (N + N.T)
    if full_output:
        return N, G.reshape(-1), e
    return N


class HessianBlocks:
    """Hessian of J at a polygon as a symmetric 2n x 2n matrix."""

    def __init__(self, matrix, gradient=None, eigenvalue=None):
        self.matrix = matrix
        self.gradient = gradient
        self.eigenvalue = eigenvalue

    @property
    def n(self):
        return len(self.matrix) // 2

    @property
    def blocks(self):
        n = self.n
        return self.matrix.reshape(n, 2, n, 2).transpose(0, 2, 1, 3)

    def eigenvalues(self):
        return numpy.linalg.eigvalsh(self.matrix)

    def quadratic_form(self, v):
        v = numpy.asarray(v, dtype=float)
        return float(v @ self.matrix @ v)

    def norm(self):
        return float(numpy.linalg.norm(self.matrix, 2))


def hessian_blocks_direct(P, M, e=None, form=None, config=None):
    """Hessian of J = |P| lambda, all 2n material derivatives solved."""
    config = polyspec.configuration(config)
    N, G, e = eigenvalue_hessian(P, M, e, form, config, full_output=True)
    polygon = M.polygon
    area = polygeom.polygon_area(polygon)
    dA = polygeom.area_gradient(polygon)
    H = (area * N + numpy.outer(G, dA) + numpy.outer(dA, G)
         + e.value * polygeom.area_hessian(polygon.n))
    H = .5 * (H + H.T)
    return HessianBlocks(H, e.value * dA + area * G, e.value)


class Coefficients(collections.namedtuple(
        'Coefficients',
        'k alpha beta gamma gamma_alt gap cross closed_form')):
    """Block entries for one k.

    ``gamma_alt`` is gamma from the second formula, ``cross`` the
    (alpha, beta, gamma) values from the slice-integral expansion,
    ``gap`` the largest relative disagreement between the routes and
    ``closed_form`` the explicit parts ``q_k A_xx`` and ``q_k A_yy``.
    """

    __slots__ = ()

    def block(self):
        return numpy.array([[self.alpha, 1j * self.gamma],
                            [-1j * self.gamma, self.beta]])

    def mu(self):
        mean = .5 * (self.alpha + self.beta)
        root = .5 * math.hypot(self.alpha - self.beta, 2 * self.gamma)
        return mean - root, mean + root


def _frames(n):
    theta = 2 * math.pi / n
    j = numpy.arange(n)
    c, s = numpy.cos(j * theta), numpy.sin(j * theta)
    # e[j, b] is the local basis vector b (radial, tangential) of vertex j
    return numpy.stack((numpy.column_stack((c, s)),
                        numpy.column_stack((-s, c))), axis=1)


class _Circulant:
    """Data shared by the coefficients of all k."""

    def __init__(self, M, e, U0, form, config):
        self.M, self.e, self.config, self.form = M, e, config, form
        n = self.n = M.polygon.n
        self.theta = 2 * math.pi / n
        self.area = polygeom.polygon_area(M.polygon)
        self.A, self.B = fem.assemble(M, config.threads)
        self.shifted = self.A - e.value * self.B
        inverse = M.symmetry.inverse(M.symmetry.rotation)
        perm = numpy.arange(M.node_count)
        # rotated[j][b] = U0^b o R_{j theta}^T, on the free nodes
        self.rotated = []
        for j in range(n):
            self.rotated.append(numpy.array(
                [M.restrict(U0.U[b][perm]) for b in range(2)]))
            perm = inverse[perm]
        self.U0 = numpy.array([M.restrict(U0.U[b]) for b in range(2)])
        sums = _TagSums(M, e)
        G = sums.gradient()
        dA = polygeom.area_gradient(M.polygon).reshape(n, 2)
        explicit = (self.area * sums.explicit_hessian(G)
                    + numpy.outer(G.reshape(-1), dA.reshape(-1))
                    + numpy.outer(dA.reshape(-1), G.reshape(-1))
                    + e.value * polygeom.area_hessian(n))
        frames = _frames(n)
        blocks = explicit.reshape(n, 2, n, 2)[0].transpose(1, 0, 2)
        # C[j, a, b]: explicit part in the local frame of vertex j
        self.explicit = numpy.einsum('jac,jbc->jab', blocks, frames)
        self.frames = frames
        # slice tables S[t, b, x, y] = int_{T_t} d_x u d_y U0^b
        self.S = fem.slice_gradient_products(M, e.vector, U0.U.T)
        if form == 'full':
            u = e.vector
            rho = []
            for b in range(2):
                rho.append(e.value * numpy.bincount(
                    M.tags, fem.element_products(M, u, U0.U[b]),
                    minlength=n) - numpy.trace(self.S[:, b], axis1=1,
                                               axis2=2))
            self.rho = numpy.array(rho)
        self.p = M.hats.gradients
        A_ = slice_integrals(M, e)
        self.Axx, self.Ayy = A_.xx, A_.yy

    def a_h(self, V, W):
        return float(V @ (self.shifted @ W))

    def _expansion(self, a, b, weights):
        """Slice-integral value of a_h(U0^a, sum_j w_j U0^b o R_j^T)."""
        total = 0.0
        S = self.S[:, a]
        sym = S + S.transpose(0, 2, 1)
        for j, w in enumerate(weights):
            if w == 0:
                continue
            e_jb = self.frames[j, b]
            value = numpy.einsum('x,txy,ty->', e_jb, sym, self.p[:, j])
            if self.form == 'full':
                value += float((self.p[:, j] @ e_jb) @ self.rho[a])
            total += w * value
        return total

    def coefficients(self, k):
        n, theta = self.n, self.theta
        j = numpy.arange(n)
        cos = numpy.cos(j * k * theta)
        sin = numpy.sin(j * k * theta)
        cos[numpy.abs(cos) < 1e-15] = 0.0
        sin[numpy.abs(sin) < 1e-15] = 0.0
        R = numpy.array(self.rotated)
        W_alpha = numpy.einsum('j,jk->k', cos, R[:, 0])
        W_beta = numpy.einsum('j,jk->k', cos, R[:, 1])
        W_gamma1 = numpy.einsum('j,jk->k', sin, R[:, 1])
        W_gamma2 = numpy.einsum('j,jk->k', sin, R[:, 0])
        C = self.explicit
        scale = 2 * self.area
        ah_alpha = self.a_h(self.U0[0], W_alpha)
        ah_beta = self.a_h(self.U0[1], W_beta)
        ah_gamma1 = self.a_h(self.U0[0], W_gamma1)
        ah_gamma2 = self.a_h(self.U0[1], W_gamma2)
        alpha = float(cos @ C[:, 0, 0]) - scale * ah_alpha
        beta = float(cos @ C[:, 1, 1]) - scale * ah_beta
        gamma = float(sin @ C[:, 0, 1]) - scale * ah_gamma1
        gamma_alt = -float(sin @ C[:, 1, 0]) + scale * ah_gamma2
        cross = (
            float(cos @ C[:, 0, 0]) - scale * self._expansion(0, 0, cos),
            float(cos @ C[:, 1, 1]) - scale * self._expansion(1, 1, cos),
            float(sin @ C[:, 0, 1]) - scale * self._expansion(0, 1, sin),
        )
        size = max(abs(alpha), abs(beta), abs(gamma), 1.0)
        gap = max(abs(gamma - gamma_alt),
                  abs(alpha - cross[0]), abs(beta - cross[1]),
                  abs(gamma - cross[2])) / size
        q = 2 * n * (1 - math.cos(k * theta)) / math.sin(theta)
        return Coefficients(k, alpha, beta, gamma, gamma_alt, gap, cross,
                            (q * self.Axx, q * self.Ayy))


def _prepare(M, e, form, config):
    if M.symmetry is None:
        raise InvalidMesh("The circulant reduction needs a symmetric mesh")
    e = _eigenpair(M, e, config)
    rhs, G0 = material_rhs(M, e, 0, form, config)
    U0 = solve_U0(M, e, rhs, float(G0[0]), config)
    return e, U0


def coefficients(M, e, U0, k, form=None, config=None):
    """alpha_k, beta_k and gamma_k at the regular polygon.

    Raises `polyspec.FormulaMismatch` when the redundant formulas
    disagree by more than ``formula_tol``.
    """
    config = polyspec.configuration(config)
    form = form or config.rhs_form
    result = _Circulant(M, e, U0, form, config).coefficients(k)
    _check_gap(result, config)
    return result


def _check_gap(result, config):
    if result.gap > config.formula_tol:
        raise FormulaMismatch(
            "Coefficient formulas disagree for k=%s (gap %.3g)"
            % (result.k, result.gap), gap=result.gap, k=result.k)


class HessianSpectrum:
    """The spectrum of the Hessian of J at the regular polygon.

    coefficients
        One `Coefficients` per k in 0 .. n-1.
    mu
        Sorted (k, mu) pairs, 2n of them.
    """

    def __init__(self, n, m, h, eigenvalue, coefficients, zero_tol,
                 defects=None, config=None):
        self.n, self.m, self.h = n, m, h
        self.eigenvalue = eigenvalue
        self.coefficients = list(coefficients)
        self.zero_tol = zero_tol
        self.defects = defects
        self.config = config
        pairs = []
        for c in self.coefficients:
            lo, hi = c.mu()
            pairs.extend(((c.k, lo), (c.k, hi)))
        self.mu = sorted(pairs, key=lambda pair: pair[1])

    @property
    def values(self):
        return numpy.array([value for (_, value) in self.mu])

    @property
    def alphas(self):
        return numpy.array([c.alpha for c in self.coefficients])

    @property
    def betas(self):
        return numpy.array([c.beta for c in self.coefficients])

    @property
    def gammas(self):
        return numpy.array([c.gamma for c in self.coefficients])

    def blocks(self):
        return numpy.array([c.block() for c in self.coefficients])

    def threshold(self):
        return self.zero_tol * float(numpy.abs(self.values).max())

    @property
    def zero_count(self):
        return int(numpy.sum(numpy.abs(self.values) <= self.threshold()))

    def nonzero(self):
        values = self.values
        return values[numpy.abs(values) > self.threshold()]

    def multiplicity(self, k):
        n = self.n
        return 1 if k == 0 or 2 * k == n else 2

    def rows(self):
        for c in self.coefficients:
            lo, hi = c.mu()
            yield dict(k=c.k, alpha=c.alpha, beta=c.beta, gamma=c.gamma,
                       mu_lo=lo, mu_hi=hi,
                       multiplicity=self.multiplicity(c.k))

    def __repr__(self):
        return "<HessianSpectrum n=%s m=%s: %s>" % (
            self.n, self.m, ', '.join('%.6g' % v for v in self.values))


def hessian_spectrum(n, m, config=None, mesh=None, form=None, e=None):
    """Spectrum of the Hessian of J at the regular n-gon.

    The symmetric mesh ``symmetric_mesh(n, m)`` is used unless a
    symmetric ``mesh`` is passed, together with its first eigenpair
    ``e`` if already known.
    """
    config = polyspec.configuration(config)
    form = form or config.rhs_form
    M = mesh if mesh is not None else meshgen.symmetric_mesh(n, m)
    e, U0 = _prepare(M, e, form, config)
    circulant = _Circulant(M, e, U0, form, config)
    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(config.threads) as pool:
            result = list(pool.map(circulant.coefficients, range(n)))
    else:
        result = [circulant.coefficients(k) for k in range(n)]
    for c in result:
        _check_gap(c, config)
    spectrum = HessianSpectrum(
        n, M.m, M.h, e.value, result, config.zero_tol,
        criticality_defects(M, e), config)
    if M.hats.center_weight and spectrum.zero_count != 4:
        log.warning("Hessian spectrum for n=%s, m=%s has %s numeric zeros",
                    n, M.m, spectrum.zero_count)
    log.info("n=%s m=%s lambda_h=%.10g mu=%s", n, M.m, e.value,
             ', '.join('%.6g' % v for v in spectrum.values))
    return spectrum


def _objective(M, which, config):
    e = fem.eigenpairs(M, 2, config)[0]
    if which == 'eigenvalue':
        return e.value
    if which == 'J':
        return polygeom.polygon_area(M.polygon) * e.value
    raise InvalidArgument("Unknown objective", objective=which)


def fd_gradient(M, which='eigenvalue', step=1e-5, config=None):
    """Central differences of lambda_1 or J through `morph_mesh`."""
    config = polyspec.configuration(config)
    size = 2 * M.polygon.n
    result = numpy.empty(size)
    for i in range(size):
        d = numpy.zeros(size)
        d[i] = step
        plus = _objective(meshgen.morph_mesh(M, None, d), which, config)
        minus = _objective(meshgen.morph_mesh(M, None, -d), which, config)
        result[i] = (plus - minus) / (2 * step)
    return result


def _gradient_of(M, which, config):
    e = fem.eigenpairs(M, 2, config)[0]
    if which == 'eigenvalue':
        return eig_gradient(None, M, e)
    return scale_invariant_gradient(None, M, e)


def fd_hessian(M, which='J', step=1e-4, method='gradient', config=None):
    """Finite-difference Hessian of lambda_1 or J.

    ``gradient`` differences the exact discrete gradient (2 solves per
    coordinate), ``values`` takes second differences of the objective.
    """
    config = polyspec.configuration(config)
    size = 2 * M.polygon.n
    H = numpy.empty((size, size))
    if method == 'gradient':
        for i in range(size):
            d = numpy.zeros(size)
            d[i] = step
            plus = _gradient_of(meshgen.morph_mesh(M, None, d), which,
                                config)
            minus = _gradient_of(meshgen.morph_mesh(M, None, -d), which,
                                 config)
            H[:, i] = (plus - minus) / (2 * step)
    elif method == 'values':
        def f(d):
            return _objective(meshgen.morph_mesh(M, None, d), which,
                              config)
        for i in range(size):
            for j in range(i, size):
                di = numpy.zeros(size)
                dj = numpy.zeros(size)
                di[i] = dj[j] = step
                H[i, j] = H[j, i] = (
                    f(di + dj) - f(di - dj) - f(dj - di) + f(-di - dj)
                ) / (4 * step * step)
    else:
        raise InvalidArgument("Unknown finite-difference method",
                              method=method)
    return .5 * (H + H.T)


def write_spectrum_csv(spectrum, stream):
    """Write one row per k: the block entries, its two eigenvalues and
    their multiplicity, with hexadecimal copies of the eigenvalues.
    """
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(('k', 'alpha', 'beta', 'gamma', 'mu_lo', 'mu_hi',
                     'multiplicity', 'mu_lo_hex', 'mu_hi_hex'))
    for row in spectrum.rows():
        writer.writerow((
            row['k'],
            '%.9g' % row['alpha'], '%.9g' % row['beta'],
            '%.9g' % row['gamma'],
            '%.9g' % row['mu_lo'], '%.9g' % row['mu_hi'],
            row['multiplicity'],
            float(row['mu_lo']).hex(), float(row['mu_hi']).hex(),
        ))
