"""Taylor-Hood P2-P1 elements on triangles: quadrature, dof maps, assembly.

Velocity dofs are blocked by component: dof = c * (V + E) + s where s is the
scalar P2 dof (vertex id, or V + edge id for a midpoint) and c in {0, 1}.
Pressure dofs are the P1 vertex dofs.  All forms are integrated on the
reference triangle {L1, L2 >= 0, L1 + L2 <= 1} and mapped affinely.
"""

import numpy as np
from scipy import sparse

from .errors import DimensionError

# ---------------------------------------------------------------------------
# quadrature

class QuadratureRule:
    """Barycentric points and weights on the reference triangle.

    Weights sum to the reference area 1/2; the rule integrates polynomials
    up to ``degree`` exactly.
    """

    def __init__(self, points, weights, degree):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.degree = int(degree)

    @property
    def xy(self):
        """Reference (x, y) coordinates, i.e. (L1, L2)."""
        return self.points[:, 1:3]


def _orbit3(a):
    c = 1.0 - 2.0 * a
    return [[c, a, a], [a, c, a], [a, a, c]]


def _rule_degree1():
    return QuadratureRule([[1 / 3, 1 / 3, 1 / 3]], [0.5], 1)


def _rule_degree2():
    return QuadratureRule(_orbit3(1 / 6), [1 / 6] * 3, 2)


def _rule_degree5():
    s15 = np.sqrt(15.0)
    a1, w1 = (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0
    a2, w2 = (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0
    pts = [[1 / 3, 1 / 3, 1 / 3]] + _orbit3(a1) + _orbit3(a2)
    w = np.array([9.0 / 40.0] + [w1] * 3 + [w2] * 3)
    return QuadratureRule(pts, 0.5 * w, 5)


def _rule_degree6():
    pts, w = [], []
    for a, wt in ((0.063089014491502, 0.050844906370207),
                  (0.249286745170910, 0.116786275726379)):
        pts += _orbit3(a)
        w += [wt] * 3
    a, b = 0.310352451033785, 0.636502499121399
    c = 1.0 - a - b
    for p in ((a, b, c), (b, c, a), (c, a, b), (a, c, b), (c, b, a), (b, a, c)):
        pts.append(list(p))
        w.append(0.082851075618374)
    return QuadratureRule(pts, 0.5 * np.array(w), 6)


_RULES = [_rule_degree1(), _rule_degree2(), _rule_degree5(), _rule_degree6()]


def quadrature_rule(degree):
    """Smallest stocked rule exact for polynomials of the given degree."""
    for rule in _RULES:
        if rule.degree >= degree:
            return rule
    raise ValueError(f"no quadrature rule of degree {degree} available")


# ---------------------------------------------------------------------------
# reference shape functions

def p2_values(bary):
    """P2 shape values at barycentric points; order: 3 vertices, then the
    midpoints of the edges opposite each vertex."""
    L0, L1, L2 = bary[:, 0], bary[:, 1], bary[:, 2]
    return np.stack([L0 * (2 * L0 - 1), L1 * (2 * L1 - 1), L2 * (2 * L2 - 1),
                     4 * L1 * L2, 4 * L2 * L0, 4 * L0 * L1], axis=1)


def p2_gradients(bary):
    """Reference-coordinate gradients of the P2 shapes, shape (Q, 6, 2)."""
    L0, L1, L2 = bary[:, 0], bary[:, 1], bary[:, 2]
    g = np.zeros((len(bary), 6, 2))
    g[:, 0, 0] = -(4 * L0 - 1)
    g[:, 0, 1] = -(4 * L0 - 1)
    g[:, 1, 0] = 4 * L1 - 1
    g[:, 2, 1] = 4 * L2 - 1
    g[:, 3, 0] = 4 * L2
    g[:, 3, 1] = 4 * L1
    g[:, 4, 0] = -4 * L2
    g[:, 4, 1] = 4 * (L0 - L2)
    g[:, 5, 0] = 4 * (L0 - L1)
    g[:, 5, 1] = -4 * L1
    return g


# ---------------------------------------------------------------------------
# function space

class _Geometry:
    """Per-triangle affine data and shape values for one quadrature rule."""

    def __init__(self, mesh, rule):
        self.rule = rule
        self.w = rule.weights
        p = mesh.vertices[mesh.triangles]                      # (T, 3, 2)
        self.J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        self.detJ = (self.J[:, 0, 0] * self.J[:, 1, 1]
                     - self.J[:, 0, 1] * self.J[:, 1, 0])
        invJ = np.empty_like(self.J)
        invJ[:, 0, 0] = self.J[:, 1, 1] / self.detJ
        invJ[:, 0, 1] = -self.J[:, 0, 1] / self.detJ
        invJ[:, 1, 0] = -self.J[:, 1, 0] / self.detJ
        invJ[:, 1, 1] = self.J[:, 0, 0] / self.detJ
        self.N = p2_values(rule.points)                        # (Q, 6)
        self.P1 = rule.points                                  # (Q, 3)
        # physical gradient: grad_x N = J^{-T} grad_ref N
        self.G = np.einsum('qad,tdi->tqai', p2_gradients(rule.points), invJ)
        self.xq = p[:, None, 0, :] + np.einsum('tid,qd->tqi', self.J, rule.xy)


class TaylorHoodSpace:
    """P2 velocity / P1 pressure space on a triangular mesh.

    dirichlet_markers selects which boundary markers carry essential velocity
    conditions; None constrains the entire boundary (the no-slip setting).
    """

    def __init__(self, mesh, dirichlet_markers=None):
        self.mesh = mesh
        V, E = mesh.n_vertices, mesh.n_edges
        self.n_scalar = V + E
        self.n_vel = 2 * self.n_scalar
        self.n_pr = V
        self.cell_dofs = np.concatenate(
            [mesh.triangles, V + mesh.triangle_edges], axis=1)
        b_edges = mesh.boundary_edges
        if dirichlet_markers is None:
            sel_edges = b_edges
        else:
            sel_edges = b_edges[np.isin(mesh.edge_markers[b_edges],
                                        dirichlet_markers)]
        b_verts = np.unique(mesh.edges[sel_edges])
        self.dirichlet_scalar = np.sort(np.concatenate([b_verts, V + sel_edges]))
        self.dirichlet_dofs = np.concatenate(
            [self.dirichlet_scalar, self.n_scalar + self.dirichlet_scalar])
        self._geom = {}
        self._ops = {}

    def geometry(self, degree):
        rule = quadrature_rule(degree)
        if rule.degree not in self._geom:
            self._geom[rule.degree] = _Geometry(self.mesh, rule)
        return self._geom[rule.degree]

    def scalar_dof_coords(self):
        """Coordinates of the scalar P2 dofs: vertices, then edge midpoints."""
        if 'coords' not in self._ops:
            self._ops['coords'] = np.concatenate(
                [self.mesh.vertices, self.mesh.edge_midpoints()])
        return self._ops['coords']

    def _cached(self, key, builder):
        if key not in self._ops:
            self._ops[key] = builder(self)
        return self._ops[key]

    def velocity_mass(self):
        return self._cached('M', assemble_velocity_mass)

    def velocity_stiffness(self):
        return self._cached('K', assemble_velocity_stiffness)

    def divergence(self):
        return self._cached('B', assemble_divergence)

    def curl_gram(self):
        return self._cached('C', assemble_curl_gram)

    def pressure_mass(self):
        return self._cached('Mp', assemble_pressure_mass)

    def pressure_integral(self):
        return self._cached('mp', pressure_integral_vector)


# ---------------------------------------------------------------------------
# assembly

def _scatter(elem, rows_map, cols_map, shape):
    rows = np.broadcast_to(rows_map[:, :, None], elem.shape).ravel()
    cols = np.broadcast_to(cols_map[:, None, :], elem.shape).ravel()
    A = sparse.coo_matrix((elem.ravel(), (rows, cols)), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def _scalar_mass(space):
    g = space.geometry(5)
    Me = np.einsum('q,qa,qb,t->tab', g.w, g.N, g.N, g.detJ)
    n = space.n_scalar
    return _scatter(Me, space.cell_dofs, space.cell_dofs, (n, n))


def _scalar_stiffness(space):
    g = space.geometry(5)
    Ke = np.einsum('q,tqad,tqbd,t->tab', g.w, g.G, g.G, g.detJ)
    n = space.n_scalar
    return _scatter(Ke, space.cell_dofs, space.cell_dofs, (n, n))


def _component_gradient_gram(space, alpha, beta):
    """Matrix of ∫ (d N_a / d x_alpha)(d N_b / d x_beta)."""
    g = space.geometry(5)
    De = np.einsum('q,tqa,tqb,t->tab', g.w, g.G[:, :, :, alpha],
                   g.G[:, :, :, beta], g.detJ)
    n = space.n_scalar
    return _scatter(De, space.cell_dofs, space.cell_dofs, (n, n))


def assemble_velocity_mass(space):
    """Gram matrix of the vector P2 space, (phi_a, phi_b)."""
    Ms = _scalar_mass(space)
    return sparse.block_diag([Ms, Ms], format='csr')


def assemble_velocity_stiffness(space):
    """Gradient Gram matrix, (grad phi_a, grad phi_b)."""
    Ks = _scalar_stiffness(space)
    return sparse.block_diag([Ks, Ks], format='csr')


def assemble_divergence(space):
    """Constraint matrix with entries -(div phi_a, q_b), pressure rows by
    velocity columns."""
    g = space.geometry(5)
    blocks = []
    for c in (0, 1):
        Be = -np.einsum('q,qp,tqa,t->tpa', g.w, g.P1, g.G[:, :, :, c], g.detJ)
        blocks.append(_scatter(Be, space.mesh.triangles, space.cell_dofs,
                               (space.n_pr, space.n_scalar)))
    return sparse.hstack(blocks, format='csr')


def assemble_pressure_mass(space):
    g = space.geometry(5)
    Me = np.einsum('q,qp,qr,t->tpr', g.w, g.P1, g.P1, g.detJ)
    n = space.n_pr
    return _scatter(Me, space.mesh.triangles, space.mesh.triangles, (n, n))


def pressure_integral_vector(space):
    """Vector of ∫ q_b, the zero-mean constraint row."""
    g = space.geometry(5)
    me = np.einsum('q,qp,t->tp', g.w, g.P1, g.detJ)
    out = np.zeros(space.n_pr)
    np.add.at(out, space.mesh.triangles, me)
    return out


def assemble_curl_gram(space):
    """Gram matrix of the scalar 2D curl, (curl phi_a, curl phi_b)."""
    Dxx = _component_gradient_gram(space, 0, 0)
    Dxy = _component_gradient_gram(space, 0, 1)
    Dyy = _component_gradient_gram(space, 1, 1)
    return sparse.bmat([[Dyy, -Dxy.T], [-Dxy, Dxx]], format='csr')


def _component_values(space, coeffs, g):
    """Velocity components at quadrature points, two (T, Q) arrays."""
    if len(coeffs) != space.n_vel:
        raise DimensionError(
            f"expected velocity vector of length {space.n_vel}, got {len(coeffs)}")
    ns = space.n_scalar
    vals = []
    for c in (0, 1):
        comp = coeffs[c * ns:(c + 1) * ns][space.cell_dofs]     # (T, 6)
        vals.append(np.einsum('ta,qa->tq', comp, g.N))
    return vals


def _component_gradients(space, coeffs, g):
    """Gradients of both components at quadrature points, (T, Q, 2, 2):
    [..., c, i] = d u_c / d x_i."""
    ns = space.n_scalar
    out = np.empty(g.G.shape[:2] + (2, 2))
    for c in (0, 1):
        comp = coeffs[c * ns:(c + 1) * ns][space.cell_dofs]
        out[:, :, c, :] = np.einsum('ta,tqai->tqi', comp, g.G)
    return out


def assemble_convection(space, w):
    """Skew-symmetric convection matrix N(w) with entries
    ½(w·grad phi_b, phi_a) − ½(w·grad phi_a, phi_b)."""
    g = space.geometry(6)
    w0, w1 = _component_values(space, w, g)
    wdotG = w0[:, :, None] * g.G[:, :, :, 0] + w1[:, :, None] * g.G[:, :, :, 1]
    Ce = np.einsum('q,qa,tqb,t->tab', g.w, g.N, wdotG, g.detJ)
    n = space.n_scalar
    C = _scatter(Ce, space.cell_dofs, space.cell_dofs, (n, n))
    S = 0.5 * (C - C.T)
    return sparse.block_diag([S, S], format='csr')


def trilinear_bstar(space, w, u, v):
    """Skew-symmetrized convection form ½(w·grad u, v) − ½(w·grad v, u),
    evaluated directly by quadrature."""
    g = space.geometry(6)
    w0, w1 = _component_values(space, w, g)
    u0, u1 = _component_values(space, u, g)
    v0, v1 = _component_values(space, v, g)
    Gu = _component_gradients(space, u, g)
    Gv = _component_gradients(space, v, g)
    wgu0 = w0 * Gu[:, :, 0, 0] + w1 * Gu[:, :, 0, 1]
    wgu1 = w0 * Gu[:, :, 1, 0] + w1 * Gu[:, :, 1, 1]
    wgv0 = w0 * Gv[:, :, 0, 0] + w1 * Gv[:, :, 0, 1]
    wgv1 = w0 * Gv[:, :, 1, 0] + w1 * Gv[:, :, 1, 1]
    integrand = 0.5 * (wgu0 * v0 + wgu1 * v1) - 0.5 * (wgv0 * u0 + wgv1 * u1)
    return float(np.einsum('tq,q,t->', integrand, g.w, g.detJ))


def apply_dirichlet(A, rhs, dofs, values=None):
    """Eliminate essential conditions symmetrically: zero constrained
    rows/columns, unit diagonal, move known values to the right side."""
    n = A.shape[0]
    dofs = np.asarray(dofs, dtype=np.int64)
    if values is None:
        values = np.zeros(len(dofs))
    rhs2 = np.asarray(rhs, dtype=float).copy()
    if len(dofs):
        rhs2 -= A.tocsc()[:, dofs] @ values
    keep = np.ones(n)
    keep[dofs] = 0.0
    P = sparse.diags(keep)
    ones = np.zeros(n)
    ones[dofs] = 1.0
    A2 = (P @ A @ P + sparse.diags(ones)).tocsr()
    A2.sort_indices()
    rhs2 *= keep
    rhs2[dofs] = values
    return A2, rhs2


def project_force(space, f, t=0.0, degree=5):
    """Load vector with entries (f(·, t), phi_a)."""
    g = space.geometry(degree)
    fx, fy = f(g.xq[:, :, 0], g.xq[:, :, 1], t)
    out = np.zeros(space.n_vel)
    ns = space.n_scalar
    for c, fc in ((0, fx), (1, fy)):
        fc = np.broadcast_to(np.asarray(fc, dtype=float), g.xq.shape[:2])
        fe = np.einsum('q,qa,tq,t->ta', g.w, g.N, fc, g.detJ)
        np.add.at(out, c * ns + space.cell_dofs, fe)
    return out


def interpolate_velocity(space, f, t=0.0):
    """Nodal P2 interpolant of a vector function."""
    coords = space.scalar_dof_coords()
    fx, fy = f(coords[:, 0], coords[:, 1], t)
    ns = space.n_scalar
    return np.concatenate([np.broadcast_to(np.asarray(fx, float), (ns,)),
                           np.broadcast_to(np.asarray(fy, float), (ns,))])


def velocity_error_l2(space, coeffs, exact, t=0.0):
    """L2 distance between a coefficient field and a closed-form field."""
    g = space.geometry(6)
    u0, u1 = _component_values(space, coeffs, g)
    ex, ey = exact(g.xq[:, :, 0], g.xq[:, :, 1], t)
    sq = (u0 - ex) ** 2 + (u1 - ey) ** 2
    return float(np.sqrt(np.einsum('tq,q,t->', sq, g.w, g.detJ)))


def divergence_residual(space, u):
    """Euclidean norm of the discrete divergence constraint B u."""
    return float(np.linalg.norm(space.divergence() @ u))


def is_symmetric(A, rtol=1e-12):
    d = abs(A - A.T)
    dmax = d.max() if d.nnz else 0.0
    amax = abs(A).max() if A.nnz else 0.0
    return dmax <= rtol * max(amax, 1.0e-300)
