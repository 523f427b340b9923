"""Conforming triangular meshes of the offset-circles domain and test domains.

All meshes are plain triangulations with straight edges; boundary vertices
and edges carry integer markers so solvers can locate the two circles.
"""

import numpy as np

from .errors import GeometryError, InvariantError, ParseError, ResolutionError

# boundary markers
OTHER = 0
OUTER_CIRCLE = 1
INNER_CIRCLE = 2

_VALID_MARKERS = (OTHER, OUTER_CIRCLE, INNER_CIRCLE)

# Exponent of the radial ring distribution in the concentric image annulus
# (rho ** (1 - s) ** exponent for s uniform in [0, 1]).  1.0 is plain
# logarithmic spacing; values below 1 cluster rings at the inner circle and
# widen them toward the outer wall.  The default keeps the benchmark
# resolutions well resolved at the inner boundary layer, where the velocity
# gradients concentrate.
_RADIAL_EXPONENT = 0.65


class Mesh:
    """Immutable 2D triangulation with boundary markers.

    Attributes
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array, counterclockwise vertex triples
    vertex_markers : (V,) int array, one of OTHER / OUTER_CIRCLE / INNER_CIRCLE
    edges : (E, 2) int array of sorted vertex pairs, unique, row index = edge id
    boundary_edges : (Bd,) int array of edge ids lying on the boundary
    edge_markers : (E,) int array; interior edges carry OTHER
    h : float, maximum triangle circumdiameter
    """

    def __init__(self, vertices, triangles, vertex_markers):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.vertex_markers = np.ascontiguousarray(vertex_markers, dtype=np.int64)
        self._validate_shapes()
        self._build_edges()
        self._validate_invariants()
        for a in (self.vertices, self.triangles, self.vertex_markers,
                  self.edges, self.boundary_edges, self.edge_markers):
            a.flags.writeable = False

    # -- construction helpers -------------------------------------------------

    def _validate_shapes(self):
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise InvariantError("vertices must be a (V, 2) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise InvariantError("triangles must be a (T, 3) array")
        if self.vertex_markers.shape != (len(self.vertices),):
            raise InvariantError("vertex_markers must have one entry per vertex")
        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= len(self.vertices)):
            raise InvariantError("triangle references a vertex index out of range")
        bad = set(np.unique(self.vertex_markers)) - set(_VALID_MARKERS)
        if bad:
            raise InvariantError(f"unknown boundary markers {sorted(bad)}")

    def _build_edges(self):
        tri = self.triangles
        # local edge k is opposite local vertex k
        raw = np.concatenate([tri[:, [1, 2]], tri[:, [2, 0]], tri[:, [0, 1]]])
        raw_sorted = np.sort(raw, axis=1)
        self.edges, inverse, counts = np.unique(
            raw_sorted, axis=0, return_inverse=True, return_counts=True)
        # triangle_edges[t, k] = edge id of the edge opposite local vertex k
        self.triangle_edges = inverse.reshape(3, -1).T.copy()
        self.triangle_edges.flags.writeable = False
        self._edge_counts = counts
        self.boundary_edges = np.flatnonzero(counts == 1)
        markers = np.full(len(self.edges), OTHER, dtype=np.int64)
        for e in self.boundary_edges:
            a, b = self.edges[e]
            ma, mb = self.vertex_markers[a], self.vertex_markers[b]
            markers[e] = ma if ma == mb else OTHER
        self.edge_markers = markers

    def _validate_invariants(self):
        areas = self.signed_areas()
        if np.any(areas <= 0.0):
            t = int(np.argmin(areas))
            raise InvariantError(
                f"triangle {t} has non-positive signed area {areas[t]:.3e}")
        if np.any(self._edge_counts > 2):
            e = int(np.argmax(self._edge_counts))
            raise InvariantError(
                f"edge {tuple(self.edges[e])} is shared by {self._edge_counts[e]} triangles")

    # -- derived quantities ---------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def signed_areas(self):
        """Signed area of every triangle (positive for counterclockwise)."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def h(self):
        """Maximum circumdiameter over all triangles."""
        p = self.vertices[self.triangles]
        a = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
        b = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
        c = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
        return float(np.max(a * b * c / (2.0 * self.signed_areas())))

    def edge_midpoints(self):
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    def content_hash(self):
        """Hex digest identifying the mesh geometry and connectivity."""
        import hashlib
        hasher = hashlib.sha256()
        hasher.update(self.vertices.tobytes())
        hasher.update(self.triangles.tobytes())
        hasher.update(self.vertex_markers.tobytes())
        return hasher.hexdigest()


def generate_offset_annulus(n_theta, n_r, r1, r2, c1, c2):
    """Structured transfinite mesh of the disk with an offset inner disk removed.

    The eccentric gap is mapped onto a concentric annulus by the disk
    automorphism w = (z - a)/(1 - a z) (a real, in the frame where the inner
    center sits on the positive axis).  A polar grid with uniform angles and
    logarithmic radii in the concentric image pulls back to an orthogonal,
    near-isotropic mesh that concentrates cells around the inner circle.
    Each quad cell is split along its shorter diagonal.
    """
    if np.hypot(c1, c2) + r2 >= r1:
        raise GeometryError(
            f"inner disk (center ({c1}, {c2}), radius {r2}) must lie strictly "
            f"inside the outer disk of radius {r1}")
    if n_theta < 8:
        raise GeometryError("n_theta must be at least 8")
    if n_r < 2:
        raise GeometryError("n_r must be at least 2")

    # normalized frame: outer circle is the unit circle, inner center real
    phi = np.arctan2(c2, c1)
    d = np.hypot(c1, c2) / r1
    t = r2 / r1
    u = 2.0 * d
    v = d * d - t * t
    if u < 1e-14:
        a = 0.0
        rho = t
    else:
        a = ((1.0 + v) - np.sqrt((1.0 + v) ** 2 - u * u)) / u
        rho = (d + t - a) / (1.0 - a * (d + t))

    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    s = np.arange(n_r + 1) / n_r
    radii = rho ** (1.0 - s) ** _RADIAL_EXPONENT
    w = radii[None, :] * np.exp(1j * theta)[:, None]       # (n_theta, n_r+1)
    zeta = (w + a) / (1.0 + a * w)
    z = r1 * np.exp(1j * phi) * zeta
    verts = np.stack([z.real.reshape(-1), z.imag.reshape(-1)], axis=1)

    markers = np.full(len(verts), OTHER, dtype=np.int64)
    markers[::n_r + 1] = INNER_CIRCLE
    markers[n_r::n_r + 1] = OUTER_CIRCLE

    triangles = []
    for k in range(n_theta):
        kn = (k + 1) % n_theta
        for l in range(n_r):
            a = k * (n_r + 1) + l
            b = kn * (n_r + 1) + l
            c = kn * (n_r + 1) + l + 1
            d = k * (n_r + 1) + l + 1
            diag_ac = np.linalg.norm(verts[a] - verts[c])
            diag_bd = np.linalg.norm(verts[b] - verts[d])
            if diag_ac <= diag_bd:
                triangles.append((a, c, b))
                triangles.append((a, d, c))
            else:
                triangles.append((a, d, b))
                triangles.append((b, d, c))

    tris = np.array(triangles)
    p = verts[tris]
    signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                    - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    if np.any(signed <= 1e-14 * r1 * r1):
        raise ResolutionError(
            "offset annulus mesh contains a degenerate triangle; "
            "increase n_theta or n_r")
    return Mesh(verts, tris, markers)


def generate_unit_square(n):
    """Uniform n-by-n vertex grid on the unit square, each cell split into two
    right triangles.  All boundary is marked OTHER."""
    if n < 2:
        raise GeometryError("n must be at least 2")
    coords = np.linspace(0.0, 1.0, n)
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    verts = np.stack([xx.ravel(), yy.ravel()], axis=1)  # v(i, j) = i * n + j
    triangles = []
    for i in range(n - 1):
        for j in range(n - 1):
            a = i * n + j
            b = i * n + j + 1
            c = (i + 1) * n + j + 1
            d = (i + 1) * n + j
            triangles.append((a, b, c))
            triangles.append((a, c, d))
    markers = np.full(len(verts), OTHER, dtype=np.int64)
    return Mesh(verts, np.array(triangles), markers)


def save_mesh(mesh, path):
    """Write a mesh in the line-oriented ASCII format (``mesh2d v1``)."""
    with open(path, "w", encoding="ascii") as f:
        f.write("mesh2d v1\n")
        f.write(f"vertices {mesh.n_vertices}\n")
        for (x, y), m in zip(mesh.vertices, mesh.vertex_markers):
            f.write(f"{float(x)!r} {float(y)!r} {int(m)}\n")
        f.write(f"triangles {mesh.n_triangles}\n")
        for i, j, k in mesh.triangles:
            f.write(f"{int(i)} {int(j)} {int(k)}\n")


def load_mesh(path):
    """Read a ``mesh2d v1`` file.  Clockwise triangles are reoriented; any
    other invariant violation raises."""
    with open(path, "r", encoding="ascii") as f:
        lines = f.read().splitlines()

    def expect(lineno, condition, message):
        if not condition:
            raise ParseError(message, line=lineno + 1)

    expect(0, len(lines) >= 1 and lines[0].strip() == "mesh2d v1",
           "expected header 'mesh2d v1'")
    pos = 1
    expect(pos, pos < len(lines), "missing vertices section")
    head = lines[pos].split()
    expect(pos, len(head) == 2 and head[0] == "vertices" and head[1].isdigit(),
           "expected 'vertices N'")
    n_verts = int(head[1])
    pos += 1
    verts = np.empty((n_verts, 2))
    markers = np.empty(n_verts, dtype=np.int64)
    for i in range(n_verts):
        expect(pos + i, pos + i < len(lines), "unexpected end of file in vertices")
        parts = lines[pos + i].split()
        expect(pos + i, len(parts) == 3, "expected 'x y marker'")
        try:
            verts[i] = float(parts[0]), float(parts[1])
            markers[i] = int(parts[2])
        except ValueError as exc:
            raise ParseError(str(exc), line=pos + i + 1) from exc
    pos += n_verts
    expect(pos, pos < len(lines), "missing triangles section")
    head = lines[pos].split()
    expect(pos, len(head) == 2 and head[0] == "triangles" and head[1].isdigit(),
           "expected 'triangles M'")
    n_tris = int(head[1])
    pos += 1
    tris = np.empty((n_tris, 3), dtype=np.int64)
    for i in range(n_tris):
        expect(pos + i, pos + i < len(lines), "unexpected end of file in triangles")
        parts = lines[pos + i].split()
        expect(pos + i, len(parts) == 3, "expected 'i j k'")
        try:
            tris[i] = [int(p) for p in parts]
        except ValueError as exc:
            raise ParseError(str(exc), line=pos + i + 1) from exc
        lo, hi = tris[i].min(), tris[i].max()
        expect(pos + i, 0 <= lo and hi < n_verts,
               f"triangle references vertex index {hi if hi >= n_verts else lo} "
               f"out of range 0..{n_verts - 1}")

    # reorient clockwise triangles before invariant checks
    p = verts[tris]
    signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                    - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = signed < 0.0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return Mesh(verts, tris, markers)
