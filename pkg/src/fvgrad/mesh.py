"""Unstructured triangular meshes for the cell-centered finite volume solver.

A built ``Mesh`` is immutable and carries every derived quantity the solver
needs: face geometry (length, midpoint, left/right cells, unit normal
oriented left to right), per-cell neighbor tables in a fixed counter-
clockwise order, the stencil angles between successive centroid-to-centroid
directions, precomputed inverse least-squares normal matrices, and ghost
slots for non-periodic boundary faces.

Periodic boundaries are resolved at build time: the two paired boundary
faces are merged into a single interior-like face whose right cell sits at
a virtually translated centroid (``f_shift`` records the translation), so
periodic cells look like interior cells to every downstream consumer.

Ghost cells (one layer) mirror the interior centroid across the boundary
face; their values are synthesized per step by the boundary-condition
layer and live in rows ``n_cells + k`` of extended state arrays.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

# boundary tag codes (stored per face; parameters live in the bc layer)
PERIODIC = 0
SUPERSONIC_IN = 1
SUPERSONIC_OUT = 2
SUBSONIC_IN = 3
SUBSONIC_OUT = 4
SLIP_WALL = 5

TAG_NAMES = {
    PERIODIC: "periodic",
    SUPERSONIC_IN: "supersonic_in",
    SUPERSONIC_OUT: "supersonic_out",
    SUBSONIC_IN: "subsonic_in",
    SUBSONIC_OUT: "subsonic_out",
    SLIP_WALL: "slip_wall",
}
TAG_CODES = {v: k for k, v in TAG_NAMES.items()}


class MeshError(ValueError):
    pass


class BoundarySpec:
    """Assigns a BC tag (and periodic pairing group) to each boundary face.

    Two matching modes: rule-based (first rule whose predicate accepts the
    face midpoint/normal wins) or an explicit per-edge table keyed by the
    sorted node pair, as produced by the ASCII reader and by refinement.
    """

    def __init__(self, rules=None, edge_table=None):
        self.rules = rules or []
        self.edge_table = edge_table

    @classmethod
    def uniform(cls, tag):
        code = TAG_CODES[tag] if isinstance(tag, str) else tag
        return cls(rules=[(code, 0, lambda mid, n: True)])

    @classmethod
    def periodic_box(cls, xmin=0.0, xmax=1.0, ymin=0.0, ymax=1.0, tol=1e-9):
        tx = tol * max(xmax - xmin, ymax - ymin)
        return cls(rules=[
            (PERIODIC, 1, lambda mid, n: abs(mid[0] - xmin) < tx or abs(mid[0] - xmax) < tx),
            (PERIODIC, 2, lambda mid, n: abs(mid[1] - ymin) < tx or abs(mid[1] - ymax) < tx),
        ])

    @classmethod
    def from_edge_table(cls, table):
        return cls(edge_table=dict(table))

    def assign(self, node_a, node_b, mid, normal):
        if self.edge_table is not None:
            key = (min(node_a, node_b), max(node_a, node_b))
            if key not in self.edge_table:
                raise MeshError(f"boundary edge {key} has no entry in the boundary table")
            return self.edge_table[key]
        for code, group, pred in self.rules:
            if pred(mid, normal):
                return code, group
        raise MeshError(f"boundary face at {mid} matched no boundary rule")


@dataclass
class Mesh:
    nodes: np.ndarray          # (Nn, 2)
    tri: np.ndarray            # (N, 3) CCW node indices
    area: np.ndarray           # (N,)
    centroid: np.ndarray       # (N, 2)
    # faces, ordered interior (incl. merged periodic) then boundary by tag
    f_left: np.ndarray         # (F,) left cell id
    f_right: np.ndarray        # (F,) right cell id or ghost slot >= n_cells
    f_normal: np.ndarray       # (F, 2) unit, left -> right
    f_len: np.ndarray          # (F,)
    f_mid: np.ndarray          # (F, 2) midpoint on the left side
    f_shift: np.ndarray        # (F, 2) left-midpoint minus right-midpoint (periodic)
    n_iface: int               # faces with a real cell on both sides
    # boundary faces (face ids n_iface..F-1, grouped by tag)
    b_tag: np.ndarray          # (Fb,)
    tag_slices: dict           # tag code -> slice into boundary order
    boundary_edges: np.ndarray # (Eb, 4) node_a, node_b, tag, group (pre-merge)
    # per-cell tables, neighbor order CCW by direction angle
    cell_faces: np.ndarray     # (N, 3)
    nbr: np.ndarray            # (N, 3) extended ids (ghosts >= n_cells)
    nbr_dx: np.ndarray         # (N, 3) neighbor centroid offsets (virtual)
    nbr_dy: np.ndarray
    lsq_w: np.ndarray          # (N, 3) inverse-distance-squared weights
    inv11: np.ndarray          # (N,) inverse LSQ normal matrix entries
    inv12: np.ndarray
    inv22: np.ndarray
    angles: np.ndarray         # (N, 3) stencil angles, radians
    interior_mask: np.ndarray  # (N,) True when all neighbors are real cells
    cell_foff: np.ndarray      # (N, 3, 2) centroid -> own-side face midpoint
    cell_n: np.ndarray         # (N, 3, 2) outward unit normal per cell face
    cell_slen: np.ndarray      # (N, 3) face length per cell face
    rs_idx: np.ndarray         # scatter cell ids for residual accumulation
    ghost_centroid: np.ndarray = field(default=None)  # (Fb, 2) mirrored centers
    region: np.ndarray = field(default=None)

    @property
    def n_cells(self):
        return self.tri.shape[0]

    @property
    def n_faces(self):
        return self.f_left.shape[0]

    @property
    def n_ghost(self):
        return self.n_faces - self.n_iface

    @property
    def min_sqrt_area(self):
        return float(np.sqrt(self.area.min()))

    @property
    def mean_cell_length(self):
        return float(np.sqrt(self.area.mean()))

    def content_hash(self):
        h = hashlib.sha256()
        for a in (self.nodes, self.tri, self.b_tag):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()[:16]


@dataclass
class ParentMap:
    parent: np.ndarray       # (Nf,) coarse parent of each fine cell
    children: np.ndarray     # (Nc, 4) fine children of each coarse cell
    child_area: np.ndarray   # (Nc, 4)
    parent_area: np.ndarray  # (Nc,)


def _signed_area(nodes, tri):
    p0 = nodes[tri[:, 0]]
    p1 = nodes[tri[:, 1]]
    p2 = nodes[tri[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))


def build_mesh(nodes, triangles, boundary_spec=None):
    """Build a Mesh from raw nodes and triangle node triples.

    Triangles are reoriented counterclockwise; all derived geometry is
    populated here.  Degenerate (zero-area) or duplicate triangles and
    non-manifold edges are rejected.  ``boundary_spec`` assigns BC tags;
    None means supersonic outflow (extrapolation) everywhere.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    tri = np.array(triangles, dtype=np.int64)
    if tri.ndim != 2 or tri.shape[1] != 3:
        raise MeshError("triangles must be (M, 3) node index triples")
    if tri.min(initial=0) < 0 or tri.max(initial=-1) >= len(nodes):
        raise MeshError("triangle references a node out of range")
    if boundary_spec is None:
        boundary_spec = BoundarySpec.uniform(SUPERSONIC_OUT)

    scale = max(np.ptp(nodes[:, 0]), np.ptp(nodes[:, 1]), 1e-300)

    sa = _signed_area(nodes, tri)
    flip = sa < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    area = np.abs(sa)
    bad = np.where(area <= 1e-14 * scale * scale)[0]
    if bad.size:
        raise MeshError(f"degenerate triangle (zero area): cell {bad[0]}")

    seen = {}
    for i, t in enumerate(tri):
        key = tuple(sorted(t))
        if len(set(key)) != 3:
            raise MeshError(f"triangle with repeated node: cell {i}")
        if key in seen:
            raise MeshError(f"duplicate triangle: cells {seen[key]} and {i}")
        seen[key] = i

    n_cells = tri.shape[0]
    centroid = (nodes[tri[:, 0]] + nodes[tri[:, 1]] + nodes[tri[:, 2]]) / 3.0

    # edge -> incident (cell, a, b) with (a, b) in the cell's CCW traversal
    edges = {}
    for i in range(n_cells):
        t = tri[i]
        for k in range(3):
            a, b = int(t[k]), int(t[(k + 1) % 3])
            key = (a, b) if a < b else (b, a)
            edges.setdefault(key, []).append((i, a, b))
    for key, inc in edges.items():
        if len(inc) > 2:
            raise MeshError(f"non-manifold edge {key}: {len(inc)} incident cells")

    def face_geom(a, b):
        pa, pb = nodes[a], nodes[b]
        d = pb - pa
        ln = float(np.hypot(d[0], d[1]))
        # CCW traversal keeps the interior on the left: outward is (dy, -dx)
        nrm = np.array([d[1] / ln, -d[0] / ln])
        return nrm, ln, (pa + pb) / 2.0

    int_faces = []   # (left, right, normal, len, mid)
    bnd_raw = []     # (cell, normal, len, mid, node_a, node_b, tag, group)
    boundary_edges = []
    for key, inc in edges.items():
        if len(inc) == 2:
            (ci, a, b), (cj, _, _) = inc
            nrm, ln, mid = face_geom(a, b)
            int_faces.append((ci, cj, nrm, ln, mid))
        else:
            (ci, a, b) = inc[0]
            nrm, ln, mid = face_geom(a, b)
            tag, group = boundary_spec.assign(a, b, mid, nrm)
            bnd_raw.append((ci, nrm, ln, mid, a, b, tag, group))
            boundary_edges.append((a, b, tag, group))

    # pair periodic faces by translated midpoints and merge each pair into
    # one interior-like face with a virtual translation for the right cell
    per = [f for f in bnd_raw if f[6] == PERIODIC]
    other = [f for f in bnd_raw if f[6] != PERIODIC]
    merged = []
    tol = 1e-9 * scale
    groups = sorted({f[7] for f in per})
    for g in groups:
        gf = [f for f in per if f[7] == g]
        if len(gf) % 2:
            raise MeshError(f"periodic group {g} has an odd number of faces")
        n0 = gf[0][1]
        side_a = [f for f in gf if float(np.dot(f[1], n0)) > 0.0]
        side_b = [f for f in gf if float(np.dot(f[1], n0)) <= 0.0]
        if len(side_a) != len(side_b):
            raise MeshError(f"periodic group {g}: sides do not split evenly")
        mids_a = np.array([f[3] for f in side_a])
        mids_b = np.array([f[3] for f in side_b])
        t_ab = mids_b.mean(axis=0) - mids_a.mean(axis=0)
        used = np.zeros(len(side_b), dtype=bool)
        for fa in side_a:
            d = np.hypot(*(mids_b - (fa[3] + t_ab)).T)
            j = int(np.argmin(d))
            if d[j] > tol or used[j]:
                raise MeshError(f"periodic group {g}: no partner for face at {fa[3]}")
            used[j] = True
            fb = side_b[j]
            if abs(fa[2] - fb[2]) > 1e-10:
                raise MeshError(f"periodic group {g}: paired faces differ in length")
            # keep side-a geometry; right cell is fb's cell, shifted by -t_ab
            merged.append((fa[0], fb[0], fa[1], fa[2], fa[3], fa[3] - fb[3]))

    # assemble face arrays: plain interior, merged periodic, then boundary by tag
    other.sort(key=lambda f: f[6])
    F = len(int_faces) + len(merged) + len(other)
    f_left = np.empty(F, dtype=np.int64)
    f_right = np.empty(F, dtype=np.int64)
    f_normal = np.empty((F, 2))
    f_len = np.empty(F)
    f_mid = np.empty((F, 2))
    f_shift = np.zeros((F, 2))
    k = 0
    for ci, cj, nrm, ln, mid in int_faces:
        f_left[k], f_right[k] = ci, cj
        f_normal[k], f_len[k], f_mid[k] = nrm, ln, mid
        k += 1
    for ci, cj, nrm, ln, mid, shift in merged:
        f_left[k], f_right[k] = ci, cj
        f_normal[k], f_len[k], f_mid[k] = nrm, ln, mid
        f_shift[k] = shift
        k += 1
    n_iface = k
    b_tag = np.array([f[6] for f in other], dtype=np.int64)
    ghost_centroid = np.empty((len(other), 2))
    for gi, (ci, nrm, ln, mid, a, b, tag, group) in enumerate(other):
        f_left[k] = ci
        f_right[k] = n_cells + gi
        f_normal[k], f_len[k], f_mid[k] = nrm, ln, mid
        d = float(np.dot(mid - centroid[ci], nrm))
        ghost_centroid[gi] = centroid[ci] + 2.0 * d * nrm
        k += 1
    tag_slices = {}
    for code in sorted(set(b_tag.tolist())):
        idx = np.where(b_tag == code)[0]
        tag_slices[code] = slice(int(idx[0]), int(idx[-1]) + 1)

    # per-cell face/neighbor tables
    cell_inc = [[] for _ in range(n_cells)]
    for f in range(F):
        cell_inc[f_left[f]].append((f, +1.0))
        if f_right[f] < n_cells:
            cell_inc[f_right[f]].append((f, -1.0))
    counts = np.array([len(c) for c in cell_inc])
    if np.any(counts != 3):
        bad = int(np.argmax(counts != 3))
        raise MeshError(f"cell {bad} has {counts[bad]} faces, expected 3")

    cell_faces = np.empty((n_cells, 3), dtype=np.int64)
    cell_sign = np.empty((n_cells, 3))
    nbr = np.empty((n_cells, 3), dtype=np.int64)
    dxy = np.empty((n_cells, 3, 2))
    cell_foff = np.empty((n_cells, 3, 2))
    cell_n = np.empty((n_cells, 3, 2))
    cell_slen = np.empty((n_cells, 3))
    for i in range(n_cells):
        rows = []
        for f, s in cell_inc[i]:
            if s > 0:
                nb = int(f_right[f])
                d = (ghost_centroid[nb - n_cells] if nb >= n_cells
                     else centroid[nb] + f_shift[f]) - centroid[i]
                mid_own = f_mid[f]
            else:
                nb = int(f_left[f])
                d = centroid[nb] - f_shift[f] - centroid[i]
                mid_own = f_mid[f] - f_shift[f]
            ang = np.arctan2(d[1], d[0]) % (2.0 * np.pi)
            rows.append((ang, f, s, nb, d, mid_own))
        rows.sort(key=lambda r: r[0])
        for j, (ang, f, s, nb, d, mid_own) in enumerate(rows):
            cell_faces[i, j] = f
            cell_sign[i, j] = s
            nbr[i, j] = nb
            dxy[i, j] = d
            cell_foff[i, j] = mid_own - centroid[i]
            cell_n[i, j] = s * f_normal[f]
            cell_slen[i, j] = f_len[f]

    nbr_dx = dxy[:, :, 0].copy()
    nbr_dy = dxy[:, :, 1].copy()
    dist2 = nbr_dx ** 2 + nbr_dy ** 2
    lsq_w = 1.0 / dist2

    a11 = (lsq_w * nbr_dx ** 2).sum(axis=1)
    a12 = (lsq_w * nbr_dx * nbr_dy).sum(axis=1)
    a22 = (lsq_w * nbr_dy ** 2).sum(axis=1)
    det = a11 * a22 - a12 ** 2
    trace = a11 + a22
    degen = np.where(det <= 1e-14 * trace ** 2)[0]
    if degen.size:
        raise MeshError(f"degenerate LSQ stencil (singular normal matrix): cell {degen[0]}")
    inv11 = a22 / det
    inv12 = -a12 / det
    inv22 = a11 / det

    ang = np.arctan2(nbr_dy, nbr_dx) % (2.0 * np.pi)
    angles = (np.roll(ang, -1, axis=1) - ang) % (2.0 * np.pi)
    interior_mask = (nbr < n_cells).all(axis=1)

    # closed-polygon identity, Sum n |S| = 0 per cell
    closure = (cell_n * cell_slen[:, :, None]).sum(axis=1)
    perim = cell_slen.sum(axis=1)
    worst = np.abs(closure).max(axis=1) / perim
    if worst.max() > 1e-12:
        raise MeshError(f"face closure violated at cell {int(worst.argmax())}")
    asum = angles.sum(axis=1)
    if np.abs(asum - 2.0 * np.pi).max() > 1e-10:
        raise MeshError("stencil angles do not wind once around a centroid")

    rs_idx = np.concatenate([f_left, f_right[:n_iface]])

    m = Mesh(
        nodes=nodes, tri=tri, area=area, centroid=centroid,
        f_left=f_left, f_right=f_right, f_normal=f_normal, f_len=f_len,
        f_mid=f_mid, f_shift=f_shift, n_iface=n_iface,
        b_tag=b_tag, tag_slices=tag_slices,
        boundary_edges=np.array(boundary_edges, dtype=np.int64).reshape(-1, 4),
        cell_faces=cell_faces, nbr=nbr, nbr_dx=nbr_dx, nbr_dy=nbr_dy,
        lsq_w=lsq_w, inv11=inv11, inv12=inv12, inv22=inv22,
        angles=angles, interior_mask=interior_mask,
        cell_foff=cell_foff, cell_n=cell_n, cell_slen=cell_slen,
        rs_idx=rs_idx, ghost_centroid=ghost_centroid,
    )
    for arr in vars(m).values():
        if isinstance(arr, np.ndarray):
            arr.setflags(write=False)
    return m


def refine_uniform(mesh):
    """Split every triangle at its edge midpoints into four children.

    Boundary tags (and periodic pairing groups) are inherited by the two
    child edges of each boundary edge.  Returns the fine mesh and the
    parent map used by the conservative projection.
    """
    nodes = [tuple(p) for p in mesh.nodes]
    node_arr = mesh.nodes
    mid_cache = {}

    def midpoint(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in mid_cache:
            mid_cache[key] = len(nodes)
            nodes.append(tuple((node_arr[a] + node_arr[b]) / 2.0))
        return mid_cache[key]

    tris = []
    for a, b, c in mesh.tri:
        a, b, c = int(a), int(b), int(c)
        mab, mbc, mca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        tris.extend([(a, mab, mca), (b, mbc, mab), (c, mca, mbc), (mab, mbc, mca)])

    edge_table = {}
    for a, b, tag, group in mesh.boundary_edges:
        a, b, tag, group = int(a), int(b), int(tag), int(group)
        m = midpoint(a, b)
        edge_table[(min(a, m), max(a, m))] = (tag, group)
        edge_table[(min(b, m), max(b, m))] = (tag, group)

    fine = build_mesh(np.array(nodes), tris, BoundarySpec.from_edge_table(edge_table))

    n_coarse = mesh.n_cells
    children = np.arange(4 * n_coarse, dtype=np.int64).reshape(n_coarse, 4)
    parent = np.repeat(np.arange(n_coarse, dtype=np.int64), 4)
    pm = ParentMap(
        parent=parent,
        children=children,
        child_area=fine.area[children],
        parent_area=mesh.area.copy(),
    )
    if np.abs(pm.child_area.sum(axis=1) - pm.parent_area).max() > 1e-10 * pm.parent_area.max():
        raise MeshError("child areas do not sum to parent areas")
    return fine, pm


def project_fine_to_coarse(fine_field, pm):
    """Area-weighted mean of the four children of each coarse cell.

    Acts on conservative variables; the total integral sum(|C| w) is
    preserved up to round-off.
    """
    fine_field = np.asarray(fine_field)
    if fine_field.shape[0] != pm.parent.shape[0]:
        raise ValueError(
            f"field has {fine_field.shape[0]} rows, parent map expects {pm.parent.shape[0]}")
    vals = fine_field[pm.children]                      # (Nc, 4, C)
    w = pm.child_area[:, :, None]
    return (vals * w).sum(axis=1) / pm.parent_area[:, None]


def stencil_angles(mesh, cell):
    """The three angles between successive neighbor directions of a cell."""
    if not mesh.interior_mask[cell]:
        raise MeshError(f"cell {cell} touches the boundary; stencil angles are not defined")
    return tuple(mesh.angles[cell])


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def structured_mesh(nx, ny=None, lx=1.0, ly=1.0, boundary_spec=None):
    """Structured-split triangulation of [0,lx] x [0,ly]: 2*nx*ny triangles."""
    if ny is None:
        ny = nx
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        for j in range(ny):
            n00, n10 = nid(i, j), nid(i + 1, j)
            n01, n11 = nid(i, j + 1), nid(i + 1, j + 1)
            tris.append((n00, n10, n11))
            tris.append((n00, n11, n01))
    return build_mesh(nodes, tris, boundary_spec)


def periodic_structured_mesh(nx, ny=None, lx=1.0, ly=1.0):
    return structured_mesh(nx, ny, lx, ly,
                           BoundarySpec.periodic_box(0.0, lx, 0.0, ly))


def irregular_mesh(n, seed=0, lx=1.0, ly=1.0, jitter=0.35, boundary_spec=None):
    """Seeded irregular Delaunay triangulation of [0,lx] x [0,ly].

    Boundary nodes stay on a uniform lattice (identical on opposite sides,
    so periodic pairing still works); interior nodes are jittered.  Roughly
    2*n*n cells.
    """
    from scipy.spatial import Delaunay

    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, lx, n + 1)
    ys = np.linspace(0.0, ly, n + 1)
    pts = [(x, 0.0) for x in xs] + [(x, ly) for x in xs]
    pts += [(0.0, y) for y in ys[1:-1]] + [(lx, y) for y in ys[1:-1]]
    hx, hy = lx / n, ly / n
    for i in range(1, n):
        for j in range(1, n):
            dx, dy = rng.uniform(-jitter, jitter, size=2)
            pts.append((xs[i] + dx * hx, ys[j] + dy * hy))
    pts = np.array(pts)
    dt = Delaunay(pts)
    return build_mesh(pts, dt.simplices, boundary_spec)


def periodic_irregular_mesh(n, seed=0, lx=1.0, ly=1.0, jitter=0.35):
    return irregular_mesh(n, seed, lx, ly, jitter,
                          BoundarySpec.periodic_box(0.0, lx, 0.0, ly))


# ---------------------------------------------------------------------------
# ASCII mesh format
# ---------------------------------------------------------------------------
# header `nodes N cells M`, N lines `x y`, M lines `i j k region`, then one
# line per boundary edge: `btag node_a node_b type [pair]`, 0-based indices.

def write_mesh_ascii(mesh, path):
    with open(path, "w") as fh:
        fh.write(f"nodes {len(mesh.nodes)} cells {mesh.n_cells}\n")
        for x, y in mesh.nodes:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        region = mesh.region if mesh.region is not None else np.zeros(mesh.n_cells, int)
        for t, r in zip(mesh.tri, region):
            fh.write(f"{t[0]} {t[1]} {t[2]} {int(r)}\n")
        for k, (a, b, tag, group) in enumerate(mesh.boundary_edges):
            name = TAG_NAMES[int(tag)].upper()
            extra = f" {int(group)}" if int(tag) == PERIODIC else ""
            fh.write(f"{k} {int(a)} {int(b)} {name}{extra}\n")


def read_mesh_ascii(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split()
    if head[0] != "nodes" or head[2] != "cells":
        raise MeshError(f"bad mesh header: {lines[0]!r}")
    n_nodes, n_cells = int(head[1]), int(head[3])
    nodes = np.array([[float(v) for v in ln.split()] for ln in lines[1:1 + n_nodes]])
    tri_rows = lines[1 + n_nodes:1 + n_nodes + n_cells]
    tris = []
    region = []
    for ln in tri_rows:
        parts = ln.split()
        tris.append((int(parts[0]), int(parts[1]), int(parts[2])))
        region.append(int(parts[3]) if len(parts) > 3 else 0)
    table = {}
    for ln in lines[1 + n_nodes + n_cells:]:
        parts = ln.split()
        a, b = int(parts[1]), int(parts[2])
        tag = TAG_CODES[parts[3].lower()]
        group = int(parts[4]) if len(parts) > 4 else 0
        table[(min(a, b), max(a, b))] = (tag, group)
    spec = BoundarySpec.from_edge_table(table) if table else None
    m = build_mesh(nodes, tris, spec)
    m.region = np.array(region, dtype=np.int64)
    return m
