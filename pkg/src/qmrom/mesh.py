"""Structured 2D meshes of 6-node quadratic triangles.

Generators for a straight beam and a circular arch, both as nx-by-ny grids of
rectangles split into two triangles along the same diagonal.  Elements list
the three corner nodes counterclockwise followed by the midside nodes
(between corners 1-2, 2-3, 3-1).  Boundary edges are stored per named set as
(corner, midside, corner) node triples.
"""

import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Mesh",
    "generate_beam_mesh",
    "generate_arch_mesh",
    "select_nodes",
    "write_mesh_txt",
]


@dataclass(frozen=True)
class Mesh:
    """Immutable 2D mesh of 6-node triangles.

    nodes : (n_nodes, 2) reference coordinates in meters.
    elements : (n_elements, 6) connectivity, corners CCW then midsides.
    edge_sets : name -> (n_edges, 3) arrays of (corner, midside, corner).
    node_sets : name -> sorted node index arrays.
    """

    nodes: np.ndarray
    elements: np.ndarray
    edge_sets: dict = field(default_factory=dict)
    node_sets: dict = field(default_factory=dict)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    def bounding_box_diagonal(self):
        span = self.nodes.max(axis=0) - self.nodes.min(axis=0)
        return float(np.hypot(span[0], span[1]))


def _structured_grid_topology(nx, ny):
    """Connectivity of a (2nx+1)x(2ny+1) fine grid split into T6 pairs."""
    mx, my = 2 * nx + 1, 2 * ny + 1

    def gid(i, j):
        return j * mx + i

    elements = []
    for cj in range(ny):
        for ci in range(nx):
            i0, j0 = 2 * ci, 2 * cj
            # lower-right triangle, diagonal from (i0,j0) to (i0+2,j0+2)
            elements.append(
                [
                    gid(i0, j0),
                    gid(i0 + 2, j0),
                    gid(i0 + 2, j0 + 2),
                    gid(i0 + 1, j0),
                    gid(i0 + 2, j0 + 1),
                    gid(i0 + 1, j0 + 1),
                ]
            )
            # upper-left triangle
            elements.append(
                [
                    gid(i0, j0),
                    gid(i0 + 2, j0 + 2),
                    gid(i0, j0 + 2),
                    gid(i0 + 1, j0 + 1),
                    gid(i0 + 1, j0 + 2),
                    gid(i0, j0 + 1),
                ]
            )
    elements = np.array(elements, dtype=np.int64)

    def hline_edges(j):
        return np.array(
            [[gid(2 * c, j), gid(2 * c + 1, j), gid(2 * c + 2, j)] for c in range(nx)],
            dtype=np.int64,
        )

    def vline_edges(i):
        return np.array(
            [[gid(i, 2 * c), gid(i, 2 * c + 1), gid(i, 2 * c + 2)] for c in range(ny)],
            dtype=np.int64,
        )

    edge_sets = {
        "bottom": hline_edges(0),
        "top": hline_edges(my - 1),
        "left": vline_edges(0),
        "right": vline_edges(mx - 1),
    }
    node_sets = {
        "bottom": np.arange(mx, dtype=np.int64),
        "top": np.arange(mx, dtype=np.int64) + (my - 1) * mx,
        "left": np.arange(my, dtype=np.int64) * mx,
        "right": np.arange(my, dtype=np.int64) * mx + (mx - 1),
    }
    return elements, edge_sets, node_sets


def generate_beam_mesh(length, height, nx, ny):
    """Structured beam mesh on [0, length] x [0, height].

    Each of the nx*ny grid rectangles is split into two 6-node triangles, so
    the mesh has 2*nx*ny elements and (2nx+1)(2ny+1) nodes.
    """
    if length <= 0 or height <= 0:
        raise ValueError("length and height must be positive")
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    mx, my = 2 * nx + 1, 2 * ny + 1
    xs = np.linspace(0.0, length, mx)
    ys = np.linspace(0.0, height, my)
    X, Y = np.meshgrid(xs, ys)  # row-major over j (y), matching gid = j*mx + i
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    elements, edge_sets, node_sets = _structured_grid_topology(nx, ny)
    return Mesh(nodes=nodes, elements=elements, edge_sets=edge_sets, node_sets=node_sets)


def generate_arch_mesh(chord, thickness, radius, nx, ny, length_is="chord"):
    """Circular-arch mesh built by bending the structured beam grid.

    The arc midline spans the given chord (straight-line distance between the
    end faces) with the given radius; `thickness` is measured normal to the
    arc.  With ``length_is="arc"`` the first argument is interpreted as the
    arc length of the midline instead.  The end faces sit at y = thickness/2
    so that the infinite-radius limit reproduces the straight beam mesh.
    """
    if chord <= 0 or thickness <= 0:
        raise ValueError("chord and thickness must be positive")
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    if length_is == "chord":
        if radius <= chord / 2:
            raise ValueError("radius must exceed half the chord")
        half_angle = np.arcsin((chord / 2) / radius)
    elif length_is == "arc":
        half_angle = chord / (2 * radius)
        if half_angle >= np.pi / 2:
            raise ValueError("arc length too long for the given radius")
        chord = 2 * radius * np.sin(half_angle)
    else:
        raise ValueError("length_is must be 'chord' or 'arc'")

    mx, my = 2 * nx + 1, 2 * ny + 1
    # angle from the left end face to the right, offset from vertical
    phis = np.linspace(-half_angle, half_angle, mx)
    etas = np.linspace(0.0, thickness, my)
    cx = chord / 2
    cy = thickness / 2 - radius * np.cos(half_angle)
    PHI, ETA = np.meshgrid(phis, etas)
    R = radius + ETA - thickness / 2
    X = cx + R * np.sin(PHI)
    Y = cy + R * np.cos(PHI)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    elements, edge_sets, node_sets = _structured_grid_topology(nx, ny)
    # bending the grid leaves midside nodes off the corner midpoints; snap
    # them back so elements are straight-sided
    nodes = _straighten_midside_nodes(nodes, elements)
    return Mesh(nodes=nodes, elements=elements, edge_sets=edge_sets, node_sets=node_sets)


def _straighten_midside_nodes(nodes, elements):
    nodes = nodes.copy()
    corner_pairs = ((3, 0, 1), (4, 1, 2), (5, 2, 0))
    for mid, a, b in corner_pairs:
        nodes[elements[:, mid]] = 0.5 * (nodes[elements[:, a]] + nodes[elements[:, b]])
    return nodes


def select_nodes(mesh, edge_set=None, box=None):
    """Node indices from a named edge/node set or an axis-aligned box.

    The box is ((xmin, xmax), (ymin, ymax)); bounds are inclusive.  Returns a
    sorted index array; empty selections are allowed.
    """
    if (edge_set is None) == (box is None):
        raise ValueError("give exactly one of edge_set or box")
    if edge_set is not None:
        if edge_set not in mesh.node_sets:
            raise KeyError(f"unknown edge set {edge_set!r}; have {sorted(mesh.node_sets)}")
        return np.sort(np.unique(mesh.node_sets[edge_set]))
    (xmin, xmax), (ymin, ymax) = box
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    mask = (x >= xmin) & (x <= xmax) & (y >= ymin) & (y <= ymax)
    return np.flatnonzero(mask).astype(np.int64)


def write_mesh_txt(mesh, path_or_stream):
    """Plain-text export: `node index x y` lines then `element index n1..n6`."""

    def _dump(stream):
        stream.write(f"# nodes {mesh.n_nodes}\n")
        for i, (x, y) in enumerate(mesh.nodes):
            stream.write(f"node {i} {x:.17g} {y:.17g}\n")
        stream.write(f"# elements {mesh.n_elements}\n")
        for e, conn in enumerate(mesh.elements):
            stream.write("element " + str(e) + " " + " ".join(str(c) for c in conn) + "\n")

    if isinstance(path_or_stream, io.TextIOBase):
        _dump(path_or_stream)
    else:
        with open(path_or_stream, "w") as stream:
            _dump(stream)
