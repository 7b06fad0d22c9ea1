"""Polyline geometry shared by the droplet and chart modules."""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from skimage.measure import points_in_poly

from ._backend import polyline_min_distance


def _xy(z):
    z = np.asarray(z, dtype=complex)
    return np.column_stack([z.real, z.imag])


def polygon_area(z):
    """Signed shoelace area of a closed polygon (vertices not repeated)."""
    z = np.asarray(z, dtype=complex)
    return 0.5 * float(np.sum(np.imag(np.conj(z) * np.roll(z, -1))))


def even_odd_contains(polys, z):
    """Point membership under the even-odd rule over several closed polylines."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    inside = np.zeros(z.shape, dtype=bool)
    pts = _xy(z.ravel())
    for poly in polys:
        inside ^= points_in_poly(pts, _xy(poly)).reshape(z.shape)
    return inside


@dataclass
class Droplet:
    """Droplet S described by closed boundary polylines (even-odd filled).

    boundaries : list of complex vertex arrays, each implicitly closed
    singular_points : list of dicts with keys 'location', 'kind', 'nu'
      and optionally 'tangent' (unit tangent of the arcs at the point)
    resolution : length scale of the boundary description (grid h or
      maximal vertex spacing)
    components : number of connected components of S
    grid : optional (x, y, indicator) arrays from a lattice solver
    """
    boundaries: list
    singular_points: list = field(default_factory=list)
    resolution: float = 0.0
    components: int = 1
    grid: tuple = None
    source: str = ""

    def __post_init__(self):
        self.boundaries = [np.asarray(b, dtype=complex) for b in self.boundaries]
        self._verts = np.concatenate(self.boundaries)
        self._tree = cKDTree(_xy(self._verts))
        seg0, seg1 = [], []
        for b in self.boundaries:
            seg0.append(b)
            seg1.append(np.roll(b, -1))
        self._s0 = np.concatenate(seg0)
        self._s1 = np.concatenate(seg1)
        if not self.resolution:
            self.resolution = float(np.max(np.abs(self._s1 - self._s0)))

    def contains(self, z):
        return even_odd_contains(self.boundaries, z)

    @property
    def area(self):
        """Lebesgue area of S (absolute shoelace areas combined by nesting)."""
        tot = 0.0
        for i, b in enumerate(self.boundaries):
            depth = 0
            for j, c in enumerate(self.boundaries):
                if j == i:
                    continue
                # probe with the vertex farthest from c so touching curves are unambiguous
                dist, _ = cKDTree(_xy(c)).query(_xy(b))
                if even_odd_contains([c], b[np.argmax(dist)])[0]:
                    depth += 1
            tot += (-1) ** depth * abs(polygon_area(b))
        return tot

    @property
    def perimeter(self):
        return float(np.sum(np.abs(self._s1 - self._s0)))

    def distance(self, z):
        """Euclidean distance from each z to the boundary polylines."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape)
        flat = z.ravel()
        # nearest vertex bounds the search radius; segments within it are exact
        dv, _ = self._tree.query(_xy(flat))
        res = np.empty(flat.shape)
        for i, (w, r) in enumerate(zip(flat, dv)):
            idx = self._tree.query_ball_point([w.real, w.imag], r + 1e-15)
            idx = np.asarray(idx, dtype=int)
            cand = np.concatenate([idx, idx - 1]) % len(self._s0)
            res[i] = polyline_min_distance(np.array([w]), self._s0[cand],
                                           self._s1[cand])[0]
        out[...] = res.reshape(z.shape)
        return out

    def nearest_vertex(self, z):
        d, i = self._tree.query([np.real(z), np.imag(z)])
        return d, int(i)

    def locate(self, i):
        """(polyline index, local index) of global vertex i."""
        for j, b in enumerate(self.boundaries):
            if i < len(b):
                return j, i
            i -= len(b)
        raise IndexError(i)

    def inward_normals(self, j):
        """Unit inward normals at the vertices of polyline j."""
        b = self.boundaries[j]
        t = np.roll(b, -1) - np.roll(b, 1)
        t = t / np.maximum(np.abs(t), 1e-300)
        nrm = 1j * t
        # orientation from a few probe points
        step = max(len(b) // 16, 1)
        probe = b[::step] + nrm[::step] * 1e-3 * max(self.resolution, 1e-6)
        frac = np.mean(self.contains(probe))
        return nrm if frac >= 0.5 else -nrm

    def to_dict(self):
        return {"components": self.components, "resolution": self.resolution,
                "area": self.area, "perimeter": self.perimeter,
                "source": self.source,
                "singular_points": [
                    {k: ([float(np.real(v)), float(np.imag(v))] if isinstance(v, complex)
                         else v) for k, v in sp.items()}
                    for sp in self.singular_points],
                "n_polylines": len(self.boundaries)}
