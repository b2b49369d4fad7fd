# maxmix 📈, AGPL-3.0 license

from functools import cached_property
from itertools import product

import numpy as np

from maxmix.utils.checks import check_extents
from maxmix.utils.errors import ContractError


class LatticeWindow:
    """
    A finite window of Z^d: distinct integer sites in a deterministic order plus the descriptor that built them.

    Attributes:
        sites (np.ndarray): (n, d) int64 site coordinates, read-only.
        dim (int): Lattice dimension d.
        descriptor (dict): Construction descriptor, i.e. {'type': 'box', 'extents': [32, 32], 'origin': [0, 0]}.
    """

    def __init__(self, sites, descriptor=None):
        sites = np.asarray(sites, dtype=np.int64)
        if sites.ndim == 1:
            sites = sites[:, None]
        if sites.ndim != 2 or len(sites) == 0:
            raise ContractError(f'a window needs a nonempty (n, d) array of sites, got shape {sites.shape}')
        if len(np.unique(sites, axis=0)) != len(sites):
            raise ContractError('window sites must be distinct')
        sites = np.ascontiguousarray(sites)
        sites.flags.writeable = False
        self.sites = sites
        self.dim = sites.shape[1]
        self.descriptor = descriptor or {'type': 'sites'}

    @classmethod
    def box(cls, extents, dim=None, origin=None):
        """
        Box window origin + [0, n_1) x ... x [0, n_d) with sites in C order (last axis fastest).

        Args:
            extents (int | list): Box side, or per-axis extents.
            dim (int, optional): Dimension, required when `extents` is an int.
            origin (list, optional): Lower corner, default the lattice origin.
        """
        dim = dim or (1 if isinstance(extents, int) else len(extents))
        extents = check_extents(extents, dim)
        origin = np.zeros(dim, dtype=np.int64) if origin is None else np.asarray(origin, dtype=np.int64)
        sites = np.indices(extents).reshape(dim, -1).T + origin
        return cls(sites, {'type': 'box', 'extents': list(extents), 'origin': origin.tolist()})

    @classmethod
    def from_sites(cls, sites, dim=None):
        """Window of explicitly listed sites, kept in the given order."""
        sites = np.asarray(sites, dtype=np.int64)
        if dim is not None and sites.ndim == 1:
            sites = sites.reshape(-1, dim)
        return cls(sites, {'type': 'sites'})

    def __len__(self):
        return len(self.sites)

    def __eq__(self, other):
        return isinstance(other, LatticeWindow) and np.array_equal(self.sites, other.sites)

    def __hash__(self):
        return hash((self.sites.shape, self.sites.tobytes()))

    def __repr__(self):
        return f'LatticeWindow({self.descriptor}, size={len(self)})'

    @cached_property
    def bounding_box(self):
        """(lo, hi) integer corners, inclusive."""
        return self.sites.min(0), self.sites.max(0)

    @cached_property
    def _grid(self):
        lo, hi = self.bounding_box
        grid = np.full(hi - lo + 1, -1, dtype=np.int64)
        grid[tuple((self.sites - lo).T)] = np.arange(len(self))
        return grid

    def index_of(self, points):
        """Row indices of `points` in `sites`, -1 where a point is not in the window."""
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.dim)
        lo, hi = self.bounding_box
        inside = np.all((points >= lo) & (points <= hi), axis=1)
        idx = np.full(len(points), -1, dtype=np.int64)
        idx[inside] = self._grid[tuple((points[inside] - lo).T)]
        return idx

    def contains(self, points):
        """Boolean mask of `points` lying in the window."""
        return self.index_of(points) >= 0

    @cached_property
    def boundary_count(self):
        """Number of sites having a neighbour at sup-distance 1 outside the window."""
        offsets = np.array([o for o in product((-1, 0, 1), repeat=self.dim) if any(o)], dtype=np.int64)
        outside = np.zeros(len(self), dtype=bool)
        for o in offsets:
            outside |= ~self.contains(self.sites + o)
        return int(outside.sum())

    @property
    def boundary_ratio(self):
        """|boundary| / |window|."""
        return self.boundary_count / len(self)

    def cover(self, lags):
        """
        Smallest window holding every t and t + h for t in this window and h in `lags`.

        Sites are sorted lexicographically; the descriptor keeps the base window so estimators can recover it.
        """
        lags = np.asarray(lags, dtype=np.int64).reshape(-1, self.dim)
        shifted = np.concatenate([self.sites] + [self.sites + h for h in lags])
        return LatticeWindow(np.unique(shifted, axis=0), {
            'type': 'cover',
            'base': self.descriptor,
            'lags': lags.tolist()})

    def shift(self, h):
        """The window translated by the lag h."""
        h = np.asarray(h, dtype=np.int64).reshape(self.dim)
        descriptor = dict(self.descriptor)
        if 'origin' in descriptor:
            descriptor['origin'] = (np.asarray(descriptor['origin']) + h).tolist()
        return LatticeWindow(self.sites + h, descriptor)

    def to_dict(self):
        return {'dim': self.dim, 'size': len(self), 'boundary_count': self.boundary_count, **self.descriptor}


def sup_norm(h):
    """Lattice distance |h| = max_i |h_i| of one lag or of each row of an array of lags."""
    h = np.asarray(h)
    return np.abs(h).max(-1) if h.ndim else np.abs(h)


def set_distance(s1, s2):
    """Sup-norm distance between two finite site sets."""
    s1, s2 = np.atleast_2d(s1), np.atleast_2d(s2)
    return int(sup_norm(s1[:, None, :] - s2[None, :, :]).min())


def shell(r, dim):
    """All lags t in Z^d with |t| = r in the sup-norm, in lexicographic order."""
    if r == 0:
        return np.zeros((1, dim), dtype=np.int64)
    faces = []
    for k in range(dim):  # axis k at +-r, axes before k strictly inside
        ranges = [np.arange(-r + 1, r)] * k + [np.array([-r, r])] + [np.arange(-r, r + 1)] * (dim - k - 1)
        faces.append(np.stack(np.meshgrid(*ranges, indexing='ij'), -1).reshape(-1, dim))
    pts = np.concatenate(faces)
    return pts[np.lexsort(pts.T[::-1])]


def shell_size(r, dim):
    """Number of lattice points at sup-distance r, (2r+1)^d - (2r-1)^d."""
    return 1 if r == 0 else (2 * r + 1) ** dim - (2 * r - 1) ** dim
