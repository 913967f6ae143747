"""Box and torus geometry on Z^d, i.i.d. bond configurations and lattice shifts.

Sites are numbered in C order over the zero-based coordinate grid. The bond
leaving site ``s`` in the positive direction of ``axis`` has canonical slot
``s * d + axis``. On a free axis the slots on the upper face do not correspond
to a bond; they are kept in the bit array as structural zeros so that the slot
arithmetic stays O(1) in both directions.
"""
from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import rng
from .errors import CorruptHeader, NoArrival, NonPeriodicShift, VersionMismatch

FREE = "free"
PERIODIC = "periodic"
SLAB = "slab"
BOUNDARIES = (FREE, PERIODIC, SLAB)

_BOUNDARY_BYTE = {FREE: 0, PERIODIC: 1, SLAB: 2}
_ZERO_BASED_FLAG = 0x80
MAGIC = b"PERC1"
_HEADER = struct.Struct("<BIBdQ")
_TRAILER_TAG = b"SPEC"

_SAMPLE_CHUNK = 1 << 20


@dataclass(frozen=True)
class BoxGeometry:
    """A finite piece of Z^d.

    ``boundary`` is one of ``"free"``, ``"periodic"`` or ``"slab"``. A slab has
    ``side`` sites along the last axis (free) and ``2*side - 1`` sites along
    every other axis (periodic), so ``side = 2N+1`` gives the 4N+1 by 2N+1 slab.
    With ``centered=True`` coordinates run over ``[-(L//2), L - 1 - L//2]`` on
    an axis with L sites, otherwise over ``[0, L-1]``.
    """

    d: int
    side: int
    boundary: str = FREE
    centered: bool = True

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.side < 1:
            raise ValueError("side must be >= 1")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.boundary == PERIODIC and self.side < 3:
            raise ValueError("periodic boxes need side >= 3")
        if self.boundary == SLAB and (self.d < 2 or self.side < 3 or self.side % 2 == 0):
            raise ValueError("slabs need d >= 2 and an odd side >= 3")

    @classmethod
    def slab(cls, d: int, N: int) -> "BoxGeometry":
        return cls(d=d, side=2 * N + 1, boundary=SLAB, centered=True)

    @cached_property
    def shape(self) -> tuple:
        if self.boundary == SLAB:
            return (2 * self.side - 1,) * (self.d - 1) + (self.side,)
        return (self.side,) * self.d

    @cached_property
    def periodic_axes(self) -> tuple:
        if self.boundary == PERIODIC:
            return (True,) * self.d
        if self.boundary == SLAB:
            return (True,) * (self.d - 1) + (False,)
        return (False,) * self.d

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_slots(self) -> int:
        return self.n_sites * self.d

    @cached_property
    def offsets(self) -> np.ndarray:
        if not self.centered:
            return np.zeros(self.d, dtype=np.int64)
        return np.array([L // 2 for L in self.shape], dtype=np.int64)

    @cached_property
    def strides(self) -> np.ndarray:
        st = np.ones(self.d, dtype=np.int64)
        for a in range(self.d - 2, -1, -1):
            st[a] = st[a + 1] * self.shape[a + 1]
        return st

    @cached_property
    def bond_exists(self) -> np.ndarray:
        """Boolean mask over canonical slots: True where the slot is a real bond."""
        grid = np.ones(self.shape + (self.d,), dtype=bool)
        for a, per in enumerate(self.periodic_axes):
            if not per:
                idx = [slice(None)] * self.d + [a]
                idx[a] = self.shape[a] - 1
                grid[tuple(idx)] = False
        return grid.reshape(-1)

    @property
    def bond_count(self) -> int:
        return int(self.bond_exists.sum())

    # coordinates ---------------------------------------------------------

    def grid_coords(self, sites) -> np.ndarray:
        """Zero-based grid coordinates of site indices, shape ``(..., d)``."""
        s = np.asarray(sites, dtype=np.int64)
        return np.stack(np.unravel_index(s, self.shape), axis=-1).astype(np.int64)

    def coords(self, sites) -> np.ndarray:
        """Lattice coordinates (origin convention applied) of site indices."""
        return self.grid_coords(sites) - self.offsets

    @cached_property
    def all_coords(self) -> np.ndarray:
        return self.coords(np.arange(self.n_sites))

    def index(self, coords) -> np.ndarray | int:
        """Site index of lattice coordinates; periodic axes wrap, -1 outside the box."""
        c = np.asarray(coords, dtype=np.int64) + self.offsets
        scalar = c.ndim == 1
        c = np.atleast_2d(c)
        shape = np.array(self.shape)
        per = np.array(self.periodic_axes)
        c = np.where(per, np.mod(c, shape), c)
        inside = np.all((c >= 0) & (c < shape), axis=-1)
        out = np.where(inside, (np.where(inside[:, None], c, 0) * self.strides).sum(-1), -1)
        return int(out[0]) if scalar else out

    @cached_property
    def origin(self) -> int:
        return self.index(np.zeros(self.d, dtype=np.int64))

    @cached_property
    def geometric_neighbors(self) -> np.ndarray:
        """``(n_sites, 2d)`` lattice neighbours, direction ``2a`` is +e_a and ``2a+1`` is -e_a; -1 off the box."""
        g = self.grid_coords(np.arange(self.n_sites))
        out = np.empty((self.n_sites, 2 * self.d), dtype=np.int64)
        shape = np.array(self.shape)
        for a in range(self.d):
            for k, step in enumerate((1, -1)):
                c = g.copy()
                c[:, a] += step
                if self.periodic_axes[a]:
                    c[:, a] %= shape[a]
                    ok = np.ones(len(c), dtype=bool)
                else:
                    ok = (c[:, a] >= 0) & (c[:, a] < shape[a])
                idx = (np.where(ok[:, None], c, 0) * self.strides).sum(-1)
                out[:, 2 * a + k] = np.where(ok, idx, -1)
        return out

    @cached_property
    def frame(self) -> np.ndarray:
        """Mask of sites on the outer face of some free axis."""
        g = self.grid_coords(np.arange(self.n_sites))
        m = np.zeros(self.n_sites, dtype=bool)
        for a, per in enumerate(self.periodic_axes):
            if not per:
                m |= (g[:, a] == 0) | (g[:, a] == self.shape[a] - 1)
        return m

    def to_dict(self) -> dict:
        return {"d": self.d, "side": self.side, "boundary": self.boundary, "centered": self.centered}


def unit_directions(d: int) -> np.ndarray:
    """``(2d, d)`` displacement vectors in direction order +e_0, -e_0, +e_1, ..."""
    out = np.zeros((2 * d, d), dtype=np.int64)
    for a in range(d):
        out[2 * a, a] = 1
        out[2 * a + 1, a] = -1
    return out


def direction_index(e) -> int:
    """Direction index of a unit vector (tuple) or signed axis like ``+1``/``-2`` (1-based)."""
    if np.isscalar(e):
        e = int(e)
        if e == 0:
            raise ValueError("axis must be non-zero")
        return 2 * (abs(e) - 1) + (0 if e > 0 else 1)
    v = np.asarray(e, dtype=np.int64)
    nz = np.flatnonzero(v)
    if len(nz) != 1 or abs(v[nz[0]]) != 1:
        raise ValueError(f"not a unit vector: {e!r}")
    return 2 * int(nz[0]) + (0 if v[nz[0]] > 0 else 1)


@dataclass(frozen=True, eq=False)
class BondConfig:
    """Occupancy of every canonical bond slot of a geometry."""

    geometry: BoxGeometry
    bits: np.ndarray = field(repr=False)
    p: float = float("nan")
    seed: int = 0

    def __post_init__(self):
        b = np.ascontiguousarray(self.bits, dtype=bool)
        if b.shape != (self.geometry.n_slots,):
            raise ValueError(f"bits length {b.size} != slot count {self.geometry.n_slots}")
        if np.any(b & ~self.geometry.bond_exists):
            raise ValueError("occupied slot outside the geometry")
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    @classmethod
    def from_bonds(cls, geometry: BoxGeometry, bonds, p=float("nan"), seed=0) -> "BondConfig":
        """Build a configuration from ``(coords, axis)`` pairs naming open bonds.

        ``coords`` is the lower endpoint in lattice coordinates and ``axis`` the
        0-based positive direction of the bond.
        """
        bits = np.zeros(geometry.n_slots, dtype=bool)
        for coords, axis in bonds:
            s = geometry.index(coords)
            if s < 0:
                raise ValueError(f"site {coords} outside the box")
            slot = s * geometry.d + axis
            if not geometry.bond_exists[slot]:
                raise ValueError(f"bond {coords}+e{axis} leaves the box")
            bits[slot] = True
        return cls(geometry, bits, p, seed)

    def grid(self) -> np.ndarray:
        return self.bits.reshape(self.geometry.shape + (self.geometry.d,))

    def is_open(self, site: int, axis: int) -> bool:
        return bool(self.bits[site * self.geometry.d + axis])

    @property
    def open_count(self) -> int:
        return int(self.bits.sum())

    @property
    def density(self) -> float:
        return self.open_count / self.geometry.bond_count

    def __eq__(self, other):
        if not isinstance(other, BondConfig):
            return NotImplemented
        same_p = (self.p == other.p) or (np.isnan(self.p) and np.isnan(other.p))
        return (self.geometry == other.geometry and same_p and self.seed == other.seed
                and np.array_equal(self.bits, other.bits))

    __hash__ = None

    # binary format -------------------------------------------------------

    def to_bytes(self, run_spec: dict | None = None) -> bytes:
        g = self.geometry
        bbyte = _BOUNDARY_BYTE[g.boundary] | (0 if g.centered else _ZERO_BASED_FLAG)
        head = MAGIC + _HEADER.pack(g.d, g.side, bbyte, float(self.p), int(self.seed) & rng.MASK64)
        body = np.packbits(self.bits, bitorder="little").tobytes()
        out = head + body
        if run_spec is not None:
            blob = json.dumps(run_spec, sort_keys=True).encode()
            out += _TRAILER_TAG + struct.pack("<I", len(blob)) + blob
        return out

    @classmethod
    def from_bytes(cls, data: bytes) -> "BondConfig":
        return decode_config(data)[0]


def decode_config(data: bytes) -> tuple:
    """Parse the binary dump; returns ``(config, run_spec or None)``."""
    if len(data) < len(MAGIC) + _HEADER.size:
        raise CorruptHeader("file shorter than header")
    magic = data[: len(MAGIC)]
    if magic != MAGIC:
        if magic[:4] == MAGIC[:4]:
            raise VersionMismatch(f"unsupported format version {magic[4:]!r}")
        raise CorruptHeader(f"bad magic {magic!r}")
    d, side, bbyte, p, seed = _HEADER.unpack_from(data, len(MAGIC))
    inv = {v: k for k, v in _BOUNDARY_BYTE.items()}
    if (bbyte & ~_ZERO_BASED_FLAG) not in inv:
        raise CorruptHeader(f"bad boundary byte {bbyte}")
    try:
        geom = BoxGeometry(d, side, inv[bbyte & ~_ZERO_BASED_FLAG], not (bbyte & _ZERO_BASED_FLAG))
    except ValueError as exc:
        raise CorruptHeader(str(exc)) from exc
    start = len(MAGIC) + _HEADER.size
    nbytes = (geom.n_slots + 7) // 8
    if len(data) < start + nbytes:
        raise CorruptHeader("truncated bond bits")
    packed = np.frombuffer(data, dtype=np.uint8, count=nbytes, offset=start)
    bits = np.unpackbits(packed, count=geom.n_slots, bitorder="little").astype(bool)
    rest = data[start + nbytes:]
    spec = None
    if rest:
        if rest[:4] != _TRAILER_TAG or len(rest) < 8:
            raise CorruptHeader("trailing garbage after bond bits")
        (n,) = struct.unpack_from("<I", rest, 4)
        if len(rest) != 8 + n:
            raise CorruptHeader("truncated run-spec trailer")
        spec = json.loads(rest[8:].decode())
    try:
        cfg = BondConfig(geom, bits, p, seed)
    except ValueError as exc:
        raise CorruptHeader(str(exc)) from exc
    return cfg, spec


def sample_config(geometry: BoxGeometry, p: float, seed: int, threads: int = 1) -> BondConfig:
    """Occupy each bond independently with probability ``p``.

    Bond ``slot`` is open iff ``uniform(key(seed), slot) < p``; chunks are
    independent so ``threads`` never changes the result.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    key = rng.derive_key(seed)
    n = geometry.n_slots
    bits = np.empty(n, dtype=bool)

    def fill(lo):
        hi = min(lo + _SAMPLE_CHUNK, n)
        bits[lo:hi] = rng.uniforms(key, np.arange(lo, hi, dtype=np.uint64)) < p

    starts = range(0, n, _SAMPLE_CHUNK)
    if threads > 1 and n > _SAMPLE_CHUNK:
        with ThreadPoolExecutor(threads) as ex:
            list(ex.map(fill, starts))
    else:
        for lo in starts:
            fill(lo)
    bits &= geometry.bond_exists
    return BondConfig(geometry, bits, float(p), int(seed) & rng.MASK64)


def shift_config(config: BondConfig, x) -> BondConfig:
    """The shift tau_x: bond b of the result is bond x+b of ``config``."""
    g = config.geometry
    if g.boundary != PERIODIC:
        raise NonPeriodicShift(f"shifts need a periodic geometry, got {g.boundary}")
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (g.d,):
        raise ValueError(f"shift vector must have length {g.d}")
    grid = np.roll(config.grid(), shift=tuple(-x), axis=tuple(range(g.d)))
    return BondConfig(g, grid.reshape(-1), config.p, config.seed)


def induced_shift(config: BondConfig, cluster, e) -> tuple:
    """Shift to the first cluster site on the positive ray along ``e``.

    Returns ``(shifted config, n)`` with n the least k > 0 such that ``k e``
    lies in the giant cluster.
    """
    g = config.geometry
    if g.boundary != PERIODIC:
        raise NonPeriodicShift("induced shift needs a periodic geometry")
    if not cluster.in_giant(g.origin):
        raise NoArrival("origin is not in the giant cluster")
    v = np.zeros(g.d, dtype=np.int64)
    v[direction_index(e) // 2] = 1 if direction_index(e) % 2 == 0 else -1
    for k in range(1, g.side):
        if cluster.in_giant(g.index(k * v)):
            return shift_config(config, k * v), k
    raise NoArrival("no cluster site on the ray within one period")
