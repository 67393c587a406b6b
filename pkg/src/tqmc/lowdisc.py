"""Sobol digital nets in base 2, their randomizations, and MC baselines.

Points are generated with W = 32 fractional bits in Gray-code order.  Raw
nets keep exact dyadic values k / 2^32; randomized variants (Owen nested
scrambling, digital shift) have uniform marginals while preserving the
net structure.  Everything is deterministic given (seed, n, d).
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

W = 32
_SCALE = float(2**W)

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)


class DirectionNumbersError(ValueError):
    """Malformed direction-numbers input or unsupported dimension."""


class PointSetError(ValueError):
    """Operation applied to an incompatible point set."""


@dataclass(frozen=True)
class DirectionNumbers:
    """Primitive-polynomial data for the Sobol construction.

    ``degree[j]``, ``poly_code[j]`` and ``m[j]`` describe dimension j + 2;
    dimension 1 always uses the van der Corput convention (all direction
    integers equal to 1) and is not stored.
    """

    degree: tuple[int, ...]
    poly_code: tuple[int, ...]
    m: tuple[tuple[int, ...], ...]

    @property
    def max_dim(self) -> int:
        return len(self.degree) + 1

    def direction_vectors(self, d: int) -> np.ndarray:
        """Return the (d, W) table of direction integers for d dimensions."""
        if d > self.max_dim:
            raise DirectionNumbersError(
                f"dimension {d} exceeds table capacity {self.max_dim}"
            )
        v = np.zeros((d, W), dtype=np.uint64)
        v[0] = [1 << (W - k - 1) for k in range(W)]
        for j in range(1, d):
            s = self.degree[j - 1]
            a = self.poly_code[j - 1]
            m = self.m[j - 1]
            col = [m[k] << (W - k - 1) for k in range(min(s, W))]
            for k in range(s, W):
                vk = col[k - s] ^ (col[k - s] >> s)
                for i in range(1, s):
                    if (a >> (s - 1 - i)) & 1:
                        vk ^= col[k - i]
                col.append(vk)
            v[j] = col[:W]
        return v


def load_direction_numbers(stream: IO[str] | Iterable[str]) -> DirectionNumbers:
    """Parse a Joe-Kuo text table ("d s a m_1 ... m_s", one line per dim).

    A header line is tolerated and skipped.  Dimensions must be strictly
    increasing starting at 2; dimension 1 is implicit.
    """
    degree: list[int] = []
    code: list[int] = []
    ms: list[tuple[int, ...]] = []
    expected = 2
    for lineno, line in enumerate(stream, start=1):
        parts = line.split()
        if not parts:
            continue
        if lineno == 1 and not parts[0].isdigit():
            continue  # header
        try:
            nums = [int(p) for p in parts]
        except ValueError as exc:
            raise DirectionNumbersError(f"line {lineno}: non-integer token") from exc
        if len(nums) < 3:
            raise DirectionNumbersError(f"line {lineno}: too few fields")
        d, s, a, *m = nums
        if d != expected:
            raise DirectionNumbersError(
                f"line {lineno}: expected dimension {expected}, got {d}"
            )
        if s < 1 or len(m) != s:
            raise DirectionNumbersError(
                f"line {lineno}: degree {s} does not match {len(m)} direction integers"
            )
        for k, mk in enumerate(m):
            if mk % 2 == 0 or not 0 < mk < 2 ** (k + 1):
                raise DirectionNumbersError(
                    f"line {lineno}: direction integer m_{k + 1}={mk} out of range"
                )
        degree.append(s)
        code.append(a)
        ms.append(tuple(m))
        expected += 1
    return DirectionNumbers(tuple(degree), tuple(code), tuple(ms))


def default_direction_numbers() -> DirectionNumbers:
    """Load the bundled Joe-Kuo table (dimensions up to 101)."""
    ref = importlib.resources.files("tqmc.data") / "joe_kuo_dirs.txt"
    with ref.open("r") as fh:
        return load_direction_numbers(fh)


@dataclass(frozen=True)
class PointSet:
    """n x d points in [0, 1) with provenance.

    ``kind`` is one of "mc", "sobol_raw", "sobol_scrambled", "sobol_shifted".
    For the sobol kinds the integer lattice representation (n, d) uint64 with
    W fractional bits is kept so randomizations stay exact.
    """

    points: np.ndarray
    kind: str
    seed: int
    ints: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise PointSetError("points must be a non-empty n x d matrix")
        if np.any(self.points < 0.0) or np.any(self.points >= 1.0):
            raise PointSetError("points must lie in [0, 1)")


def _ints_to_unit(ints: np.ndarray) -> np.ndarray:
    return ints.astype(np.float64) / _SCALE


def sobol_raw(n: int, d: int, dirs: DirectionNumbers | None = None) -> PointSet:
    """First n points of the Sobol sequence (index 0 included), Gray-code order."""
    if n < 1:
        raise PointSetError("n must be >= 1")
    if n > 2**W:
        raise PointSetError(f"n={n} exceeds 2^{W} capacity")
    dirs = dirs if dirs is not None else default_direction_numbers()
    v = dirs.direction_vectors(d)  # (d, W)
    idx = np.arange(n, dtype=np.uint64)
    gray = idx ^ (idx >> np.uint64(1))
    ints = np.zeros((n, d), dtype=np.uint64)
    for k in range(W):
        bit = (gray >> np.uint64(k)) & np.uint64(1)
        if not bit.any():
            break
        ints ^= bit[:, None] * v[None, :, k]
    return PointSet(_ints_to_unit(ints), "sobol_raw", seed=0, ints=ints)


def _splitmix64_scalar(x: int) -> int:
    """Scalar splitmix64 finalizer on Python ints (no overflow)."""
    mask = (1 << 64) - 1
    z = (x + 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """Deterministic 64-bit mix (splitmix64 finalizer), vectorized."""
    z = (x + _SPLITMIX_GAMMA).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def digital_shift(ps: PointSet, seed: int) -> PointSet:
    """XOR every point with one uniform W-bit shift per dimension."""
    if ps.kind != "sobol_raw":
        raise PointSetError("digital_shift requires a sobol_raw point set")
    rng = np.random.Generator(np.random.Philox(key=seed))
    shifts = rng.integers(0, 2**W, size=ps.d, dtype=np.uint64)
    ints = ps.ints ^ shifts[None, :]
    return PointSet(_ints_to_unit(ints), "sobol_shifted", seed=seed, ints=ints)


def owen_scramble(ps: PointSet, seed: int, _identity_hook: bool = False) -> PointSet:
    """Owen nested uniform scrambling via a seeded hash of bit prefixes.

    Each output bit at level k is the input bit XORed with a pseudorandom
    bit determined by (seed, dimension, level, input prefix above level k),
    which is statistically equivalent to drawing a full permutation tree.
    ``_identity_hook`` forces all permutation bits to zero (tests only).
    """
    if ps.kind != "sobol_raw":
        raise PointSetError("owen_scramble requires a sobol_raw point set")
    n = ps.n
    if n & (n - 1):
        raise PointSetError("owen_scramble requires n to be a power of 2")
    ints = ps.ints.copy()
    if not _identity_hook:
        out = np.zeros_like(ints)
        for j in range(ps.d):
            a = ints[:, j]
            dimkey = np.uint64(_splitmix64_scalar((seed << 16) ^ j))
            flips = np.zeros(n, dtype=np.uint64)
            for lvl in range(W):
                # prefix of the *input* bits strictly above this level
                prefix = a >> np.uint64(W - lvl) if lvl > 0 else np.zeros(n, np.uint64)
                h = _splitmix64(prefix ^ dimkey ^ (np.uint64(lvl) << np.uint64(40)))
                flips |= (h & np.uint64(1)) << np.uint64(W - lvl - 1)
            out[:, j] = a ^ flips
        ints = out
    return PointSet(_ints_to_unit(ints), "sobol_scrambled", seed=seed, ints=ints)


def mc_points(n: int, d: int, seed: int) -> PointSet:
    """i.i.d. uniforms from a counter-based generator keyed by the seed."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    pts = rng.random((n, d))
    return PointSet(pts, "mc", seed=seed)


def rqmc_points(n: int, d: int, seed: int,
                dirs: DirectionNumbers | None = None) -> PointSet:
    """Convenience: Owen-scrambled Sobol points."""
    return owen_scramble(sobol_raw(n, d, dirs), seed)
