"""Square-lattice geometry and finite configurations.

Sites are integer pairs (x, y). Adjacency is taxicab: u and v are
adjacent iff |u1-v1| + |u2-v2| = 1. Centered boxes [-n, n] x [-n, n],
their one-site-thick shells, and arbitrary rectangles provide the
shapes; a Window is a dense rectangular configuration, and a sparse
patch is a plain dict from sites to symbols.

Two same-domain windows are compared with the dyadic metric 2**-i,
where i is the smallest Chebyshev norm of a site where they disagree.
Windows agreeing on their whole (finite) domain cannot be told apart,
so the comparison returns an agreement sentinel carrying a certified
upper bound rather than a fabricated exact value.

All deterministic site iteration in this package is row-major with the
top row (largest y) first.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

Site = tuple[int, int]
SparsePatch = dict[Site, int]

E1: Site = (1, 0)
E2: Site = (0, 1)


def taxicab(u: Site) -> int:
    return abs(u[0]) + abs(u[1])


def cheb(u: Site) -> int:
    return max(abs(u[0]), abs(u[1]))


def adjacent(u: Site, v: Site) -> bool:
    """True iff the two sites are taxicab-adjacent."""
    return abs(u[0] - v[0]) + abs(u[1] - v[1]) == 1


def neighbors(u: Site) -> list[Site]:
    """The four adjacent sites, in (+x, -x, +y, -y) order."""
    x, y = u
    return [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]


def boundary(sites: Iterable[Site]) -> set[Site]:
    """Exterior boundary: sites outside the set adjacent to a member.

    Raises ValueError("empty shape") on empty input.
    """
    inside = set(sites)
    if not inside:
        raise ValueError("empty shape")
    out: set[Site] = set()
    for u in inside:
        for v in neighbors(u):
            if v not in inside:
                out.add(v)
    return out


def box_sites(n: int) -> list[Site]:
    """All (2n+1)**2 sites of [-n, n] x [-n, n], row-major, top row first."""
    if n < 0:
        raise ValueError("box radius must be >= 0")
    return [(x, y) for y in range(n, -n - 1, -1) for x in range(-n, n + 1)]


def shell_sites(i: int) -> list[Site]:
    """The 8i sites at Chebyshev norm exactly i (shell 0 is the origin).

    Ordered row-major, top row first, consistent with box_sites.
    """
    if i < 0:
        raise ValueError("shell radius must be >= 0")
    if i == 0:
        return [(0, 0)]
    out: list[Site] = [(x, i) for x in range(-i, i + 1)]
    for y in range(i - 1, -i, -1):
        out.append((-i, y))
        out.append((i, y))
    out.extend((x, -i) for x in range(-i, i + 1))
    return out


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle of lattice sites, inclusive of its corners."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("rectangle must have positive width and height")

    @classmethod
    def centered(cls, n: int) -> "Rect":
        """The box [-n, n] x [-n, n]."""
        if n < 0:
            raise ValueError("box radius must be >= 0")
        return cls(-n, -n, 2 * n + 1, 2 * n + 1)

    @property
    def x1(self) -> int:
        return self.x0 + self.width - 1

    @property
    def y1(self) -> int:
        return self.y0 + self.height - 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains(self, u: Site) -> bool:
        return self.x0 <= u[0] <= self.x1 and self.y0 <= u[1] <= self.y1

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.x0 <= other.x0
            and self.y0 <= other.y0
            and other.x1 <= self.x1
            and other.y1 <= self.y1
        )

    def inflate(self, k: int) -> "Rect":
        """Grow (or shrink, k < 0) by k sites on every edge."""
        return Rect(self.x0 - k, self.y0 - k, self.width + 2 * k, self.height + 2 * k)

    def translate(self, v: Site) -> "Rect":
        return Rect(self.x0 + v[0], self.y0 + v[1], self.width, self.height)

    def sites(self) -> Iterator[Site]:
        """Row-major iteration, top row first."""
        for y in range(self.y1, self.y0 - 1, -1):
            for x in range(self.x0, self.x1 + 1):
                yield (x, y)

    def centered_radius(self) -> int:
        """Largest n with [-n, n]^2 inside this rectangle (-1 if none)."""
        return min(-self.x0, self.x1, -self.y0, self.y1)


class Window:
    """A dense configuration on a rectangle: one symbol per site.

    Immutable after construction; the backing array is frozen. Row 0 of
    the array is the top row (largest y).
    """

    __slots__ = ("rect", "array")

    def __init__(self, rect: Rect, array: np.ndarray, *, _copy: bool = True):
        arr = np.asarray(array, dtype=np.int64)
        if arr.shape != (rect.height, rect.width):
            raise ValueError(
                f"array shape {arr.shape} does not match rectangle "
                f"{rect.height}x{rect.width}"
            )
        if _copy:
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "rect", rect)
        object.__setattr__(self, "array", arr)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("Window is immutable")

    @classmethod
    def filled(cls, rect: Rect, symbol: int) -> "Window":
        return cls(rect, np.full((rect.height, rect.width), symbol, dtype=np.int64), _copy=False)

    def _index(self, u: Site) -> tuple[int, int]:
        if not self.rect.contains(u):
            raise KeyError(f"site {u} outside window domain")
        return (self.rect.y1 - u[1], u[0] - self.rect.x0)

    def get(self, u: Site) -> int:
        r, c = self._index(u)
        return int(self.array[r, c])

    def pattern9(self, u: Site) -> tuple[int, ...]:
        """The 3x3 patch centered at u, row-major, top row first.

        Raises ValueError("insufficient margin") if the patch leaves the
        stored domain.
        """
        r, c = self._index(u)
        if r < 1 or c < 1 or r + 1 >= self.rect.height or c + 1 >= self.rect.width:
            raise ValueError("insufficient margin")
        return tuple(int(v) for v in self.array[r - 1 : r + 2, c - 1 : c + 2].ravel())

    def with_patch(self, patch: SparsePatch) -> "Window":
        """A new window with the patch written over this one."""
        arr = self.array.copy()
        for u, a in patch.items():
            r, c = self._index(u)
            arr[r, c] = a
        return Window(self.rect, arr, _copy=False)

    def translate(self, v: Site) -> "Window":
        """Carry every symbol along v: site u + v holds this window's value at u."""
        return Window(self.rect.translate(v), self.array, _copy=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Window):
            return NotImplemented
        return self.rect == other.rect and bool(np.array_equal(self.array, other.array))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        r = self.rect
        return f"Window({r.x0}, {r.y0}, {r.width}x{r.height})"


def concat_patches(*patches: SparsePatch) -> SparsePatch:
    """Union of sparse patches; their domains must be pairwise disjoint."""
    out: SparsePatch = {}
    for p in patches:
        for u, a in p.items():
            if u in out:
                raise ValueError(f"patch domains overlap at {u}")
            out[u] = a
    return out


@dataclass(frozen=True)
class MetricResult:
    """Distance between two same-domain windows.

    exact is the distance 2**-radius as a Fraction when the windows
    disagree inside the domain; for windows agreeing on the whole
    domain, exact is None and radius is a certified lower bound on the
    first-disagreement Chebyshev norm of any pair of extensions, so
    2**-radius is still a sound upper bound on the true distance.
    """

    exact: Fraction | None
    radius: int

    @property
    def is_agreement(self) -> bool:
        return self.exact is None

    @property
    def upper_bound(self) -> Fraction:
        if self.radius >= 0:
            return Fraction(1, 2**self.radius)
        return Fraction(2 ** (-self.radius), 1)

    @property
    def value(self) -> Fraction:
        if self.exact is None:
            raise ValueError("windows agree on domain; only an upper bound is certified")
        return self.exact


def metric_exact(w: Window, v: Window) -> MetricResult:
    """Dyadic distance between same-domain windows; see MetricResult."""
    if w.rect != v.rect:
        raise ValueError("mismatched domains")
    diff = w.array != v.array
    rows, cols = np.nonzero(diff)
    if rows.size == 0:
        return MetricResult(exact=None, radius=w.rect.centered_radius() + 1)
    xs = cols.astype(np.int64) + w.rect.x0
    ys = w.rect.y1 - rows.astype(np.int64)
    i = int(np.minimum.reduce(np.maximum(np.abs(xs), np.abs(ys))))
    return MetricResult(exact=Fraction(1, 2**i), radius=i)


def render_window(w: Window) -> str:
    """Line-oriented text form: header then one row per line, top row first."""
    r = w.rect
    lines = [f"window {r.x0} {r.y0} {r.width} {r.height}"]
    for row in w.array:
        lines.append(" ".join(str(int(a)) for a in row))
    return "\n".join(lines) + "\n"


def parse_window(text: str) -> Window:
    """Parse the text form produced by render_window."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty window text")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "window":
        raise ValueError("window text must start with 'window x0 y0 width height'")
    try:
        x0, y0, width, height = (int(t) for t in head[1:])
    except ValueError as exc:
        raise ValueError(f"bad window header: {lines[0]!r}") from exc
    rect = Rect(x0, y0, width, height)
    rows = lines[1:]
    if len(rows) != height:
        raise ValueError(f"expected {height} rows, found {len(rows)}")
    arr = np.empty((height, width), dtype=np.int64)
    for i, ln in enumerate(rows):
        vals = ln.split()
        if len(vals) != width:
            raise ValueError(f"row {i + 1}: expected {width} symbols, found {len(vals)}")
        try:
            arr[i] = [int(t) for t in vals]
        except ValueError as exc:
            raise ValueError(f"row {i + 1}: symbols must be integers") from exc
    if arr.min() < 0:
        raise ValueError("symbols must be nonnegative")
    return Window(rect, arr, _copy=False)
