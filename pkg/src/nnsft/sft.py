"""Nearest-neighbor SFTs: forbidden pairs, admissibility, fillability.

An NnSft is an alphabet size q plus two sets of ordered forbidden
pairs: (a, b) in hforbid bans a immediately left of b, and (a, b) in
vforbid bans a immediately below b. A window is locally admissible when
none of its stored adjacent pairs is forbidden.

A site u of a window is *bad* when the pair (u, u+e1) or (u, u+e2) is
forbidden; badness is attributed to the lower/left endpoint, so the
penalty potential in the potentials module is exactly -1 on bad sites.
Near window edges only sites whose right and up neighbors are stored
are evaluated, and the evaluable sub-rectangle is reported alongside.

Single-site fillability (SSF): for every assignment of four symbols to
a site's neighbors, some center symbol is compatible with all four
constraints. The check is exhaustive over all q**4 boundary assignments
(admissible or not) times q center symbols. A safe symbol is a center
that works for every boundary, i.e. a symbol in no forbidden pair.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from .lattice import Rect, Site, Window

Pair = tuple[int, int]

SSF_BRUTE_FORCE_LIMIT = 64  # q**5 work; beyond this the check is impractical


@dataclass(frozen=True)
class NnSft:
    """A nearest-neighbor SFT over symbols 0..q-1."""

    q: int
    hforbid: frozenset[Pair] = field(default_factory=frozenset)
    vforbid: frozenset[Pair] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ValueError("alphabet size must be >= 1")
        object.__setattr__(self, "hforbid", frozenset(self.hforbid))
        object.__setattr__(self, "vforbid", frozenset(self.vforbid))
        for name, pairs in (("hforbid", self.hforbid), ("vforbid", self.vforbid)):
            for a, b in pairs:
                if not (0 <= a < self.q and 0 <= b < self.q):
                    raise ValueError(f"{name} pair ({a}, {b}) outside alphabet 0..{self.q - 1}")

    @cached_property
    def h_table(self) -> np.ndarray:
        """Boolean q x q table; [a, b] is True when a-left-of-b is forbidden."""
        t = np.zeros((self.q, self.q), dtype=bool)
        for a, b in self.hforbid:
            t[a, b] = True
        t.flags.writeable = False
        return t

    @cached_property
    def v_table(self) -> np.ndarray:
        """Boolean q x q table; [a, b] is True when a-below-b is forbidden."""
        t = np.zeros((self.q, self.q), dtype=bool)
        for a, b in self.vforbid:
            t[a, b] = True
        t.flags.writeable = False
        return t

    @cached_property
    def ssf(self) -> "SsfResult":
        return check_ssf(self)


@dataclass(frozen=True)
class SsfResult:
    ok: bool
    # a blocking boundary (north, south, east, west) when ok is False
    witness: tuple[int, int, int, int] | None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Violation:
    site: Site  # lower/left endpoint of the forbidden pair
    direction: Literal["horizontal", "vertical"]


@dataclass(frozen=True)
class BadSites:
    sites: frozenset[Site]
    evaluable: Rect | None  # None when the window is too thin to evaluate anywhere

    @property
    def count(self) -> int:
        return len(self.sites)


class SymbolRangeError(ValueError):
    def __init__(self, site: Site, symbol: int, q: int):
        self.site = site
        self.symbol = symbol
        super().__init__(f"symbol {symbol} at {site} outside alphabet 0..{q - 1}")


def _check_symbols(w: Window, sft: NnSft) -> None:
    arr = w.array
    if arr.size and (int(arr.max()) >= sft.q or int(arr.min()) < 0):
        bad = (arr >= sft.q) | (arr < 0)
        r, c = map(int, np.argwhere(bad)[0])
        site = (w.rect.x0 + c, w.rect.y1 - r)
        raise SymbolRangeError(site, int(arr[r, c]), sft.q)


def violations(w: Window, sft: NnSft) -> list[Violation]:
    """All forbidden adjacent pairs with both endpoints stored.

    Ordered by lower/left endpoint, row-major top row first, horizontal
    before vertical at the same site. Empty iff w is locally admissible.
    """
    _check_symbols(w, sft)
    arr = w.array
    found: list[tuple[int, int, int]] = []  # (row, col, 0=horizontal 1=vertical)
    if w.rect.width > 1:
        for r, c in np.argwhere(sft.h_table[arr[:, :-1], arr[:, 1:]]):
            found.append((int(r), int(c), 0))
    if w.rect.height > 1:
        # vertical pair (u, u+e2): u sits one row below its partner
        for r, c in np.argwhere(sft.v_table[arr[1:, :], arr[:-1, :]]):
            found.append((int(r) + 1, int(c), 1))
    found.sort()
    return [
        Violation(
            (w.rect.x0 + c, w.rect.y1 - r),
            "horizontal" if d == 0 else "vertical",
        )
        for r, c, d in found
    ]


def bad_site_mask(w: Window, sft: NnSft) -> tuple[np.ndarray, Rect | None]:
    """Boolean array over the window marking bad sites, plus the evaluable rect.

    A site is evaluable when its right and up neighbors are stored; the
    mask is False outside the evaluable sub-rectangle.
    """
    _check_symbols(w, sft)
    arr = w.array
    h, wd = arr.shape
    mask = np.zeros((h, wd), dtype=bool)
    if h < 2 or wd < 2:
        return mask, None
    # evaluable sites occupy rows 1.. and columns ..-2 of the array
    right = sft.h_table[arr[1:, :-1], arr[1:, 1:]]
    up = sft.v_table[arr[1:, :-1], arr[:-1, :-1]]
    mask[1:, :-1] = right | up
    return mask, Rect(w.rect.x0, w.rect.y0, w.rect.width - 1, w.rect.height - 1)


def bad_sites(w: Window, sft: NnSft) -> BadSites:
    """Sites whose right or up pair is forbidden (window version of the
    penalty potential's support)."""
    mask, evaluable = bad_site_mask(w, sft)
    rows, cols = np.nonzero(mask)
    sites = frozenset(
        (int(c) + w.rect.x0, w.rect.y1 - int(r)) for r, c in zip(rows, cols)
    )
    return BadSites(sites, evaluable)


def penalty_at(w: Window, u: Site, sft: NnSft) -> int:
    """-1 if u is bad, 0 otherwise; u and both its dependencies must be stored."""
    _check_symbols(w, sft)
    x, y = u
    for s in (u, (x + 1, y), (x, y + 1)):
        if not w.rect.contains(s):
            raise ValueError("insufficient margin")
    a = w.get(u)
    if (a, w.get((x + 1, y))) in sft.hforbid:
        return -1
    if (a, w.get((x, y + 1))) in sft.vforbid:
        return -1
    return 0


def check_ssf(sft: NnSft) -> SsfResult:
    """Exhaustive single-site fillability check.

    For every boundary assignment (north, south, east, west) there must
    be a center symbol a with (west, a) and (a, east) horizontally
    allowed and (south, a) and (a, north) vertically allowed. On
    failure the lexicographically first blocking boundary is returned.
    """
    q = sft.q
    if q > SSF_BRUTE_FORCE_LIMIT:
        raise ValueError(f"alphabet too large for exhaustive SSF check (q > {SSF_BRUTE_FORCE_LIMIT})")
    h_ok = ~sft.h_table
    v_ok = ~sft.v_table
    # fillable[n, s, e, w] = OR over centers a of the four compatibilities
    fillable = np.zeros((q, q, q, q), dtype=bool)
    for a in range(q):
        up_ok = v_ok[a, :]  # over north
        down_ok = v_ok[:, a]  # over south
        right_ok = h_ok[a, :]  # over east
        left_ok = h_ok[:, a]  # over west
        fillable |= (
            up_ok[:, None, None, None]
            & down_ok[None, :, None, None]
            & right_ok[None, None, :, None]
            & left_ok[None, None, None, :]
        )
    if fillable.all():
        return SsfResult(True, None)
    n, s, e, w = map(int, np.argwhere(~fillable)[0])
    return SsfResult(False, (n, s, e, w))


def find_safe_symbols(sft: NnSft) -> list[int]:
    """Symbols compatible with every boundary: members of no forbidden pair."""
    blocked = set()
    for a, b in sft.hforbid:
        blocked.add(a)
        blocked.add(b)
    for a, b in sft.vforbid:
        blocked.add(a)
        blocked.add(b)
    return [a for a in range(sft.q) if a not in blocked]


def local_implies_global(sft: NnSft) -> bool | Literal["unknown"]:
    """Under SSF, locally admissible configurations extend to full ones.

    Returns True when SSF holds; "unknown" otherwise (global
    admissibility search for non-SSF SFTs is out of scope).
    """
    return True if sft.ssf.ok else "unknown"


# ---------------------------------------------------------------------------
# Built-in SFTs and the line-oriented spec format


def hard_square() -> NnSft:
    """Binary shift with no two adjacent 1s."""
    return NnSft(2, frozenset({(1, 1)}), frozenset({(1, 1)}))


def checkerboard(k: int) -> NnSft:
    """k symbols, equal adjacent symbols forbidden in both directions."""
    if k < 2:
        raise ValueError("checkerboard needs k >= 2")
    eq = frozenset((a, a) for a in range(k))
    return NnSft(k, eq, eq)


def full_shift(q: int) -> NnSft:
    """No forbidden pairs."""
    return NnSft(q, frozenset(), frozenset())


class SftParseError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def parse_sft(text: str) -> NnSft:
    """Parse the spec format: 'alphabet q', then 'hforbid a b' / 'vforbid a b'.

    '#' starts a comment; unknown keywords are errors with line numbers.
    """
    q: int | None = None
    hf: set[Pair] = set()
    vf: set[Pair] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        if key == "alphabet":
            if q is not None:
                raise SftParseError(lineno, "duplicate alphabet line")
            if len(parts) != 2:
                raise SftParseError(lineno, "expected: alphabet <q>")
            try:
                q = int(parts[1])
            except ValueError:
                raise SftParseError(lineno, f"alphabet size must be an integer, got {parts[1]!r}")
            if q < 1:
                raise SftParseError(lineno, "alphabet size must be >= 1")
        elif key in ("hforbid", "vforbid"):
            if q is None:
                raise SftParseError(lineno, "alphabet line must come first")
            if len(parts) != 3:
                raise SftParseError(lineno, f"expected: {key} <a> <b>")
            try:
                a, b = int(parts[1]), int(parts[2])
            except ValueError:
                raise SftParseError(lineno, "forbidden pair symbols must be integers")
            if not (0 <= a < q and 0 <= b < q):
                raise SftParseError(lineno, f"symbol outside alphabet 0..{q - 1}")
            (hf if key == "hforbid" else vf).add((a, b))
        else:
            raise SftParseError(lineno, f"unknown keyword {key!r}")
    if q is None:
        raise SftParseError(1, "missing alphabet line")
    return NnSft(q, frozenset(hf), frozenset(vf))


def render_sft(sft: NnSft) -> str:
    lines = [f"alphabet {sft.q}"]
    lines.extend(f"hforbid {a} {b}" for a, b in sorted(sft.hforbid))
    lines.extend(f"vforbid {a} {b}" for a, b in sorted(sft.vforbid))
    return "\n".join(lines) + "\n"


def load_sft(spec: str) -> NnSft:
    """Resolve a built-in name (hardsquare, checkerboard:<k>, full:<q>) or
    read and parse a spec file."""
    if spec == "hardsquare":
        return hard_square()
    if spec.startswith("checkerboard:"):
        try:
            k = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad checkerboard spec {spec!r}; expected checkerboard:<k>")
        return checkerboard(k)
    if spec.startswith("full:"):
        try:
            q = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad full-shift spec {spec!r}; expected full:<q>")
        return full_shift(q)
    if not os.path.exists(spec):
        raise ValueError(f"no such SFT spec file or built-in name: {spec!r}")
    with open(spec, "r", encoding="utf-8") as f:
        return parse_sft(f.read())
