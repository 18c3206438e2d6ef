"""Shell-by-shell repair of corrupted windows over an SSF SFT.

Bad sites of the input window are grouped by Chebyshev shell. Within
shell i they split into four sides: top (y = i), bottom (y = -i), right
(x = i, |y| < i) and left (x = -i, |y| < i); the four corner sites
belong to the top or bottom side. Each side decomposes into maximal
contiguous runs of bad sites.

A run is rewritten by a sweep from its alpha end to its beta end
(left to right for horizontal runs, bottom to top for vertical ones).
At each site the sweep picks a symbol compatible with all four current
neighbors; single-site fillability guarantees one exists. The site just
swept is a neighbor of the next, so every adjacent pair touching the
run is validated by the later of its two endpoints and the patched
window has no violation involving any run site.

Shells are processed outward, sides in top, bottom, right, left order,
runs in their side order, each fill seeing the partially repaired
window. The shells themselves are always computed from the window the
repair started from, not recomputed between shells; completed radii
stay clean because fills never create new forbidden pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Rect, Site, SparsePatch, Window
from .sft import NnSft, bad_site_mask

SIDES = ("top", "bottom", "right", "left")


def _require_ssf(sft: NnSft) -> None:
    res = sft.ssf
    if not res.ok:
        raise ValueError(
            f"SFT is not single-site fillable (blocking boundary {res.witness}); repair requires SSF"
        )


@dataclass(frozen=True)
class Run:
    """A maximal contiguous segment of bad sites on one side of a shell.

    Sites are [alpha, beta] x {i} (top), [alpha, beta] x {-i} (bottom),
    {i} x [alpha, beta] (right) or {-i} x [alpha, beta] (left).
    """

    side: str
    i: int
    alpha: int
    beta: int

    def __post_init__(self) -> None:
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        if self.i < 0:
            raise ValueError("shell radius must be >= 0")
        if self.alpha > self.beta:
            raise ValueError("alpha must be <= beta")
        # horizontal segments may span any interval (segment filling is
        # not restricted to shells); vertical runs exclude corner rows
        if self.side in ("right", "left"):
            if self.alpha < -self.i + 1 or self.beta > self.i - 1:
                raise ValueError("vertical run must avoid the corner rows")

    def __len__(self) -> int:
        return self.beta - self.alpha + 1

    def sites(self) -> list[Site]:
        """Run sites in sweep order (alpha end first)."""
        span = range(self.alpha, self.beta + 1)
        if self.side == "top":
            return [(x, self.i) for x in span]
        if self.side == "bottom":
            return [(x, -self.i) for x in span]
        if self.side == "right":
            return [(self.i, y) for y in span]
        return [(-self.i, y) for y in span]


@dataclass(frozen=True)
class ShellDecomposition:
    """Bad sites of one shell, split into per-side maximal runs.

    Top/bottom runs are indexed left to right, right/left runs bottom
    to top. iter_runs() yields them in processing order.
    """

    i: int
    runs: dict[str, tuple[Run, ...]] = field(default_factory=dict)

    @property
    def total_bad(self) -> int:
        return sum(len(r) for side in SIDES for r in self.runs.get(side, ()))

    def iter_runs(self):
        for side in SIDES:
            yield from self.runs.get(side, ())

    def sites(self) -> set[Site]:
        return {s for run in self.iter_runs() for s in run.sites()}

    @property
    def is_empty(self) -> bool:
        return all(not self.runs.get(side) for side in SIDES)


def _runs_from_coords(side: str, i: int, coords: list[int]) -> tuple[Run, ...]:
    """Group sorted coordinates into maximal consecutive intervals."""
    runs: list[Run] = []
    k = 0
    while k < len(coords):
        j = k
        while j + 1 < len(coords) and coords[j + 1] == coords[j] + 1:
            j += 1
        runs.append(Run(side, i, coords[k], coords[j]))
        k = j + 1
    return tuple(runs)


def _decompose_from_mask(rect: Rect, mask: np.ndarray, i: int) -> ShellDecomposition:
    def bad(x: int, y: int) -> bool:
        return bool(mask[rect.y1 - y, x - rect.x0])

    if i == 0:
        runs = {"top": (Run("top", 0, 0, 0),)} if bad(0, 0) else {}
        return ShellDecomposition(0, runs)
    runs: dict[str, tuple[Run, ...]] = {}
    top = [x for x in range(-i, i + 1) if bad(x, i)]
    if top:
        runs["top"] = _runs_from_coords("top", i, top)
    bottom = [x for x in range(-i, i + 1) if bad(x, -i)]
    if bottom:
        runs["bottom"] = _runs_from_coords("bottom", i, bottom)
    right = [y for y in range(-i + 1, i) if bad(i, y)]
    if right:
        runs["right"] = _runs_from_coords("right", i, right)
    left = [y for y in range(-i + 1, i) if bad(-i, y)]
    if left:
        runs["left"] = _runs_from_coords("left", i, left)
    return ShellDecomposition(i, runs)


def decompose_shell(w: Window, sft: NnSft, i: int) -> ShellDecomposition:
    """Bad sites of w at Chebyshev norm i, as per-side maximal runs.

    The window must contain the box of radius i+1 (badness at the shell
    looks one step right and up).
    """
    if not w.rect.contains_rect(Rect.centered(i + 1)):
        raise ValueError("insufficient margin")
    mask, _ = bad_site_mask(w, sft)
    return _decompose_from_mask(w.rect, mask, i)


def _fill_run(
    arr: np.ndarray,
    rect: Rect,
    sft: NnSft,
    sites: list[Site],
    rule: str,
    rng: np.random.Generator | None,
) -> SparsePatch:
    """Sweep the sites in order, writing a compatible symbol at each.

    Mutates arr in place and returns the patch. Callers guarantee every
    site and its four neighbors are inside rect.
    """
    if rule not in ("smallest", "random"):
        raise ValueError(f"unknown fill rule {rule!r}; expected 'smallest' or 'random'")
    if rule == "random" and rng is None:
        raise ValueError("fill rule 'random' needs a random generator")
    q = sft.q
    h = sft.h_table
    v = sft.v_table
    x0, y1 = rect.x0, rect.y1
    patch: SparsePatch = {}
    for x, y in sites:
        r, c = y1 - y, x - x0
        left = arr[r, c - 1]
        right = arr[r, c + 1]
        down = arr[r + 1, c]
        up = arr[r - 1, c]
        choices = [
            a
            for a in range(q)
            if not (h[left, a] or h[a, right] or v[down, a] or v[a, up])
        ]
        if not choices:
            raise RuntimeError(
                f"SSF contract violated: no symbol fits at {(x, y)} "
                f"against neighbors (left={left}, right={right}, down={down}, up={up})"
            )
        a = choices[0] if rule == "smallest" else choices[int(rng.integers(len(choices)))]
        arr[r, c] = a
        patch[(x, y)] = a
    return patch


def fill_segment(
    w: Window,
    sft: NnSft,
    run: Run,
    rule: str = "smallest",
    rng: np.random.Generator | None = None,
) -> SparsePatch:
    """Replacement symbols for the run's sites such that the patched
    window has no violation involving any run site."""
    _require_ssf(sft)
    sites = run.sites()
    for s in sites:
        x, y = s
        for t in ((x, y), (x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if not w.rect.contains(t):
                raise ValueError("run and its boundary must lie inside the window domain")
    arr = w.array.copy()
    return _fill_run(arr, w.rect, sft, sites, rule, rng)


def repair_shell(
    w: Window,
    sft: NnSft,
    i: int,
    rule: str = "smallest",
    rng: np.random.Generator | None = None,
    decomposition: ShellDecomposition | None = None,
) -> Window:
    """Refill every bad run of shell i; the result equals w off the shell."""
    _require_ssf(sft)
    dec = decomposition if decomposition is not None else decompose_shell(w, sft, i)
    if not w.rect.contains_rect(Rect.centered(i + 1)):
        raise ValueError("insufficient margin")
    arr = w.array.copy()
    for run in dec.iter_runs():
        _fill_run(arr, w.rect, sft, run.sites(), rule, rng)
    return Window(w.rect, arr, _copy=False)


@dataclass
class RepairResult:
    """Outcome of a full repair pass.

    window is the repaired window; shells[i] is the decomposition of
    shell i computed from the input window; intermediates, when
    captured, holds the input window followed by the window after each
    shell (length len(shells) + 1).
    """

    window: Window
    shells: list[ShellDecomposition]
    intermediates: list[Window]

    @property
    def total_bad(self) -> int:
        return sum(d.total_bad for d in self.shells)


def repair(
    w: Window,
    sft: NnSft,
    n: int,
    rule: str = "smallest",
    rng: np.random.Generator | None = None,
    keep_intermediates: bool = False,
) -> RepairResult:
    """Repair shells 0..n of w in order.

    The window must contain the box of radius n+1. The output agrees
    with w outside the union of the shell bad-site sets and has no
    violation with both endpoints inside the box of radius n.
    """
    _require_ssf(sft)
    if not w.rect.contains_rect(Rect.centered(n + 1)):
        raise ValueError("insufficient margin")
    mask, _ = bad_site_mask(w, sft)
    shells = [_decompose_from_mask(w.rect, mask, i) for i in range(n + 1)]
    arr = w.array.copy()
    intermediates: list[Window] = []
    if keep_intermediates:
        intermediates.append(w)
    for dec in shells:
        for run in dec.iter_runs():
            _fill_run(arr, w.rect, sft, run.sites(), rule, rng)
        if keep_intermediates:
            intermediates.append(Window(w.rect, arr.copy(), _copy=False))
    return RepairResult(Window(w.rect, arr, _copy=False), shells, intermediates)


def changed_sites(before: Window, after: Window) -> set[Site]:
    """Sites where two same-domain windows differ."""
    if before.rect != after.rect:
        raise ValueError("mismatched domains")
    out: set[Site] = set()
    for r, c in np.argwhere(before.array != after.array):
        out.add((before.rect.x0 + int(c), before.rect.y1 - int(r)))
    return out
