"""Penalty potential, range-1 perturbations, and windowed sums.

The penalty potential of a nearest-neighbor SFT is -1 at a site whose
rightward or upward pair is forbidden and 0 otherwise, so it vanishes
exactly on admissible configurations and its value at a site depends
only on the 3x3 patch there.

Perturbations are range-1: a sparse table of coefficients indexed by
3x3 patches (row-major, top row first), every coefficient bounded by a
cap. Such a function is Lipschitz for the dyadic metric and its norms
are computable exactly: two configurations achieving the variation sup
can agree everywhere outside the patch, so the seminorm is the maximum
of |c_p - c_p'| * 2**i(p, p') over patch pairs, where i(p, p') is 0
when the patterns differ at the center and 1 otherwise. Patterns absent
from the table form an implicit zero-coefficient class.

Norm convention: ||h||_Lip = sup|h| + Lip(h).

Analytic bound, used when the coefficient table is too large to
enumerate pairwise: configurations agreeing on the 3x3 patch have equal
h, so any pair with h(x) != h(y) differs inside the patch and has
d(x, y) >= 1/2; hence Lip(h) <= 2*cap / (1/2) = 4*cap and
||h||_Lip <= cap + 4*cap = 5*cap.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lattice import Rect, Site, Window, metric_exact
from .sft import NnSft, bad_site_mask

Pattern = tuple[int, ...]

# 3x3 patch offsets (dx, dy) in documented order: row-major, top row first
PATCH_OFFSETS: tuple[Site, ...] = (
    (-1, 1), (0, 1), (1, 1),
    (-1, 0), (0, 0), (1, 0),
    (-1, -1), (0, -1), (1, -1),
)
_CENTER = 4  # index of (0, 0) in PATCH_OFFSETS
_RIGHT = 5   # index of (1, 0)
_UP = 1      # index of (0, 1)

SEMINORM_ENUM_GUARD = 10_000


@dataclass(frozen=True)
class PenaltyPotential:
    """-1 on bad sites, 0 elsewhere; fully determined by the forbidden sets."""

    sft: NnSft

    def value(self, w: Window, u: Site) -> int:
        pat = w.pattern9(u)
        return _penalty_of_pattern(pat, self.sft)


def _penalty_of_pattern(pat: Pattern, sft: NnSft) -> int:
    if (pat[_CENTER], pat[_RIGHT]) in sft.hforbid:
        return -1
    if (pat[_CENTER], pat[_UP]) in sft.vforbid:
        return -1
    return 0


@dataclass(frozen=True)
class RangeOnePerturbation:
    """Sparse map from 3x3 patterns to coefficients, each bounded by cap."""

    coeffs: dict[Pattern, float]
    cap: float

    def __post_init__(self) -> None:
        if self.cap <= 0:
            raise ValueError("cap must be positive")
        for pat, c in self.coeffs.items():
            if len(pat) != 9 or any(s < 0 for s in pat):
                raise ValueError(f"bad pattern {pat!r}: need 9 nonnegative symbols")
            if abs(c) > self.cap:
                raise ValueError(f"coefficient {c} for {pat} exceeds cap {self.cap}")

    @property
    def support_size(self) -> int:
        return len(self.coeffs)

    def value(self, w: Window, u: Site) -> float:
        return self.coeffs.get(w.pattern9(u), 0.0)


def zero_perturbation(cap: float = 1.0) -> RangeOnePerturbation:
    return RangeOnePerturbation({}, cap)


@dataclass(frozen=True)
class LipschitzNorm:
    sup_norm: float
    seminorm: float

    def __post_init__(self) -> None:
        if self.sup_norm < 0 or self.seminorm < 0:
            raise ValueError("norm components must be >= 0")

    @property
    def total(self) -> float:
        return self.sup_norm + self.seminorm


def sup_norm_exact(h: RangeOnePerturbation) -> float:
    return max((abs(c) for c in h.coeffs.values()), default=0.0)


def lipschitz_seminorm_exact(h: RangeOnePerturbation, q: int) -> float:
    """Exact Lipschitz seminorm of a range-1 function over alphabet 0..q-1.

    Maximizes |c_p - c_p'| * 2**i(p, p') over pattern pairs, including
    the implicit zero-coefficient class of absent patterns. Guarded at
    SEMINORM_ENUM_GUARD stored patterns; use analytic_norm_bound beyond.
    """
    n = len(h.coeffs)
    if n > SEMINORM_ENUM_GUARD:
        raise ValueError(
            f"{n} patterns exceed the pairwise enumeration guard "
            f"({SEMINORM_ENUM_GUARD}); use analytic_norm_bound instead"
        )
    if n == 0:
        return 0.0
    pats = np.array(sorted(h.coeffs.keys()), dtype=np.int64)
    if int(pats.max()) >= q:
        raise ValueError("pattern symbol outside alphabet")
    cs = np.array([h.coeffs[tuple(int(s) for s in p)] for p in pats], dtype=float)
    best = 0.0
    chunk = 512
    for k in range(0, n, chunk):
        block = pats[k : k + chunk]
        diff_any = (block[:, None, :] != pats[None, :, :]).any(axis=2)
        center_diff = block[:, None, _CENTER] != pats[None, :, _CENTER]
        factor = np.where(center_diff, 1.0, 2.0)
        vals = np.abs(cs[k : k + chunk, None] - cs[None, :]) * factor
        vals[~diff_any] = 0.0
        if vals.size:
            best = max(best, float(vals.max()))
    total_patterns = q**9
    if n < total_patterns:
        per_center = q**8
        stored_per_center = Counter(int(p[_CENTER]) for p in pats)
        for idx in range(n):
            cp = abs(float(cs[idx]))
            if cp == 0.0:
                continue
            center = int(pats[idx, _CENTER])
            if per_center - stored_per_center[center] > 0:
                # an absent pattern differing from this one only off-center
                best = max(best, 2.0 * cp)
            elif (total_patterns - per_center) - (n - stored_per_center[center]) > 0:
                best = max(best, cp)
    return best


def lipschitz_norm_exact(h: RangeOnePerturbation, q: int) -> LipschitzNorm:
    return LipschitzNorm(sup_norm_exact(h), lipschitz_seminorm_exact(h, q))


def analytic_norm_bound(h: RangeOnePerturbation) -> float:
    """cap + 4*cap; see the module docstring for the derivation."""
    return 5.0 * h.cap


@dataclass
class PerturbedPotential:
    """Penalty potential plus a range-1 perturbation, with a certified
    upper bound on the Lipschitz norm of the difference."""

    penalty: PenaltyPotential
    h: RangeOnePerturbation
    certified_norm_gap: float | None = None

    @classmethod
    def build(cls, sft: NnSft, h: RangeOnePerturbation) -> "PerturbedPotential":
        g = cls(PenaltyPotential(sft), h)
        certify_norm_gap(g)
        return g

    @property
    def sft(self) -> NnSft:
        return self.penalty.sft

    @property
    def gap(self) -> float:
        if self.certified_norm_gap is None:
            raise ValueError("potential has not been certified; call certify_norm_gap")
        return self.certified_norm_gap

    def value(self, w: Window, u: Site) -> float:
        pat = w.pattern9(u)
        return _penalty_of_pattern(pat, self.sft) + self.h.coeffs.get(pat, 0.0)

    @cached_property
    def _code_lookup(self) -> tuple[np.ndarray, np.ndarray]:
        q = self.sft.q
        items = sorted(
            (_encode_pattern(p, q), c) for p, c in self.h.coeffs.items()
        )
        codes = np.array([k for k, _ in items], dtype=np.int64)
        vals = np.array([v for _, v in items], dtype=float)
        return codes, vals


def certify_norm_gap(g: PerturbedPotential) -> float:
    """Upper-bound ||g - f||_Lip: exact sup + seminorm when the support
    is enumerable, the 5*cap analytic bound otherwise. Stored on g."""
    if g.h.support_size <= SEMINORM_ENUM_GUARD:
        gap = lipschitz_norm_exact(g.h, g.sft.q).total
    else:
        gap = analytic_norm_bound(g.h)
    g.certified_norm_gap = gap
    return gap


def eval_potential(g: PerturbedPotential, w: Window, u: Site) -> float:
    """g at site u; the 3x3 patch around u must be stored."""
    return g.value(w, u)


def _encode_pattern(pat: Pattern, q: int) -> int:
    if any(not (0 <= s < q) for s in pat):
        raise ValueError(f"pattern {pat!r} has symbols outside alphabet 0..{q - 1}")
    code = 0
    for k in range(8, -1, -1):
        code = code * q + pat[k]
    return code


def _decode_pattern(code: int, q: int) -> Pattern:
    out = []
    for _ in range(9):
        out.append(code % q)
        code //= q
    return tuple(out)


def birkhoff_sum(g: PerturbedPotential, w: Window, region: Rect) -> float:
    """Sum of g over every site of the region.

    The region inflated by one must fit in the window domain, so every
    summand has its full 3x3 patch stored.
    """
    if not w.rect.contains_rect(region.inflate(1)):
        raise ValueError("insufficient margin")
    sft = g.sft
    r_top = w.rect.y1 - region.y1
    r_bot = w.rect.y1 - region.y0
    c_left = region.x0 - w.rect.x0
    c_right = region.x1 - w.rect.x0
    mask, _ = bad_site_mask(w, sft)
    total = -float(mask[r_top : r_bot + 1, c_left : c_right + 1].sum())
    if g.h.support_size:
        q = sft.q
        sub = w.array[r_top - 1 : r_bot + 2, c_left - 1 : c_right + 2]
        hgt, wid = region.height, region.width
        code = np.zeros((hgt, wid), dtype=np.int64)
        weight = 1
        for k in range(9):
            dr, dc = k // 3, k % 3  # row-major over the patch, top row first
            code += sub[dr : dr + hgt, dc : dc + wid] * weight
            weight *= q
        codes, vals = g._code_lookup
        flat = code.ravel()
        idx = np.minimum(np.searchsorted(codes, flat), len(codes) - 1)
        hit = codes[idx] == flat
        total += float(np.where(hit, vals[idx], 0.0).sum())
    return total


def sample_perturbation(
    cap: float,
    support_size: int,
    q: int,
    seed: int | np.random.Generator,
) -> RangeOnePerturbation:
    """Draw support_size distinct 3x3 patterns uniformly with coefficients
    uniform in [-cap, cap]. Deterministic given the seed."""
    if cap <= 0:
        raise ValueError("cap must be positive")
    if q < 1:
        raise ValueError("alphabet size must be >= 1")
    if q**9 >= 2**62:
        raise ValueError("alphabet too large to index 3x3 patterns")
    total = q**9
    if support_size > total:
        raise ValueError(f"support_size {support_size} exceeds the {total} distinct patterns")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    seen: set[int] = set()
    codes: list[int] = []
    while len(codes) < support_size:
        v = int(rng.integers(0, total))
        if v not in seen:
            seen.add(v)
            codes.append(v)
    values = rng.uniform(-cap, cap, size=support_size)
    coeffs = {_decode_pattern(k, q): float(v) for k, v in zip(codes, values)}
    return RangeOnePerturbation(coeffs, cap)


@dataclass(frozen=True)
class LevelSetCheckResult:
    ok: bool
    checked: int
    skipped: int  # pairs agreeing on the whole domain: no exact distance
    worst_slack: float  # min over checked pairs of gap*d - |g(x) - g(y)|

    def __bool__(self) -> bool:
        return self.ok


def check_levelset_lipschitz(
    g: PerturbedPotential,
    pairs: list[tuple[Window, Window]],
    level: int,
) -> LevelSetCheckResult:
    """Verify |g(x) - g(y)| <= gap * d(x, y) at the origin for window
    pairs whose penalty value at the origin is the given level.

    Pairs agreeing on their whole domain are skipped (their distance
    has only an upper bound, under which the inequality is trivial).
    """
    if level not in (0, -1):
        raise ValueError("level must be 0 or -1")
    gap = g.gap
    ok = True
    checked = 0
    skipped = 0
    worst = float("inf")
    f = g.penalty
    for wx, wy in pairs:
        if f.value(wx, (0, 0)) != level or f.value(wy, (0, 0)) != level:
            raise ValueError("window pair is not on the required penalty level set")
        m = metric_exact(wx, wy)
        if m.is_agreement:
            skipped += 1
            continue
        d = float(m.value)
        lhs = abs(g.value(wx, (0, 0)) - g.value(wy, (0, 0)))
        slack = gap * d - lhs
        worst = min(worst, slack)
        if slack < 0:
            ok = False
        checked += 1
    if checked == 0:
        worst = 0.0
    return LevelSetCheckResult(ok, checked, skipped, worst)


# ---------------------------------------------------------------------------
# Perturbation file format


def render_perturbation(h: RangeOnePerturbation) -> str:
    lines = [f"cap {h.cap!r}"]
    for pat in sorted(h.coeffs):
        syms = " ".join(str(s) for s in pat)
        lines.append(f"pattern {syms} {h.coeffs[pat]!r}")
    return "\n".join(lines) + "\n"


def parse_perturbation(text: str) -> RangeOnePerturbation:
    cap: float | None = None
    coeffs: dict[Pattern, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "cap":
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected: cap <float>")
            cap = float(parts[1])
        elif parts[0] == "pattern":
            if cap is None:
                raise ValueError(f"line {lineno}: cap line must come first")
            if len(parts) != 11:
                raise ValueError(f"line {lineno}: expected: pattern <9 symbols> <coefficient>")
            pat = tuple(int(t) for t in parts[1:10])
            coeffs[pat] = float(parts[10])
        else:
            raise ValueError(f"line {lineno}: unknown keyword {parts[0]!r}")
    if cap is None:
        raise ValueError("missing cap line")
    return RangeOnePerturbation(coeffs, cap)
