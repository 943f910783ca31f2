"""Dyadic rationals and dyadic interval decompositions.

Times live on dyadic grids: every time is ``num / 2**rho`` for integers
``num > 0``, ``rho >= 0``.  All interval arithmetic here is exact integer
arithmetic on numerators, so set covers and disjointness are checked without
any floating point slack.

A dyadic interval of level ``m`` inside the block ``[2**n, 2**(n+1))`` is

    [2**n + k * 2**-m, 2**n + (k+1) * 2**-m),   0 <= k < 2**(m+n),  m >= -n.

``decompose`` splits any half-open dyadic interval contained in one block
into finitely many such intervals, at most two per length: one maximal
interval in the middle, then successively halving pieces peeled off toward
both endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

__all__ = ["DyadicInterval", "as_dyadic", "block_exponent", "decompose"]

_MAX_RHO = 52


def as_dyadic(x: float, max_rho: int = _MAX_RHO) -> tuple[int, int]:
    """Return ``(num, rho)`` with ``x == num / 2**rho``, minimal ``rho``.

    Raises ``ValueError`` when ``x`` is not a positive dyadic rational
    representable at resolution ``2**-max_rho``.
    """
    frac = Fraction(x)
    if frac <= 0:
        raise ValueError(f"expected a positive dyadic rational, got {x!r}")
    den = frac.denominator
    rho = den.bit_length() - 1
    if den != 1 << rho or rho > max_rho:
        raise ValueError(f"{x!r} is not dyadic at resolution 2**-{max_rho}")
    return frac.numerator, rho


def block_exponent(x: float) -> int:
    """Exact ``n`` with ``2**n <= x < 2**(n+1)``."""
    num, rho = as_dyadic(x)
    return num.bit_length() - 1 - rho


@dataclass(frozen=True)
class DyadicInterval:
    """The interval ``[2**n + k * 2**-m, 2**n + (k+1) * 2**-m)``."""

    n: int
    m: int
    k: int

    def __post_init__(self):
        if self.m < -self.n:
            raise ValueError(f"level m={self.m} below block floor {-self.n}")
        if not 0 <= self.k < 1 << (self.m + self.n):
            raise ValueError(f"offset k={self.k} outside block n={self.n}")

    @property
    def lo(self) -> Fraction:
        return Fraction(2) ** self.n + Fraction(self.k, 1) * Fraction(2) ** -self.m

    @property
    def hi(self) -> Fraction:
        return Fraction(2) ** self.n + Fraction(self.k + 1, 1) * Fraction(2) ** -self.m

    @property
    def length(self) -> Fraction:
        return Fraction(2) ** -self.m

    def __repr__(self):
        return f"DyadicInterval([{float(self.lo):g}, {float(self.hi):g}))"


def _largest_pow2_leq(x: int) -> int:
    return 1 << (x.bit_length() - 1)


def _pow2_dividing(x: int) -> int:
    return x & -x


def decompose(s: float, t: float, n: int | None = None) -> list[DyadicInterval]:
    """Split ``[s, t)`` into disjoint dyadic intervals, at most two per length.

    ``s`` and ``t`` must be dyadic with ``2**n <= s < t <= 2**(n+1)``; when
    ``n`` is omitted it is inferred from ``s``.  Returns the intervals in
    increasing order; their union is exactly ``[s, t)``.
    """
    s_num, s_rho = as_dyadic(s)
    t_num, t_rho = as_dyadic(t)
    if n is None:
        n = block_exponent(s)
    rho = max(s_rho, t_rho, -n if n < 0 else 0)
    S = s_num << (rho - s_rho)
    T = t_num << (rho - t_rho)
    if n + rho < 0:
        raise ValueError("resolution too coarse for the requested block")
    b0 = 1 << (n + rho)
    b1 = b0 << 1
    if not (b0 <= S < T <= b1):
        raise ValueError(f"[{s}, {t}) not inside block [2**{n}, 2**{n + 1})")

    def interval(start: int, ell: int) -> DyadicInterval:
        m = rho - (ell.bit_length() - 1)
        return DyadicInterval(n=n, m=m, k=(start - b0) // ell)

    # maximal dyadic interval, ties toward the left endpoint
    ell = b0
    while ell >= 1:
        start = b0 + ell * (-((b0 - S) // ell))  # smallest aligned start >= S
        if start + ell <= T:
            break
        ell >>= 1
    else:  # pragma: no cover - unreachable: S < T on an integer grid
        raise AssertionError("no dyadic interval fits")
    middle = interval(start, ell)
    out = [middle]

    b = start
    while b > S:  # peel toward s, lengths halving
        off = b - b0
        step = min(_pow2_dividing(off), _largest_pow2_leq(b - S))
        out.append(interval(b - step, step))
        b -= step
    out.reverse()

    b = start + ell
    while b < T:  # peel toward t
        off = b - b0
        step = min(_pow2_dividing(off), _largest_pow2_leq(T - b))
        out.append(interval(b, step))
        b += step
    return out
