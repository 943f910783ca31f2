"""Fourier multipliers of averaging operators and their quantitative bounds.

A Symbol wraps the multiplier m(xi) of the normalized indicator of a
volume-one symmetric convex body: closed forms for the cube (product of
sine cardinals) and the Euclidean ball (radial Bessel expression), Monte
Carlo for membership oracles.  Alongside the evaluators live the scalar
estimates the certification sweeps need: the Poisson symbol and its gap
decay, the dyadic min-sum bound, the three dimension-free multiplier
ratios, and the block difference sums along rays.

Symbols are immutable; every evaluator is pure and vectorized over a batch
of frequency rows, so sweeps are deterministic regardless of chunking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from scipy.special import beta as _beta
from scipy.special import jv as _jv

from dimvar import bodies
from dimvar.rng import stream

__all__ = [
    "Symbol",
    "Profile",
    "cube_symbol",
    "ball2_symbol",
    "ballq_symbol_mc",
    "poisson_symbol",
    "k_symbol",
    "dyadic_min_sum",
    "poisson_gap_decay",
    "multiplier_bound_ratios",
    "multiplier_block_diff_sum",
    "FracOrder",
    "frac_deriv_symbol",
    "p_alpha_symbol",
    "reproducing_identity_check",
    "frac_deriv_grid",
    "vr_frac_bound_check",
]

_PROVENANCES = ("closed_form", "derived", "monte_carlo")


@dataclass(frozen=True)
class Profile:
    """Density of the projection of a body onto a line through the origin.

    ``density`` maps an array of scalar offsets y to the density of
    <theta, X> for X uniform in the body; it vanishes outside
    [-halfwidth, halfwidth].  ``kinks`` lists the interior points where the
    density loses smoothness, so quadratures can split panels there.
    """

    density: object
    halfwidth: float
    kinks: tuple = ()
    label: str = ""


@dataclass(frozen=True)
class Symbol:
    """Multiplier of a volume-one symmetric body, plus closed-form extras.

    ``evaluate`` maps a batch of frequency rows (n, d) to real values.
    ``gradient``/``radial``/``radial_deriv`` are optional closed forms;
    ``profile`` maps a frequency direction to a Profile (or None when no
    closed-form projection density exists for that direction).
    """

    evaluate: object
    d: int
    L: float
    provenance: str
    label: str
    gradient: object = None
    radial: object = None
    radial_deriv: object = None
    profile: object = None

    def __post_init__(self):
        if self.provenance not in _PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    def __call__(self, xi):
        batch, squeeze = _as_batch(xi, self.d)
        out = self.evaluate(batch)
        return out[0] if squeeze else out


def _as_batch(xi, d: int):
    """Coerce xi to shape (n, d); return (batch, was_single_row)."""
    arr = np.asarray(xi, dtype=np.float64)
    if arr.ndim == 1:
        if arr.shape[0] != d:
            raise ValueError(f"frequency has {arr.shape[0]} components, expected {d}")
        return arr[None, :], True
    if arr.ndim == 2 and arr.shape[1] == d:
        return arr, False
    raise ValueError(f"frequency batch must have shape (n, {d})")


# -- cube --------------------------------------------------------------------

def _sinc_deriv(x: np.ndarray) -> np.ndarray:
    """Derivative of sin(pi x)/(pi x), stable through x = 0."""
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    xs = x[small]
    out[small] = -(math.pi ** 2 / 3.0) * xs + (math.pi ** 4 / 30.0) * xs ** 3
    xl = x[~small]
    out[~small] = (np.cos(math.pi * xl) - np.sinc(xl)) / xl
    return out


def _cube_profile(d: int, xi) -> Profile | None:
    theta = np.asarray(xi, dtype=np.float64)
    norm = np.linalg.norm(theta)
    if norm == 0.0:
        return None
    theta = theta / norm
    mags = np.abs(theta)
    active = mags > 1e-12
    k = int(active.sum())
    if k == 0 or np.ptp(mags[active]) > 1e-9:
        return None  # only equal-weight subset diagonals have a spline form
    if k == 1:
        density = lambda y: np.where(np.abs(np.asarray(y)) <= 0.5, 1.0, 0.0)
        return Profile(density=density, halfwidth=0.5, label="cube-axis")
    # sum of k uniforms, rescaled by 1/sqrt(k): a cardinal B-spline
    spline = BSpline.basis_element(np.arange(k + 1.0), extrapolate=False)
    root = math.sqrt(k)

    def density(y, spline=spline, root=root, k=k):
        vals = spline(root * np.asarray(y, dtype=np.float64) + k / 2.0)
        return root * np.nan_to_num(vals, nan=0.0)

    kinks = tuple((m - k / 2.0) / root for m in range(1, k))
    return Profile(density=density, halfwidth=root / 2.0, kinks=kinks,
                   label=f"cube-diag-{k}")


def cube_symbol(d: int) -> Symbol:
    """Multiplier of the volume-one cube: a product of sine cardinals."""
    iso = bodies.isotropic_normalize(bodies.ball_q(math.inf, d))

    def evaluate(batch):
        return np.prod(np.sinc(batch), axis=1)

    def gradient(batch):
        # leave-one-out products; no division, factors may vanish at zeros
        factors = np.sinc(batch)
        grads = _sinc_deriv(batch)
        out = np.empty_like(batch)
        for i in range(batch.shape[1]):
            others = np.prod(np.delete(factors, i, axis=1), axis=1)
            out[:, i] = grads[:, i] * others
        return out

    return Symbol(evaluate=evaluate, d=d, L=iso.L, provenance="closed_form",
                  label=f"cube-d{d}", gradient=gradient,
                  profile=lambda xi: _cube_profile(d, xi))


# -- Euclidean ball ----------------------------------------------------------

def _ball_radius(d: int) -> float:
    """Radius of the volume-one Euclidean ball."""
    log_vd = (d / 2.0) * math.log(math.pi) - math.lgamma(d / 2.0 + 1.0)
    return math.exp(-log_vd / d)


def _bessel_ratio(nu: float, sigma: np.ndarray) -> np.ndarray:
    """sigma^{-nu} J_nu(2 pi sigma), even and finite through sigma = 0."""
    sigma = np.abs(np.asarray(sigma, dtype=np.float64))
    out = np.empty_like(sigma)
    small = sigma < 1e-3
    ss = sigma[small]
    z = (math.pi * ss) ** 2
    lead = math.pi ** nu / math.gamma(nu + 1.0)
    out[small] = lead * (1.0 - z / (nu + 1.0) + z ** 2 / (2.0 * (nu + 1.0) * (nu + 2.0)))
    sl = sigma[~small]
    out[~small] = _jv(nu, 2.0 * math.pi * sl) / sl ** nu
    return out


def ball2_symbol(d: int) -> Symbol:
    """Multiplier of the volume-one Euclidean ball, radial in |xi|."""
    radius = _ball_radius(d)
    nu = d / 2.0
    vol_unit = math.pi ** nu / math.gamma(nu + 1.0)
    iso = bodies.isotropic_normalize(bodies.ball_q(2.0, d))

    def radial(rho):
        rho = np.asarray(rho, dtype=np.float64)
        return _bessel_ratio(nu, radius * rho) / vol_unit

    def radial_deriv(rho):
        # d/ds [s^-nu J_nu(2 pi s)] = -2 pi s^-nu J_{nu+1}(2 pi s), s = R rho
        rho = np.asarray(rho, dtype=np.float64)
        sigma = radius * rho
        return -2.0 * math.pi * radius * sigma * _bessel_ratio(nu + 1.0, sigma) / vol_unit

    def evaluate(batch):
        return radial(np.linalg.norm(batch, axis=1))

    def gradient(batch):
        rho = np.linalg.norm(batch, axis=1)
        safe = np.where(rho > 0.0, rho, 1.0)
        return (radial_deriv(rho) / safe)[:, None] * batch

    def profile(xi, d=d, radius=radius):
        if np.linalg.norm(xi) == 0.0:
            return None
        norm_const = radius * _beta(0.5, (d + 1.0) / 2.0)

        def density(y):
            s = np.clip(np.asarray(y, dtype=np.float64) / radius, -1.0, 1.0)
            inside = np.abs(np.asarray(y)) <= radius
            return np.where(inside, (1.0 - s ** 2) ** ((d - 1.0) / 2.0), 0.0) / norm_const

        return Profile(density=density, halfwidth=radius, label=f"ball-d{d}")

    return Symbol(evaluate=evaluate, d=d, L=iso.L, provenance="closed_form",
                  label=f"ball-d{d}", gradient=gradient, radial=radial,
                  radial_deriv=radial_deriv, profile=profile)


# -- Monte Carlo symbols for membership oracles ------------------------------

def ballq_symbol_mc(body: bodies.BodySpec, xi, samples: int = 1 << 16,
                    seed: int = 0, label=()):
    """Monte Carlo multiplier estimate for a volume-one body.

    Averages e^{-2 pi i <xi, x>} over uniform draws.  Returns
    (value, stderr) with both components complex: real and imaginary
    standard errors ride in the real and imaginary parts of ``stderr``.
    """
    batch, squeeze = _as_batch(xi, body.d)
    rng = stream(seed, "mc-symbol", body.key, *map(str, label))
    try:
        points = bodies.sample_body(body, samples, rng)
    except RuntimeError as exc:
        raise RuntimeError(
            "sampler acceptance too low for a Monte Carlo symbol; "
            "use a closed-form evaluator for this body") from exc
    phase = np.exp(-2j * math.pi * (batch @ points.T))
    value = phase.mean(axis=1)
    se_re = phase.real.std(axis=1, ddof=1) / math.sqrt(samples)
    se_im = phase.imag.std(axis=1, ddof=1) / math.sqrt(samples)
    stderr = se_re + 1j * se_im
    if squeeze:
        return value[0], stderr[0]
    return value, stderr


# -- Poisson symbol and scalar bounds ----------------------------------------

def poisson_symbol(t, rho):
    """e^{-2 pi t rho} for rho = |xi| >= 0; t > 0."""
    t = np.asarray(t, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(t <= 0.0):
        raise ValueError("Poisson time must be positive")
    if np.any(rho < 0.0):
        raise ValueError("rho is a frequency magnitude, must be >= 0")
    return np.exp(-2.0 * math.pi * t * rho)


def k_symbol(symbol: Symbol, xi):
    """m(xi) - p_L(|xi|): the multiplier of the averaged-minus-Poisson gap."""
    batch, squeeze = _as_batch(xi, symbol.d)
    rho = np.linalg.norm(batch, axis=1)
    out = symbol.evaluate(batch) - poisson_symbol(symbol.L, rho)
    return out[0] if squeeze else out


def dyadic_min_sum(a):
    """sum over integer n of min(2^n a, 1/(2^n a)); scale-periodic, at most 3.

    Terms below 1e-18 are dropped, so 63 dyadic steps either side of the
    balance point suffice.
    """
    a = np.asarray(a, dtype=np.float64)
    if np.any(a <= 0.0):
        raise ValueError("min-sum needs a > 0")
    scalar = a.ndim == 0
    a = np.atleast_1d(a)
    balance = np.floor(np.log2(a))
    x0 = a * 2.0 ** (-balance)  # in [1, 2)
    ks = np.arange(-62, 63, dtype=np.float64)
    x = x0[:, None] * 2.0 ** ks[None, :]
    total = np.minimum(x, 1.0 / x).sum(axis=1)
    return float(total[0]) if scalar else total


def poisson_gap_decay(n: int, j: int, L: float, xi) -> float:
    """Weighted Poisson increment across one dyadic gap.

    min(2^n L|xi|, 1/(2^n L|xi|)) * |p(2^{n+j} L|xi|) - p(2^{n+j-1} L|xi|)|
    with p(s) = e^{-2 pi s}; decays like 2^{-|j|} uniformly in n and xi.
    """
    arr = np.asarray(xi, dtype=np.float64)
    rho = float(np.linalg.norm(arr)) if arr.ndim >= 1 else abs(float(arr))
    x = (2.0 ** n) * L * rho
    if x == 0.0:
        return 0.0
    weight = min(x, 1.0 / x)
    hi = math.exp(-2.0 * math.pi * (2.0 ** j) * x)
    lo = math.exp(-2.0 * math.pi * (2.0 ** (j - 1)) * x)
    return weight * abs(hi - lo)


# -- multiplier ratio certification ------------------------------------------

def symbol_gradient(symbol: Symbol, batch: np.ndarray) -> np.ndarray:
    """Gradient rows for a batch; closed form when available, else central
    differences with step 1e-5 * max(1, |xi|)."""
    if symbol.gradient is not None:
        return symbol.gradient(batch)
    rho = np.linalg.norm(batch, axis=1)
    h = 1e-5 * np.maximum(1.0, rho)
    n, d = batch.shape
    shifts = np.zeros((2 * d, n, d))
    for i in range(d):
        shifts[2 * i, :, :] = batch
        shifts[2 * i, :, i] += h
        shifts[2 * i + 1, :, :] = batch
        shifts[2 * i + 1, :, i] -= h
    vals = symbol.evaluate(shifts.reshape(2 * d * n, d)).reshape(2 * d, n)
    out = np.empty((n, d))
    for i in range(d):
        out[:, i] = (vals[2 * i] - vals[2 * i + 1]) / (2.0 * h)
    return out


def multiplier_bound_ratios(symbol: Symbol, xi):
    """The three dimension-free ratios (|m| L|xi|, |m-1|/(L|xi|), |<xi, grad m>|).

    At xi = 0 the first two are undefined and come back as None; the third
    is exactly 0.  Input may be a single frequency or a batch; batches
    return three arrays with NaN marking the undefined entries.
    """
    batch, squeeze = _as_batch(xi, symbol.d)
    rho = np.linalg.norm(batch, axis=1)
    vals = symbol.evaluate(batch)
    if symbol.radial_deriv is not None:
        r3 = np.abs(rho * symbol.radial_deriv(rho))
    else:
        grad = symbol_gradient(symbol, batch)
        r3 = np.abs(np.einsum("ij,ij->i", batch, grad))
    scale = symbol.L * rho
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.abs(vals) * scale
        r2 = np.abs(vals - 1.0) / scale
    zero = rho == 0.0
    r1[zero] = np.nan
    r2[zero] = np.nan
    r3[zero] = 0.0
    if squeeze:
        return (None if zero[0] else float(r1[0]),
                None if zero[0] else float(r2[0]),
                float(r3[0]))
    return r1, r2, r3


def multiplier_block_diff_sum(symbol: Symbol, n: int, l: int, xi,
                              eps: float = 0.0) -> float:
    """Sum of |m(t_{k+1} xi) - m(t_k xi)|^{2-eps} over one dyadic block.

    The block grid is t_k = 2^n + 2^{n-l} k for k = 0 .. 2^l, so the sum
    has 2^l terms and decays like 2^{-(1-eps) l} for smooth decaying m.
    """
    if l < 0:
        raise ValueError("block refinement level must be >= 0")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    direction = np.asarray(xi, dtype=np.float64)
    if direction.shape != (symbol.d,):
        raise ValueError(f"expected a single frequency of shape ({symbol.d},)")
    ts = 2.0 ** n + 2.0 ** (n - l) * np.arange(2 ** l + 1, dtype=np.float64)
    vals = symbol.evaluate(ts[:, None] * direction[None, :])
    return float(np.sum(np.abs(np.diff(vals)) ** (2.0 - eps)))


# The fractional dilation calculus lives in its own file for readability but
# is part of this namespace: every operator there acts on a Symbol or on a
# sampled ray of one.
from dimvar._fractional import (  # noqa: E402
    FracOrder,
    frac_deriv_symbol,
    p_alpha_symbol,
    reproducing_identity_check,
    frac_deriv_grid,
    vr_frac_bound_check,
)
