"""Variation fields: pointwise V_r of averaging families on grids.

Each operator here samples the family t -> M_t f along a dyadic time grid,
then runs the variation dynamic program of the scalar layer independently
at every grid point.  The (time samples x grid points) matrix is the only
sizable allocation; when it would exceed the cap the evaluation proceeds
in point chunks, trading repeated inverse transforms for bounded memory.
"""

from __future__ import annotations

import numpy as np

from dimvar.grids import (GridField, TimeGrid, field_norm, frequency_batch,
                          frequency_magnitudes)
from dimvar.operators import _apply_values, _symbol_and_factor
from dimvar.symbols import frac_deriv_symbol
from dimvar.variation import vr_batch

__all__ = [
    "pointwise_variation_field",
    "short_variation_square_function",
    "lacunary_variation",
    "dilation_cutoff",
    "fractional_variation_ratio",
]

_CHUNK_LIMIT = 1 << 24  # entries of the (times x points) value matrix


def _family_values(field: GridField, body):
    """Closure t -> flattened M_t f values, sharing one forward transform."""
    sym, factor = _symbol_and_factor(body)
    if sym.d != field.d:
        raise ValueError("body dimension does not match the field")
    spec = np.fft.fftn(field.data)
    shape = field.data.shape
    if sym.radial is not None:
        mags = frequency_magnitudes(field)
        evaluate = lambda s: np.asarray(sym.radial(s * mags))
    else:
        batch = frequency_batch(field)
        evaluate = lambda s: np.asarray(sym.evaluate(s * batch)).reshape(shape)
    real = field.is_real()

    def at(t: float) -> np.ndarray:
        vals = evaluate(factor * float(t)).copy()
        vals.flat[0] = 1.0
        layer = np.fft.ifftn(spec * vals).ravel()
        return layer.real if real else layer

    return at, real


def _per_point(field: GridField, body, timegrid: TimeGrid, reducer
               ) -> np.ndarray:
    """reducer maps a (times x points) block to one value per point."""
    ts = timegrid.samples()
    at, real = _family_values(field, body)
    npts = field.npoints
    per = max(1, _CHUNK_LIMIT // len(ts))
    out = np.empty(npts)
    dtype = np.float64 if real else np.complex128
    for start in range(0, npts, per):
        cols = slice(start, min(npts, start + per))
        block = np.empty((len(ts), cols.stop - cols.start), dtype=dtype)
        for i, t in enumerate(ts):
            block[i] = at(t)[cols]
        out[cols] = reducer(block)
    return out.reshape(field.data.shape)


def _as_rows(block: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(block.T)


def pointwise_variation_field(field: GridField, body, timegrid: TimeGrid,
                              r: float) -> GridField:
    """V_r of the sampled averaging family, independently at each point."""
    if not r >= 1.0:
        raise ValueError("variation order must be at least 1")
    vals = _per_point(field, body, timegrid,
                      lambda block: vr_batch(_as_rows(block), r))
    return GridField(field.d, field.n_per_axis, field.spacing,
                     vals.astype(np.complex128), None)


def short_variation_square_function(field: GridField, body,
                                    timegrid: TimeGrid) -> GridField:
    """l^2 over dyadic blocks of the per-block 2-variation, per point."""
    slices = list(timegrid.block_slices().values())

    def reducer(block):
        acc = np.zeros(block.shape[1])
        for sl in slices:
            acc += vr_batch(_as_rows(block[sl]), 2.0) ** 2
        return np.sqrt(acc)

    vals = _per_point(field, body, timegrid, reducer)
    return GridField(field.d, field.n_per_axis, field.spacing,
                     vals.astype(np.complex128), None)


def lacunary_variation(field: GridField, body, n_range, r: float
                       ) -> GridField:
    """V_r along the powers of two listed in n_range."""
    exps = tuple(sorted({int(n) for n in n_range}))
    return pointwise_variation_field(field, body, TimeGrid(exps, 0), r)


# -- the smooth dilation cutoff ----------------------------------------------

def _expstep(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0.0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _ramp(x: np.ndarray) -> np.ndarray:
    up = _expstep(x)
    down = _expstep(1.0 - x)
    return up / (up + down)


def dilation_cutoff(t) -> np.ndarray:
    """Smooth bump equal to 1 on [1, 2], supported in (1/2, 3)."""
    t = np.asarray(t, dtype=np.float64)
    return _ramp(2.0 * (t - 0.5)) * (1.0 - _ramp(t - 2.0))


# -- fractional-derivative control of the variation --------------------------

def fractional_variation_ratio(field: GridField, body, alpha: float,
                               p: float, timegrid: TimeGrid | None = None):
    """(lhs, rhs) of the variation bound through fractional dilation control.

    lhs is the L^p norm of the pointwise V_p of the cutoff family
    eta(t) M_t f.  rhs is ||f||_p plus the supremum over the sampled times
    of the L^p norm of the field with multiplier t^a D_t^a m(t xi), the
    scale-invariant fractional derivative of the symbol along its
    dilation.  Radial bodies are cheap (one quadrature per distinct |xi|);
    bodies whose profile needs the adaptive route cost seconds per call.
    """
    if not p > 1.0:
        raise ValueError("exponent must exceed 1")
    if not 1.0 / p < alpha < 1.0:
        raise ValueError("order must lie strictly between 1/p and 1")
    if not np.any(field.data):
        return 0.0, 0.0
    if timegrid is None:
        timegrid = TimeGrid((-1, 0, 1), 4)  # covers the cutoff support
    ts = timegrid.samples()
    eta = dilation_cutoff(ts)[:, None]

    def reducer(block):
        return vr_batch(_as_rows(eta * block), p)

    vals = _per_point(field, body, timegrid, reducer)
    lhs = field_norm(GridField(field.d, field.n_per_axis, field.spacing,
                               vals.astype(np.complex128), None), p)

    sym, factor = _symbol_and_factor(body)
    if sym.d != field.d:
        raise ValueError("body dimension does not match the field")
    spec = np.fft.fftn(field.data)
    flat = np.abs(spec).ravel()
    rho = frequency_magnitudes(field).ravel()
    active = np.flatnonzero((flat > 1e-13 * flat.max()) & (rho > 0.0))
    batch = frequency_batch(field)
    radial = sym.radial is not None
    if radial:
        # the profile depends on |xi| only; collapse duplicate magnitudes
        keys = np.round(np.log(rho[active]), 10)
        uniq, inverse = np.unique(keys, return_inverse=True)
        reps = [active[np.flatnonzero(inverse == i)[0]] for i in
                range(len(uniq))]
    sup = 0.0
    shape = field.data.shape
    for t in ts:
        mult = np.zeros(field.npoints)
        if radial:
            per = np.array([
                frac_deriv_symbol(sym, alpha, float(t), factor * batch[j])
                for j in reps])
            mult[active] = per[inverse]
        else:
            mult[active] = [
                frac_deriv_symbol(sym, alpha, float(t), factor * batch[j])
                for j in active]
        mult *= float(t) ** alpha
        out = _apply_values(field, mult.reshape(shape), None)
        sup = max(sup, field_norm(out, p))
    rhs = field_norm(field, p) + sup
    return lhs, rhs
