"""Variation seminorms, convex-body averaging operators, and grid experiments.

The package is organized around five layers:

- ``dimvar.variation`` / ``dimvar.dyadic`` / ``dimvar.paths``: exact r-variation
  of finite sampled paths, dyadic interval decompositions, and the block /
  long-short machinery built on them.
- ``dimvar.bodies``: symmetric convex bodies, isotropic normalization, and
  Monte Carlo section/shadow functionals.
- ``dimvar.symbols``: Fourier multipliers of body averages, Poisson
  smoothing, and fractional derivatives in the dilation parameter.
- ``dimvar.grids`` / ``dimvar.operators`` / ``dimvar.varfields``: periodic
  grid fields, spectral operator application, and pointwise variation fields.
- ``dimvar.experiments`` / ``dimvar.cli``: reproducible experiment drivers and
  the ``dimvar`` command line tool.
"""

from dimvar._kernels import KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND"]
__version__ = "0.1.0"
