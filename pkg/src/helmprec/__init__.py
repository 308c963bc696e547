"""Matrix-free boundary-integral preconditioning workbench for interior 2D Helmholtz problems.

The package bundles everything needed to study Krylov iteration counts for
the interior Helmholtz Dirichlet problem on square domains:

- ``special``     Bessel/Hankel evaluation and free-space Green's kernels
- ``tree``        adaptive quadtree and dual-tree interaction lists
- ``fmm``         kernel-independent driver for multipole-accelerated sums
- ``discretize``  Q1/Q2 finite-element systems on uniform grids
- ``krylov``      GMRES(m) and BiCGSTAB with true-residual reporting
- ``bem``         boundary-integral solver used as a preconditioner
- ``baselines``   incomplete Cholesky, geometric multigrid, identity
- ``spectra``     dense eigenvalue diagnostics for preconditioned operators
- ``harness``     experiment catalog, CSV/SVG emitters, matrix export
"""

__version__ = "0.1.0"

from . import errors

__all__ = ["errors", "__version__"]
