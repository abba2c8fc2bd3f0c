from typing import Final

# Discrete weights must sum to one within this.
WEIGHT_SUM_TOL: Final[float] = 1e-9
# Slope form and contrast form of a discrete PPR agree within this.
SLOPE_FORM_TOL: Final[float] = 1e-10
# Exact-discrete contrasts sum to zero within this.
CONTRAST_SUM_TOL: Final[float] = 1e-12
# Quadrature contrasts of a smooth weight sum to zero within this.
QUADRATURE_SUM_TOL: Final[float] = 1e-8
# Covariance matrices are symmetric within this.
SYMMETRY_TOL: Final[float] = 1e-12
# File-supplied matrices with asymmetry below this are symmetrized, above it rejected.
ASYMMETRY_REPAIR_TOL: Final[float] = 1e-8
# Contrast variances below -VARIANCE_TOL mean the covariance is not PSD.
VARIANCE_TOL: Final[float] = 1e-12
# Two grids are the same grid when every point agrees within this.
GRID_MATCH_TOL: Final[float] = 1e-9
