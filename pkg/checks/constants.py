CHECK_TYPES = {
    "gradient": "Kantorovich gradient vs central differences",
    "hessian": "Dual-graph Laplacian vs differences of the gradient",
    "solver": "Damped Newton reaches the area tolerance",
    "single_mass": "Single seed rotates about the domain centroid",
    "rk4_order": "Fourth-order convergence on the single-seed solution",
    "two_mass": "Two seeds in the disk rotate at the predicted frequency",
    "equilibrium": "Centroidal configuration is stationary",
    "conservation": "Transport cost conserved on a Gaussian initial measure",
    "refinement": "Halving h and tol moves final seeds by less than 1e-3",
}

UNIT_SQUARE = (0.0, 1.0)
# rho(x) = exp(-|x|^2) on [-1, 1]^2
GAUSSIAN_SIGMA = 2.0**-0.5
