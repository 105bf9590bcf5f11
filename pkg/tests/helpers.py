"""Shared fixtures builders for the test suite."""

import numpy as np

from fvar.basis import BasisSpec
from fvar.fpca import KLModel
from fvar.solver import build_design
from fvar.vfar import gen_block_banded, simulate_coefficients

FOURIER5 = BasisSpec("fourier", 5)


def kl_from_scores(scores, basis=FOURIER5):
    """KL model whose eigenfunctions are the leading basis functions."""
    scores = np.asarray(scores, dtype=float)
    n, q = scores.shape
    G = basis.dimension
    coeffs = np.eye(q, G)
    lams = (scores**2).mean(axis=0)
    return KLModel(basis=basis, mean_coeffs=np.zeros(G), eigenvalues=lams,
                   eigen_coeffs=coeffs, scores=scores)


def oracle_design(p=3, q=2, n=50, seed=7, rho=0.5):
    """Scores from a stationary coefficient VAR, wrapped as KL models."""
    model = gen_block_banded(p=p, G=q, bandwidth=1, seed=seed,
                             measurement_noise=0.0)
    coeffs = simulate_coefficients(model, n, seed=seed)
    kl = [kl_from_scores(coeffs[:, j, :], BasisSpec("fourier", q))
          for j in range(p)]
    return build_design(kl, 1), model
