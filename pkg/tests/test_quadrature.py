import math

import numpy as np
import pytest

from polymerlab.environment import CovarianceConditioningError, tagged_stream
from polymerlab.kernels import KernelSpec, gamma_matrix
from polymerlab.quadrature import (gauss_hermite_expect, gauss_hermite_mean, monte_carlo_expect,
                                   monte_carlo_mean)


def test_exponential_moment_closed_form():
    cov = np.array([[1.0]])
    val = gauss_hermite_expect(cov, lambda g: 0.7 * g[:, 0])
    assert val == pytest.approx(math.exp(0.7**2 / 2), rel=1e-9)


def test_correlated_exponential_moment():
    # E exp(a.g) = exp(a' C a / 2)
    cov = gamma_matrix(KernelSpec(), np.array([[0.0], [0.4], [1.1]]))
    a = np.array([0.5, -0.3, 0.8])
    val = gauss_hermite_expect(cov, lambda g: g @ a, n_nodes=40)
    assert val == pytest.approx(math.exp(0.5 * a @ cov @ a), rel=1e-9)


def test_node_doubling_stability():
    cov = gamma_matrix(KernelSpec(), np.array([[0.0], [0.7], [1.5]]))
    a = np.array([0.6, 0.2, -0.4])

    def logf(g):
        return g @ a

    v40 = gauss_hermite_expect(cov, logf, n_nodes=40)
    v80 = gauss_hermite_expect(cov, logf, n_nodes=80)
    assert abs(v80 - v40) / abs(v40) < 1e-8

    def mean_f(g):
        return np.log1p(np.exp(g[:, 0] - 1.0)) - 0.3 * g[:, 1]

    m40 = gauss_hermite_mean(cov, mean_f, n_nodes=40)
    m80 = gauss_hermite_mean(cov, mean_f, n_nodes=80)
    assert abs(m80 - m40) / max(abs(m40), 1e-12) < 1e-8


def test_monte_carlo_agrees_with_quadrature():
    cov = gamma_matrix(KernelSpec(), np.array([[0.0], [0.9]]))
    a = np.array([0.4, 0.4])
    quad = gauss_hermite_expect(cov, lambda g: g @ a)
    mc, se = monte_carlo_expect(cov, lambda g: g @ a, 300_000, tagged_stream(1, 3, 5))
    assert abs(mc - quad) < 4 * se

    mean_quad = gauss_hermite_mean(cov, lambda g: np.tanh(g[:, 0] + 0.2 * g[:, 1]))
    mean_mc, mean_se = monte_carlo_mean(cov, lambda g: np.tanh(g[:, 0] + 0.2 * g[:, 1]),
                                        300_000, tagged_stream(1, 3, 6))
    assert abs(mean_mc - mean_quad) < 4 * mean_se


def test_grid_size_guard_and_conditioning_error():
    cov = np.eye(8)
    with pytest.raises(ValueError, match="tensor grid"):
        gauss_hermite_expect(cov, lambda g: g[:, 0], n_nodes=40)
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])    # not positive definite
    with pytest.raises(CovarianceConditioningError):
        gauss_hermite_expect(bad, lambda g: g[:, 0])
