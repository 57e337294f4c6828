"""Shared model builders: the two shipped networks and the 2-node toy."""

import numpy as np
import pytest

from ros_cert.netmodel import NetworkSpec, RegionSpec
from ros_cert.poly import Poly, parse_poly


def vanderpol_f():
    # xdot = y ; ydot = mu*w*(1 - r x^2) y - w^2 x, with r=1, mu=0.5, w=0.9
    # (classical Van der Pol; the node dynamics carry a limit cycle).
    f1 = Poly(2, {(0, 1): 1.0})
    f2 = Poly(2, {(0, 1): 0.45, (2, 1): -0.45, (1, 0): -0.81})
    return [f1, f2]


def jet_engine_f():
    f1 = Poly(2, {(3, 0): -0.5, (2, 0): -1.5, (0, 1): -1.0})
    f2 = Poly(2, {(1, 0): 3.0, (0, 1): -1.0})
    return [f1, f2]


LAPLACIAN_EX1_VERBATIM = np.array([[4.0, -2.0, -2.0],
                                   [-1.0, 2.0, 1.0],
                                   [-3.0, 0.0, 3.0]])
LAPLACIAN_EX1_CORRECTED = np.array([[4.0, -2.0, -2.0],
                                    [-1.0, 2.0, -1.0],
                                    [-3.0, 0.0, 3.0]])


def example1_network(variant="corrected"):
    lap = LAPLACIAN_EX1_CORRECTED if variant == "corrected" else LAPLACIAN_EX1_VERBATIM
    return NetworkSpec(
        node_dim=2, n_nodes=3, f=vanderpol_f(),
        g=[Poly.variable(2, 0), Poly.variable(2, 1)],
        laplacian=lap, coupling=0.1,
        row_sum_exempt=(variant != "corrected"),
    )


def example1_region():
    return RegionSpec(scope="error-pair",
                      state_ineqs=[parse_poly("1 - x1^2 - x2^2", 2)],
                      epsilon=0.1)


def example2_network():
    lap = np.array([[2.0, -1.0, -1.0, 0.0],
                    [-1.0, 1.0, 0.0, 0.0],
                    [0.0, 0.0, 1.0, -1.0],
                    [-1.0, 0.0, 0.0, 1.0]])
    g2 = Poly(2, {(0, 1): 1.0, (0, 3): 0.5})
    return NetworkSpec(node_dim=2, n_nodes=4, f=jet_engine_f(),
                       g=[Poly.variable(2, 0), g2],
                       laplacian=lap, coupling=1.0)


def example2_region():
    state = [parse_poly(f"1 - x{2 * k + 1}^2 - x{2 * k + 2}^2", 8)
             for k in range(4)]
    return RegionSpec(scope="full-state", state_ineqs=state, epsilon=0.1)


def toy_network():
    # Two nodes, f = 0, identity coupling: Delta-dot = -2 Delta.
    zero = Poly.zero(2)
    return NetworkSpec(node_dim=2, n_nodes=2, f=[zero, zero],
                       g=[Poly.variable(2, 0), Poly.variable(2, 1)],
                       laplacian=np.array([[1.0, -1.0], [-1.0, 1.0]]),
                       coupling=1.0)


def toy_region(epsilon=0.1):
    return RegionSpec(scope="error-pair",
                      state_ineqs=[parse_poly("1 - x1^2 - x2^2", 2)],
                      epsilon=epsilon)


@pytest.fixture
def ex1_net():
    return example1_network()


@pytest.fixture
def ex1_net_verbatim():
    return example1_network("verbatim")


@pytest.fixture
def ex1_region():
    return example1_region()


@pytest.fixture
def ex2_net():
    return example2_network()


@pytest.fixture
def ex2_region():
    return example2_region()


@pytest.fixture
def toy_net():
    return toy_network()
