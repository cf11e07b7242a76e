"""Nonlocal boundary value problems ``x' = f(t, x)``, ``h(∫_0^1 x dg) = 0``.

Riemann-Stieltjes integrals against bounded-variation integrators, sampling
certificates for the existence hypotheses (Brouwer degree of ``h`` plus an
inward condition on ``f``), and a shooting solver over initial values.
"""

from .certifier import CertifyConfig, ExistenceCertificate, certify, certify_endpoint1
from .coincidence import Problem, shooting
from .degree import BoundaryMap, DegreeResult, degree, product_degree
from .measure import BVComponent, BVFunction, stieltjes
from .ode import Trajectory, VectorField, integrate
from .problems import (SecondOrderSpec, periodic_problem, problem_P, reduce_second_order,
                       resonance_problem, step_at_zero, time_reverse)
from .solver import SolverConfig, Solution, solve_direct, solve_with_regularization

__version__ = "0.1.0"

__all__ = [
    "BVComponent", "BVFunction", "BoundaryMap", "CertifyConfig", "DegreeResult", "ExistenceCertificate",
    "Problem", "SecondOrderSpec", "Solution", "SolverConfig", "Trajectory", "VectorField",
    "certify", "certify_endpoint1", "degree", "integrate", "periodic_problem", "problem_P",
    "product_degree", "reduce_second_order", "resonance_problem", "shooting", "solve_direct",
    "solve_with_regularization", "step_at_zero", "stieltjes", "time_reverse",
]
