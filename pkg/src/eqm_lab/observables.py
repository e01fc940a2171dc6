"""Operator-valued observable functions and their transport along a flow.

An observable here is a map from states to Hermitian operators.  Transporting
it to time t conjugates by the flow's realizing unitary and reads the
original observable at the evolved state:

    (T_t f)(rho) = u(t, rho)^dagger f(rho_t) u(t, rho),   rho_t the evolved state.

This is the Heisenberg-picture action associated with the nonlinear state
flow: linear, unital, positivity- and product-preserving at every evaluation
point.  States over these observables are finitely supported probability
measures on the density-matrix space; a one-point (Dirac) measure reduces
every expectation to Tr(rho f(rho)).  Mixtures with equal barycenters but
different supports are genuinely different states here, which is what the
state dependence of observables is for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import flow as flow_mod
from .flow import IntegratorConfig
from .hamiltonians import HamiltonianFunction
from .hilbert import DensityMatrix, HermitianOperator, trace_pairing

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class ObservableFunction:
    """A map from states to Hermitian operators."""

    eval: Callable[[DensityMatrix], HermitianOperator]
    label: str = "f"


@dataclass(frozen=True)
class StateMeasure:
    """A finitely supported probability measure on the density-matrix space."""

    support: tuple
    weights: np.ndarray

    def __post_init__(self):
        support = tuple(self.support)
        if not support:
            raise ValueError("measure support must be nonempty")
        dims = {rho.dim for rho in support}
        if len(dims) > 1:
            raise ValueError(f"dimension mismatch in support: {sorted(dims)}")
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (len(support),):
            raise ValueError(
                f"need one weight per support point, got {weights.shape} for {len(support)} points"
            )
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        total = float(np.sum(weights))
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got {total:.17g}")
        weights.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def dirac(cls, rho: DensityMatrix) -> "StateMeasure":
        return cls(support=(rho,), weights=np.array([1.0]))

    @property
    def dim(self) -> int:
        return self.support[0].dim


def constant_observable(a: HermitianOperator, label: str = "constant") -> ObservableFunction:
    """The state-independent observable rho -> A."""
    return ObservableFunction(eval=lambda rho: a, label=label)


def trace_scaled_observable(weight_op: HermitianOperator, a: HermitianOperator,
                            label: str = "trace_scaled") -> ObservableFunction:
    """The state-dependent observable rho -> Tr(rho B) * A."""
    if weight_op.dim != a.dim:
        raise ValueError(f"dimension mismatch: {weight_op.dim} vs {a.dim}")

    def evaluate(rho: DensityMatrix) -> HermitianOperator:
        return HermitianOperator(trace_pairing(rho, weight_op) * a.matrix)

    return ObservableFunction(eval=evaluate, label=label)


def expectation(omega: StateMeasure, f: ObservableFunction) -> float:
    """sum_i w_i Tr(rho_i f(rho_i)); linear in f."""
    return float(sum(
        w * trace_pairing(rho, f.eval(rho))
        for rho, w in zip(omega.support, omega.weights)
    ))


def heisenberg_transform(f: ObservableFunction, h: HamiltonianFunction, t: float,
                         cfg: IntegratorConfig) -> ObservableFunction:
    """The time-t Heisenberg transport of f along the flow generated by h.

    Evaluation is lazy: each call integrates a fresh trajectory from its own
    argument, because the transported function lives on the whole state
    space.  Negative t integrates the defining equation backward, which keeps
    the realizing family unitary by construction and inverts the forward
    cocycle within integrator tolerance.
    """
    if not math.isfinite(t):
        raise ValueError("transport time must be finite")

    def evaluate(rho: DensityMatrix) -> HermitianOperator:
        rho_t, u = flow_mod.propagate(h, rho, t, cfg)
        inner = f.eval(rho_t).matrix
        return HermitianOperator(u.matrix.conj().T @ inner @ u.matrix)

    return ObservableFunction(eval=evaluate, label=f"T[{t:g}]{f.label}")


def pushforward_state(omega: StateMeasure, h: HamiltonianFunction, t: float,
                      cfg: IntegratorConfig) -> StateMeasure:
    """Evolve every support point by the flow; weights are untouched."""
    moved = tuple(flow_mod.propagate(h, rho, t, cfg)[0] for rho in omega.support)
    return StateMeasure(support=moved, weights=np.array(omega.weights))


def conservation_residual(f: ObservableFunction, h: HamiltonianFunction,
                          rho: DensityMatrix, t: float, cfg: IntegratorConfig) -> float:
    """|Tr(rho_t (T_{-t} f)(rho_t)) - Tr(rho f(rho))|.

    Transporting the observable backward while the state moves forward
    cancels exactly in the continuum, for linear and nonlinear flows alike;
    the numerical residual measures integrator error only.
    """
    rho_t, _ = flow_mod.propagate(h, rho, t, cfg)
    pulled_back = heisenberg_transform(f, h, -t, cfg)
    lhs = trace_pairing(rho_t, pulled_back.eval(rho_t))
    rhs = trace_pairing(rho, f.eval(rho))
    return abs(lhs - rhs)
