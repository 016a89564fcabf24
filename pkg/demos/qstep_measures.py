"""q-step Bernoulli measures approximate a Markov measure in entropy.

Their Lyapunov dimensions stay below the pressure root, which the
equilibrium measure attains.
"""
import numpy as np

from repdim import (
    as_matrix,
    build_transition_matrix,
    dimension_root,
    equilibrium_measure,
    preset_interpolation,
    lyapunov_dimension,
    qstep_bernoulli,
)

S = preset_interpolation("T1")
Q = as_matrix(build_transition_matrix(S))
s0 = dimension_root(S).s0
mu = equilibrium_measure(S, s=s0)
print(f"s0 = {s0:.6f}; equilibrium entropy {mu.entropy:.5f}, D(mu) = {lyapunov_dimension(S, mu):.6f}\n")
print(" q  loops  entropy  D(nu_q)")
for q in (6, 10, 14, 18, 24):
    nu = qstep_bernoulli(Q, mu, 0, q, 2)
    loops = len(nu.loops) if nu.loops is not None else "-"
    print(f"{q:>2}  {loops:>5}  {nu.entropy:.5f}  {lyapunov_dimension(S, nu):.5f}")
