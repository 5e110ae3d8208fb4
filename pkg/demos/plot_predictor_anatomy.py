"""
Inside one prediction
=====================

A prediction has three stages: minimize ``V`` along the free trajectory,
bracket the crossing of ``V`` and the threshold, then polish the root.
"""

import numpy as np

from selftrig import Feedback, LtiSystem, PredictionContext, build_closed_loop, build_derivative_matrices
from selftrig import make_certificate, next_event
from selftrig.oracle import dense_event_scan, random_system

sys = LtiSystem(A=[[1, 1, 0], [-2, 0, 4], [5, 4, -7]], B=[[-1], [0], [1]], x0=[-2, 3, 5])
fb = Feedback(K=[[8.38, 26.36, 10.38]])
cert = make_certificate(sys, fb, alpha=2.0, w0_multiplier=1.3)
ctx = PredictionContext.at_event(
    build_closed_loop(sys, fb), cert, build_derivative_matrices(sys, fb, cert.P), sys.x0, 0.0, cert.W0
)

pred = next_event(ctx)
print(f"rho_k  = {pred.rho_k:.6f} after {pred.minimization.iterations} Newton iterations")
print(f"bracket [{pred.bracket.t_min:.6f}, {pred.bracket.t_max:.6f}] ({pred.bracket.branch})")
print(f"t_next = {pred.t_next:.9f}, Z there = {ctx.Z(pred.t_next):.2e}")

###############################################################################
# A brute-force scan on a 1 microsecond grid lands on the same instant.

scan = dense_event_scan(ctx, 1e-6, 1.0)
print(f"scan   = {scan.t_found:.9f}  ({scan.samples_evaluated} samples)")

###############################################################################
# When the threshold decays quickly the crossing can come before the minimum
# of ``V``; the bracket search then walks backwards from ``rho_k``.

sys2, fb2, cert2 = random_system(np.random.default_rng(5), 2, alpha_range=(0.9, 0.95))
ctx2 = PredictionContext.at_event(
    build_closed_loop(sys2, fb2), cert2, build_derivative_matrices(sys2, fb2, cert2.P), sys2.x0, 0.0, cert2.W0
)
pred2 = next_event(ctx2)
print(f"{pred2.branch}: t_next = {pred2.t_next:.6f} < rho_k = {pred2.rho_k:.6f}")
