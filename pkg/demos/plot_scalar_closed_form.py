"""
First-order plants
==================

For ``dx/dt = a x + b u`` the state under a held input reaches zero at a
time that does not depend on where it started, so every inter-event
minimizer sits the same distance after its update.
"""

from selftrig import SimConfig, make_certificate, run
from selftrig.scalar import ScalarSystem, rho_k_analytic, validate_gain

s = ScalarSystem(a=1.0, b=1.0, K=3.0)
print(validate_gain(s))
print(f"closed-form rho_k - t_k = {rho_k_analytic(s):.9f}")

sys, fb, P = s.to_lti(x0=2.0)
cert = make_certificate(sys, fb, alpha=2.0, P=P, w0_multiplier=1.2)
res = run(sys, fb, cert, sim=SimConfig(horizon=4.0))

###############################################################################
# The numerical minimizer agrees, interval after interval.

for e in res.events[:5]:
    print(f"t_k={e.t_k:.3f}  rho_k - t_k = {e.rho_k - (e.t_k - e.inter_event):.9f}")
