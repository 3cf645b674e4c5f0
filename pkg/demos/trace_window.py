"""Why the scale search exists: the monodromy trace must stay in [-2, 2].

A diagonal unitarizer can only exist where the monodromy is conjugate to
something unitary, which for these loops means the trace stays pointwise in
the window [-2, 2] on the unit lambda circle. The scale tau multiplies the
perturbation, so growing tau pushes the trace out of the window; find_scale
bisects for the largest admissible tau. For constant f = 1 the threshold is
exactly tau = 1/16, a closed form worth seeing numerically.
"""

import numpy as np

from cmc_cylinders.flow import monodromy_circle
from cmc_cylinders.monodromy import find_scale, trace_profile
from cmc_cylinders.potential import LaurentSpec

spec = LaurentSpec.from_coeffs({0: 1.0})

taus = [1 / 32, 1 / 20, 1 / 16, 1 / 12, 1 / 8]
profiles = {}
print("tau        trace range                verdict")
for tau in taus:
    m = monodromy_circle(spec.with_tau(tau), n_samples=256, n_modes=64)
    prof = trace_profile(m)
    profiles[tau] = prof
    lo, hi = prof["trace_range"]
    verdict = ("stays in window" if prof["unitarizable"] else
               "escapes at theta = %.4f" %
               prof["theta"][prof["first_failure"]])
    print("%-9.5f  [%+9.5f, %+9.5f]     %s" % (tau, lo, hi, verdict))

sc = find_scale(spec)
print()
print("find_scale: tau0 = %.6f after %d monodromy evaluations "
      "(closed-form threshold 1/16 = %.6f)" %
      (sc["tau0"], sc["n_evaluations"], 1 / 16))

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
    print("matplotlib not available, skipping the plot")

if plt is not None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for tau in taus:
        prof = profiles[tau]
        ax.plot(np.asarray(prof["theta"]), np.asarray(prof["trace"]).real,
                label="tau = %.5f" % tau)
    ax.axhline(2.0, color="k", lw=0.8)
    ax.axhline(-2.0, color="k", lw=0.8)
    ax.set_xlabel("theta on the lambda circle")
    ax.set_ylabel("trace of the monodromy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig("trace_window.png", dpi=150)
    print("wrote trace_window.png")
