"""
Errors, estimators and observed orders
======================================

Runs the slow benchmark on three uniformly refined mesh/timestep pairs
with the mesh-over-time coupling tau ~ h^2 and tabulates how the true
errors and the reconstruction-based estimates decay. With that coupling
the sup-in-time L2 error of a P1 method decays like h^2 and the
time-integrated energy error like h; the estimators should track those
orders, which is exactly what makes them useful as error monitors.
"""

from parabest import eoc, run_series, slow_problem

problem = slow_problem()
print("problem: %s on t in [0, %.0f]" % (problem.label, problem.final_time))

# Four runs, halving h each time and quartering tau (coupling = 2 keeps
# the backward Euler time error subordinate to the spatial one).
results = run_series("slow", degree=1, coupling=2, h0=0.5, tau0=0.1, runs=4)

def series(column):
    return [r.final[column] for r in results]

hs = [r.h for r in results]

print("\n%8s %12s %12s %12s %12s" % ("h", "err_sup_L2", "eta_sup", "err_L2H1",
                                     "eta_L2H1"))
for r in results:
    f = r.final
    print("%8.4f %12.4e %12.4e %12.4e %12.4e"
          % (r.h, f["err_LinfL2"], f["eta_rec_inf_max"],
             f["err_L2H1"], f["eta_rec_2_acc"]))

# Observed order between consecutive runs: log ratio of values over log
# ratio of mesh sizes. Two values per column for three runs.
print("\nEOC err_sup_L2 :", ["%.2f" % e for e in eoc(series("err_LinfL2"), hs)])
print("EOC eta_sup    :", ["%.2f" % e for e in eoc(series("eta_rec_inf_max"), hs)])
print("EOC err_L2H1   :", ["%.2f" % e for e in eoc(series("err_L2H1"), hs)])
print("EOC eta_L2H1   :", ["%.2f" % e for e in eoc(series("eta_rec_2_acc"), hs)])

# Effectivity: estimator over error, with all analysis constants set to
# one. Dimensionless, stable across refinement, and O(1)-ish is the
# hallmark of a sharp estimator.
print("\neffectivity (sup norm)     :",
      ["%.3f" % r.final["eff_LinfL2"] for r in results])
print("effectivity (integral norm):",
      ["%.3f" % r.final["eff_L2H1"] for r in results])
