"""Three-user correlated uplink: rates under uniform and optimized powers.

The system has N = 4 receive antennas, 11 scatterers and 3 transmit
antennas per user, with angular-spread correlation on all sides.  For each
SNR the script compares

  * ergodic mutual information against its deterministic approximation,
  * the MMSE sum-rate against its deterministic approximation, and
  * uniform powers against the iterative water-filling optimum.

The mutual information match is excellent already at these dimensions; the
per-stream SINR concentrates more slowly, so the sum-rate approximation
sits visibly below the simulated average at high SNR (the gap shrinks like
one over the system size; see mmse_sinr_concentration.py).
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from dsmimo import (
    ChannelSpec,
    ergodic,
    exact_mi,
    exact_sumrate,
    fold_spec,
    iterative_waterfilling,
    mi_det,
    presets,
    solve_fundamental,
    sumrate_det,
)

TRIALS = 5000
SEED = 7
SNR_DB = np.arange(-10.0, 30.1, 2.5)

base = presets.correlated_mac()
folded = fold_spec(base)[0]

table = []
for snr_db in SNR_DB:
    rho = 10.0 ** (-snr_db / 10.0)
    spec = folded.with_rho(rho)
    sol = solve_fundamental(spec)
    mi_d = mi_det(spec, sol)
    sr_d = sumrate_det(spec, sol)
    Qs = [u.Q for u in spec.users]
    mi_mc = ergodic(spec, lambda r: exact_mi(r, Qs, rho), TRIALS, SEED).mean
    sr_mc = ergodic(spec, lambda r: exact_sumrate(r, rho), TRIALS, SEED).mean

    point = base.with_rho(rho)
    allocs, _ = iterative_waterfilling(point)
    opt = ChannelSpec([u.with_covariance(a.Q)
                       for u, a in zip(point.users, allocs)], rho)
    mi_wf = mi_det(opt, solve_fundamental(opt))
    table.append((snr_db, mi_d, mi_mc, sr_d, sr_mc, mi_wf))

print(f"{TRIALS} trials per point, master seed {SEED}  [nats/s/Hz]")
print(f"{'snr_db':>7} {'mi_det':>9} {'mi_mc':>9} {'sr_det':>9} "
      f"{'sr_mc':>9} {'mi_waterfill':>13}")
for row in table:
    print(f"{row[0]:7.1f} {row[1]:9.5f} {row[2]:9.5f} {row[3]:9.5f} "
          f"{row[4]:9.5f} {row[5]:13.5f}")

arr = np.array(table)
fig, ax = plt.subplots(figsize=(6.5, 4.5))
ax.plot(arr[:, 0], arr[:, 1], "-", color="C0", label="MI approximation")
ax.plot(arr[:, 0], arr[:, 2], "o", ms=3.5, color="C0", label="MI simulation")
ax.plot(arr[:, 0], arr[:, 5], "-", color="C2",
        label="MI approximation, water-filling")
ax.plot(arr[:, 0], arr[:, 3], "-", color="C1", label="sum-rate approximation")
ax.plot(arr[:, 0], arr[:, 4], "s", ms=3.5, color="C1",
        label="sum-rate simulation")
ax.set_xlabel("SNR [dB]")
ax.set_ylabel("rate [nats/s/Hz]")
ax.legend()
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig("mac_rates_and_power_allocation.png", dpi=150)
print("saved mac_rates_and_power_allocation.png")

# water-filling detail at one operating point
spec = base.with_rho(1.0)
allocs, sol = iterative_waterfilling(spec)
print("\nwater-filling at 0 dB:")
for k, a in enumerate(allocs):
    print(f"  user {k}: eigenvalues t = {np.round(a.t, 4)}, "
          f"powers p = {np.round(a.p, 4)}, level mu = {a.mu:.4f}")
