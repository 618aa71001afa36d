"""The memory term becomes friction as the scale parameter shrinks.

For small eps the delay operator acts like mu1 * dz/dt, so the position
obeys a heat equation with friction coefficient mu1 = 1/2 for unit rates.
This script sweeps eps and prints the distance to the limit trajectory,
which decreases scale by scale.
"""

from linkages import run_convergence_sweep, validate_config
from linkages.cli import reference_config

vcfg = validate_config(reference_config(nx=64, da=0.01, final_time=0.5))
sweep = run_convergence_sweep(vcfg, [0.2, 0.1, 0.05, 0.025], dt_out=1e-2)

print(f"{'eps':>8} {'L2(Q_T) error':>16} {'order':>8}")
for row in sweep.rows:
    order = "" if row.order is None else f"{row.order:8.3f}"
    print(f"{row.epsilon:8.4g} {row.error:16.8g} {order}")
print(f"\nstrictly decreasing: {sweep.monotone}")
