from typing import Final

NEWTON_TOL: Final = 1e-9
NEWTON_MAX_ITER: Final = 50
HOMOTOPY_MAX_BISECTIONS: Final = 12
DC_FLUX_STEPS: Final = 8
OVERSAMPLING: Final = 4

# |I_L(phi*)| must be below this fraction of the critical current.
PHI_STAR_TOL: Final = 1e-12
DEGENERATE_ALPHA: Final = 1e-9

# Signal frequencies closer than this to k*f_pump/2 are shifted by this amount.
COLLISION_GUARD_HZ: Final = 1e3

# Transient integration.
ORACLE_MAX_CELLS: Final = 20
RAMP_PERIODS: Final = 20
MIN_STEPS_PER_PERIOD: Final = 50

# Newton stops early once the residual shrinks by less than this factor on consecutive
# iterations; it has reached the roundoff floor of the balance.
STAGNATION_RATIO: Final = 0.5
STAGNATION_ITERATIONS: Final = 3
