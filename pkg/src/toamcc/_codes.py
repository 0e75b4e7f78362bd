# Status codes returned by the GTRS bisection kernels.
OK = 0
MAX_STEPS = 1
DEGENERATE = 2
NO_UPPER_BRACKET = 3
BOUNDARY = 4

NAMES = {
    OK: "ok",
    MAX_STEPS: "max_steps",
    DEGENERATE: "degenerate",
    NO_UPPER_BRACKET: "no_upper_bracket",
    BOUNDARY: "boundary",
}

# Constants shared by both kernel backends.  numba's on-disk cache does not
# see edits here: touch _kernels_numba.py after changing them.
# When psi(lo) < 0 the lower offset is shrunk by this factor until psi(lo) > 0.
BOUNDARY_SHRINK = 0.01
MIN_OFFSET = 1e-15
# Smallest |p|: keeps p in [-1, 0) when exp underflows.
P_TINY = 2.2250738585072014e-308
