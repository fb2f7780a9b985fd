# simulation clock
TICK = 0.01
SAMPLE_PERIOD = 0.01
TIME_CAP = 3600.0

# trapezoid pulses
RAMP = 0.5

# hazard handling
SIGN_LEAD = 30.0
MARGIN = 2.0

# disturbance thresholds in m/s^2, drift gain in m per (m/s^2 s)
A_SLIP = 2.0
A_DROP = 6.0
K_POSE = 0.01
POSE_TOLERANCE = 0.03

# exact solver
EXACT_MAX_TASKS = 8
BUDGET = 200000

# floats in CSV outputs
PRECISION = 6

STRATEGIES = ('static', 'on_wheels', 'wait', 'replan_til')
TIL_MODES = ('at_start', 'over_all')
ARM_KINDS = ('industrial', 'modular')
EVENT_KINDS = ('emergency_brake', 'lane_change')

STREAMS = ('channel', 'events', 'disturbance', 'motion')


try:
    from config_mine import *
except ImportError:
    pass
