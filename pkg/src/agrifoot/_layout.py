"""Column layout of the device parameter matrix shared by both kernels."""

FIXED, CAPACITY, DEPENDENT, ROBOTIC = 0, 1, 2, 3

BASE_QTY = 0
CAPACITY_COL = 1
RATIO = 2
P_ACTIVE = 3
P_SLEEP = 4
P_TRAVEL = 5
T_ACTIVE = 6
T_SLEEP = 7
T_TRAVEL = 8
PERIODICITY = 9
PASSES = 10
SOLAR = 11
N_PARAMS = 12

DAYS_PER_YEAR = 365.0
