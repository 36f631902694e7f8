"""Shared constants for the expression bytecode and the integration kernels.

The compiled extension duplicates these values as a C enum; it asserts at
import time that the two sets agree.
"""

# stack-machine opcodes
OP_CONST = 0   # push consts[arg]
OP_T = 1       # push evaluation time
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_POW = 6
OP_NEG = 7
OP_SIN = 8
OP_COS = 9
OP_EXP = 10
OP_LOG = 11
OP_SQRT = 12
OP_ABS = 13
OP_MIN = 14
OP_MAX = 15

# evaluation status codes
OK = 0
ERR_DIV_ZERO = 1
ERR_LOG_DOMAIN = 2
ERR_SQRT_DOMAIN = 3
ERR_POW_DOMAIN = 4
ERR_NONFINITE = 5
# integration-only status codes
ERR_SHORT_DELAY = 10     # delayed argument falls inside the current step
ERR_STATE_NONFINITE = 11

# program slots used by integrate_loop (order inside the packed program set)
P_A = 0
P_GLAG = 1
P_PHI = 2
P_PSI = 3
P_F = 4
P_TERMS = 5   # term k: coefficient at P_TERMS + 2k, lag at P_TERMS + 2k + 1

MAX_STACK = 64
