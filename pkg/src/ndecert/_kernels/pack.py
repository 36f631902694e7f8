"""Packing of several bytecode programs into pooled arrays for the kernels."""

import numpy as np

from .opcodes import MAX_STACK, OP_CONST


def pack_programs(programs):
    """Concatenate ``(ops, args, consts, stack_need)`` tuples into one pool.

    Constant-pool references are rebased so every program indexes the shared
    ``consts`` array.  Returns ``(ops, args, consts, starts)`` with ``starts``
    of length ``len(programs) + 1``.
    """
    ops_parts, args_parts, consts_parts, starts = [], [], [], [0]
    const_base = 0
    for ops, args, consts, stack_need in programs:
        if stack_need > MAX_STACK:
            raise ValueError("expression too deep for the evaluation stack")
        args = args.copy()
        args[ops == OP_CONST] += const_base
        ops_parts.append(ops)
        args_parts.append(args)
        consts_parts.append(consts)
        const_base += len(consts)
        starts.append(starts[-1] + len(ops))
    return (
        np.concatenate(ops_parts).astype(np.int32),
        np.concatenate(args_parts).astype(np.int32),
        np.concatenate(consts_parts).astype(np.float64)
        if const_base
        else np.zeros(0, dtype=np.float64),
        np.asarray(starts, dtype=np.int32),
    )
