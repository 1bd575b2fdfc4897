"""Deterministic derivation of child seeds from a master seed.

Every randomized stage (resampling, per-tree streams, ensemble members, sweep
configurations) gets its own 64-bit seed derived from the master seed and a
positional path. Children never share a stream, so stages can run in any
order, or in parallel, without changing results.
"""

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    # splitmix64 finalizer
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(master: int, *path: int) -> int:
    """Return the child seed for ``path`` under ``master``.

    The path is a sequence of non-negative position indices; distinct paths
    yield independent seeds and the same path always yields the same seed.
    """
    state = master & _MASK
    for part in path:
        if part < 0:
            raise ValueError("path components must be non-negative")
        state = _mix((state + _GAMMA * (part + 1)) & _MASK)
    return state
