"""Finite-difference oracles used to cross-check symbolic derivatives.

These deliberately avoid the symbolic differentiator: everything here goes
through plain point evaluation, so a bug in the chain-rule code cannot hide
in its own oracle.
"""

import math

from pssurf.expr import Jet, Param, Var, evaluate, free_leaves


def fd_partial(e, leaf_name, env, h=1e-6):
    """Central difference of e with respect to one named variable."""
    lo = dict(env)
    hi = dict(env)
    v = env[leaf_name]
    step = h * max(1.0, abs(v))
    lo[leaf_name] = v - step
    hi[leaf_name] = v + step
    return (evaluate(e, hi) - evaluate(e, lo)) / (2.0 * step)


def _x_shift(leaf):
    # formal x-motion: x advances, t frozen, each jet moves to its x-derivative
    if isinstance(leaf, Var):
        return "x" if leaf.name == "x" else None
    if isinstance(leaf, Jet):
        return Jet(leaf.dx + 1, leaf.dt).name
    return None


def _t_shift(leaf):
    if isinstance(leaf, Var):
        return "t" if leaf.name == "t" else None
    if isinstance(leaf, Jet):
        return Jet(leaf.dx, leaf.dt + 1).name
    return None


def fd_total(e, direction, env, h=1e-6):
    """Directional central difference matching the free total derivative.

    Along x every leaf moves with velocity: x at 1, t at 0, Jet(m,n) at the
    value of Jet(m+1,n) taken from env (and symmetrically along t).  env must
    therefore assign the one-higher jets as well.
    """
    shift_of = _x_shift if direction == "x" else _t_shift
    vel = {}
    for leaf in free_leaves(e):
        if isinstance(leaf, Param):
            continue
        name = leaf.name
        src = shift_of(leaf)
        if src is None:
            vel[name] = 0.0
        elif src in ("x", "t"):
            vel[name] = 1.0
        else:
            vel[name] = env[src]
    lo = dict(env)
    hi = dict(env)
    for name, v in vel.items():
        lo[name] = env[name] - h * v
        hi[name] = env[name] + h * v
    return (evaluate(e, hi) - evaluate(e, lo)) / (2.0 * h)


def rel_err(got, want):
    return abs(got - want) / (1.0 + abs(want))


def finite(x):
    return isinstance(x, float) and math.isfinite(x)
