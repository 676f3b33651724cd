"""Instantiate the classified families of (F, f_ij) data.

Each family id maps to one coefficient table.  Tables are kept symbolic:
named constants stay Param nodes, user-pinned values travel alongside in
the FamilySpec and are bound at evaluation time.  Validation is by named
constraint; violations raise ConstraintError carrying the relation.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .expr import (
    Const,
    EquationContext,
    Expr,
    Param,
    as_expr,
    is_zero,
    jets_of,
    parse,
    partial,
    simplify,
    sqrt,
    to_text,
    z,
)
from .forms import PssTriple

Z0 = z(0)
Z1 = z(1)


class FamilyId(Enum):
    SG_BASIC = "sg-basic"
    SG_ETA = "sg-eta"
    EVO_HLNONZERO = "evo-hlnonzero"
    EVO_HLZERO = "evo-hlzero"
    HYP_I_GENERAL = "hyp-i"
    HYP_I_QA = "hyp-i-qa"
    HYP_II_GAMMA_NE1 = "hyp-ii"
    HYP_II_GAMMA1 = "hyp-ii-gamma1"
    HYP_III_ZERO = "hyp-iii-zero"
    HYP_III_LAMBDA = "hyp-iii-lambda"
    HYP_III_XI_TAU = "hyp-iii-xi-tau"

    @property
    def cli_name(self) -> str:
        return self.value

    @classmethod
    def from_name(cls, name: str) -> "FamilyId":
        key = name.strip().lower().replace("_", "-")
        for member in cls:
            if member.value == key or member.name.lower().replace("_", "-") == key:
                return member
        known = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown family {name!r}; known families: {known}")


class ConstraintError(ValueError):
    """A named parameter relation is violated."""

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        msg = name if not detail else f"{name}: {detail}"
        super().__init__(msg)


@dataclass(frozen=True)
class HLPMQuantities:
    H: Expr
    L: Expr
    P: Expr
    M: Expr


@dataclass
class FamilySpec:
    id: FamilyId
    params: dict
    F: Expr
    f: tuple
    ctx: EquationContext
    triple: PssTriple
    # for linearizing families, F'' + alpha*F = 0 with this alpha; the
    # expression is written so the identity cancels structurally
    alpha: Expr = None
    report: list = field(default_factory=list)

    def note(self, line: str):
        self.report.append(line)


# aliases accepted on input; the right-hand names are canonical
_ALIASES = {"lam": "lambda", "zeta": "xi", "gamma_im": "gamma_im", "s": "sign"}

_EPS = 1e-9


def _normalize(params):
    out = {}
    for k, v in (params or {}).items():
        out[_ALIASES.get(k, k)] = v
    return out


def _sign_of(params, key="sign"):
    raw = params.get(key, 1)
    if raw in (1, +1, 1.0, "+", "+1", "plus"):
        return 1
    if raw in (-1, -1.0, "-", "-1", "minus"):
        return -1
    raise ConstraintError("sign", f"sign flag must be +1 or -1, got {raw!r}")


class _Params:
    """Split user params into pinned values and sampling ranges."""

    def __init__(self, family: FamilyId, raw: dict, numeric: dict, other=()):
        self.family = family
        self.raw = raw
        self.pinned = {}
        self.ranges = {}
        known = set(numeric) | set(other) | {"sign"}
        for key in raw:
            if key not in known:
                raise ConstraintError(
                    "unknown parameter",
                    f"{key!r} is not a parameter of {family.value} "
                    f"(accepts: {', '.join(sorted(known))})")
        for name, default_range in numeric.items():
            if name in raw and raw[name] is not None:
                self.pinned[name] = float(raw[name])
            elif default_range is not None:
                self.ranges[name] = default_range

    def expr(self, name) -> Expr:
        return Param(name)

    def value(self, name):
        return self.pinned.get(name)

    def nonzero(self, name):
        v = self.pinned.get(name)
        if v is not None and abs(v) < _EPS:
            raise ConstraintError(f"{name} != 0", f"{name} = {v}")


def _triple(rows, ctx, ps: _Params, constraints, label):
    return PssTriple.from_matrix(
        rows,
        ctx=ctx,
        params=dict(ps.pinned),
        ranges=dict(ps.ranges),
        constraints=tuple(simplify(as_expr(c)) for c in constraints),
        label=label,
    )


def _spec(family, ps, F, rows, ctx, constraints, extra_params=None):
    tr = _triple(rows, ctx, ps, constraints, family.value)
    params = dict(ps.pinned)
    if extra_params:
        params.update(extra_params)
    return FamilySpec(id=family, params=params, F=F, f=rows, ctx=ctx, triple=tr)


# ---------------------------------------------------------------- families

def _build_sg_basic(raw):
    ps = _Params(FamilyId.SG_BASIC, raw, numeric={})
    F = parse("sin(z0)")
    rows = (
        (parse("cos(z0/2)"), parse("cos(z0/2)")),
        (parse("sin(z0/2)"), parse("-sin(z0/2)")),
        (parse("z1/2"), parse("-w1/2")),
    )
    ctx = EquationContext("hyperbolic", F)
    return _spec(FamilyId.SG_BASIC, ps, F, rows, ctx, ())


def _build_sg_eta(raw):
    ps = _Params(FamilyId.SG_ETA, raw, numeric={"eta": (0.5, 2.0)})
    ps.nonzero("eta")
    eta = ps.expr("eta")
    F = parse("sin(z0)")
    rows = (
        (Const(0), simplify(parse("sin(z0)") / eta)),
        (eta, simplify(parse("cos(z0)") / eta)),
        (Z1, Const(0)),
    )
    ctx = EquationContext("hyperbolic", F)
    return _spec(FamilyId.SG_ETA, ps, F, rows, ctx, (parse("eta^2"),))


def _jets_within(e, allowed, what):
    for j in jets_of(e):
        if (j.dx, j.dt) not in allowed:
            raise ConstraintError(
                f"{what} depends on {j.name}",
                f"{what} may only contain {', '.join(sorted({'z%d' % a for a, _ in allowed}))}")


def _build_evo_hlnonzero(raw):
    ps = _Params(
        FamilyId.EVO_HLNONZERO, raw,
        numeric={"eta": (0.5, 2.0), "alpha": (-0.7, 0.7)},
        other=("f11", "f22", "f31"),
    )
    ps.nonzero("eta")
    alpha_v = ps.value("alpha")
    if alpha_v is not None and not alpha_v ** 2 < 1:
        raise ConstraintError("alpha^2 < 1", f"alpha = {alpha_v}")
    s = _sign_of(raw)

    f11 = simplify(parse(str(raw.get("f11", "z0"))))
    f22 = simplify(parse(str(raw.get("f22", "z0"))))
    _jets_within(f11, {(0, 0)}, "f11")
    _jets_within(f22, {(0, 0)}, "f22")
    f11_z0 = partial(f11, Z0)
    f22_z0 = partial(f22, Z0)
    if is_zero(f11_z0).status != "nonzero":
        raise ConstraintError("f11_z0 != 0", "f11 must genuinely depend on z0")
    if is_zero(f22_z0).status != "nonzero":
        raise ConstraintError("f22_z0 != 0", "f22 must genuinely depend on z0")

    eta = ps.expr("eta")
    alpha = ps.expr("alpha")
    rad = sqrt(1 - alpha * alpha)
    f31 = simplify(alpha * f11 + Const(s) * eta * rad)
    if "f31" in raw:
        given = simplify(parse(str(raw["f31"])))
        gap = is_zero(simplify(given - f31), params=ps.pinned, ranges=ps.ranges,
                      constraints=(parse("1 - alpha^2"),))
        if not gap:
            raise ConstraintError(
                "f31 = alpha*f11 +/- eta*sqrt(1 - alpha^2)",
                f"supplied f31 = {to_text(given)} does not match the sign {s:+d} branch")

    f22_z0z0 = partial(f22_z0, Z0)
    den = eta * rad
    f12 = simplify(f11 * f22 / eta - Const(s) * f22_z0 * Z1 / den)
    f32 = simplify(f31 * f22 / eta - Const(s) * alpha * f22_z0 * Z1 / den)
    bracket = simplify((1 - alpha * alpha) * f11 - Const(s) * alpha * eta * rad)
    F = simplify(
        -Const(s) * f22_z0 / (den * f11_z0) * z(2)
        - Const(s) * f22_z0z0 / (den * f11_z0) * Z1 * Z1
        + ((eta * eta + f11 * f11 - f31 * f31) * f22_z0 / (eta * bracket * f11_z0)
           + f22 / eta) * Z1
    )
    ctx = EquationContext("evolution", F)
    rows = ((f11, f12), (eta, f22), (f31, f32))
    constraints = (
        parse("eta^2"),
        parse("1 - alpha^2"),
        simplify(bracket * bracket),
        simplify(f11_z0 * f11_z0),
        simplify(f22_z0 * f22_z0),
    )
    spec = _spec(FamilyId.EVO_HLNONZERO, ps, F, rows, ctx, constraints,
                 extra_params={"sign": s, "f11": to_text(f11), "f22": to_text(f22)})
    validate_evolution_constraints(spec)
    return spec


def _build_evo_hlzero(raw):
    ps = _Params(
        FamilyId.EVO_HLZERO, raw,
        numeric={"eta": (0.5, 2.0), "lambda": (0.5, 1.5)},
        other=("f11", "f12"),
    )
    ps.nonzero("eta")
    s = _sign_of(raw)

    f11 = simplify(parse(str(raw.get("f11", "exp(z0)"))))
    f12 = simplify(parse(str(raw.get("f12", "exp(z0)*z1"))))
    _jets_within(f11, {(0, 0)}, "f11")
    _jets_within(f12, {(0, 0), (1, 0)}, "f12")
    f11_z0 = partial(f11, Z0)
    f12_z1 = partial(f12, Z1)
    if is_zero(f11_z0).status != "nonzero":
        raise ConstraintError("f11_z0 != 0", "f11 must genuinely depend on z0")
    if is_zero(f12_z1).status != "nonzero":
        raise ConstraintError(
            "f12_z1 != 0", "the evolution equation is not of second-order")

    eta = ps.expr("eta")
    lam = ps.expr("lambda")
    f22 = lam
    f31 = simplify(Const(s) * f11)
    f32 = simplify(Const(s) * f12)
    F = simplify(
        f12_z1 / f11_z0 * z(2)
        + partial(f12, Z0) / f11_z0 * Z1
        - Const(s) * (lam * f11 - eta * f12) / f11_z0
    )
    ctx = EquationContext("evolution", F)
    rows = ((f11, f12), (eta, f22), (f31, f32))
    constraints = (
        parse("eta^2"),
        simplify(f11_z0 * f11_z0),
    )
    spec = _spec(FamilyId.EVO_HLZERO, ps, F, rows, ctx, constraints,
                 extra_params={"sign": s, "f11": to_text(f11), "f12": to_text(f12)})
    validate_evolution_constraints(spec)
    return spec


_FKINDS = ("sin", "cos", "sinh", "cosh")


def _fun(name, arg):
    from .expr import nodes

    return simplify(nodes.Fun(name, arg))


def _build_hyp_i(raw, qa: bool):
    family = FamilyId.HYP_I_QA if qa else FamilyId.HYP_I_GENERAL
    numeric = {"eta": (0.5, 2.0), "A": (1.3, 2.0), "Q": (-0.8, 0.8)}
    if not qa:
        numeric["B"] = (0.2, 0.9)
    ps = _Params(family, raw, numeric=numeric, other=("fkind",))
    ps.nonzero("eta")
    ps.nonzero("A")

    A = ps.expr("A")
    B = ps.expr("B") if not qa else Const(0)
    eta = ps.expr("eta")
    Q = ps.expr("Q")

    a_v, b_v = ps.value("A"), (0.0 if qa else ps.value("B"))
    alpha_sign = None
    if a_v is not None and b_v is not None:
        diff = a_v ** 2 - b_v ** 2
        if abs(diff) < _EPS:
            raise ConstraintError("A^2 - B^2 != 0", f"A = {a_v}, B = {b_v}")
        alpha_sign = 1 if diff > 0 else -1

    fkind = raw.get("fkind")
    if fkind is not None and fkind not in _FKINDS:
        raise ConstraintError("fkind", f"must be one of {', '.join(_FKINDS)}")
    if qa:
        if fkind in ("sinh", "cosh"):
            raise ConstraintError(
                "alpha > 0", "alpha = 1/A^2 is positive; sinh/cosh need alpha < 0")
        fkind = fkind or "sin"
        alpha_sign = 1
    else:
        if alpha_sign is None:
            # symbolic A, B: ranges must commit to one sign of alpha
            alpha_sign = -1 if fkind in ("sinh", "cosh") else 1
            if alpha_sign < 0:
                ps.ranges["A"] = (0.2, 0.9)
                ps.ranges["B"] = (1.3, 2.0)
        if fkind is None:
            fkind = "sin" if alpha_sign > 0 else "sinh"
        if alpha_sign > 0 and fkind in ("sinh", "cosh"):
            raise ConstraintError(
                "alpha < 0", f"A = {a_v}, B = {b_v} give alpha > 0; use sin/cos")
        if alpha_sign < 0 and fkind in ("sin", "cos"):
            raise ConstraintError(
                "alpha > 0", f"A = {a_v}, B = {b_v} give alpha < 0; use sinh/cosh")

    if qa:
        alpha = simplify(1 / (A * A))
        scale_sq = simplify(A * A)
    else:
        alpha = simplify(1 / (A * A - B * B))
        scale_sq = simplify(A * A - B * B) if alpha_sign > 0 else simplify(B * B - A * A)
    # written over the branch's positive radicand so F'' + alpha*F cancels
    # structurally, not just numerically
    alpha_for_F = simplify(Const(alpha_sign) / scale_sq)

    F = _fun(fkind, simplify(Z0 / sqrt(scale_sq)))
    Fp = partial(F, Z0)
    wden = simplify(Q * Q * alpha + eta * eta)

    if qa:
        f11 = simplify(alpha * A * Q)
        f31 = simplify(-alpha * A * Z1)
        f32 = Const(0)
    else:
        f11 = simplify(-alpha * (B * Z1 - A * Q))
        f31 = simplify(-alpha * (A * Z1 - B * Q))
        f32 = simplify(B * alpha * (Q * Fp - eta * F) / wden)
    f12 = simplify(A * alpha * (Q * Fp - eta * F) / wden)
    f22 = simplify((eta * Fp + alpha * Q * F) / wden)

    ctx = EquationContext("hyperbolic", F)
    rows = ((f11, f12), (eta, f22), (f31, f32))
    constraints = [parse("eta^2"), simplify(scale_sq), simplify(wden * wden)]
    spec = _spec(family, ps, F, rows, ctx, tuple(constraints),
                 extra_params={"fkind": fkind})
    spec.alpha = alpha_for_F
    if alpha_sign < 0:
        spec.note("alpha = 1/(A^2 - B^2) < 0 for these parameters")
    return spec


def _build_hyp_ii_gamma_ne1(raw):
    ps = _Params(
        FamilyId.HYP_II_GAMMA_NE1, raw,
        numeric={
            "eta": (0.5, 2.0),
            "gamma": (1.3, 2.2),
            "delta": (0.6, 1.4),
            "nu": (0.5, 1.5),
            "beta": (0.5, 1.5),
            "B": (0.3, 1.0),
            "A": None,
        },
    )
    ps.nonzero("eta")
    ps.nonzero("delta")
    ps.nonzero("nu")
    g_v = ps.value("gamma")
    if g_v is not None and abs(g_v - 1.0) < _EPS:
        raise ConstraintError(
            "gamma != 1", "gamma = 1 belongs to the constant-beta family id")
    s = _sign_of(raw)

    eta = ps.expr("eta")
    gamma = ps.expr("gamma")
    delta = ps.expr("delta")
    nu = ps.expr("nu")
    beta = ps.expr("beta")
    B = ps.expr("B")

    ab_gap = None
    if "A" in ps.pinned:
        a_v, b_v = ps.value("A"), ps.value("B")
        d_v, g_vv = ps.value("delta"), ps.value("gamma")
        if None in (b_v, d_v, g_vv):
            raise ConstraintError(
                "A^2 - B^2 = (gamma - 1)/delta^2",
                "pin B, gamma and delta together with A")
        ab_gap = a_v ** 2 - b_v ** 2 - (g_vv - 1.0) / d_v ** 2
        if abs(ab_gap) > 1e-6:
            raise ConstraintError(
                "A^2 - B^2 = (gamma - 1)/delta^2",
                f"off by {ab_gap:.3g} for A={a_v}, B={b_v}, gamma={g_vv}, delta={d_v}")
        A = ps.expr("A")
    else:
        # the relation pins A up to sign; keep the positive root
        A = simplify(sqrt(B * B + (gamma - 1) / (delta * delta)))

    rootD = sqrt(beta + gamma * Z1 * Z1)
    egz = _fun("exp", simplify(delta * Z0))
    dfac = simplify(delta * delta / (gamma - 1))
    f11 = simplify(eta * A * delta - (B * Z1 - Const(s) * A * rootD) * dfac)
    f31 = simplify(eta * B * delta - (A * Z1 - Const(s) * B * rootD) * dfac)
    f12 = simplify(Const(s) * A * delta * nu * egz)
    f22 = simplify(Const(s) * nu * egz)
    f32 = simplify(Const(s) * B * delta * nu * egz)
    F = simplify(nu * egz * rootD)

    ctx = EquationContext("hyperbolic", F)
    rows = ((f11, f12), (eta, f22), (f31, f32))
    constraints = [
        parse("eta^2"),
        parse("delta^2"),
        parse("nu^2"),
        parse("(gamma - 1)^2"),
        simplify(beta + gamma * Z1 * Z1),
    ]
    if "A" not in ps.pinned:
        constraints.append(simplify(B * B + (gamma - 1) / (delta * delta)))
    return _spec(FamilyId.HYP_II_GAMMA_NE1, ps, F, rows, ctx, tuple(constraints),
                 extra_params={"sign": s})


def _build_hyp_ii_gamma1(raw):
    ps = _Params(
        FamilyId.HYP_II_GAMMA1, raw,
        numeric={
            "eta": (0.5, 2.0),
            "delta": (0.6, 1.4),
            "nu": (0.5, 1.5),
            "A": (0.8, 1.6),
        },
    )
    ps.nonzero("eta")
    ps.nonzero("delta")
    ps.nonzero("nu")
    ps.nonzero("A")
    s = _sign_of(raw)

    eta = ps.expr("eta")
    delta = ps.expr("delta")
    nu = ps.expr("nu")
    A = ps.expr("A")
    egz = _fun("exp", simplify(delta * Z0))

    half = Const(1) / 2
    f11 = simplify(half * (1 / A + delta * delta * A) * Z1 + eta * delta * A)
    # the sign flag rides on the whole exponential column; the z1-free term
    # of f31 does not flip, or R1 picks up a constant 2*eta*delta*A*exp(delta*z0)
    f31 = simplify(half * (-1 / A + delta * delta * A) * Z1 + eta * delta * A)
    f12 = simplify(Const(s) * A * delta * nu * egz)
    f22 = simplify(Const(s) * nu * egz)
    f32 = simplify(Const(s) * A * delta * nu * egz)
    # beta = 0, gamma = 1: sqrt(z1^2) = |z1|; the sign flag picks the halfplane
    F = simplify(nu * egz * sqrt(Z1 * Z1))

    ctx = EquationContext("hyperbolic", F)
    rows = ((f11, f12), (eta, f22), (f31, f32))
    constraints = (
        parse("eta^2"),
        parse("delta^2"),
        parse("nu^2"),
        parse("A^2"),
        simplify(Const(s) * Z1),
    )
    return _spec(FamilyId.HYP_II_GAMMA1, ps, F, rows, ctx, constraints,
                 extra_params={"sign": s})


def _build_hyp_iii_zero(raw):
    ps = _Params(FamilyId.HYP_III_ZERO, raw, numeric={"eta": (0.5, 2.0)})
    ps.nonzero("eta")
    eta = ps.expr("eta")
    ez = _fun("exp", Z0)
    F = Const(0)
    rows = ((Z1, Const(0)), (eta, ez), (eta, ez))
    ctx = EquationContext("hyperbolic", F)
    return _spec(FamilyId.HYP_III_ZERO, ps, F, rows, ctx, (parse("eta^2"),))


def _build_hyp_iii_lambda(raw):
    ps = _Params(
        FamilyId.HYP_III_LAMBDA, raw,
        numeric={
            "eta": (0.5, 2.0),
            "lambda": (0.5, 1.5),
            "xi": (-0.5, 0.5),
            "tau": (-1.0, 1.0),
            "T": (0.5, 1.5),
        },
    )
    ps.nonzero("eta")
    ps.nonzero("T")
    lam_v = ps.value("lambda")
    if lam_v is not None and abs(lam_v) < _EPS:
        raise ConstraintError("lambda != 0", "lambda = 0 belongs to other family ids")
    s = _sign_of(raw)

    eta = ps.expr("eta")
    lam = ps.expr("lambda")
    xi = ps.expr("xi")
    tau = ps.expr("tau")
    T = ps.expr("T")

    f11 = simplify(Const(s) * eta * T * Z1 / lam)
    f31 = simplify(eta * T * Z1 / lam)
    f12 = simplify(T * Z0 + tau * T / lam)
    f22 = simplify(lam / eta - Const(s) * xi)
    f32 = simplify(Const(s) * T * Z0 + Const(s) * tau * T / lam)
    F = simplify(lam * Z0 + xi * Z1 + tau)

    ctx = EquationContext("hyperbolic", F)
    rows = ((f11, f12), (eta, f22), (f31, f32))
    constraints = (parse("eta^2"), parse("lambda^2"), parse("T^2"))
    return _spec(FamilyId.HYP_III_LAMBDA, ps, F, rows, ctx, constraints,
                 extra_params={"sign": s})


def _build_hyp_iii_xi_tau(raw):
    ps = _Params(
        FamilyId.HYP_III_XI_TAU, raw,
        numeric={
            "eta": (0.5, 2.0),
            "xi": (0.3, 0.7),
            "tau": (3.5, 5.0),
        },
    )
    ps.nonzero("eta")
    xi_v = ps.value("xi")
    tau_v = ps.value("tau")
    if xi_v is not None and tau_v is not None and xi_v == 0.0 and abs(tau_v) < _EPS:
        raise ConstraintError("xi^2 + tau^2 != 0", "xi = tau = 0 is the zero family")

    eta = ps.expr("eta")
    xi = ps.expr("xi")
    tau = ps.expr("tau")

    if xi_v == 0.0:
        # integral of 1/tau dz1
        g = simplify(Z1 / tau)
        constraints = (parse("eta^2"), parse("tau^2"))
    else:
        # integral of 1/(xi z1 + tau) dz1
        g = simplify(_fun("log", simplify(xi * Z1 + tau)) / xi)
        constraints = (parse("eta^2"), parse("xi^2"), simplify(xi * Z1 + tau))

    F = simplify(xi * Z1 + tau)
    inv_eta = simplify(1 / eta)
    rows = ((g, inv_eta), (eta, Const(0)), (g, inv_eta))
    ctx = EquationContext("hyperbolic", F)
    return _spec(FamilyId.HYP_III_XI_TAU, ps, F, rows, ctx, constraints)


_BUILDERS = {
    FamilyId.SG_BASIC: _build_sg_basic,
    FamilyId.SG_ETA: _build_sg_eta,
    FamilyId.EVO_HLNONZERO: _build_evo_hlnonzero,
    FamilyId.EVO_HLZERO: _build_evo_hlzero,
    FamilyId.HYP_I_GENERAL: lambda raw: _build_hyp_i(raw, qa=False),
    FamilyId.HYP_I_QA: lambda raw: _build_hyp_i(raw, qa=True),
    FamilyId.HYP_II_GAMMA_NE1: _build_hyp_ii_gamma_ne1,
    FamilyId.HYP_II_GAMMA1: _build_hyp_ii_gamma1,
    FamilyId.HYP_III_ZERO: _build_hyp_iii_zero,
    FamilyId.HYP_III_LAMBDA: _build_hyp_iii_lambda,
    FamilyId.HYP_III_XI_TAU: _build_hyp_iii_xi_tau,
}


def build(family, params=None) -> FamilySpec:
    """Construct the coefficient table of one family, validating parameters."""
    if not isinstance(family, FamilyId):
        family = FamilyId.from_name(str(family))
    return _BUILDERS[family](_normalize(params))


def hlpm(f11: Expr, f31: Expr) -> HLPMQuantities:
    """The four z0-derivative combinations classifying evolution tables."""
    f11_z0 = partial(f11, Z0)
    f31_z0 = partial(f31, Z0)
    return HLPMQuantities(
        H=simplify(f11 * f11_z0 - f31 * f31_z0),
        L=simplify(f11 * f31_z0 - f31 * f11_z0),
        P=simplify(f11_z0 * partial(f31_z0, Z0) - f31_z0 * partial(f11_z0, Z0)),
        M=simplify(f31_z0 * f31_z0 - f11_z0 * f11_z0),
    )


def validate_evolution_constraints(spec: FamilySpec):
    """Check the defining relations of an evolution table, named on failure."""
    if spec.id not in (FamilyId.EVO_HLNONZERO, FamilyId.EVO_HLZERO):
        raise ConstraintError(
            "evolution family required", f"{spec.id.value} is not an evolution id")
    (f11, f12), (f21, f22), (f31, f32) = spec.f
    kw = spec.triple.zero_kwargs()

    # second-order necessary conditions: no z2 anywhere, no z1 in the dx row
    for name, e in (("f11", f11), ("f12", f12), ("f22", f22),
                    ("f31", f31), ("f32", f32)):
        for j in jets_of(e):
            if j.dx >= 2 or j.dt >= 1:
                raise ConstraintError("f_ij independent of z2", f"{name} contains {j.name}")
    for name, e in (("f11", f11), ("f31", f31), ("f22", f22)):
        if any(j.dx == 1 for j in jets_of(e)):
            raise ConstraintError(f"{name} independent of z1", to_text(e))

    q = hlpm(f11, f31)
    nc2 = is_zero(simplify(partial(f11, Z0) ** 2 + partial(f31, Z0) ** 2), **kw)
    if nc2.status != "nonzero":
        raise ConstraintError("f11_z0^2 + f31_z0^2 != 0", str(nc2))

    lines = []
    eta = Param("eta")
    if spec.id is FamilyId.EVO_HLNONZERO:
        for name, e in (("P = 0", q.P),
                        ("M = -L^2/eta^2", simplify(q.M + q.L * q.L / (eta * eta)))):
            v = is_zero(e, **kw)
            if not v:
                raise ConstraintError(name, str(v))
            lines.append(f"{name}: {v.status}")
        hl = is_zero(simplify(q.H * q.L), **kw)
        if hl.status != "nonzero":
            raise ConstraintError("H*L != 0", str(hl))
        lines.append("H*L != 0: confirmed")
    else:
        v = is_zero(q.L, **kw)
        if not v:
            raise ConstraintError("L = 0", str(v))
        lines.append(f"L = 0: {v.status}")
        s = spec.params.get("sign", 1)
        for name, e in ((f"f31 = {s:+d}*f11", simplify(f31 - Const(s) * f11)),
                        (f"f32 = {s:+d}*f12", simplify(f32 - Const(s) * f12))):
            v = is_zero(e, **kw)
            if not v:
                raise ConstraintError(name, str(v))
            lines.append(f"{name}: {v.status}")
        if jets_of(f22):
            raise ConstraintError("f22 = lambda, a constant", to_text(f22))
    spec.report.extend(lines)
    return q


def generate_F(spec: FamilySpec) -> Expr:
    """The right-hand side the table forces; identical to spec.F."""
    return spec.F


# ------------------------------------------------------------ random draws

_EVO_F11_POOL = ("z0", "exp(z0)", "2*z0 + 1", "z0 + z0^3/3")
_EVO_F22_POOL = ("z0", "exp(z0)", "z0/2 + 2")
_EVO_F12_POOL = ("exp(z0)*z1", "z0*z1 + 2*z1", "z1 + z1*exp(z0)")


def sample_params(family, rng=None, seed=None) -> dict:
    """One admissible random parameter draw for the family."""
    if not isinstance(family, FamilyId):
        family = FamilyId.from_name(str(family))
    if rng is None:
        rng = np.random.default_rng(seed)

    def u(lo, hi):
        return float(rng.uniform(lo, hi))

    sign = 1 if rng.random() < 0.5 else -1
    if family is FamilyId.SG_BASIC:
        return {}
    if family is FamilyId.SG_ETA:
        return {"eta": u(0.5, 2.0)}
    if family is FamilyId.EVO_HLNONZERO:
        return {
            "eta": u(0.5, 2.0),
            "alpha": u(-0.7, 0.7),
            "sign": sign,
            "f11": str(rng.choice(_EVO_F11_POOL)),
            "f22": str(rng.choice(_EVO_F22_POOL)),
        }
    if family is FamilyId.EVO_HLZERO:
        return {
            "eta": u(0.5, 2.0),
            "lambda": u(0.5, 1.5),
            "sign": sign,
            "f11": str(rng.choice(_EVO_F11_POOL)),
            "f12": str(rng.choice(_EVO_F12_POOL)),
        }
    if family is FamilyId.HYP_I_GENERAL:
        if rng.random() < 0.5:
            return {"eta": u(0.5, 2.0), "A": u(1.3, 2.0), "B": u(0.2, 0.9),
                    "Q": u(-0.8, 0.8), "fkind": str(rng.choice(("sin", "cos")))}
        return {"eta": u(0.5, 2.0), "A": u(0.2, 0.9), "B": u(1.3, 2.0),
                "Q": u(-0.8, 0.8), "fkind": str(rng.choice(("sinh", "cosh")))}
    if family is FamilyId.HYP_I_QA:
        return {"eta": u(0.5, 2.0), "A": u(0.8, 2.0), "Q": u(-0.8, 0.8),
                "fkind": str(rng.choice(("sin", "cos")))}
    if family is FamilyId.HYP_II_GAMMA_NE1:
        return {"eta": u(0.5, 2.0), "gamma": u(1.3, 2.2), "delta": u(0.6, 1.4),
                "nu": u(0.5, 1.5), "beta": u(0.5, 1.5), "B": u(0.3, 1.0),
                "sign": sign}
    if family is FamilyId.HYP_II_GAMMA1:
        return {"eta": u(0.5, 2.0), "delta": u(0.6, 1.4), "nu": u(0.5, 1.5),
                "A": u(0.8, 1.6), "sign": sign}
    if family is FamilyId.HYP_III_ZERO:
        return {"eta": u(0.5, 2.0)}
    if family is FamilyId.HYP_III_LAMBDA:
        return {"eta": u(0.5, 2.0), "lambda": u(0.5, 1.5), "xi": u(-0.5, 0.5),
                "tau": u(-1.0, 1.0), "T": u(0.5, 1.5), "sign": sign}
    if family is FamilyId.HYP_III_XI_TAU:
        if rng.random() < 0.25:
            return {"eta": u(0.5, 2.0), "xi": 0.0, "tau": u(0.5, 1.5)}
        return {"eta": u(0.5, 2.0), "xi": u(0.3, 0.7), "tau": u(3.5, 5.0)}
    raise ValueError(family)


# --------------------------------------------------------------- manifests

def format_manifest(spec: FamilySpec) -> str:
    lines = [f"family = {spec.id.value}"]
    for key in sorted(spec.params):
        v = spec.params[key]
        lines.append(f"param.{key} = {v}")
    return "\n".join(lines) + "\n"


def parse_manifest(text: str):
    """Read `family = <id>` plus `param.<name> = <value>` lines."""
    family = None
    params = {}
    for n, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"manifest line {n}: expected key = value, got {rawline!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "family":
            family = FamilyId.from_name(value)
        elif key.startswith("param."):
            name = key[len("param."):]
            try:
                params[name] = float(value)
            except ValueError:
                params[name] = value
        elif key in ("f11", "f12", "f22", "f31"):
            params[key] = value
        else:
            raise ValueError(f"manifest line {n}: unknown key {key!r}")
    if family is None:
        raise ValueError("manifest does not name a family")
    return family, params
