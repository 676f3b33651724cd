"""Second fundamental forms compatible with a coefficient table.

A surface patch carries ac - b^2 = -1 (Gauss) and a pair of first-order
compatibility equations (Codazzi) tying (a, b, c) to the table.  This
module holds the closed-form solutions, the open strips they live on,
and the residual computations used to check them.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..catalog import ConstraintError, FamilyId, FamilySpec, build
from ..expr import (
    Const,
    Expr,
    Param,
    T,
    X,
    evaluate,
    is_zero,
    jets_of,
    parse,
    partial,
    simplify,
    sqrt,
    to_text,
    total_t,
    total_x,
    z,
)
from ..expr.nodes import Fun
from ..forms import PssTriple, delta

Z0 = z(0)


class NoImmersion(ValueError):
    """No second fundamental form of finite jet order exists for the table."""


@dataclass(frozen=True)
class DomainStrip:
    """Open strip lower < sign*(p*x + q*t) < upper in the (x, t) plane.

    The bounds come from requiring a^2 = l*E - gamma_im^2*E^2 - 1 > 0 with
    E = exp(2*sign*(p*x + q*t)); l > 0 and l^2 > 4*gamma_im^2 make the
    strip nonempty.
    """

    sign: int
    p: Expr
    q: Expr
    l: float
    gamma_im: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ConstraintError("sign", f"strip sign must be +1 or -1, got {self.sign}")
        if not self.l > 0:
            raise ConstraintError("l > 0", f"l = {self.l}")
        if not self.l ** 2 > 4 * self.gamma_im ** 2:
            raise ConstraintError(
                "l^2 > 4*gamma_im^2", f"l = {self.l}, gamma_im = {self.gamma_im}")

    @property
    def lower(self) -> float:
        g2 = self.gamma_im ** 2
        if g2 == 0.0:
            return -0.5 * math.log(self.l)
        disc = math.sqrt(self.l ** 2 - 4 * g2)
        return 0.5 * math.log((self.l - disc) / (2 * g2))

    @property
    def upper(self) -> float:
        g2 = self.gamma_im ** 2
        if g2 == 0.0:
            return math.inf
        disc = math.sqrt(self.l ** 2 - 4 * g2)
        return 0.5 * math.log((self.l + disc) / (2 * g2))

    def form(self) -> Expr:
        return simplify(Const(self.sign) * (self.p * X + self.q * T))

    def coefficients(self, params=None):
        env = dict(self.params)
        env.update(params or {})
        return evaluate(self.p, env), evaluate(self.q, env)

    def constraint_exprs(self, margin_pad=0.0):
        # for rejection sampling: both must stay positive inside the strip
        s = self.form()
        out = [simplify(s - Const(self.lower + margin_pad))]
        if math.isfinite(self.upper):
            out.append(simplify(Const(self.upper - margin_pad) - s))
        return tuple(out)


def strip_contains(strip: DomainStrip, x, t, params=None):
    """Whether (x, t) lies strictly inside the strip; arrays broadcast."""
    pv, qv = strip.coefficients(params)
    s = strip.sign * (pv * np.asarray(x, dtype=float) + qv * np.asarray(t, dtype=float))
    inside = (s > strip.lower) & (s < strip.upper)
    if np.isscalar(x) and np.isscalar(t):
        return bool(inside)
    return inside


def sample_strip_points(strip: DomainStrip, n, rng=None, params=None, margin=0.05):
    """n points (x, t) strictly inside the strip, t drawn in [-2, 2]."""
    if rng is None:
        rng = np.random.default_rng(0)
    pv, qv = strip.coefficients(params)
    if abs(pv) < 1e-12:
        raise ConstraintError("p != 0", "strip form does not involve x")
    hi = strip.upper if math.isfinite(strip.upper) else strip.lower + 5.0
    s = rng.uniform(strip.lower + margin, hi - margin, size=n)
    t = rng.uniform(-2.0, 2.0, size=n)
    x = (s / strip.sign - qv * t) / pv
    return x, t


@dataclass(frozen=True)
class SecondFundamentalForm:
    a: Expr
    b: Expr
    c: Expr
    jet_order: object = None  # max z-jet order, None when none appear
    strip: DomainStrip = None
    params: dict = field(default_factory=dict)
    constraints: tuple = ()
    label: str = ""

    def as_tuple(self):
        return (self.a, self.b, self.c)


def _numeric_params(d):
    out = {}
    for k, v in (d or {}).items():
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            out[k] = float(v)
    return out


def jet_order_of(*exprs):
    order = None
    for e in exprs:
        for j in jets_of(e):
            k = j.dx if j.dt == 0 else j.dx + j.dt
            order = k if order is None else max(order, k)
    return order


def gauss_residual(sff: SecondFundamentalForm) -> Expr:
    """ac - b^2 + 1; identically zero exactly when Gauss holds."""
    return simplify(sff.a * sff.c - sff.b * sff.b + Const(1))


def codazzi_residuals(tr: PssTriple, sff: SecondFundamentalForm, reduce=True):
    """The two compatibility residuals; zero mod the equation iff Codazzi holds.

    Derivatives are total in (x, t); with reduce=True mixed jets are
    eliminated through the table's equation context.
    """
    ctx = tr.ctx if reduce else None
    a, b, c = sff.a, sff.b, sff.c
    f11, f12 = tr.f(1, 1), tr.f(1, 2)
    f21, f22 = tr.f(2, 1), tr.f(2, 2)
    d13 = delta(tr, 1, 3)
    d23 = delta(tr, 2, 3)
    e1 = simplify(
        f11 * total_t(a, ctx) + f21 * total_t(b, ctx)
        - f12 * total_x(a, ctx) - f22 * total_x(b, ctx)
        - 2 * b * d13 + (a - c) * d23
    )
    e2 = simplify(
        f11 * total_t(b, ctx) + f21 * total_t(c, ctx)
        - f12 * total_x(b, ctx) - f22 * total_x(c, ctx)
        + (a - c) * d13 + 2 * b * d23
    )
    return e1, e2


@dataclass
class ImmersionReport:
    gauss: object
    codazzi: tuple
    ok: bool

    def lines(self):
        out = [f"gauss residual: {self.gauss}"]
        for k, v in enumerate(self.codazzi, start=1):
            out.append(f"codazzi residual {k}: {v}")
        out.append("immersion data consistent" if self.ok else "immersion data FAILS")
        return out


def verify_immersion(tr: PssTriple, sff: SecondFundamentalForm,
                     n=64, tol=1e-8, seed=1234) -> ImmersionReport:
    """Check Gauss exactly/numerically and Codazzi mod the equation."""
    kw = tr.zero_kwargs()
    kw["constraints"] = tuple(kw.get("constraints", ())) + tuple(sff.constraints)
    kw["params"] = dict(_numeric_params(kw.get("params", {})),
                        **_numeric_params(sff.params))
    kw.update(n=n, tol=tol, seed=seed)
    g = is_zero(gauss_residual(sff), **kw)
    e1, e2 = codazzi_residuals(tr, sff)
    v1 = is_zero(e1, **kw)
    v2 = is_zero(e2, **kw)
    ok = bool(g) and bool(v1) and bool(v2)
    return ImmersionReport(gauss=g, codazzi=(v1, v2), ok=ok)


# ------------------------------------------------------------ closed forms

_IMMERSION_KEYS = ("l", "gamma_im", "sign_im")


def _split_immersion_params(params):
    params = dict(params or {})
    imm = {}
    for key in _IMMERSION_KEYS:
        if key in params:
            imm[key] = params.pop(key)
    return params, imm


def universal_form(strip: DomainStrip, params=None) -> SecondFundamentalForm:
    """The jet-free family a^2 = l*E - gamma_im^2*E^2 - 1, b = gamma_im*E on the strip."""
    return _universal_trio(strip, params or {})


def _universal_trio(strip: DomainStrip, params):
    """a, b, c built from E = exp(2*s); Gauss holds structurally."""
    l = Param("l")
    gam = Param("gamma_im")
    E = simplify(Fun("exp", simplify(2 * strip.form())))
    a = simplify(sqrt(l * E - gam * gam * E * E - 1))
    b = simplify(gam * E)
    c = simplify((b * b - 1) / a)
    merged = _numeric_params(params)
    merged.update({"l": strip.l, "gamma_im": strip.gamma_im})
    return SecondFundamentalForm(
        a=a, b=b, c=c, jet_order=None, strip=strip, params=merged,
        constraints=strip.constraint_exprs(margin_pad=0.02),
    )


def closed_form(family, params=None) -> SecondFundamentalForm:
    """The classified second fundamental form for the family, or NoImmersion.

    params may carry the family parameters together with the immersion
    constants l, gamma_im and the flag sign_im.
    """
    if isinstance(family, FamilySpec):
        spec = family
        fam_params, imm = _split_immersion_params(params)
        if fam_params:
            raise ValueError("family parameters must be given when building the FamilySpec")
    else:
        fam_params, imm = _split_immersion_params(params)
        spec = build(family, fam_params)
    fam = spec.id
    s_im = 1 if imm.get("sign_im", 1) in (1, 1.0, "+", "+1") else -1
    l_v = float(imm.get("l", 4.0))
    g_v = float(imm.get("gamma_im", 1.0))

    if fam is FamilyId.SG_BASIC:
        a = simplify(Const(s_im) * parse("sin(z0/2)") / parse("cos(z0/2)"))
        c = simplify(-Const(s_im) * parse("cos(z0/2)") / parse("sin(z0/2)"))
        return SecondFundamentalForm(
            a=a, b=Const(0), c=c, jet_order=0,
            params=dict(spec.params),
            constraints=(parse("sin(z0)^2"),), label="sg-basic")

    if fam in (FamilyId.SG_ETA, FamilyId.HYP_I_QA, FamilyId.HYP_I_GENERAL):
        return _qa_closed_form(spec, s_im)

    if fam is FamilyId.EVO_HLZERO:
        strip = DomainStrip(sign=spec.params["sign"], p=Param("eta"),
                            q=Param("lambda"), l=l_v, gamma_im=g_v,
                            params=_numeric_params(spec.params))
        sff = _universal_trio(strip, spec.params)
        return _with_label(sff, "evo-hlzero universal")

    if fam is FamilyId.HYP_III_LAMBDA:
        # the strip form's t-coefficient is the table's f22 = lambda/eta -/+ xi
        strip = DomainStrip(sign=spec.params["sign"], p=Param("eta"),
                            q=spec.f[1][1], l=l_v, gamma_im=g_v,
                            params=_numeric_params(spec.params))
        sff = _universal_trio(strip, spec.params)
        return _with_label(sff, "linear-equation universal")

    if fam is FamilyId.HYP_III_XI_TAU:
        strip = DomainStrip(sign=1, p=Param("eta"), q=Const(0), l=l_v,
                            gamma_im=g_v, params=_numeric_params(spec.params))
        sff = _universal_trio(strip, spec.params)
        return _with_label(sff, "integrable-table universal")

    if fam is FamilyId.EVO_HLNONZERO:
        raise NoImmersion(
            "coefficients of any finite jet order force f11_z0 = 0, "
            "contradicting the table")
    if fam is FamilyId.HYP_II_GAMMA_NE1:
        raise NoImmersion(
            "the compatibility equations force "
            "(B^2 - A^2*gamma)*z1^2 - A^2*beta = 0, which no admissible "
            "parameters satisfy")
    if fam is FamilyId.HYP_II_GAMMA1:
        raise NoImmersion(
            "coefficients must be independent of the jets, and then b = 0 "
            "with a = c contradicts ac - b^2 = -1")
    if fam is FamilyId.HYP_III_ZERO:
        raise NoImmersion(
            "coefficients must be independent of the jets, and then b = 0 "
            "with a = c contradicts ac - b^2 = -1")
    raise NoImmersion(f"no classified second fundamental form for {fam.value}")


def _with_label(sff: SecondFundamentalForm, label):
    return SecondFundamentalForm(
        a=sff.a, b=sff.b, c=sff.c, jet_order=sff.jet_order, strip=sff.strip,
        params=sff.params, constraints=sff.constraints, label=label)


def _qa_closed_form(spec: FamilySpec, s_im) -> SecondFundamentalForm:
    """Zero-jet-order coefficients for the quadratic-argument tables."""
    fam = spec.id
    eta = Param("eta")
    if fam is FamilyId.SG_ETA:
        A = Const(-1)
        Q = Const(0)
        F = parse("sin(z0)")
    else:
        if fam is FamilyId.HYP_I_GENERAL:
            if spec.params.get("B", None) != 0.0:
                if spec.params.get("fkind") in ("sinh", "cosh"):
                    raise NoImmersion(
                        "no immersion of finite jet order exists when the "
                        "linearizing constant alpha is negative")
                raise NoImmersion(
                    "the compatibility equations admit no finite-jet-order "
                    "coefficients when B != 0")
        if spec.params.get("fkind") in ("sinh", "cosh"):
            raise NoImmersion(
                "no immersion of finite jet order exists when the "
                "linearizing constant alpha is negative")
        A = Param("A")
        Q = Const(0) if spec.params.get("Q") == 0.0 else Param("Q")
        F = spec.F
    Fp = partial(F, Z0)
    s = Const(s_im)
    wden = simplify(Q * Q / (A * A) + eta * eta)
    a = simplify(s * (2 * eta / (A * wden)) * (eta * A * A * Fp / F + Q))
    b = simplify(-s * (1 / wden) * (2 * eta * Q * Fp / F + Q * Q / (A * A) - eta * eta))
    c = simplify(s * (2 * Q / (A * wden)) * (Q * Fp / F - eta))
    constraints = tuple(spec.triple.constraints) + (simplify(F * F),)
    params = dict(spec.params)
    params.pop("fkind", None)
    return SecondFundamentalForm(
        a=a, b=b, c=c, jet_order=0, params=params,
        constraints=constraints, label="zero-jet-order coefficients")
