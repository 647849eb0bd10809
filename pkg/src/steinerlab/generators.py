"""Generator functions phi (concave class) and psi (convex class).

A generator knows the ambient dimension n because the transform it is
judged by, t -> gen(t**(n+1)), depends on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InputError

CONC = "Conc"
CONV = "Conv"
FAMILIES = ("PowerConc", "PowerConv", "Constant", "Tabulated")

PROBE_LO, PROBE_HI, PROBE_COUNT = 1e-6, 1e6, 200
REL_TOL = 1e-10


class Generator:
    """Immutable generator; call it on arrays for fast unchecked evaluation."""

    __slots__ = ("family", "n", "p", "c", "knots", "values", "class_tag", "_interp", "_ends")

    def __init__(self, family: str, n: int, *, p: float | None = None, c: float | None = None,
                 knots=None, values=None, class_tag: str | None = None):
        if family not in FAMILIES:
            raise InputError(f"unknown generator family {family!r}")
        if int(n) < 2:
            raise InputError("dimension must be at least 2")
        set_ = object.__setattr__
        set_(self, "family", family)
        set_(self, "n", int(n))
        set_(self, "p", None if p is None else float(p))
        set_(self, "c", None if c is None else float(c))
        set_(self, "knots", None)
        set_(self, "values", None)
        set_(self, "_interp", None)
        set_(self, "_ends", None)
        if family == "PowerConc":
            if not self.p > 0:
                raise InputError("PowerConc needs p > 0 (p = inf allowed)")
            tag = CONC
        elif family == "PowerConv":
            if not -self.n < self.p < 0:
                raise InputError("PowerConv needs p in (-n, 0)")
            tag = CONV
        elif family == "Constant":
            if self.c is None or not self.c > 0:
                raise InputError("Constant needs c > 0")
            tag = CONC
        else:
            tag = class_tag
            if tag not in (CONC, CONV):
                raise InputError("Tabulated generators need class_tag 'Conc' or 'Conv'")
            self._setup_table(knots, values)
        if class_tag is not None and class_tag != tag:
            raise InputError(f"{family} generators are always {tag}")
        set_(self, "class_tag", tag)

    def __setattr__(self, name, value):
        raise AttributeError("Generator is immutable")

    def _setup_table(self, knots, values):
        t = np.asarray(knots, dtype=float).ravel()
        v = np.asarray(values, dtype=float).ravel()
        if t.size < 2 or t.size != v.size:
            raise InputError("need at least two knots with matching values")
        if np.any(t <= 0) or np.any(np.diff(t) <= 0) or np.any(v <= 0):
            raise InputError("knots must be positive and increasing, values positive")
        lt, lv = np.log(t), np.log(v)
        interp = PchipInterpolator(lt, lv, extrapolate=False)
        d = interp.derivative()
        ends = (lt[0], lv[0], float(d(lt[0])), lt[-1], lv[-1], float(d(lt[-1])))
        set_ = object.__setattr__
        set_(self, "knots", tuple(t.tolist()))
        set_(self, "values", tuple(v.tolist()))
        set_(self, "_interp", interp)
        set_(self, "_ends", ends)

    # -- evaluation -----------------------------------------------------------
    @property
    def exponent(self) -> float | None:
        """a in gen(t) = t^a for power families (1 for p = inf)."""
        if self.family in ("PowerConc", "PowerConv"):
            return 1.0 if math.isinf(self.p) else self.p / (self.n + self.p)
        if self.family == "Constant":
            return 0.0
        return None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "Constant":
            return np.full(t.shape, self.c)
        if self.family in ("PowerConc", "PowerConv"):
            a = self.exponent
            with np.errstate(divide="ignore", over="ignore"):
                return np.where(t > 0, np.power(np.where(t > 0, t, 1.0), a), 0.0 if a > 0 else np.inf)
        return self._tab(t)

    def _tab(self, t):
        lt0, lv0, s0, lt1, lv1, s1 = self._ends
        with np.errstate(divide="ignore"):
            lt = np.log(np.where(t > 0, t, 1.0))
        inner = self._interp(np.clip(lt, lt0, lt1))
        lv = np.where(lt < lt0, lv0 + s0 * (lt - lt0), np.where(lt > lt1, lv1 + s1 * (lt - lt1), inner))
        out = np.exp(lv)
        zero_val = 0.0 if self.class_tag == CONC else np.inf
        return np.where(t > 0, out, zero_val)

    def eval(self, t):
        """gen(t) for t >= 0; gen(0) is 0 for Conc and +inf for Conv."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(np.isnan(t)):
            raise InputError("generators are defined for t >= 0 only")
        out = self(t)
        return float(out) if out.ndim == 0 else out

    def transform_eval(self, t):
        """F(t) = phi(t^{n+1}) or G(t) = psi(t^{n+1})."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(np.isnan(t)):
            raise InputError("generators are defined for t >= 0 only")
        out = self(t ** (self.n + 1))
        return float(out) if out.ndim == 0 else out

    # -- identity -------------------------------------------------------------
    @property
    def name(self) -> str:
        if self.family == "PowerConc" and self.p is not None and math.isinf(self.p):
            return "p=inf"
        if self.family in ("PowerConc", "PowerConv"):
            return f"p={_fmt(self.p)}"
        if self.family == "Constant":
            return f"const={_fmt(self.c)}"
        return f"tab:{self.class_tag}:{len(self.knots)}"

    def to_dict(self) -> dict:
        d = {"family": self.family, "n": self.n}
        if self.family in ("PowerConc", "PowerConv"):
            d["p"] = "inf" if math.isinf(self.p) else self.p
        elif self.family == "Constant":
            d["c"] = self.c
        else:
            d.update(class_tag=self.class_tag, knots=list(self.knots), values=list(self.values))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Generator":
        fam = d.get("family")
        p = d.get("p")
        if p == "inf":
            p = math.inf
        return cls(fam, d["n"], p=p, c=d.get("c"), knots=d.get("knots"), values=d.get("values"),
                   class_tag=d.get("class_tag") if fam == "Tabulated" else None)

    def with_dim(self, n: int) -> "Generator":
        d = self.to_dict()
        d["n"] = n
        return Generator.from_dict(d)

    def __eq__(self, other):
        return isinstance(other, Generator) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(sorted(self.to_dict().items())))

    def __repr__(self):
        return f"Generator({self.family}, {self.name}, n={self.n})"


def _fmt(x: float) -> str:
    return repr(float(x)).rstrip("0").rstrip(".") if x != int(x) else str(int(x))


def power_conc(p: float, n: int) -> Generator:
    return Generator("PowerConc", n, p=p)


def power_conv(p: float, n: int) -> Generator:
    return Generator("PowerConv", n, p=p)


def constant(c: float, n: int) -> Generator:
    return Generator("Constant", n, c=c)


def tabulated(knots, values, n: int, class_tag: str) -> Generator:
    return Generator("Tabulated", n, knots=knots, values=values, class_tag=class_tag)


def lp_generator(p: float, n: int) -> Generator:
    """The generator t^{p/(n+p)} for p in (-n, 0) or (0, inf]."""
    if p == 0 or p == -n:
        raise InputError("p must differ from 0 and -n")
    if p > 0:
        return power_conc(p, n)
    if p > -n:
        return power_conv(p, n)
    raise InputError("p must lie in (-n, 0) or (0, inf]")


def parse_generator(spec: str | dict, n: int) -> Generator:
    """Build a generator from a name like 'p=0.5', 'p=-1', 'p=inf', 'const=2' or a dict."""
    if isinstance(spec, dict):
        d = dict(spec)
        d.setdefault("n", n)
        return Generator.from_dict(d)
    s = str(spec).strip().replace(" ", "")
    if s.startswith("p="):
        v = s[2:]
        return lp_generator(math.inf if v in ("inf", "+inf") else float(v), n)
    if s.startswith("const="):
        return constant(float(s[6:]), n)
    raise InputError(f"cannot parse generator {spec!r}")


# --------------------------------------------------------------------------
# Class validation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassReport:
    class_tag: str
    in_class: bool
    monotone: bool
    transform_ok: bool
    transform_monotone: bool
    strict: bool
    reasons: tuple[str, ...] = field(default_factory=tuple)

    @property
    def phi_in_Conc(self) -> bool:
        return self.class_tag == CONC and self.in_class

    @property
    def psi_in_Conv(self) -> bool:
        return self.class_tag == CONV and self.in_class

    @property
    def F_concave(self) -> bool:
        return self.class_tag == CONC and self.transform_ok

    @property
    def G_convex(self) -> bool:
        return self.class_tag == CONV and self.transform_ok

    @property
    def hypotheses_hold(self) -> bool:
        """Class conditions plus a monotone, concave F (Conc) or convex G (Conv) on the probe grid."""
        return self.in_class and self.transform_ok and self.transform_monotone

    def to_dict(self) -> dict:
        return {"class_tag": self.class_tag, "in_class": self.in_class, "monotone": self.monotone,
                "transform_ok": self.transform_ok, "transform_monotone": self.transform_monotone,
                "strict": self.strict, "reasons": list(self.reasons)}


def probe_grid() -> np.ndarray:
    return np.logspace(math.log10(PROBE_LO), math.log10(PROBE_HI), PROBE_COUNT)


def _second_gaps(t, v):
    """v(t1) minus the chord value at t1 for consecutive triples, and the local scale."""
    t0, t1, t2 = t[:-2], t[1:-1], t[2:]
    v0, v1, v2 = v[:-2], v[1:-1], v[2:]
    chord = (v0 * (t2 - t1) + v2 * (t1 - t0)) / (t2 - t0)
    scale = np.maximum.reduce([np.abs(v0), np.abs(v1), np.abs(v2)])
    return v1 - chord, scale


def _concavity(t, v, sign):
    """sign=+1 tests concavity, -1 convexity; returns (holds, strict)."""
    if not np.all(np.isfinite(v)):
        return False, False
    gap, scale = _second_gaps(t, sign * v)
    holds = bool(np.all(gap >= -REL_TOL * scale))
    strict = bool(np.all(gap > REL_TOL * scale))
    return holds, strict


def _monotone(v, sign):
    d = sign * np.diff(v)
    scale = np.maximum(np.abs(v[:-1]), np.abs(v[1:]))
    return bool(np.all(d >= -REL_TOL * scale))


def validate_class(gen: Generator) -> ClassReport:
    """Probe gen and its transform on 200 log-spaced points in [1e-6, 1e6]."""
    t = probe_grid()
    v = gen(t)
    T = gen(t ** (gen.n + 1))
    reasons = []
    if gen.class_tag == CONC:
        monotone = _monotone(v, +1)
        shape, _ = _concavity(t, v, +1)
        lo, hi = v[0] / t[0], v[-1] / t[-1]
        sublinear = bool(hi <= 1e-3 * lo)
        if not monotone:
            reasons.append("phi not increasing")
        if not shape:
            reasons.append("phi not concave")
        if not sublinear:
            reasons.append("phi(t)/t does not decay")
        in_class = monotone and shape and sublinear and bool(np.all(v >= 0))
        t_ok, strict = _concavity(t, T, +1)
        t_mono = _monotone(T, +1)
        if not t_ok:
            reasons.append("F not concave")
        if not t_mono:
            reasons.append("F not increasing")
    else:
        monotone = _monotone(v, -1)
        shape, _ = _concavity(t, v, -1)
        psi1 = float(gen(np.array(1.0)))
        blowup = bool(v[0] >= 10 * psi1)
        decay = bool(v[-1] <= psi1 / 10)
        if not monotone:
            reasons.append("psi not decreasing")
        if not shape:
            reasons.append("psi not convex")
        if not blowup:
            reasons.append("psi does not blow up at 0")
        if not decay:
            reasons.append("psi does not decay at infinity")
        in_class = monotone and shape and blowup and decay
        # G spans many decades; probe it on the sub-range where it stays finite and normal.
        T_finite = np.isfinite(T) & (T > 1e-300)
        t_ok, strict = _concavity(t[T_finite], T[T_finite], -1)
        t_mono = _monotone(T[T_finite], -1)
        if not t_ok:
            reasons.append("G not convex")
        if not t_mono:
            reasons.append("G not decreasing")
    return ClassReport(gen.class_tag, in_class, monotone, t_ok, t_mono, strict, tuple(reasons))


def power_transform_concave(p: float, n: int) -> bool:
    """Closed form: t^{(n+1)a} with a = p/(n+p) is concave iff a <= 1/(n+1), i.e. p <= 1."""
    return p <= 1
