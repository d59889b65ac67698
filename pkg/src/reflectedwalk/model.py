"""Increment distributions, their Laplace transform, and exponential tilting.

Two families are supported: finite lattice tables and Gaussians.  Both have a
moment generating function that is finite everywhere, so for any model with
negative mean and some mass on positive values there is a unique positive root
of mgf(theta) = 1.  Reweighting the law by exp(theta * x) turns the negative
drift into positive drift while keeping paths comparable through the
likelihood ratio exp(theta * S_n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from reflectedwalk.errors import (
    InfiniteMgf,
    NoPositiveDrift,
    NoRoot,
    SpecParseError,
)

_PROB_TOL = 1e-12
_SPAN_GRID = 1e-9
# Spans below this are treated as "no common lattice" rather than a real span;
# they only arise from incommensurable support values.
_SPAN_FLOOR = 1e-6

_EXP_OVERFLOW = 709.0


@dataclass(frozen=True)
class DiscreteTable:
    """Finite support distribution with strictly increasing values."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        if not values or len(values) != len(probs):
            raise ValueError("values and probs must be nonempty and of equal length")
        if any(p < 0.0 for p in probs):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities must sum to 1, got {sum(probs)!r}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("values must be strictly increasing with no duplicates")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma", float(self.sigma))


IncrementModel = DiscreteTable | Gaussian


@dataclass(frozen=True)
class TiltedModel:
    """The positive root theta_star, the tilted increment law, and its mean."""

    theta_star: float
    tilted: IncrementModel
    mu_star: float


def mean(model: IncrementModel) -> float:
    if isinstance(model, Gaussian):
        return model.mu
    return float(np.dot(model.values, model.probs))


def mgf(model: IncrementModel, theta: float) -> float:
    """E[exp(theta * X)]; returns math.inf on overflow instead of raising."""
    if isinstance(model, Gaussian):
        expo = model.mu * theta + 0.5 * model.sigma**2 * theta**2
        return math.inf if expo > _EXP_OVERFLOW else math.exp(expo)
    expos = theta * np.asarray(model.values)
    if np.max(expos) > _EXP_OVERFLOW:
        return math.inf
    return float(np.dot(model.probs, np.exp(expos)))


def mgf_prime(model: IncrementModel, theta: float) -> float:
    """d/dtheta of the mgf, exact for both families."""
    if isinstance(model, Gaussian):
        return (model.mu + model.sigma**2 * theta) * mgf(model, theta)
    expos = theta * np.asarray(model.values)
    if np.max(expos) > _EXP_OVERFLOW:
        return math.inf
    return float(np.dot(np.asarray(model.probs) * np.asarray(model.values), np.exp(expos)))


def tilt(model: IncrementModel, theta: float) -> IncrementModel:
    """Reweight the law by exp(theta * x) / mgf(theta)."""
    if isinstance(model, Gaussian):
        return Gaussian(model.mu + model.sigma**2 * theta, model.sigma)
    phi = mgf(model, theta)
    if not math.isfinite(phi):
        raise InfiniteMgf(f"mgf overflows at theta={theta}")
    weights = np.asarray(model.probs) * np.exp(theta * np.asarray(model.values))
    return DiscreteTable(model.values, tuple(weights / phi))


def solve_theta_star(model: IncrementModel, tol: float = 1e-12) -> TiltedModel:
    """Unique positive root of mgf(theta) = 1, found by bracketing + bisection.

    Bisection is preferred over Newton: the mgf is convex with mgf(0) = 1 and
    negative slope at 0, so once a bracket [lo, hi] with mgf(hi) > 1 is found,
    convergence is unconditional.
    """
    mu = mean(model)
    if mu >= 0.0:
        raise NoPositiveDrift(f"mean {mu} is not negative")
    if isinstance(model, DiscreteTable) and max(model.values) <= 0.0:
        # mean < 0 but mgf strictly decreasing on theta > 0: no root.
        raise NoRoot("no positive support point; mgf(theta)=1 has no positive root")

    hi = 1e-9
    while mgf(model, hi) <= 1.0:
        hi *= 2.0
        if hi > 1e18:  # pragma: no cover - unreachable for valid models
            raise NoRoot("failed to bracket a root of mgf(theta)=1")
    lo = 0.0 if hi == 1e-9 else hi / 2.0
    theta = 0.5 * (lo + hi)
    for _ in range(500):
        phi = mgf(model, theta)
        if abs(phi - 1.0) <= tol:
            break
        if phi > 1.0:
            hi = theta
        else:
            lo = theta
        new = 0.5 * (lo + hi)
        if new == theta:
            break
        theta = new
    # Newton polish: a few steps from the bisection root take the residual
    # |mgf(theta) - 1| down to machine precision, which matters downstream
    # because exp(theta * u) amplifies any root error linearly in u.
    for _ in range(8):
        phi = mgf(model, theta)
        slope = mgf_prime(model, theta)
        if slope <= 0.0:  # pragma: no cover - convexity guarantees slope > 0 at root
            break
        step = (phi - 1.0) / slope
        if theta - step <= 0.0:
            break
        theta -= step
        if abs(step) <= 1e-16 * theta:
            break
    return TiltedModel(theta_star=theta, tilted=tilt(model, theta), mu_star=mgf_prime(model, theta))


def sample(model: IncrementModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. draws; deterministic given the generator state."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if isinstance(model, Gaussian):
        return rng.normal(model.mu, model.sigma, size=n)
    return rng.choice(np.asarray(model.values), size=n, p=np.asarray(model.probs))


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    return Fraction(
        math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
        a.denominator * b.denominator,
    )


def lattice_span(model: IncrementModel) -> float | None:
    """Largest delta with all support values in delta * Z, or None.

    Values are snapped to a 1e-9 grid (rational reconstruction) before taking
    the gcd, which supports user-entered decimal scores; incommensurable
    supports come out with an absurdly small gcd and are reported as None.
    """
    if isinstance(model, Gaussian):
        return None
    fracs = []
    for v in model.values:
        f = Fraction(v).limit_denominator(10**9)
        if abs(float(f) - v) > _SPAN_GRID:
            return None
        fracs.append(abs(f))
    nonzero = [f for f in fracs if f != 0]
    if not nonzero:
        return None
    g = nonzero[0]
    for f in nonzero[1:]:
        g = _frac_gcd(g, f)
    span = float(g)
    if span < _SPAN_FLOOR:
        return None
    return span


def lattice_index(x: float, span: float, what: str = "value") -> int:
    """Integer k with x == k * span within grid tolerance, else ValueError."""
    k = round(x / span)
    if abs(x - k * span) > _SPAN_GRID:
        raise ValueError(f"{what} {x} is not a multiple of the lattice span {span}")
    return k


def parse_distribution(spec: str) -> IncrementModel:
    """Parse ``table:v1:p1,v2:p2,...`` or ``gauss:mu=<r>,sigma=<r>``."""
    spec = spec.strip()
    if spec.startswith("table:"):
        body = spec[len("table:"):]
        pairs = []
        for part in body.split(","):
            bits = part.split(":")
            if len(bits) != 2:
                raise SpecParseError(f"bad table entry {part!r} in {spec!r}; expected v:p")
            try:
                pairs.append((float(bits[0]), float(bits[1])))
            except ValueError as exc:
                raise SpecParseError(f"bad number in table entry {part!r}") from exc
        pairs.sort(key=lambda vp: vp[0])
        try:
            return DiscreteTable(tuple(v for v, _ in pairs), tuple(p for _, p in pairs))
        except ValueError as exc:
            raise SpecParseError(str(exc)) from exc
    if spec.startswith("gauss:"):
        body = spec[len("gauss:"):]
        params = {}
        for part in body.split(","):
            bits = part.split("=")
            if len(bits) != 2 or bits[0] not in ("mu", "sigma"):
                raise SpecParseError(f"bad gaussian parameter {part!r} in {spec!r}")
            try:
                params[bits[0]] = float(bits[1])
            except ValueError as exc:
                raise SpecParseError(f"bad number in {part!r}") from exc
        if set(params) != {"mu", "sigma"}:
            raise SpecParseError(f"gaussian spec needs both mu and sigma: {spec!r}")
        try:
            return Gaussian(params["mu"], params["sigma"])
        except ValueError as exc:
            raise SpecParseError(str(exc)) from exc
    raise SpecParseError(f"unknown distribution spec {spec!r}; expected table:... or gauss:...")


def format_distribution(model: IncrementModel) -> str:
    if isinstance(model, Gaussian):
        return f"gauss:mu={model.mu!r},sigma={model.sigma!r}"
    return "table:" + ",".join(f"{v!r}:{p!r}" for v, p in zip(model.values, model.probs))
