"""Latency and send-interval samplers.

Every sampler draws its uniforms from an :class:`~snapsim.engine.RngStream`
(or anything with a ``uniform()`` method returning a value in (0, 1]), so
tests can drive them with scripted uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Union


class InvalidParameters(ValueError):
    pass


class UniformSource(Protocol):
    def uniform(self) -> float: ...
    def gauss(self, mu: float, sigma: float) -> float: ...


@dataclass(frozen=True)
class Poisson:
    lam: float = 10.0


@dataclass(frozen=True)
class Pareto:
    xm: float = 5.0
    alpha: float = 2.5


@dataclass(frozen=True)
class Weibull:
    k: float = 1.5
    lam: float = 10.0


@dataclass(frozen=True)
class Arima:
    p: int = 1
    d: int = 0
    q: int = 1
    ar: tuple[float, ...] = (0.6,)
    ma: tuple[float, ...] = (0.3,)
    mean: float = 10.0
    innovation_sd: float = 2.0


Distribution = Union[Poisson, Pareto, Weibull, Arima]

DEFAULT_FLOOR = 0.1


@dataclass(frozen=True)
class LatencyModel:
    kind: Distribution
    floor: float = DEFAULT_FLOOR

    def __post_init__(self) -> None:
        validate(self)

    @property
    def name(self) -> str:
        return type(self.kind).__name__.lower()


@dataclass(frozen=True)
class Constant:
    gap: float = 100.0


@dataclass(frozen=True)
class PoissonProcess:
    rate: float = 0.01


IntervalModel = Union[Constant, PoissonProcess]


def interval_name(model: IntervalModel) -> str:
    return "constant" if isinstance(model, Constant) else "poisson"


def _positive(**params: float) -> None:
    for name, value in params.items():
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise InvalidParameters(f"{name} must be a positive finite number, got {value!r}")


def validate(model: LatencyModel) -> None:
    _positive(floor=model.floor)
    kind = model.kind
    if isinstance(kind, Poisson):
        _positive(lam=kind.lam)
    elif isinstance(kind, Pareto):
        _positive(xm=kind.xm, alpha=kind.alpha)
        if kind.alpha <= 1:
            raise InvalidParameters("Pareto alpha must exceed 1 (finite mean)")
    elif isinstance(kind, Weibull):
        _positive(k=kind.k, lam=kind.lam)
    elif isinstance(kind, Arima):
        if min(kind.p, kind.d, kind.q) < 0:
            raise InvalidParameters("ARIMA orders must be non-negative")
        if len(kind.ar) != kind.p or len(kind.ma) != kind.q:
            raise InvalidParameters(
                f"ARIMA needs {kind.p} AR and {kind.q} MA coefficients, "
                f"got {len(kind.ar)} and {len(kind.ma)}")
        if not math.isfinite(kind.mean):
            raise InvalidParameters("ARIMA mean must be finite")
        if not (math.isfinite(kind.innovation_sd) and kind.innovation_sd >= 0):
            raise InvalidParameters("ARIMA innovation_sd must be >= 0")
    else:
        raise InvalidParameters(f"unknown latency distribution {kind!r}")


def analytic_mean(kind: Distribution) -> float:
    """Mean of the unclamped distribution (ARMA core mean for ARIMA with d=0)."""
    if isinstance(kind, Poisson):
        return kind.lam
    if isinstance(kind, Pareto):
        return kind.alpha * kind.xm / (kind.alpha - 1)
    if isinstance(kind, Weibull):
        return kind.lam * math.gamma(1 + 1 / kind.k)
    return kind.mean


# Above this rate the e^-lam starting mass of the inversion search underflows.
_POISSON_SEARCH_LIMIT = 600.0


def poisson_inverse_cdf(lam: float, u: float) -> int:
    if lam > _POISSON_SEARCH_LIMIT:
        from scipy.stats import poisson
        return int(poisson.ppf(u, lam))
    k = 0
    p = math.exp(-lam)
    cdf = p
    while u > cdf:
        k += 1
        p *= lam / k
        if cdf + p == cdf:
            break
        cdf += p
    return k


def pareto_inverse_cdf(xm: float, alpha: float, u: float) -> float:
    return xm * u ** (-1.0 / alpha)


def weibull_inverse_cdf(k: float, lam: float, u: float) -> float:
    return lam * (-math.log(u)) ** (1.0 / k)


@dataclass(frozen=True)
class ArimaState:
    """Most-recent-first histories of ARMA core values and innovations.

    ``levels`` holds the previous output of each of the ``d`` summation
    stages.
    """

    values: tuple[float, ...]
    innovations: tuple[float, ...]
    levels: tuple[float, ...] = ()

    @classmethod
    def initial(cls, kind: Arima) -> "ArimaState":
        return cls((kind.mean,) * kind.p, (0.0,) * kind.q, (0.0,) * kind.d)


def arima_next(state: ArimaState, model: LatencyModel,
               rng: UniformSource) -> tuple[float, ArimaState]:
    kind = model.kind
    if not isinstance(kind, Arima):
        raise InvalidParameters("arima_next requires an Arima latency model")
    if len(state.values) < kind.p or len(state.innovations) < kind.q:
        raise InvalidParameters("ARIMA state history shorter than model orders")
    eps = rng.gauss(0.0, kind.innovation_sd) if kind.innovation_sd > 0 else 0.0
    x = kind.mean + eps
    for phi, prev in zip(kind.ar, state.values):
        x += phi * (prev - kind.mean)
    for theta, prev_eps in zip(kind.ma, state.innovations):
        x += theta * prev_eps
    out = x
    levels = []
    for prev_level in state.levels[:kind.d]:
        out = prev_level + out
        levels.append(out)
    nxt = ArimaState(
        ((x,) + state.values)[:kind.p],
        ((eps,) + state.innovations)[:kind.q],
        tuple(levels),
    )
    return max(model.floor, out), nxt


def sample(model: LatencyModel, rng: UniformSource,
           state: ArimaState | None = None) -> float:
    """One latency draw, clamped below at ``model.floor``.

    ARIMA draws need a ``state``; use :class:`LatencySampler` to carry it.
    """
    kind = model.kind
    if isinstance(kind, Poisson):
        raw = float(poisson_inverse_cdf(kind.lam, rng.uniform()))
    elif isinstance(kind, Pareto):
        raw = pareto_inverse_cdf(kind.xm, kind.alpha, rng.uniform())
    elif isinstance(kind, Weibull):
        raw = weibull_inverse_cdf(kind.k, kind.lam, rng.uniform())
    elif isinstance(kind, Arima):
        if state is None:
            raise InvalidParameters("ARIMA sampling needs an ArimaState")
        return arima_next(state, model, rng)[0]
    else:
        raise InvalidParameters(f"unknown latency distribution {kind!r}")
    return max(model.floor, raw)


@dataclass
class LatencySampler:
    """Stateful sampler: a latency model bound to one RNG stream."""

    model: LatencyModel
    rng: UniformSource
    state: ArimaState | None = field(default=None)

    def __post_init__(self) -> None:
        kind = self.model.kind
        if isinstance(kind, Arima):
            if self.state is None:
                self.state = ArimaState.initial(kind)
            self._draw = None
            return
        floor = self.model.floor
        u = self.rng.uniform
        # Same arithmetic as sample(), minus the per-call dispatch.
        if isinstance(kind, Pareto):
            xm, expo = kind.xm, -1.0 / kind.alpha
            self._draw = lambda: max(floor, xm * u() ** expo)
        elif isinstance(kind, Weibull):
            lam, expo = kind.lam, 1.0 / kind.k
            self._draw = lambda: max(floor, lam * (-math.log(u())) ** expo)
        else:
            self._draw = lambda: sample(self.model, self.rng)

    def __call__(self) -> float:
        if self._draw is not None:
            return self._draw()
        value, self.state = arima_next(self.state, self.model, self.rng)
        return value


def validate_interval(model: IntervalModel) -> None:
    if isinstance(model, Constant):
        _positive(gap=model.gap)
    elif isinstance(model, PoissonProcess):
        _positive(rate=model.rate)
    else:
        raise InvalidParameters(f"unknown interval model {model!r}")


def next_send_gap(model: IntervalModel, rng: UniformSource) -> float:
    validate_interval(model)
    if isinstance(model, Constant):
        return model.gap
    return -math.log(rng.uniform()) / model.rate
