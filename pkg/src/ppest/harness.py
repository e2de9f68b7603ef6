"""Distribution fixtures, split Poisson sampling and Monte Carlo trial reports."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .estimator import (
    PropertyModel,
    SplitHistogram,
    bias_bound,
    build_property_model,
    config_echo,
    property_value,
    tail_bound,
    variance_bound,
)
from .exceptions import BadParam, PPEstError, SpecMismatch
from .partition import PartitionConfig
from .properties import PropertySpec

__all__ = [
    "DistributionFixture",
    "TrialReport",
    "fixture",
    "uniform",
    "zipf",
    "geometric",
    "deterministic",
    "two_thirds",
    "support_uniform",
    "FIXTURES",
    "trial_rng",
    "sample_split",
    "split_sequence",
    "plug_in",
    "run_trials",
    "lower_bound_gap",
    "gap_parameter",
    "read_counts",
    "read_sequence",
]


@dataclass(frozen=True)
class DistributionFixture:
    name: str
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise BadParam("probabilities must be a non-empty vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise BadParam("probabilities must be finite and non-negative")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise BadParam(f"probabilities sum to {math.fsum(p)!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def k(self) -> int:
        return self.probabilities.size


def _normalised(name, w):
    w = np.asarray(w, dtype=float)
    return DistributionFixture(name, w / math.fsum(w))


def _check_k(k):
    if int(k) != k or k < 1:
        raise BadParam(f"alphabet size must be a positive integer, got {k!r}")
    return int(k)


def uniform(k: int) -> DistributionFixture:
    k = _check_k(k)
    return DistributionFixture("uniform", np.full(k, 1.0 / k))


def zipf(k: int, s: float = 1.0) -> DistributionFixture:
    k = _check_k(k)
    return _normalised(f"zipf({s:g})", np.arange(1, k + 1, dtype=float) ** -s)


def geometric(k: int, r: float = 0.99) -> DistributionFixture:
    k = _check_k(k)
    if not 0 < r < 1:
        raise BadParam("geometric ratio must lie in (0, 1)")
    return _normalised(f"geometric({r:g})", r ** np.arange(k, dtype=float))


def deterministic(k: int) -> DistributionFixture:
    p = np.zeros(_check_k(k))
    p[0] = 1.0
    return DistributionFixture("deterministic", p)


def two_thirds(k: int, eps: float = 0.0) -> DistributionFixture:
    """``((1 - eps)/(3(k-1)), ..., (2 + eps)/3)``; ``eps = 0`` is the reference member."""
    k = _check_k(k)
    if k < 2:
        raise BadParam("two_thirds needs k >= 2")
    if not 0 <= eps < 1:
        raise BadParam("eps must lie in [0, 1)")
    p = np.full(k, (1.0 - eps) / (3.0 * (k - 1)))
    p[-1] = (2.0 + eps) / 3.0
    return DistributionFixture(f"two_thirds({eps:g})", p)


def support_uniform(k: int, s: int) -> DistributionFixture:
    """Uniform over the first ``s`` of ``k`` symbols, so every mass is at least ``1/k``."""
    k = _check_k(k)
    if not 1 <= s <= k:
        raise BadParam("support must satisfy 1 <= s <= k")
    p = np.zeros(k)
    p[:s] = 1.0 / s
    return DistributionFixture(f"support({s})", p)


FIXTURES = {
    "uniform": uniform,
    "zipf": zipf,
    "geometric": geometric,
    "deterministic": deterministic,
    "two_thirds": two_thirds,
    "p1": lambda k, eps=0.05: two_thirds(k, eps),
    "p2": lambda k: two_thirds(k, 0.0),
    "p3": lambda k, eps=0.05: two_thirds(k, eps),
}


def fixture(name: str, k: int, **params) -> DistributionFixture:
    try:
        make = FIXTURES[name]
    except KeyError:
        raise BadParam(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}") from None
    return make(k, **params)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial: ``Philox`` keyed by ``(seed, trial)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,))))


def sample_split(dist: DistributionFixture, n: int, rng: np.random.Generator) -> SplitHistogram:
    """Two independent ``Poi(n p_i)`` counts per symbol."""
    if int(n) != n or n < 1:
        raise BadParam("n must be a positive integer")
    lam = n * dist.probabilities
    return SplitHistogram(rng.poisson(lam), rng.poisson(lam), int(n))


def split_sequence(symbols: Sequence, alphabet: Sequence, rng: np.random.Generator):
    """Split a raw sample with one fair coin per sample; returns per-symbol counts of both halves."""
    index = {s: i for i, s in enumerate(alphabet)}
    try:
        codes = np.fromiter((index[s] for s in symbols), dtype=np.int64, count=len(symbols))
    except KeyError as exc:
        raise SpecMismatch(f"symbol {exc.args[0]!r} is not in the alphabet") from None
    first = rng.random(len(codes)) < 0.5
    k = len(alphabet)
    return np.bincount(codes[first], minlength=k), np.bincount(codes[~first], minlength=k)


def plug_in(spec: PropertySpec, hist: SplitHistogram) -> float:
    """``sum_i f_i((N_i + N_i') / (2n))``."""
    if hist.k != spec.k:
        raise SpecMismatch(f"histogram has {hist.k} symbols, property expects k={spec.k}")
    freq = (hist.counts1 + hist.counts2) / (2.0 * hist.n)
    idx = spec.function_index()
    terms = np.empty(spec.k)
    for a, f in enumerate(spec.functions):
        sel = idx == a
        if sel.any():
            terms[sel] = f(freq[sel])
    return math.fsum(terms)


@dataclass(frozen=True)
class TrialReport:
    """Empirical and analytic accuracy of the estimator on one fixture.

    Biases and variances use the true property value of the fixture;
    variances are population variances, so ``mse = bias**2 + variance``.
    ``tail`` maps ``eps`` to ``(empirical frequency of |error| >= eps,
    analytic bound)``.
    """

    property: str
    distribution: str
    n: int
    k: int
    trials: int
    seed: int
    true_value: float
    empirical_mean: float
    empirical_bias: float
    empirical_variance: float
    empirical_mse: float
    plug_in_mean: float
    plug_in_bias: float
    plug_in_variance: float
    plug_in_mse: float
    bias_bound: float
    variance_bound: float
    tail: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    wall_clock: float = field(default=0.0, compare=False)

    def as_record(self, timing: bool = False) -> dict:
        rec = {
            "property": self.property,
            "distribution": self.distribution,
            "n": self.n,
            "k": self.k,
            "trials": self.trials,
            "seed": self.seed,
            "true_value": self.true_value,
            "empirical_mean": self.empirical_mean,
            "empirical_bias": self.empirical_bias,
            "empirical_variance": self.empirical_variance,
            "empirical_mse": self.empirical_mse,
            "plug_in_mean": self.plug_in_mean,
            "plug_in_bias": self.plug_in_bias,
            "plug_in_variance": self.plug_in_variance,
            "plug_in_mse": self.plug_in_mse,
            "bias_bound": self.bias_bound,
            "variance_bound": self.variance_bound,
        }
        for eps, (freq, bound) in self.tail.items():
            rec[f"tail_freq@{eps:g}"] = freq
            rec[f"tail_bound@{eps:g}"] = bound
        rec.update({f"cfg_{k}": v for k, v in self.config.items()})
        if timing:
            rec["wall_clock_s"] = self.wall_clock
        return rec


def _moments(values, truth):
    mean = float(np.mean(values))
    err = values - truth
    return mean, mean - truth, float(np.var(values)), float(np.mean(err * err))


def run_trials(
    spec: PropertySpec,
    dist: DistributionFixture,
    cfg: PartitionConfig,
    R: int,
    seed: int,
    eps_grid: Iterable[float] = (0.05, 0.1, 0.2),
    model: PropertyModel | None = None,
    min_trials: int = 100,
) -> TrialReport:
    """Run ``R`` Poissonised trials; trial ``t`` draws from :func:`trial_rng` ``(seed, t)``.

    The report depends only on ``(spec, dist, cfg, R, seed)``, not on the
    order trials are evaluated in.
    """
    if R < min_trials:
        raise BadParam(f"need at least {min_trials} trials, got {R}")
    if dist.k != spec.k:
        raise SpecMismatch(f"fixture has k={dist.k}, property expects k={spec.k}")
    start = time.perf_counter()
    if model is None:
        model = build_property_model(spec, cfg)
    ours = np.empty(R)
    base = np.empty(R)
    for t in range(R):
        hist = sample_split(dist, cfg.n, trial_rng(seed, t))
        ours[t] = property_value(model, hist)
        base[t] = plug_in(spec, hist)
    p = dist.probabilities
    truth = spec.evaluate(p)
    mean, bias, var, mse = _moments(ours, truth)
    pmean, pbias, pvar, pmse = _moments(base, truth)
    assignment = spec.function_index()
    tail = {}
    for eps in eps_grid:
        freq = float(np.mean(np.abs(ours - truth) >= eps))
        tail[float(eps)] = (freq, tail_bound(cfg, model.profiles, eps))
    return TrialReport(
        property=spec.name,
        distribution=dist.name,
        n=cfg.n,
        k=spec.k,
        trials=R,
        seed=seed,
        true_value=truth,
        empirical_mean=mean,
        empirical_bias=bias,
        empirical_variance=var,
        empirical_mse=mse,
        plug_in_mean=pmean,
        plug_in_bias=pbias,
        plug_in_variance=pvar,
        plug_in_mse=pmse,
        bias_bound=bias_bound(cfg, model.profiles, p=p, assignment=assignment),
        variance_bound=variance_bound(cfg, model.profiles, p=p, assignment=assignment),
        tail=tail,
        config=config_echo(cfg, model.T),
        wall_clock=time.perf_counter() - start,
    )


def _entropy_gap(k, eps):
    L = math.log(2.0 * (k - 1) / math.e)
    e1 = 9.0 * eps / L if L > 0 else math.inf
    if not 0 < e1 < 1:
        raise BadParam(f"eps'={e1:.4g} is outside (0, 1); increase k or decrease eps")
    gap = (
        e1 / 3.0 * math.log(2.0 * (k - 1))
        + (1.0 - e1) / 3.0 * math.log1p(-e1)
        + (2.0 + e1) / 3.0 * math.log1p(e1 / 2.0)
    )
    return gap


def _power_gap(k, eps, a):
    if not 0.5 < a < 1:
        raise BadParam("power-sum order must lie in (1/2, 1)")
    denom = a * (k - 1) ** (1 - a) - a * 2.0**a
    e2 = 6.0 * eps * 3.0**a / denom if denom > 0 else math.inf
    if not 0 < e2 < 1:
        raise BadParam(f"eps''={e2:.4g} is outside (0, 1); increase k or decrease eps")
    # -expm1(a log1p(-e2)) = 1 - (1 - e2)**a without cancellation
    return (k - 1) ** (1 - a) / 3.0**a * -math.expm1(a * math.log1p(-e2)) - (2.0 / 3.0) ** a * math.expm1(
        a * math.log1p(e2 / 2.0)
    )


def lower_bound_gap(kind: str, k: int, eps: float, a: float = 0.75) -> float:
    """Exact property gap between the two lower-bound distributions.

    ``entropy_p1p2``: ``H(p2) - H(p1)`` with ``eps' = 9 eps / ln(2 (k-1) / e)``.
    ``powersum_p2p3``: ``P_a(p2) - P_a(p3)`` with
    ``eps'' = 6 eps 3**a / (a (k-1)**(1-a) - a 2**a)``.
    Both gaps are at least ``3 eps``; a smaller value raises.
    """
    if not eps > 0:
        raise BadParam("eps must be positive")
    k = _check_k(k)
    if kind == "entropy_p1p2":
        gap = _entropy_gap(k, eps)
    elif kind == "powersum_p2p3":
        gap = _power_gap(k, eps, a)
    else:
        raise BadParam(f"unknown gap kind {kind!r}")
    if gap < 3.0 * eps * (1 - 1e-12):
        raise PPEstError(f"gap {gap!r} fell below 3 eps = {3 * eps!r}")
    return gap


def gap_parameter(kind: str, k: int, eps: float, a: float = 0.75) -> float:
    """The perturbation ``eps'`` (entropy) or ``eps''`` (power sum) used by :func:`lower_bound_gap`."""
    if kind == "entropy_p1p2":
        return 9.0 * eps / math.log(2.0 * (k - 1) / math.e)
    if kind == "powersum_p2p3":
        return 6.0 * eps * 3.0**a / (a * (k - 1) ** (1 - a) - a * 2.0**a)
    raise BadParam(f"unknown gap kind {kind!r}")


def read_counts(path, k: int | None = None):
    """Read a ``symbol,count1,count2`` CSV; pad with zero-count symbols up to ``k``.

    Returns ``(symbols, counts1, counts2)``.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["symbol", "count1", "count2"]:
            raise SpecMismatch("counts file must have header symbol,count1,count2")
        symbols, c1, c2 = [], [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                a, b = int(row["count1"]), int(row["count2"])
            except (TypeError, ValueError):
                raise SpecMismatch(f"line {lineno}: counts must be integers") from None
            if a < 0 or b < 0:
                raise SpecMismatch(f"line {lineno}: counts must be non-negative")
            symbols.append(row["symbol"].strip())
            c1.append(a)
            c2.append(b)
    if len(set(symbols)) != len(symbols):
        raise SpecMismatch("duplicate symbols in counts file")
    return _pad(symbols, c1, c2, k)


def _pad(symbols, c1, c2, k):
    if k is not None:
        if len(symbols) > k:
            raise SpecMismatch(f"file lists {len(symbols)} symbols but k={k}")
        extra = k - len(symbols)
        symbols = symbols + [f"<unseen {i}>" for i in range(extra)]
        c1 = c1 + [0] * extra
        c2 = c2 + [0] * extra
    return symbols, np.asarray(c1, dtype=np.int64), np.asarray(c2, dtype=np.int64)


def read_sequence(path, rng: np.random.Generator, k: int | None = None):
    """Read a raw sample (one symbol per line) and split it with a fair coin per sample.

    Returns ``(symbols, counts1, counts2, size)``.
    """
    with open(path) as fh:
        seq = [line.strip() for line in fh if line.strip()]
    alphabet = list(dict.fromkeys(seq))
    c1, c2 = split_sequence(seq, alphabet, rng)
    symbols, c1, c2 = _pad(alphabet, c1.tolist(), c2.tolist(), k)
    return symbols, c1, c2, len(seq)
