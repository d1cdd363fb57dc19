"""Reproduction-rate sequences with symbolic tail metadata.

A rate family assigns a nonnegative rate ``r_n`` to each cell level ``n``
(``r_0`` is the rate of the root cell).  Phase classification needs three
tail quantities that no finite prefix of the sequence can determine:

* whether ``sum_n |S|**n * r_n`` is finite,
* ``sum_n r_n``,
* the limsup of the Cesaro averages ``(1/n) * sum_{j<=n} r_j``.

These are therefore declared symbolically per family, never estimated from
finitely many terms.  ``cesaro_window_estimate`` exists as an advisory
diagnostic only and is never used for classification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class RateSpecError(ValueError):
    """Raised for malformed or unclassifiable rate specifications."""


@dataclass(frozen=True)
class TailMeta:
    """Declared tail behaviour of a rate sequence.

    ``rate_sum`` and ``cesaro_limsup`` may be ``math.inf``.
    """

    sum_weighted_finite: bool
    rate_sum: float
    cesaro_limsup: float

    def __post_init__(self) -> None:
        if self.sum_weighted_finite and math.isinf(self.rate_sum):
            raise ValueError("finite weighted sum forces a finite rate sum")
        if not math.isinf(self.rate_sum) and self.cesaro_limsup != 0:
            raise ValueError("a summable sequence has Cesaro limsup 0")


class RateFamily:
    """Base class; concrete families implement ``rate`` and ``analytics``."""

    def rate(self, n: int) -> float:
        raise NotImplementedError

    def analytics(self, alphabet_size: int) -> TailMeta:
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError


def _check_nonneg(name: str, value: float) -> None:
    if value < 0:
        raise RateSpecError(f"{name} must be nonnegative, got {value}")


@dataclass(frozen=True)
class Constant(RateFamily):
    """r_n = c for every level."""

    c: float

    def __post_init__(self) -> None:
        _check_nonneg("constant rate", self.c)

    def rate(self, n: int) -> float:
        return self.c

    def analytics(self, alphabet_size: int) -> TailMeta:
        if self.c == 0:
            return TailMeta(True, 0.0, 0.0)
        return TailMeta(False, math.inf, self.c)

    def spec_string(self) -> str:
        return f"constant:{self.c:g}"


@dataclass(frozen=True)
class Geometric(RateFamily):
    """r_n = a * q**n with q in (0, 1)."""

    a: float
    q: float

    def __post_init__(self) -> None:
        _check_nonneg("geometric amplitude", self.a)
        if not 0 < self.q < 1:
            raise RateSpecError(f"geometric ratio must lie in (0,1), got {self.q}")

    def rate(self, n: int) -> float:
        return self.a * self.q**n

    def analytics(self, alphabet_size: int) -> TailMeta:
        if self.a == 0:
            return TailMeta(True, 0.0, 0.0)
        return TailMeta(alphabet_size * self.q < 1, self.a / (1 - self.q), 0.0)

    def spec_string(self) -> str:
        return f"geometric:{self.a:g}:{self.q:g}"


@dataclass(frozen=True)
class Harmonic(RateFamily):
    """r_0 = 0 and r_n = c / n for n >= 1."""

    c: float

    def __post_init__(self) -> None:
        _check_nonneg("harmonic scale", self.c)

    def rate(self, n: int) -> float:
        return 0.0 if n == 0 else self.c / n

    def analytics(self, alphabet_size: int) -> TailMeta:
        if self.c == 0:
            return TailMeta(True, 0.0, 0.0)
        # sum c/n diverges; (1/n) * sum_{j<=n} c/j ~ c*log(n)/n -> 0.
        return TailMeta(False, math.inf, 0.0)

    def spec_string(self) -> str:
        return f"harmonic:{self.c:g}"


@dataclass(frozen=True)
class Linear(RateFamily):
    """r_n = c * n."""

    c: float

    def __post_init__(self) -> None:
        _check_nonneg("linear slope", self.c)

    def rate(self, n: int) -> float:
        return self.c * n

    def analytics(self, alphabet_size: int) -> TailMeta:
        if self.c == 0:
            return TailMeta(True, 0.0, 0.0)
        return TailMeta(False, math.inf, math.inf)

    def spec_string(self) -> str:
        return f"linear:{self.c:g}"


@dataclass(frozen=True)
class Truncated(RateFamily):
    """The inner family up to level ``cutoff``, zero beyond.

    A truncated family is literally an instance of the model, so its tail
    metadata is exact: the weighted sum is a finite partial sum and the
    Cesaro limsup is 0.
    """

    inner: RateFamily
    cutoff: int

    def __post_init__(self) -> None:
        if self.cutoff < 0:
            raise RateSpecError(f"cutoff must be >= 0, got {self.cutoff}")

    def rate(self, n: int) -> float:
        return self.inner.rate(n) if n <= self.cutoff else 0.0

    def analytics(self, alphabet_size: int) -> TailMeta:
        total = sum(self.inner.rate(n) for n in range(self.cutoff + 1))
        return TailMeta(True, total, 0.0)

    def spec_string(self) -> str:
        return f"truncated:{self.inner.spec_string()}:{self.cutoff}"


@dataclass(frozen=True)
class CustomTable(RateFamily):
    """An explicit finite prefix of a rate sequence.

    Levels beyond the table get rate 0, so simulation treats the table as a
    truncated model.  Classification, however, reads the table as a prefix
    of an infinite sequence, and tail behaviour is not computable from any
    finite prefix: ``analytics`` is a hard error unless ``declared_tail``
    was supplied by the caller.
    """

    values: tuple[float, ...]
    declared_tail: TailMeta | None = None

    def __post_init__(self) -> None:
        for v in self.values:
            _check_nonneg("table entry", v)

    def rate(self, n: int) -> float:
        return self.values[n] if n < len(self.values) else 0.0

    def analytics(self, alphabet_size: int) -> TailMeta:
        if self.declared_tail is None:
            raise RateSpecError(
                "a raw rate table cannot be classified: tail behaviour is not "
                "determined by finitely many terms; supply declared_tail"
            )
        return self.declared_tail

    def spec_string(self) -> str:
        return "table:" + ",".join(f"{v:g}" for v in self.values)


def rate(family: RateFamily, n: int) -> float:
    """Evaluate r_n."""
    if n < 0:
        raise ValueError("level must be >= 0")
    return family.rate(n)


def analytics(family: RateFamily, alphabet_size: int) -> TailMeta:
    """Exact tail metadata for the family, computed symbolically."""
    return family.analytics(alphabet_size)


def partial_sum(family: RateFamily, n_lo: int, n_hi: int) -> float:
    """sum of r_n over n_lo <= n <= n_hi."""
    return sum(family.rate(n) for n in range(n_lo, n_hi + 1))


def cesaro_window_estimate(family: RateFamily, n_lo: int, n_hi: int) -> float:
    """Advisory mean of the Cesaro averages over a window; never used to classify."""
    if not 1 <= n_lo <= n_hi:
        raise ValueError("window must satisfy 1 <= n_lo <= n_hi")
    running = partial_sum(family, 1, n_lo - 1) if n_lo > 1 else 0.0
    averages = []
    for n in range(n_lo, n_hi + 1):
        running += family.rate(n)
        averages.append(running / n)
    return sum(averages) / len(averages)


def _parse_float(token: str, what: str) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise RateSpecError(f"bad {what}: {token!r}") from exc
    if math.isnan(value):
        raise RateSpecError(f"bad {what}: {token!r}")
    return value


def parse_tail(text: str) -> TailMeta:
    """Parse a declared tail "WEIGHTED,SUM,CESARO", e.g. "infinite,inf,2"."""
    parts = text.split(",")
    if len(parts) != 3:
        raise RateSpecError(f"tail declaration needs 3 fields, got {text!r}")
    weighted_token = parts[0].strip().lower()
    if weighted_token not in ("finite", "infinite"):
        raise RateSpecError(f"weighted-sum field must be finite|infinite, got {parts[0]!r}")
    meta = TailMeta(
        sum_weighted_finite=weighted_token == "finite",
        rate_sum=_parse_float(parts[1], "rate sum"),
        cesaro_limsup=_parse_float(parts[2], "Cesaro limsup"),
    )
    return meta


def parse_rates(text: str, declared_tail: TailMeta | None = None) -> RateFamily:
    """Parse a CLI rate spec.

    Formats: ``constant:C``, ``geometric:A:Q``, ``harmonic:C``, ``linear:C``,
    ``truncated:<inner spec>:N``, ``table:V1,V2,...``.
    """
    parts = text.split(":")
    kind = parts[0].strip().lower()
    args = parts[1:]
    try:
        if kind == "constant" and len(args) == 1:
            return Constant(_parse_float(args[0], "rate"))
        if kind == "geometric" and len(args) == 2:
            return Geometric(_parse_float(args[0], "amplitude"), _parse_float(args[1], "ratio"))
        if kind == "harmonic" and len(args) == 1:
            return Harmonic(_parse_float(args[0], "scale"))
        if kind == "linear" and len(args) == 1:
            return Linear(_parse_float(args[0], "slope"))
        if kind == "truncated" and len(args) >= 2:
            inner = parse_rates(":".join(args[:-1]))
            try:
                cutoff = int(args[-1])
            except ValueError as exc:
                raise RateSpecError(f"bad truncation level: {args[-1]!r}") from exc
            return Truncated(inner, cutoff)
        if kind == "table" and len(args) == 1:
            values = tuple(_parse_float(tok, "table entry") for tok in args[0].split(","))
            return CustomTable(values, declared_tail)
    except RateSpecError:
        raise
    except ValueError as exc:
        raise RateSpecError(str(exc)) from exc
    raise RateSpecError(f"unrecognised rate spec {text!r}")
