"""Minute-bar ingestion, session filtering, and feature construction.

Minutes are integer offsets from 09:30 exchange-local time. The estimation
session keeps 09:40 through 15:50 inclusive (indices 10..380, 371 minutes);
the first and last ten minutes of the trading day are excluded because open
and close prints carry missing or repeated values.

Features are built so that no predictor overlaps the target span: the target
is the five-minute log return ending at minute m, and every predictor
references minutes m-5 and earlier.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, MissingBarError, ParseError

logger = logging.getLogger(__name__)

SESSION_START_MINUTE = 10   # 09:40
SESSION_END_MINUTE = 380    # 15:50
SESSION_MINUTES = SESSION_END_MINUTE - SESSION_START_MINUTE + 1

# Deepest lag any feature reaches behind its target minute (lag_r5 needs m-9).
MAX_FEATURE_LAG = 9

# Annualized VIX (percent, as quoted) to a per-minute unit:
# 1440 minutes per day, 252 trading days per year.
VIX_INTRADAY_DENOM = math.sqrt(1440.0) * math.sqrt(252.0)

# Days with fewer usable in-session bars than this are dropped by the loader.
MIN_USABLE_MINUTES = 40

CSV_HEADER = ("date", "time", "spy_price", "vix")

_BASE_MINUTE_OF_DAY = 9 * 60 + 30  # 09:30


def minute_to_time(minute: int) -> str:
    """Minute index to HH:MM, e.g. 41 -> '10:11'."""
    total = _BASE_MINUTE_OF_DAY + minute
    return f"{total // 60:02d}:{total % 60:02d}"


def time_to_minute(text: str) -> int:
    """HH:MM to minute index. Raises ValueError on malformed input."""
    parts = text.strip().split(":")
    if len(parts) != 2:
        raise ValueError(f"expected HH:MM, got {text!r}")
    hour, minute = int(parts[0]), int(parts[1])
    if not (0 <= hour < 24 and 0 <= minute < 60):
        raise ValueError(f"time out of range: {text!r}")
    return hour * 60 + minute - _BASE_MINUTE_OF_DAY


@dataclass(frozen=True, slots=True)
class MinuteBar:
    day: dt.date
    minute: int
    spy_price: float
    vix_annual: float

    def __post_init__(self):
        if self.spy_price <= 0.0:
            raise DataError(f"spy_price must be positive, got {self.spy_price}")
        if self.vix_annual < 0.0:
            raise DataError(f"vix_annual must be non-negative, got {self.vix_annual}")


@dataclass(frozen=True)
class DaySeries:
    """One day's session-filtered bars, ordered by minute, no duplicates.

    ``has_gaps`` is set when any minute of the full session is absent; the
    gap policy downstream is suppression of dependent feature rows, never
    imputation.
    """

    day: dt.date
    bars: tuple[MinuteBar, ...]
    has_gaps: bool

    def __post_init__(self):
        index = {}
        last = None
        for bar in self.bars:
            if not (SESSION_START_MINUTE <= bar.minute <= SESSION_END_MINUTE):
                raise DataError(
                    f"bar at minute {bar.minute} outside session on {self.day}"
                )
            if last is not None and bar.minute <= last:
                raise DataError(f"bars out of order on {self.day} at minute {bar.minute}")
            last = bar.minute
            index[bar.minute] = bar
        object.__setattr__(self, "_by_minute", index)

    @classmethod
    def from_bars(cls, day: dt.date, bars) -> "DaySeries":
        bars = tuple(sorted(bars, key=lambda b: b.minute))
        return cls(day=day, bars=bars, has_gaps=len(bars) < SESSION_MINUTES)

    def has(self, minute: int) -> bool:
        return minute in self._by_minute

    def bar_at(self, minute: int) -> MinuteBar:
        try:
            return self._by_minute[minute]
        except KeyError:
            raise MissingBarError(f"{self.day} has no bar at minute {minute}") from None

    def price(self, minute: int) -> float:
        return self.bar_at(minute).spy_price

    def vix(self, minute: int) -> float:
        return self.bar_at(minute).vix_annual


@dataclass(frozen=True, slots=True)
class FeatureRow:
    """All model inputs and the target for one prediction minute.

    The target ``r5`` spans minutes [m-4, m]; every predictor references
    minutes <= m-5, so predictor and target spans never intersect.
    """

    day: dt.date
    minute: int
    r5: float
    lag_r5: float
    lag_r5_sq: float
    vix_lag: float
    vix_sq_lag: float
    dvix_lag: float
    vrp_lag: float


@dataclass(frozen=True, slots=True)
class SynthParams:
    """Synthetic-data generator settings; a testing convenience, not a market model."""

    n_days: int
    seed: int
    return_vol: float = 0.0005
    vix_mean: float = 19.5
    vix_vol: float = 0.015
    vix_persistence: float = 0.97
    leverage_corr: float = -0.4

    def __post_init__(self):
        if self.n_days < 0:
            raise ValueError("n_days must be non-negative")
        if not 0.0 <= self.vix_persistence < 1.0:
            raise ValueError("vix_persistence must lie in [0, 1)")
        if self.vix_mean <= 0.0:
            raise ValueError("vix_mean must be positive")
        if not -1.0 <= self.leverage_corr <= 1.0:
            raise ValueError("leverage_corr must lie in [-1, 1]")
        if self.return_vol < 0.0 or self.vix_vol < 0.0:
            raise ValueError("volatilities must be non-negative")


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def load_minute_bars(path) -> list[DaySeries]:
    """Parse a ``date,time,spy_price,vix`` CSV into session-filtered day series.

    Rows outside [09:40, 15:50] are dropped. Duplicate (day, minute) pairs and
    minutes that run backwards within a day are data errors; days with fewer
    than MIN_USABLE_MINUTES usable bars are dropped and reported via logging.
    """
    by_day: dict[dt.date, list[MinuteBar]] = {}
    last_raw: dict[dt.date, int] = {}
    out_of_session = 0

    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"line 1: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ParseError(f"line {lineno}: expected 4 fields, got {len(row)}")
            try:
                day = dt.date.fromisoformat(row[0].strip())
                minute = time_to_minute(row[1])
                price = float(row[2])
                vix = float(row[3])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
            prev = last_raw.get(day)
            if prev is not None:
                if minute == prev:
                    raise DataError(
                        f"line {lineno}: duplicate bar {day} {row[1].strip()}"
                    )
                if minute < prev:
                    raise DataError(
                        f"line {lineno}: non-monotone minutes within {day}"
                    )
            last_raw[day] = minute
            if not SESSION_START_MINUTE <= minute <= SESSION_END_MINUTE:
                out_of_session += 1
                continue
            try:
                bar = MinuteBar(day=day, minute=minute, spy_price=price, vix_annual=vix)
            except DataError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
            by_day.setdefault(day, []).append(bar)

    if out_of_session:
        logger.debug("dropped %d out-of-session rows", out_of_session)

    days = []
    for day in sorted(by_day):
        bars = by_day[day]
        if len(bars) < MIN_USABLE_MINUTES:
            logger.warning(
                "dropping %s: only %d usable minutes (< %d)",
                day, len(bars), MIN_USABLE_MINUTES,
            )
            continue
        days.append(DaySeries.from_bars(day, bars))
    return days


# ---------------------------------------------------------------------------
# feature arithmetic
# ---------------------------------------------------------------------------

def log_return_5min(series: DaySeries, m: int) -> float:
    """log P(m) - log P(m-4): the rolling five-minute log return ending at m."""
    return math.log(series.price(m)) - math.log(series.price(m - 4))


def log_return_1min(series: DaySeries, m: int) -> float:
    return math.log(series.price(m)) - math.log(series.price(m - 1))


def vix_to_intraday(vix_annual: float) -> float:
    """Rescale the annualized VIX level to per-minute units."""
    if vix_annual < 0.0:
        raise ValueError(f"annualized VIX must be non-negative, got {vix_annual}")
    return vix_annual / VIX_INTRADAY_DENOM


def compute_vrp(r_1min: float, vix_intraday: float) -> float:
    """Squared one-minute return minus squared intraday VIX."""
    if vix_intraday < 0.0:
        raise ValueError("vix_intraday must be non-negative")
    return r_1min * r_1min - vix_intraday * vix_intraday


def compute_delta_vix(series: DaySeries, m: int) -> float:
    """First difference of intraday-scaled VIX between minutes m-6 and m-5."""
    return vix_to_intraday(series.vix(m - 5)) - vix_to_intraday(series.vix(m - 6))


def build_feature_rows(series: DaySeries) -> list[FeatureRow]:
    """One FeatureRow per minute whose constituents all exist.

    Row m needs bars at {m, m-4, m-5, m-6, m-9}; a missing bar suppresses
    exactly the rows that touch it (no forward fill). The suppressed count
    is reported via logging.
    """
    rows = []
    suppressed = 0
    for m in range(SESSION_START_MINUTE + MAX_FEATURE_LAG, SESSION_END_MINUTE + 1):
        try:
            r5 = log_return_5min(series, m)
            lag_r5 = log_return_5min(series, m - 5)
            vix_lag = vix_to_intraday(series.vix(m - 5))
            dvix_lag = compute_delta_vix(series, m)
            vrp_lag = compute_vrp(log_return_1min(series, m - 5), vix_lag)
        except MissingBarError:
            suppressed += 1
            continue
        rows.append(FeatureRow(
            day=series.day,
            minute=m,
            r5=r5,
            lag_r5=lag_r5,
            lag_r5_sq=lag_r5 * lag_r5,
            vix_lag=vix_lag,
            vix_sq_lag=vix_lag * vix_lag,
            dvix_lag=dvix_lag,
            vrp_lag=vrp_lag,
        ))
    if suppressed:
        logger.info("%s: %d feature rows suppressed by gaps", series.day, suppressed)
    return rows


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------

def _correlated_innovations(rng, n: int, corr: float):
    z = rng.standard_normal((2, n))
    ret = z[0]
    vix = corr * z[0] + math.sqrt(max(0.0, 1.0 - corr * corr)) * z[1]
    return ret, vix


def _log_vix_path(params: SynthParams, innovations) -> np.ndarray:
    """AR(1) around log(vix_mean); positivity comes from working in logs."""
    n = len(innovations)
    mean_log = math.log(params.vix_mean)
    phi = params.vix_persistence
    path = np.empty(n)
    spread = params.vix_vol / math.sqrt(1.0 - phi * phi) if phi > 0 else params.vix_vol
    path[0] = mean_log + spread * innovations[0]
    for t in range(1, n):
        path[t] = mean_log + phi * (path[t - 1] - mean_log) \
            + params.vix_vol * innovations[t]
    return path


def _day_rng(params: SynthParams, day: dt.date, stream: int = 0):
    return np.random.default_rng(
        np.random.SeedSequence(entropy=(params.seed, day.toordinal(), stream))
    )


def generate_synthetic_day(params: SynthParams, day: dt.date) -> DaySeries:
    """A gapless session: log-price random walk plus mean-reverting VIX.

    Return and log-VIX innovations are correlated at leverage_corr.
    Deterministic in (params.seed, day).
    """
    rng = _day_rng(params, day)
    n = SESSION_MINUTES
    ret_innov, vix_innov = _correlated_innovations(rng, n, params.leverage_corr)
    log_price = params.return_vol * np.cumsum(ret_innov)
    log_vix = _log_vix_path(params, vix_innov)
    bars = [
        MinuteBar(
            day=day,
            minute=SESSION_START_MINUTE + t,
            spy_price=100.0 * math.exp(log_price[t]),
            vix_annual=math.exp(log_vix[t]),
        )
        for t in range(n)
    ]
    return DaySeries(day=day, bars=tuple(bars), has_gaps=False)


def generate_affine_signal_day(
    params: SynthParams,
    day: dt.date,
    slope: float = 1.0,
    snr: float = 10.0,
) -> DaySeries:
    """A gapless day whose target is slope * vix_lag plus noise, at the given SNR.

    The five-minute log return ending at m is set to
    slope * intraday_vix(m-5) + eps, and the price path is defined by that
    recursion (log P(m) = log P(m-4) + r5(m)), which is always consistent.
    The noise standard deviation is the signal's own standard deviation
    divided by sqrt(snr). Used as the recoverable-signal test fixture.
    """
    if snr <= 0.0:
        raise ValueError("snr must be positive")
    rng = _day_rng(params, day, stream=1)
    n = SESSION_MINUTES
    _, vix_innov = _correlated_innovations(rng, n, params.leverage_corr)
    log_vix = _log_vix_path(params, vix_innov)
    vix_intraday = np.exp(log_vix) / VIX_INTRADAY_DENOM

    # signal[t] refers to target minute m = SESSION_START_MINUTE + t and
    # needs the VIX bar at m-5, so the first five minutes have no signal.
    signal = np.full(n, np.nan)
    signal[5:] = slope * vix_intraday[:-5]
    usable = signal[5:]
    noise_sd = float(usable.std()) / math.sqrt(snr)
    noise = noise_sd * rng.standard_normal(n)

    log_price = np.empty(n)
    log_price[:5] = 0.0
    for t in range(5, n):
        log_price[t] = log_price[t - 4] + signal[t] + noise[t]

    bars = [
        MinuteBar(
            day=day,
            minute=SESSION_START_MINUTE + t,
            spy_price=100.0 * math.exp(log_price[t]),
            vix_annual=math.exp(log_vix[t]),
        )
        for t in range(n)
    ]
    return DaySeries(day=day, bars=tuple(bars), has_gaps=False)


def business_days(start: dt.date, count: int) -> list[dt.date]:
    """The first `count` weekdays on or after `start`. No holiday calendar."""
    days = []
    day = start
    while len(days) < count:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return days
