"""Trading-day calendar supplied as a sorted list of dates."""

from __future__ import annotations

import bisect
from datetime import date
from pathlib import Path
from typing import Iterable

import pandas as pd

from .errors import EventDateNotTrading


class TradingCalendar:
    """Sorted trading dates with trading-day offsets."""

    def __init__(self, dates: Iterable[date]):
        self.dates: list[date] = sorted(set(dates))
        self._pos = {d: i for i, d in enumerate(self.dates)}

    def __len__(self) -> int:
        return len(self.dates)

    def __contains__(self, d: date) -> bool:
        return d in self._pos

    def index(self, d: date) -> int:
        try:
            return self._pos[d]
        except KeyError:
            raise EventDateNotTrading(f"{d} is not a trading day") from None

    def roll_forward(self, d: date) -> date | None:
        """First trading day on or after ``d`` (None past the calendar end)."""
        i = bisect.bisect_left(self.dates, d)
        return self.dates[i] if i < len(self.dates) else None

    def shift(self, d: date, n: int) -> date | None:
        i = self.index(d) + n
        return self.dates[i] if 0 <= i < len(self.dates) else None

    @classmethod
    def from_csv(cls, path: str | Path) -> "TradingCalendar":
        df = pd.read_csv(path)
        return cls(pd.to_datetime(df.iloc[:, 0]).dt.date)

    def to_csv(self, path: str | Path) -> None:
        pd.DataFrame({"date": [d.isoformat() for d in self.dates]}).to_csv(path, index=False)
