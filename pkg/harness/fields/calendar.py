"""
Calendar Module

Maps day serials t = 1..T to calendar dates, month indices and day-of-year
keys. A ``gregorian`` calendar stores leap days like any other day; a
``noleap`` calendar skips every Feb 29, so each year has exactly 365 days.

Day-of-year keys are slots of a 366-day cycle numbered by (month, day) as in a
leap year: Jan 1 is slot 1, Feb 29 is slot 60, Dec 31 is slot 366. A given
calendar date therefore has the same slot in every year.
"""
from calendar import isleap
from datetime import date, timedelta
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from harness.exceptions import DataError
from harness.model import CalendarKind

UNIX_EPOCH = date(1970, 1, 1)

# 1-based slot of Feb 29 in the 366-day cycle
FEB29_SLOT = 60


def doy_slot(day: date) -> int:
    """1-based slot of ``day`` in the 366-day (leap-year numbered) cycle."""
    return date(2000, day.month, day.day).timetuple().tm_yday


def _is_feb29(day: date) -> bool:
    return day.month == 2 and day.day == 29


@lru_cache(maxsize=32)
def _calendar_tables(start: date, n_days: int, kind: CalendarKind) -> Tuple[tuple, np.ndarray, np.ndarray, np.ndarray]:
    dates = []
    day = start
    while len(dates) < n_days:
        if not (kind == CalendarKind.NOLEAP and _is_feb29(day)):
            dates.append(day)
        day += timedelta(days=1)

    years = np.array([d.year for d in dates], dtype=np.int64)
    months = np.array([d.month for d in dates], dtype=np.int64)
    month_key = years * 12 + (months - 1)
    month_index = month_key - month_key[0]
    slots = np.array([doy_slot(d) for d in dates], dtype=np.int64)
    for table in (years, month_index, slots):
        table.setflags(write=False)
    return tuple(dates), years, month_index, slots


class Calendar(BaseModel):
    """
    Consecutive competition days.

    Attributes:
        start_date: date of day serial t = 1
        n_days: T, the number of days
        kind: gregorian or noleap
    """
    model_config = ConfigDict(frozen=True)

    start_date: date
    n_days: int = Field(gt=0)
    kind: CalendarKind = CalendarKind.GREGORIAN

    @model_validator(mode="after")
    def _check_start(self):
        if self.kind == CalendarKind.NOLEAP and _is_feb29(self.start_date):
            raise ValueError("a noleap calendar cannot start on Feb 29")
        return self

    @classmethod
    def from_years(cls, start_year: int, years: int, kind: CalendarKind = CalendarKind.GREGORIAN) -> "Calendar":
        """Calendar covering ``years`` full years starting Jan 1 of ``start_year``."""
        start = date(start_year, 1, 1)
        if kind == CalendarKind.NOLEAP:
            n_days = 365 * years
        else:
            n_days = (date(start_year + years, 1, 1) - start).days
        return cls(start_date=start, n_days=n_days, kind=kind)

    @classmethod
    def from_epoch_day(cls, epoch_day: int, n_days: int, kind: CalendarKind = CalendarKind.GREGORIAN) -> "Calendar":
        return cls(start_date=UNIX_EPOCH + timedelta(days=int(epoch_day)), n_days=n_days, kind=kind)

    @property
    def epoch_day(self) -> int:
        """Days from 1970-01-01 to the start date."""
        return (self.start_date - UNIX_EPOCH).days

    @property
    def dates(self) -> List[date]:
        return list(self._tables[0])

    @property
    def end_date(self) -> date:
        return self._tables[0][-1]

    @property
    def years(self) -> np.ndarray:
        """Calendar year of each day (length T, read-only)."""
        return self._tables[1]

    @property
    def month_index(self) -> np.ndarray:
        """0-based month index j - 1 of each day (length T, read-only)."""
        return self._tables[2]

    @property
    def doy_slots(self) -> np.ndarray:
        """1-based day-of-year slot of each day (length T, read-only)."""
        return self._tables[3]

    @property
    def n_months(self) -> int:
        return int(self.month_index[-1]) + 1

    @property
    def _tables(self):
        return _calendar_tables(self.start_date, self.n_days, self.kind)

    def month_days(self, month: int) -> np.ndarray:
        """0-based day positions belonging to 0-based month ``month``."""
        return np.flatnonzero(self.month_index == month)

    def month_start(self, month: int) -> date:
        return self._tables[0][int(self.month_days(month)[0])]

    def date_to_t(self, day: date) -> int:
        """
        Day serial of ``day``.

        Raises:
            DataError: If the date is outside the calendar (or is Feb 29 in a noleap calendar)
        """
        if day < self.start_date or day > self.end_date or (self.kind == CalendarKind.NOLEAP and _is_feb29(day)):
            raise DataError(f"date {day.isoformat()} is outside the calendar {self.start_date} .. {self.end_date}")
        offset = (day - self.start_date).days
        if self.kind == CalendarKind.NOLEAP:
            offset -= sum(
                1 for year in range(self.start_date.year, day.year + 1)
                if isleap(year) and self.start_date <= date(year, 2, 29) < day
            )
        return offset + 1

    def t_to_date(self, t: int) -> date:
        """
        Date of day serial ``t``.

        Raises:
            DataError: If t is outside 1..T
        """
        if t < 1 or t > self.n_days:
            raise DataError(f"day serial {t} is outside 1..{self.n_days}")
        return self._tables[0][t - 1]
