"""Plot-ready tables: per-feature daily series, rolling medians, and flagged
report windows, derived purely from stored analysis results."""

from __future__ import annotations

import csv
import datetime as dt
from typing import Optional

import numpy as np

from .drift import ChangeReport
from .features import DailyFeatureVector


def feature_series(
    vectors: list[DailyFeatureVector],
    reports: list[ChangeReport],
    feature: str,
    start: Optional[dt.date] = None,
    end: Optional[dt.date] = None,
    rolling_days: int = 14,
) -> dict:
    vectors = sorted(vectors, key=lambda v: v.date)
    if start is None and vectors:
        start = vectors[0].date
    if end is None and vectors:
        end = vectors[-1].date + dt.timedelta(days=1)
    rows = [v for v in vectors if start <= v.date < end] if vectors else []
    dates = [v.date for v in rows]
    values = [v.values.get(feature) for v in rows]

    rolling: list[Optional[float]] = []
    for i in range(len(rows)):
        lo = max(0, i - rolling_days + 1)
        window = [x for x in values[lo : i + 1] if x is not None]
        rolling.append(float(np.median(window)) if window else None)

    windows = [
        {
            "start": r.start.isoformat(),
            "end": r.end.isoformat(),
            "direction": r.direction,
            "seasonal_confound": r.seasonal_confound,
        }
        for r in reports
        if r.feature == feature
    ]
    return {
        "feature": feature,
        "dates": [d.isoformat() for d in dates],
        "values": values,
        "rolling_median": rolling,
        "windows": windows,
    }


SERIES_HEADER = "#homedrift-series 1"


def write_series_csv(series: dict, fh) -> None:
    """Columnar text: date, value (empty = missing), rolling median, flagged."""
    fh.write(SERIES_HEADER + "\n")
    fh.write(f"# feature: {series['feature']}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["date", "value", "rolling_median", "in_change_window"])
    spans = [
        (dt.date.fromisoformat(w["start"]), dt.date.fromisoformat(w["end"]))
        for w in series["windows"]
    ]
    for date_text, value, roll in zip(series["dates"], series["values"], series["rolling_median"]):
        d = dt.date.fromisoformat(date_text)
        flagged = any(s <= d < e for s, e in spans)
        writer.writerow(
            [
                date_text,
                "" if value is None else repr(float(value)),
                "" if roll is None else repr(float(roll)),
                "1" if flagged else "0",
            ]
        )
