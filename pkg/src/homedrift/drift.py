"""Long-term behavioral change detection.

A robust per-feature baseline (median, scaled MAD, day-of-week medians) is
fitted on the reference period; observation windows slide weekly and are
scored with a two-sided rank-sum test plus a standardized median shift.
A report is emitted only when K consecutive windows flag with the same
direction. Constant-ish count features (MAD = 0) switch to an exact
count-difference rule so the detector stays scale-equivariant.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from .features import (
    SEASON_SENSITIVE,
    DailyFeatureVector,
    category_of,
    explanation_group_of,
)

MAD_SCALE = 1.4826


class InvalidThresholds(ValueError):
    pass


@dataclass(frozen=True)
class Thresholds:
    alpha: float = 0.01
    effect_min: float = 1.0  # MAD units
    persistence: int = 3  # consecutive flagged windows required
    window_days: int = 28
    stride_days: int = 7
    reference_days: int = 90
    min_support: int = 28  # valued reference days per feature
    min_window_valued: float = 0.5
    count_shift_min: int = 8  # quasi-constant rule: days differing from ref median

    def validate(self) -> None:
        if not 0 < self.alpha <= 1:
            raise InvalidThresholds("alpha must be in (0, 1]")
        if self.effect_min < 0:
            raise InvalidThresholds("effect_min must be >= 0")
        if self.persistence < 1:
            raise InvalidThresholds("persistence must be >= 1")
        if self.window_days < 2 or self.stride_days < 1 or self.reference_days < 1:
            raise InvalidThresholds("window/stride/reference days out of range")
        if not 0 < self.min_window_valued <= 1:
            raise InvalidThresholds("min_window_valued must be in (0, 1]")
        if self.count_shift_min < 1:
            raise InvalidThresholds("count_shift_min must be >= 1")

    def with_overrides(self, **kw) -> "Thresholds":
        t = replace(self, **kw)
        t.validate()
        return t


@dataclass
class FeatureBaseline:
    median: float
    mean: float
    mad_scaled: float  # 1.4826 * MAD; 0 marks a quasi-constant feature
    deviation_unit: float  # smallest positive |x - median| (0 if truly constant)
    quasi_constant: bool
    dow_medians: dict[int, float]
    fraction_missing: float
    n_valued: int
    scorable: bool
    reason: str = ""


@dataclass
class BaselineModel:
    start: dt.date
    end: dt.date  # exclusive
    features: dict[str, FeatureBaseline]
    reference: dict[str, np.ndarray]  # valued reference days per feature

    def months(self) -> set[int]:
        out = set()
        d = self.start
        while d < self.end:
            out.add(d.month)
            d += dt.timedelta(days=1)
        return out


class InsufficientSupport(ValueError):
    pass


class WindowTooSparse(ValueError):
    pass


def fit_baseline(
    vectors: list[DailyFeatureVector],
    start: dt.date,
    end: dt.date,
    thresholds: Thresholds = Thresholds(),
) -> BaselineModel:
    """Robust per-feature reference statistics; under-supported features are
    marked un-scorable instead of failing the whole fit."""
    names: list[str] = []
    for v in vectors:
        for name in list(v.values) + list(v.missing):
            if name not in names:
                names.append(name)
    n_days = (end - start).days
    features: dict[str, FeatureBaseline] = {}
    reference: dict[str, np.ndarray] = {}
    for name in names:
        vals = []
        dows = {i: [] for i in range(7)}
        for v in vectors:
            if not (start <= v.date < end):
                continue
            x = v.values.get(name)
            if x is None:
                continue
            vals.append(x)
            dows[v.date.weekday()].append(x)
        arr = np.asarray(vals, dtype=np.float64)
        frac_missing = 1.0 - len(arr) / max(n_days, 1)
        scorable = True
        reason = ""
        if frac_missing > 0.5:
            scorable, reason = False, "missing-more-than-half"
        elif len(arr) < thresholds.min_support:
            scorable, reason = False, "insufficient-support"
        median = float(np.median(arr)) if len(arr) else math.nan
        mean = float(arr.mean()) if len(arr) else math.nan
        mad = float(np.median(np.abs(arr - median))) if len(arr) else math.nan
        dev = 0.0
        if len(arr):
            pos = np.abs(arr - median)
            pos = pos[pos > 0]
            dev = float(pos.min()) if len(pos) else 0.0
        features[name] = FeatureBaseline(
            median=median,
            mean=mean,
            mad_scaled=MAD_SCALE * mad if len(arr) else math.nan,
            deviation_unit=dev,
            quasi_constant=bool(len(arr) and mad == 0.0),
            dow_medians={d: float(np.median(x)) for d, x in dows.items() if x},
            fraction_missing=frac_missing,
            n_valued=len(arr),
            scorable=scorable,
            reason=reason,
        )
        reference[name] = arr
    return BaselineModel(start=start, end=end, features=features, reference=reference)


def _ranksum_p(window: np.ndarray, reference: np.ndarray) -> float:
    combined = np.concatenate([window, reference])
    if np.ptp(combined) == 0.0:
        return 1.0
    res = stats.mannwhitneyu(window, reference, alternative="two-sided", method="asymptotic")
    return float(res.pvalue)


@dataclass
class WindowScore:
    feature: str
    start: dt.date
    end: dt.date  # exclusive
    effect: float
    p_value: float
    window_median: float
    n_valued: int
    flagged: bool
    direction: str  # "increase" | "decrease" | ""


def score_window(
    baseline: BaselineModel,
    feature: str,
    window_values: np.ndarray,
    thresholds: Thresholds = Thresholds(),
) -> tuple[float, float]:
    """(effect size, p value) of one observation window for one feature."""
    fb = baseline.features.get(feature)
    if fb is None or not fb.scorable:
        raise InsufficientSupport(feature)
    window_values = np.asarray(window_values, dtype=np.float64)
    need = math.ceil(thresholds.min_window_valued * thresholds.window_days)
    if len(window_values) < need:
        raise WindowTooSparse(
            f"{feature}: {len(window_values)} valued days of {thresholds.window_days}"
        )
    p = _ranksum_p(window_values, baseline.reference[feature])
    effect = _effect_size(fb, window_values)
    return effect, p


def _effect_size(fb: FeatureBaseline, window_values: np.ndarray) -> float:
    if fb.quasi_constant:
        scale = MAD_SCALE * (fb.deviation_unit if fb.deviation_unit > 0 else 1.0)
        return float((window_values.mean() - fb.mean) / scale)
    return float((np.median(window_values) - fb.median) / fb.mad_scaled)


def _score_one(
    baseline: BaselineModel,
    feature: str,
    window_values: np.ndarray,
    start: dt.date,
    end: dt.date,
    thresholds: Thresholds,
) -> WindowScore:
    fb = baseline.features[feature]
    effect, p = score_window(baseline, feature, window_values, thresholds)
    if fb.quasi_constant:
        # exact count-difference rule: the window must hold at least D excess
        # (or missing) events relative to the reference rate, measured in units
        # of the smallest reference deviation so the rule is scale-equivariant
        unit = fb.deviation_unit if fb.deviation_unit > 0 else 1.0
        excess = abs(float(window_values.mean()) - fb.mean) * len(window_values)
        strong = excess >= thresholds.count_shift_min * unit
    else:
        strong = abs(effect) >= thresholds.effect_min
    flagged = bool(p <= thresholds.alpha and strong)
    direction = "increase" if effect > 0 else ("decrease" if effect < 0 else "")
    if not direction:
        flagged = False
    return WindowScore(
        feature=feature,
        start=start,
        end=end,
        effect=effect,
        p_value=p,
        window_median=float(np.median(window_values)),
        n_valued=len(window_values),
        flagged=flagged,
        direction=direction if flagged else direction,
    )


@dataclass
class ChangeReport:
    pseudonym: str
    feature: str
    category: str
    start: dt.date
    end: dt.date  # exclusive
    direction: str
    effect_size: float
    persistence: int
    p_value: float
    reference_median: float
    window_median: float
    seasonal_confound: bool = False
    explanation: str = ""
    contributing: list[tuple[str, float]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "pseudonym": self.pseudonym,
            "feature": self.feature,
            "category": self.category,
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
            "direction": self.direction,
            "effect_size": self.effect_size,
            "persistence": self.persistence,
            "p_value": self.p_value,
            "reference_median": self.reference_median,
            "window_median": self.window_median,
            "seasonal_confound": self.seasonal_confound,
            "explanation": self.explanation,
            "contributing": [[f, a] for f, a in self.contributing],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ChangeReport":
        return cls(
            pseudonym=doc["pseudonym"],
            feature=doc["feature"],
            category=doc["category"],
            start=dt.date.fromisoformat(doc["start"]),
            end=dt.date.fromisoformat(doc["end"]),
            direction=doc["direction"],
            effect_size=doc["effect_size"],
            persistence=doc["persistence"],
            p_value=doc["p_value"],
            reference_median=doc["reference_median"],
            window_median=doc["window_median"],
            seasonal_confound=doc["seasonal_confound"],
            explanation=doc["explanation"],
            contributing=[(f, a) for f, a in doc["contributing"]],
        )


def _window_values(
    by_date: dict[dt.date, DailyFeatureVector], feature: str, start: dt.date, days: int
) -> np.ndarray:
    vals = []
    for k in range(days):
        v = by_date.get(start + dt.timedelta(days=k))
        if v is None:
            continue
        x = v.values.get(feature)
        if x is not None:
            vals.append(x)
    return np.asarray(vals, dtype=np.float64)


def score_all_windows(
    baseline: BaselineModel,
    vectors: list[DailyFeatureVector],
    thresholds: Thresholds = Thresholds(),
) -> dict[str, list[WindowScore]]:
    """Weekly sliding-window scores per scorable feature (sparse windows skipped)."""
    by_date = {v.date: v for v in vectors}
    last = max(by_date) if by_date else baseline.end
    starts = []
    s = baseline.end
    while s + dt.timedelta(days=thresholds.window_days) <= last + dt.timedelta(days=1):
        starts.append(s)
        s += dt.timedelta(days=thresholds.stride_days)
    out: dict[str, list[WindowScore]] = {}
    for feature, fb in baseline.features.items():
        if not fb.scorable:
            continue
        scores: list[WindowScore] = []
        for start in starts:
            end = start + dt.timedelta(days=thresholds.window_days)
            vals = _window_values(by_date, feature, start, thresholds.window_days)
            try:
                scores.append(_score_one(baseline, feature, vals, start, end, thresholds))
            except WindowTooSparse:
                continue
        out[feature] = scores
    return out


def detect_sustained(
    baseline: BaselineModel,
    vectors: list[DailyFeatureVector],
    thresholds: Thresholds = Thresholds(),
    pseudonym: str = "",
) -> tuple[list[ChangeReport], dict[str, list[WindowScore]]]:
    """Reports for runs of >= K consecutive same-direction flagged windows."""
    window_scores = score_all_windows(baseline, vectors, thresholds)
    reports: list[ChangeReport] = []
    for feature, scores in sorted(window_scores.items()):
        runs = _flag_runs(scores)
        for run in runs:
            if len(run) < thresholds.persistence:
                continue
            fb = baseline.features[feature]
            effects = np.array([w.effect for w in run])
            pvals = np.array([w.p_value for w in run])
            medians = np.array([w.window_median for w in run])
            reports.append(
                ChangeReport(
                    pseudonym=pseudonym,
                    feature=feature,
                    category=category_of(feature),
                    start=run[0].start,
                    end=run[-1].end,
                    direction=run[0].direction,
                    effect_size=float(np.median(effects)),
                    persistence=len(run),
                    p_value=float(np.median(pvals)),
                    reference_median=fb.median,
                    window_median=float(np.median(medians)),
                )
            )
    return reports, window_scores


def _flag_runs(scores: list[WindowScore]) -> list[list[WindowScore]]:
    """Maximal runs of consecutive flagged windows sharing one direction.

    Consecutive means adjacent in the weekly slide; a skipped (sparse) window
    breaks the run."""
    runs: list[list[WindowScore]] = []
    current: list[WindowScore] = []
    prev_start: Optional[dt.date] = None
    for w in scores:
        joins = (
            w.flagged
            and current
            and prev_start is not None
            and (w.start - prev_start).days == 7
            and w.direction == current[-1].direction
        )
        if joins:
            current.append(w)
        elif w.flagged:
            if current:
                runs.append(current)
            current = [w]
        else:
            if current:
                runs.append(current)
            current = []
        prev_start = w.start
    if current:
        runs.append(current)
    return runs


# -- seasonal confound -----------------------------------------------------------


def seasonal_flag(report: ChangeReport, baseline: BaselineModel) -> bool:
    """True when reference and change-window months are disjoint and the
    feature belongs to the season-sensitive (outdoor mobility) set."""
    if report.feature not in SEASON_SENSITIVE:
        return False
    window_months = set()
    d = report.start
    while d < report.end:
        window_months.add(d.month)
        d += dt.timedelta(days=1)
    return len(window_months & baseline.months()) == 0


# -- explanations -----------------------------------------------------------------


def fmt_number(x: float) -> str:
    """One shared number format so explanation text matches report fields."""
    if math.isfinite(x) and float(x) == int(x):
        return str(int(x))
    return f"{x:.2f}"


_DIR_WORD = {"increase": "increased", "decrease": "decreased"}

_FEATURE_PHRASE = {
    "lunch_cooking_peaks": "Cooking activity at lunchtime",
    "dinner_cooking_peaks": "Cooking activity at dinnertime",
    "lunchtime_outings": "lunchtime outings",
    "outings": "outings",
    "outing_minutes": "time spent outside",
    "fridge_openings": "fridge use",
    "pantry_openings": "pantry use",
    "shower_events": "showering",
    "toothbrush_sessions": "toothbrushing",
    "sleep_total_min": "total sleep",
    "sleep_deep_min": "deep sleep",
    "sleep_rem_min": "REM sleep",
    "sleep_light_min": "light sleep",
    "wake_up_count": "night-time awakenings",
    "medicine_accesses": "medicine cabinet access",
    "steps": "daily steps",
    "test_compliance": "cognitive test compliance",
    "test_score": "cognitive test scores",
}

_GROUP_SUFFIX = {
    "lunch-habits": ", suggesting a change in lunch habits",
    "sleep": ", a shift in sleep structure",
    "hygiene": ", consistent with reduced personal hygiene",
    "therapy": ", suggesting reduced adherence to the prescribed therapy",
    "mobility-outdoor": ", a change in outdoor mobility",
}

_UNIT = {
    "lunch_cooking_peaks": "peaks/day",
    "dinner_cooking_peaks": "peaks/day",
    "lunchtime_outings": "per day",
    "outings": "per day",
    "outing_minutes": "min/day",
    "sleep_total_min": "min/night",
    "sleep_deep_min": "min/night",
    "sleep_rem_min": "min/night",
    "sleep_light_min": "min/night",
    "wake_up_count": "per night",
    "steps": "per day",
}


def _phrase(report: ChangeReport, first: bool) -> str:
    name = _FEATURE_PHRASE.get(report.feature, report.feature.replace("_", " "))
    if not first:
        name = name[0].lower() + name[1:]
    unit = _UNIT.get(report.feature, "/day")
    return (
        f"{name} {_DIR_WORD[report.direction]} "
        f"({fmt_number(report.reference_median)}→{fmt_number(report.window_median)} {unit})"
    )


def explain(
    report: ChangeReport,
    baseline: BaselineModel,
    vectors: list[DailyFeatureVector],
    co_reports: list[ChangeReport],
    thresholds: Thresholds = Thresholds(),
) -> tuple[str, list[tuple[str, float]]]:
    """Template text plus leave-one-feature-out counterfactual attribution.

    The attribution of each co-flagged feature in the group is the drop in
    the group's aggregate drift score when that feature's window days are
    replaced by its reference median.
    """
    group = explanation_group_of(report.feature)
    members = [report] + [
        r
        for r in co_reports
        if r is not report
        and explanation_group_of(r.feature) == group
        and r.start < report.end
        and report.start < r.end
    ]
    members.sort(key=lambda r: r.feature)
    by_date = {v.date: v for v in vectors}
    span_days = (report.end - report.start).days

    def effect_of(feature: str, substitute: bool) -> float:
        fb = baseline.features[feature]
        vals = _window_values(by_date, feature, report.start, span_days)
        if substitute or len(vals) == 0:
            vals = np.full(max(len(vals), 1), fb.median)
        return abs(_effect_size(fb, vals))

    full_score = sum(effect_of(r.feature, substitute=False) for r in members)
    drops = []
    for r in members:
        without = sum(
            effect_of(o.feature, substitute=(o.feature == r.feature)) for o in members
        )
        drops.append(max(full_score - without, 0.0))
    total = sum(drops)
    if total <= 0:
        attributions = [(r.feature, 1.0 / len(members)) for r in members]
    else:
        attributions = [(r.feature, d / total) for r, d in zip(members, drops)]

    parts = [_phrase(r, first=(i == 0)) for i, r in enumerate(members)]
    if len(parts) == 1:
        text = parts[0]
    else:
        text = ", while ".join(parts[:2])
        for extra in parts[2:]:
            text += ", and " + extra
    text += _GROUP_SUFFIX.get(group, "")
    text += "."
    if report.seasonal_confound:
        text += (
            " Caution: the reference period covers different calendar months, so this"
            " change may reflect seasonal variation rather than a behavioral shift."
        )
    return text, attributions


# -- full per-subject analysis ------------------------------------------------------


@dataclass
class AnalysisResult:
    baseline: BaselineModel
    reports: list[ChangeReport]
    window_scores: dict[str, list[WindowScore]]


def analyze_subject(
    vectors: list[DailyFeatureVector],
    thresholds: Thresholds = Thresholds(),
    pseudonym: str = "",
    reference_start: Optional[dt.date] = None,
) -> AnalysisResult:
    if not vectors:
        raise ValueError("no feature vectors")
    vectors = sorted(vectors, key=lambda v: v.date)
    ref_start = reference_start or vectors[0].date
    ref_end = ref_start + dt.timedelta(days=thresholds.reference_days)
    baseline = fit_baseline(vectors, ref_start, ref_end, thresholds)
    reports, window_scores = detect_sustained(baseline, vectors, thresholds, pseudonym)
    for r in reports:
        r.seasonal_confound = seasonal_flag(r, baseline)
    for r in reports:
        text, attributions = explain(r, baseline, vectors, reports, thresholds)
        r.explanation = text
        r.contributing = attributions
    return AnalysisResult(baseline=baseline, reports=reports, window_scores=window_scores)


def reports_to_json(reports: list[ChangeReport]) -> str:
    return json.dumps([r.to_json() for r in reports], sort_keys=True, indent=1) + "\n"


def reports_from_json(text: str) -> list[ChangeReport]:
    return [ChangeReport.from_json(doc) for doc in json.loads(text)]


def clinician_summary(pseudonym: str, reports: list[ChangeReport]) -> str:
    """Plain-text per-subject summary for the follow-up visit."""
    lines = [f"Subject {pseudonym}", "=" * (8 + len(pseudonym)), ""]
    if not reports:
        lines.append("No sustained behavioral changes detected at the configured thresholds.")
    for r in sorted(reports, key=lambda r: (r.start, r.feature)):
        flag = " [possible seasonal effect]" if r.seasonal_confound else ""
        lines.append(
            f"- {r.start.isoformat()} .. {r.end.isoformat()}  {r.feature}: {r.direction}"
            f" (effect {r.effect_size:+.2f}, {r.persistence} consecutive windows,"
            f" p={r.p_value:.1e}){flag}"
        )
        lines.append(f"    {r.explanation}")
    return "\n".join(lines) + "\n"
