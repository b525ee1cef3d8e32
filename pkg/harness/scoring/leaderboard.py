"""
Leaderboard Module

Scores every submission over the validation set and ranks the teams.

Lower mean twCRPS ranks higher; ties are broken by team name. An invalid
submission is not dropped: it is scored +inf and ranks last. Late
submissions appear in the extended ranking but not in the official one.
"""
import math
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from harness.exceptions import MissingTruthError
from harness.model import DesignGrid, ScoreReport, WeightSpec
from harness.scoring.submission import load_submission
from harness.scoring.twcrps import aggregate, twcrps_batch
from harness.utils.logging_config import get_logger

logger = get_logger(__name__)

LEADERBOARD_COLUMNS = ["rank", "team", "score_e4"]


class SubmissionEntry(BaseModel):
    """
    One team's submission.

    Attributes:
        team: team label
        path: submission file
        late: submitted after the deadline
    """
    team: str
    path: str
    late: bool = False


def truth_values(truth: pd.DataFrame, expected_n_points: Optional[int] = None) -> np.ndarray:
    """
    The x_true column, checked to cover every validation point.

    Raises:
        MissingTruthError: If rows are missing or a value is undefined
    """
    x_true = truth["x_true"].to_numpy(dtype=np.float64)
    if expected_n_points is not None and x_true.shape[0] != expected_n_points:
        raise MissingTruthError(f"truth has {x_true.shape[0]} rows, the validation set has {expected_n_points}")
    if x_true.shape[0] == 0:
        raise MissingTruthError("truth table is empty")
    if np.isnan(x_true).any():
        raise MissingTruthError(f"truth is undefined for {int(np.isnan(x_true).sum())} points")
    return x_true


def score_submission(entry: SubmissionEntry, x_true: np.ndarray, design: DesignGrid = DesignGrid(),
                     spec: WeightSpec = WeightSpec(), threads: int = 1, round_label: str = "final") -> ScoreReport:
    """Score one submission; an invalid file yields an infinite score."""
    check, preds = load_submission(entry.path, x_true.shape[0], design)
    if not check.ok:
        return ScoreReport(team=entry.team, per_point=np.empty(0), twcrps=math.inf, score_e4=math.inf,
                           valid=False, reason=check.reason, late=entry.late, round=round_label)
    per_point = twcrps_batch(preds, x_true, design, spec, threads)
    mean, display = aggregate(per_point)
    logger.info(f"Team {entry.team}: score {display:.4f}")
    return ScoreReport(team=entry.team, per_point=per_point, twcrps=mean, score_e4=display,
                       late=entry.late, round=round_label)


def _relative_gain(better: float, worse: float) -> Optional[float]:
    if not (math.isfinite(better) and math.isfinite(worse)) or worse <= 0:
        return None
    return (worse - better) / worse


def rank_reports(reports: List[ScoreReport], reference_team: Optional[str] = None) -> List[ScoreReport]:
    """
    Sort ascending by mean twCRPS (team name on ties), assign ranks 1..n and
    the relative comparisons.

    ``improvement_vs_reference`` is (ref - score) / ref against the reference
    team's score; ``gap_to_next`` is (next - score) / next against the entry
    ranked directly below.
    """
    ordered = sorted(reports, key=lambda report: (report.twcrps, report.team))
    reference = next((report for report in ordered if report.team == reference_team), None)
    ranked = []
    for position, report in enumerate(ordered):
        following = ordered[position + 1] if position + 1 < len(ordered) else None
        ranked.append(report.model_copy(update={
            "rank": position + 1,
            "improvement_vs_reference": _relative_gain(report.twcrps, reference.twcrps) if reference else None,
            "gap_to_next": _relative_gain(report.twcrps, following.twcrps) if following else None,
        }))
    return ranked


def leaderboard(
    entries: List[SubmissionEntry],
    truth: pd.DataFrame,
    expected_n_points: Optional[int] = None,
    design: DesignGrid = DesignGrid(),
    spec: WeightSpec = WeightSpec(),
    threads: int = 1,
    include_late: bool = True,
    reference_team: Optional[str] = "benchmark",
    round_label: str = "final",
) -> List[ScoreReport]:
    """
    Score and rank submissions.

    Args:
        entries: submissions to score
        truth: truth table ``point_id,x_true``
        expected_n_points: size of the validation set, if known apart from the truth
        design: design grid
        spec: weight function
        threads: worker threads for the per-point scores
        include_late: extended ranking when True, official ranking when False
        reference_team: team the improvements are measured against
        round_label: label carried into every report

    Returns:
        Ranked ScoreReports

    Raises:
        MissingTruthError: If the truth does not cover every validation point
    """
    x_true = truth_values(truth, expected_n_points)
    kept = [entry for entry in entries if include_late or not entry.late]
    logger.info(f"Scoring {len(kept)} submissions ({len(entries) - len(kept)} late entries left out) "
                f"on {x_true.shape[0]} points")
    reports = [score_submission(entry, x_true, design, spec, threads, round_label) for entry in kept]
    return rank_reports(reports, reference_team)


def leaderboard_frame(reports: List[ScoreReport]) -> pd.DataFrame:
    return pd.DataFrame({
        "rank": [report.rank for report in reports],
        "team": [report.team for report in reports],
        "score_e4": [report.score_e4 for report in reports],
    })


def write_leaderboard_csv(reports: List[ScoreReport], path) -> None:
    """Write ``rank,team,score_e4``; invalid entries carry ``inf``."""
    leaderboard_frame(reports).to_csv(path, index=False, lineterminator="\n", float_format="%.6f")
    logger.info(f"Wrote leaderboard with {len(reports)} entries to {path}")


def format_table(reports: List[ScoreReport]) -> str:
    """Human-readable leaderboard."""
    frame = pd.DataFrame({
        "Rank": [report.rank for report in reports],
        "Team": [report.team + (" (late)" if report.late else "") for report in reports],
        "Score": ["+inf" if math.isinf(report.score_e4) else f"{report.score_e4:.4f}" for report in reports],
        "Note": [report.reason or "" for report in reports],
    })
    return frame.to_string(index=False)
