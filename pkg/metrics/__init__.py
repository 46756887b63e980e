from .failures import ftc, mean_abs_cte, mean_jerk, rcte, rsj
from .urban import INFRACTIONS, count_infractions, driving_score, route_completion
from .overhead import OverheadSummary, overhead_report
from .report import RunReport, UrbanScores, build_report, write_report_json, write_reports_csv

__all__ = [
    "ftc",
    "mean_abs_cte",
    "mean_jerk",
    "rcte",
    "rsj",
    "INFRACTIONS",
    "count_infractions",
    "driving_score",
    "route_completion",
    "OverheadSummary",
    "overhead_report",
    "RunReport",
    "UrbanScores",
    "build_report",
    "write_report_json",
    "write_reports_csv",
]
