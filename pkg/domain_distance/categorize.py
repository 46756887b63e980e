import csv
import math
from pathlib import Path
from typing import Dict, List, Literal, Mapping, Optional, Sequence

from pydantic import BaseModel, Field

from errors import DistanceModelError

Group = Literal["in_distribution", "in_between", "out_of_distribution"]
GROUPS: tuple = ("in_distribution", "in_between", "out_of_distribution")


class DomainScore(BaseModel):
    domain: str
    mean_error: float = Field(ge=0)
    n_samples: int = Field(ge=1)
    strategy: Optional[str] = None


def categorize_domains(scores: Sequence[DomainScore]) -> Dict[str, str]:
    """Sort by mean error and cut into three contiguous groups, earlier groups taking remainders."""
    n = len(scores)
    if n < 3:
        raise DistanceModelError(f"Categorization needs at least 3 domains, got {n}")
    ordered = sorted(scores, key=lambda s: s.mean_error)
    first = math.ceil(n / 3)
    second = math.ceil((n - first) / 2)
    groups = {}
    for rank, score in enumerate(ordered):
        if rank < first:
            groups[score.domain] = GROUPS[0]
        elif rank < first + second:
            groups[score.domain] = GROUPS[1]
        else:
            groups[score.domain] = GROUPS[2]
    return groups


class AgreementRow(BaseModel):
    domain: str
    groups: Dict[str, str]
    consistent: bool


def strategy_agreement(scores_by_strategy: Mapping[str, Sequence[DomainScore]]) -> List[AgreementRow]:
    """Per domain, its group under each strategy and whether every strategy agrees."""
    if not scores_by_strategy:
        raise DistanceModelError("No strategy scores to compare")
    per_strategy = {name: categorize_domains(scores) for name, scores in scores_by_strategy.items()}
    domains: List[str] = []
    for groups in per_strategy.values():
        domains.extend(d for d in groups if d not in domains)
    rows = []
    for domain in domains:
        groups = {name: per_strategy[name].get(domain, "") for name in per_strategy}
        consistent = "" not in groups.values() and len(set(groups.values())) == 1
        rows.append(AgreementRow(domain=domain, groups=groups, consistent=consistent))
    return rows


def write_scores_csv(path: Path, scores: Sequence[DomainScore], groups: Mapping[str, str]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["domain", "strategy", "mean_error", "n_samples", "group"])
        for score in sorted(scores, key=lambda s: s.mean_error):
            writer.writerow([score.domain, score.strategy or "", f"{score.mean_error:.6f}",
                             score.n_samples, groups.get(score.domain, "")])
    return path


def write_agreement_csv(path: Path, rows: Sequence[AgreementRow]) -> Path:
    path = Path(path)
    strategies = list(rows[0].groups) if rows else []
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["domain", *strategies, "consistent"])
        for row in rows:
            writer.writerow([row.domain, *(row.groups[s] for s in strategies), str(row.consistent).lower()])
    return path


def read_scores_csv(path: Path) -> List[DomainScore]:
    path = Path(path)
    if not path.exists():
        raise DistanceModelError(f"Scores file not found: {path}")
    with path.open(newline="", encoding="utf-8") as f:
        try:
            return [DomainScore(domain=row["domain"], mean_error=float(row["mean_error"]),
                                n_samples=int(row["n_samples"]), strategy=row.get("strategy") or None)
                    for row in csv.DictReader(f)]
        except (KeyError, ValueError) as e:
            raise DistanceModelError(f"Invalid scores file {path}: {e}") from e
