import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

from rich.progress import Progress

from agents.base import Agent
from augmentation.backends import Augmenter
from augmentation.params import AugmentParams, derive_seed
from core.dataset import Dataset, DatasetManifest, DatasetWriter
from core.types import Image
from errors import DistillationError
from simulator.world import World
from validator.validate import ValidatorConfig, augment_validated

logger = logging.getLogger("adstest")

# Give up when this many simulator steps per requested pair produced nothing usable
MAX_STEPS_PER_PAIR = 50


@dataclass
class PairDataset:
    pairs: List[Tuple[Image, Image]]
    domain: Optional[str] = None
    strategy: Optional[str] = None
    manifest: DatasetManifest = field(default_factory=DatasetManifest)
    directory: Optional[Path] = None

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def load(cls, directory: Path, verify: bool = True, valid_only: bool = True) -> "PairDataset":
        dataset = Dataset(directory, verify=verify)
        pairs = []
        for sample in dataset:
            if sample.augmented is None:
                continue
            if valid_only and sample.entry.gt_valid is False:
                continue
            pairs.append((sample.image, sample.augmented))
        if not pairs:
            raise DistillationError(f"No image pairs in {directory}")
        return cls(pairs=pairs, domain=dataset.manifest.domain, strategy=dataset.manifest.strategy,
                   manifest=dataset.manifest, directory=Path(directory))

    def split(self, holdout: int) -> Tuple["PairDataset", "PairDataset"]:
        """(training, holdout) with the last `holdout` pairs held out."""
        if not 0 < holdout < len(self.pairs):
            raise DistillationError(f"Cannot hold out {holdout} of {len(self.pairs)} pairs")
        cut = len(self.pairs) - holdout
        head = PairDataset(self.pairs[:cut], self.domain, self.strategy)
        tail = PairDataset(self.pairs[cut:], self.domain, self.strategy)
        return head, tail


def collect_pairs(world: World, agent: Agent, augmenter: Augmenter, n: int, directory: Path,
                  seed: int = 0, params: Optional[AugmentParams] = None,
                  validator_cfg: Optional[ValidatorConfig] = None, domain: Optional[str] = None,
                  stride: int = 1, unfiltered: bool = False,
                  show_progress: bool = False) -> PairDataset:
    """Drive the world with `agent` on clean frames and store (original, augmented) views.

    Filtered collection keeps only augmentations that pass validation. Unfiltered
    collection keeps every attempt together with its ground-truth validity label.
    """
    if n < 1:
        raise DistillationError(f"n must be >= 1, got {n}")
    if stride < 1:
        raise DistillationError(f"stride must be >= 1, got {stride}")
    params = params or AugmentParams()
    validator_cfg = validator_cfg or ValidatorConfig()
    strategy = augmenter.strategy

    pairs: List[Tuple[Image, Image]] = []
    max_steps = MAX_STEPS_PER_PAIR * n
    start = world.step_index
    with DatasetWriter(directory, domain=domain, strategy=strategy, seed=seed) as writer, \
            Progress(disable=not show_progress, transient=True) as progress:
        task = progress.add_task(f"Collecting {strategy} pairs", total=n)
        while len(pairs) < n:
            if world.step_index - start >= max_steps:
                raise DistillationError(f"Only {len(pairs)} of {n} pairs after {max_steps} steps")
            frame = world.render()
            command = agent.act(frame)
            if world.step_index % stride == 0:
                step_params = params.with_seed(derive_seed(seed, frame.step))
                if unfiltered:
                    result = augmenter.augment(frame, step_params)
                    keep = True
                else:
                    result, _, _ = augment_validated(frame, augmenter, step_params, validator_cfg)
                    keep = not result.fallback
                if keep:
                    for view, augmented in zip(frame.views, result.images):
                        if len(pairs) == n:
                            break
                        writer.add(view.image, view.mask, augmented, seed=result.seed_used,
                                   gt_valid=result.gt_valid, category=view.name)
                        pairs.append((view.image, augmented))
                        progress.advance(task)
            world.advance(command)

    logger.info(f"Collected {len(pairs)} {strategy} pairs in {world.step_index - start} steps into {directory}")
    return PairDataset(pairs=pairs, domain=domain, strategy=strategy,
                       manifest=writer.manifest, directory=Path(directory))
