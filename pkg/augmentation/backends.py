import logging
import time
from abc import ABC, abstractmethod
from typing import Iterable, Optional

from api.client import FramedClient
from api.protocol import AugmentRequest, AugmentResponse, ViewPayload, mask_to_payload
from core.types import Frame
from errors import ProtocolError
from .domains import DomainSpec
from .params import AugmentParams, AugmentationResult
from .strategies import DEFAULT_PRESERVED, augment

logger = logging.getLogger("adstest")


class Augmenter(ABC):
    """Something that turns a frame into augmented views for one domain."""

    strategy: str = ""

    @abstractmethod
    def augment(self, frame: Frame, params: AugmentParams) -> AugmentationResult:
        ...

    def close(self) -> None:
        pass


class MockAugmenter(Augmenter):
    def __init__(self, strategy: str, domain: DomainSpec,
                 preserved_classes: Iterable[int] = DEFAULT_PRESERVED):
        self.strategy = strategy
        self.domain = domain
        self.preserved_classes = frozenset(int(c) for c in preserved_classes)

    def augment(self, frame: Frame, params: AugmentParams) -> AugmentationResult:
        return augment(frame, self.strategy, self.domain, params, self.preserved_classes)


class IdentityAugmenter(Augmenter):
    """Returns the camera images untouched."""

    strategy = "identity"

    def augment(self, frame: Frame, params: AugmentParams) -> AugmentationResult:
        return AugmentationResult(images=frame.images, elapsed_ms=0.0, seed_used=params.seed,
                                  gt_valid=True, strategy=self.strategy)


class RemoteAugmenter(Augmenter):
    """Forwards frames to an augmentation server and blocks for the reply."""

    def __init__(self, endpoint: str, strategy: str, domain_name: str,
                 preserved_classes: Optional[Iterable[int]] = None,
                 timeout: Optional[float] = None, max_payload: Optional[int] = None):
        self.strategy = strategy
        self.domain_name = domain_name
        self.preserved_classes = None if preserved_classes is None else sorted(int(c) for c in preserved_classes)
        self.client = FramedClient(endpoint, timeout=timeout, max_payload=max_payload)

    def augment(self, frame: Frame, params: AugmentParams) -> AugmentationResult:
        start = time.perf_counter()
        request = AugmentRequest(
            frame_id=frame.step,
            strategy=self.strategy,
            domain=self.domain_name,
            params=params,
            preserved=self.preserved_classes,
            views=[ViewPayload.from_image(img) for img in frame.images],
            masks=[mask_to_payload(m) for m in frame.masks if m is not None],
        )
        reply = self.client.request(request)
        if not isinstance(reply, AugmentResponse):
            raise ProtocolError(f"Expected augment_result, got {reply.type}")
        if reply.frame_id != frame.step:
            raise ProtocolError(f"Reply for frame {reply.frame_id} while waiting for frame {frame.step}")
        images = [v.to_image() for v in reply.views]
        elapsed = (time.perf_counter() - start) * 1000.0
        logger.debug(f"Remote {self.strategy} frame {frame.step}: {elapsed:.1f} ms "
                     f"(server {reply.elapsed_ms:.1f} ms)")
        return AugmentationResult(
            images=images,
            elapsed_ms=elapsed,
            seed_used=reply.seed_used,
            gt_valid=reply.gt_valid,
            strategy=self.strategy,
            server_elapsed_ms=reply.elapsed_ms,
        )

    def close(self) -> None:
        self.client.close()


def remote_augment(endpoint: str, frame: Frame, domain_name: str, strategy: str,
                   params: AugmentParams, timeout: Optional[float] = None) -> AugmentationResult:
    """One-shot remote augmentation over a fresh connection."""
    augmenter = RemoteAugmenter(endpoint, strategy, domain_name, timeout=timeout)
    try:
        return augmenter.augment(frame, params)
    finally:
        augmenter.close()
