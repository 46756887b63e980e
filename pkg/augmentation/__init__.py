from .params import AugmentParams, AugmentationResult
from .domains import DomainSpec, ToneTransform, get_all_domains, get_domain, load_catalogue
from .strategies import augment, augment_inpaint, augment_instruction, augment_refine

__all__ = [
    "AugmentParams",
    "AugmentationResult",
    "DomainSpec",
    "ToneTransform",
    "get_all_domains",
    "get_domain",
    "load_catalogue",
    "augment",
    "augment_inpaint",
    "augment_instruction",
    "augment_refine",
]
