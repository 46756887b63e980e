from dataclasses import dataclass, field
from typing import Dict
from dotenv import load_dotenv
import os

load_dotenv()

@dataclass
class LogConfig:
    # DEBUG, INFO, WARNING or ERROR
    level: str = os.getenv("ADSTEST_LOG", "INFO").upper()

@dataclass
class SimulatorConfig:
    dt: float = float(os.getenv("ADSTEST_DT", "0.1"))
    wheelbase: float = 2.5
    steering_limit: float = 0.5
    # Steering slew rate in rad/s
    slew_rate: float = 2.0
    speed_time_constant: float = 1.0
    max_speed: float = 10.0
    vehicle_radius: float = 1.0
    cooldown_steps: int = 20
    reset_advance: float = 2.0
    n_steps: int = int(os.getenv("ADSTEST_N_STEPS", "2000"))
    frame_height: int = 160
    frame_width: int = 320

@dataclass
class AugmentationConfig:
    text_guidance: float = 10.0
    image_guidance: float = 2.0
    noise_level: float = 0.5
    # Probability that a mock backend produces a semantically broken image
    corrupt_base_prob: Dict[str, float] = field(default_factory=lambda: {
        "instruction": float(os.getenv("ADSTEST_CORRUPT_INSTRUCTION", "0.48")),
        "inpaint": float(os.getenv("ADSTEST_CORRUPT_INPAINT", "0.01")),
        "refine": float(os.getenv("ADSTEST_CORRUPT_REFINE", "0.12")),
    })
    # Path to the ODD domain catalogue
    domains_file: str = os.getenv("ADSTEST_DOMAINS_FILE", "domains.json")

@dataclass
class ValidatorSettings:
    threshold: float = float(os.getenv("ADSTEST_THRESHOLD", "0.9"))
    max_retries: int = int(os.getenv("ADSTEST_MAX_RETRIES", "10"))

@dataclass
class ServerConfig:
    host: str = os.getenv("ADSTEST_HOST", "127.0.0.1")
    port: int = int(os.getenv("ADSTEST_PORT", "8765"))
    timeout: float = float(os.getenv("ADSTEST_TIMEOUT", "10"))
    max_payload: int = 64 * 1024 * 1024

@dataclass
class DistillationConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-3
    pixels_per_class: int = 64
    n_pairs: int = int(os.getenv("ADSTEST_DISTILL_PAIRS", "200"))

@dataclass
class MetricsConfig:
    # Driving score penalty per infraction, multiplied once per occurrence
    penalties: Dict[str, float] = field(default_factory=lambda: {
        "cp": 0.50,
        "cv": 0.60,
        "ori": 0.65,
        "rli": 0.70,
        "ssi": 0.80,
    })

class Config:
    def __init__(self):
        self.log = LogConfig()
        self.sim = SimulatorConfig()
        self.augment = AugmentationConfig()
        self.validator = ValidatorSettings()
        self.server = ServerConfig()
        self.distill = DistillationConfig()
        self.metrics = MetricsConfig()
        self.debug: bool = False  # Will be set by main.py

# Global config instance
config = Config()
