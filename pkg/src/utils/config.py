import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()

DEFAULT_SUPPORT_CAP = 2 ** 20


class Settings(BaseModel):
    """Process-wide defaults read from the environment (and an optional .env file)."""

    seed: Optional[int] = None
    support_cap: int = Field(default=DEFAULT_SUPPORT_CAP, ge=1)
    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "Settings":
        seed = os.getenv("AISBOUND_SEED")
        return cls(
            seed=int(seed, 0) if seed else None,
            support_cap=int(os.getenv("AISBOUND_CAP", DEFAULT_SUPPORT_CAP)),
            threads=int(os.getenv("AISBOUND_THREADS", 1)),
            log_level=os.getenv("LOG_LEVEL", "INFO"),
        )

    def resolve_seed(self, instance_seed: int, flag_seed: Optional[int] = None) -> int:
        # --seed beats AISBOUND_SEED beats the instance file
        if flag_seed is not None:
            return flag_seed
        if self.seed is not None:
            return self.seed
        return instance_seed


settings = Settings.from_env()
