import logging
import logging.config
from typing import Tuple, Type

from pydantic_settings import BaseSettings, PydanticBaseSettingsSource


class Settings(BaseSettings):
    PROJECT_NAME: str = "causalflow"

    PROJECT_DESCRIPTION: str = """
    causalflow trains and evaluates a desk-scale causal-flow visual encoder: visual tokens
    attend bidirectionally, learnable flow queries attend causally, and only the query
    outputs reach the language decoder.
    """

    LOG_FORMAT: str = "%(asctime)s - %(levelname)s - %(message)s"

    CHECKPOINT_MAGIC: bytes = b"CFLOWCKP"
    CHECKPOINT_FORMAT_VERSION: int = 1

    MANIFEST_FILE: str = "manifest.tsv"
    METRICS_FILE: str = "metrics.jsonl"
    REPORT_FILE: str = "report.jsonl"

    class Config:
        case_sensitive = True

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # environment variables are not a configuration source
        return (init_settings,)


settings = Settings()


def configure_logging(level: int = logging.INFO) -> None:
    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {"default": {"format": settings.LOG_FORMAT}},
            "handlers": {
                "stderr": {
                    "class": "logging.StreamHandler",
                    "formatter": "default",
                    "stream": "ext://sys.stderr",
                }
            },
            "loggers": {"causalflow": {"handlers": ["stderr"], "level": level, "propagate": False}},
        }
    )
