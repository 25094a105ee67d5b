# app/config.py
"""Configuración centralizada del toolkit de robustez."""

from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache


class Settings(BaseSettings):
    """Configuración del toolkit (variables de entorno o `.env`)."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Servicio
    SERVICE_NAME: str = "axrx-robustness-service"
    SERVICE_PORT: int = 8003
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Paralelismo (tope de workers para ataques y celdas de experimentos)
    AXRX_WORKERS: int = 4

    # Valores por defecto de experimentos
    DEFAULT_SEED: int = 17
    IMAGE_SIDE: int = 32
    NUM_LABELS: int = 6
    ATTACK_MINIBATCH: int = 32

    # Rutas
    OUTPUT_DIR: str = "outputs"
    CHECKPOINT_DIR: str = "checkpoints"


@lru_cache()
def get_settings() -> Settings:
    """Singleton para obtener la configuración."""
    return Settings()


settings = get_settings()
