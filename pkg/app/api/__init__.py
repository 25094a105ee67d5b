# app/api/__init__.py
"""Módulo de API endpoints."""

from app.api.experiment_routes import router as experiment_router

__all__ = ['experiment_router']
