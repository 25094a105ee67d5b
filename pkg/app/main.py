# app/main.py
"""
Punto de entrada HTTP del servicio de robustez adversarial.

Expone la ejecución de planes de experimento:
- Matrices de transferencia y ensembles con modelo excluido
- Barridos de iteraciones, ε y defensas
- AUC media multi-etiqueta
"""

import logging
from contextlib import asynccontextmanager

import uvicorn
from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.api.experiment_routes import router as experiment_router
from app.cli import configure_logging
from app.config import settings

# Cargar variables de entorno
load_dotenv()

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Hook de ciclo de vida: configuración de logging y resumen de arranque."""
    configure_logging()
    logger.info("🔄 Iniciando %s...", settings.SERVICE_NAME)
    logger.info("   ✅ Workers de ataque: %d", settings.AXRX_WORKERS)
    logger.info("   ✅ Resultados en %s, checkpoints en %s", settings.OUTPUT_DIR, settings.CHECKPOINT_DIR)
    logger.info("   📚 Documentación: http://localhost:%d/docs", settings.SERVICE_PORT)

    yield

    logger.info("👋 Cerrando %s...", settings.SERVICE_NAME)


app = FastAPI(
    title="AXRX Robustness API",
    description="""
## API de evaluación de robustez adversarial multi-etiqueta

Genera ejemplos adversariales (FGSM, PGD, MIFGSM, DAA, DII-FGSM) contra
clasificadores multi-etiqueta y mide su transferencia y el efecto de las
defensas (entrenamiento adversarial, PDT y su combinación) con AUC media.

### 🔗 Endpoints

* `POST /api/v1/experiments/run` - Ejecutar un plan de experimento
* `POST /api/v1/experiments/auc` - AUC media de logits multi-etiqueta
* `GET /api/v1/experiments/health` - Estado del servicio
    """,
    version="1.0.0",
    lifespan=lifespan,
    docs_url="/docs",
    redoc_url="/redoc",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(experiment_router)


@app.get("/", tags=["Root"])
def root():
    """Endpoint raíz con información del servicio."""
    return {
        "service": settings.SERVICE_NAME,
        "version": "1.0.0",
        "description": "Ataques adversariales transferibles y defensas para clasificación multi-etiqueta",
        "documentation": "/docs",
        "endpoints": {
            "run": "/api/v1/experiments/run",
            "auc": "/api/v1/experiments/auc",
            "health": "/api/v1/experiments/health",
        },
    }


@app.get("/health", tags=["Health"])
def health():
    """Health check básico."""
    return {"status": "healthy"}


if __name__ == "__main__":
    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=settings.SERVICE_PORT,
        reload=settings.DEBUG,
    )
