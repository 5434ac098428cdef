from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.utils.logger import setup_logger

logger = setup_logger(__name__)

app = FastAPI(
    title="QClock API",
    description="Simulated optical-clock array experiments with local phase control"
)

# CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

@app.get("/")
def health_check():
    return {"status": "healthy"}

# Routers are imported after the app exists so a broken import still leaves /
try:
    from app.api.routes import router

    app.include_router(router)

except Exception as e:
    logger.error(f"Router load failed: {e}")
