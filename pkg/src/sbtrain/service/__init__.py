"""Service layer: FastAPI app plus request/response schemas."""
