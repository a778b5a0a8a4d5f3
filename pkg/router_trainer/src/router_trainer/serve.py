"""HTTP serving for a trained router checkpoint.

POST /route {"question": "..."} -> {"use_sot": bool, "score": float}
The decision is exactly score > threshold; clients never re-threshold.
"""

import threading

import torch
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .model import load_artifact
from .train import predict_probs

DEFAULT_THRESHOLD = 0.5


class RouteRequest(BaseModel):
    question: str


def create_app(artifact_dir, threshold: float = DEFAULT_THRESHOLD) -> FastAPI:
    model, vocab, cfg = load_artifact(artifact_dir)
    lock = threading.Lock()
    app = FastAPI(title="router")

    @app.post("/route")
    def route(request: RouteRequest):
        if not request.question.strip():
            raise HTTPException(status_code=400, detail="question is empty")
        with lock, torch.no_grad():
            score = float(predict_probs(model, vocab, [request.question],
                                        cfg.max_seq_len)[0])
        return {"use_sot": score > threshold, "score": score}

    return app


def serve(artifact_dir, port: int, host: str = "127.0.0.1",
          threshold: float = DEFAULT_THRESHOLD) -> None:
    import uvicorn

    uvicorn.run(create_app(artifact_dir, threshold), host=host, port=port,
                log_level="warning")
