# api/pv_api.py
"""
Perturbation Validation API
FastAPI service exposing dataset generation, PV scoring and cross-validation
"""

from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, model_validator

from config.config import Config
from core.baselines import CvSpec, cross_validate
from core.datasets import Dataset, SyntheticSpec, generate
from core.errors import PvError
from core.pvcore import NoiseSchedule, pv_validate
from learners import LearnerSpec
from logger import get_api_logger

# Initialize FastAPI app
app = FastAPI(
    title="Perturbation Validation API",
    description="Score learner / training-set fit by retraining under label noise",
    version="1.0.0",
    docs_url="/docs",
    redoc_url="/redoc"
)

logger = get_api_logger()


# Pydantic models for API requests/responses
class SyntheticRequest(BaseModel):
    family: str = Field(..., description="moon, circle or linear")
    n_samples: int = Field(100, description="Number of points")
    feature_noise: float = Field(0.0, description="Std-dev of coordinate jitter, or flip fraction in labels mode")
    seed: int = Field(0, description="Generator seed")
    noise_mode: str = Field("features", description="features or labels")
    include_points: bool = Field(True, description="Return coordinates and labels")


class DatasetPayload(BaseModel):
    """Either a synthetic draw or an inline feature matrix with labels"""
    synthetic: Optional[SyntheticRequest] = None
    features: Optional[List[List[float]]] = None
    labels: Optional[List[Any]] = None
    name: str = "inline"

    @model_validator(mode='after')
    def _one_source(self):
        inline = self.features is not None or self.labels is not None
        if (self.synthetic is not None) == inline:
            raise ValueError("give either 'synthetic' or both 'features' and 'labels'")
        if inline and (self.features is None or self.labels is None):
            raise ValueError("inline datasets need both 'features' and 'labels'")
        return self


class LearnerPayload(BaseModel):
    family: str
    hyperparams: Dict[str, Any] = Field(default_factory=dict)
    train_seed: int = 0


class PvRequest(BaseModel):
    dataset: DatasetPayload
    learner: LearnerPayload
    degrees: List[float] = Field(default_factory=lambda: list(Config.PV_DEGREES))
    repetitions: int = Config.PV_REPETITIONS
    master_seed: int = Config.PV_MASTER_SEED
    include_baseline: bool = Config.PV_INCLUDE_BASELINE


class CvRequest(BaseModel):
    dataset: DatasetPayload
    learner: LearnerPayload
    folds: int = Config.CV_FOLDS
    stratified: bool = Config.CV_STRATIFIED
    seed: int = 0


def _synthetic_spec(request: SyntheticRequest) -> SyntheticSpec:
    return SyntheticSpec(request.family, request.n_samples, request.feature_noise,
                         request.seed, request.noise_mode)


def _build_dataset(payload: DatasetPayload) -> Dataset:
    if payload.synthetic is not None:
        return generate(_synthetic_spec(payload.synthetic))
    codes, uniques = pd.factorize(pd.Series([str(label) for label in payload.labels]), sort=False)
    features = np.asarray(payload.features, dtype=float)
    return Dataset(features, codes, max(2, len(uniques)), payload.name,
                   tuple(str(u) for u in uniques)).check_complete()


def _learner_spec(payload: LearnerPayload) -> LearnerSpec:
    return LearnerSpec.create(payload.family, payload.train_seed, **payload.hyperparams)


@app.get("/health")
def health_check():
    """Liveness check"""
    return {"status": "healthy", "service": "perturbation-validation"}


@app.post("/datasets/generate")
def generate_dataset(request: SyntheticRequest):
    try:
        dataset = generate(_synthetic_spec(request))
    except PvError as e:
        logger.warning(f"Rejected generate request: {e}")
        raise HTTPException(status_code=422, detail=str(e))

    response = {
        "name": dataset.name,
        "n_samples": dataset.n_samples,
        "n_features": dataset.n_features,
        "class_counts": dataset.class_counts().tolist(),
    }
    if request.include_points:
        response["features"] = dataset.features.tolist()
        response["labels"] = dataset.labels.tolist()
    return response


@app.post("/pv")
def compute_pv(request: PvRequest):
    """Run one PV computation and return the serialized PvResult"""
    try:
        dataset = _build_dataset(request.dataset)
        schedule = NoiseSchedule(tuple(request.degrees), request.repetitions,
                                 request.master_seed, request.include_baseline)
        result = pv_validate(_learner_spec(request.learner), dataset, schedule)
    except PvError as e:
        logger.warning(f"Rejected PV request: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"PV request failed: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=str(e))
    return result.to_dict()


@app.post("/cv")
def compute_cv(request: CvRequest):
    try:
        dataset = _build_dataset(request.dataset)
        result = cross_validate(_learner_spec(request.learner), dataset,
                                CvSpec(request.folds, request.stratified, request.seed))
    except PvError as e:
        logger.warning(f"Rejected CV request: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"CV request failed: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail=str(e))
    return {"learner": request.learner.model_dump(), "dataset": dataset.name, **result.to_dict()}
