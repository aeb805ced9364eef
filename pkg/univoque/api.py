# univoque/api.py
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .dimension import plateau_from_word, sandwich_entropy, sweep
from .errors import UnivoqueError
from .expansions import classify_univoque, kl_alpha_digits, kl_base, parse_base, quasi_greedy_alpha
from .utils import setup_logger
from .verification import run_suite
from .words import parse_word

logger = setup_logger('univoque.api')

app = FastAPI(title='univoque')

# Enable CORS for notebooks and dashboards
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"]
)


@app.exception_handler(UnivoqueError)
async def univoque_error_handler(request: Request, exc: UnivoqueError):
    logger.warning(f'{request.url.path} failed with {type(exc).__name__}: {exc.message}')
    return JSONResponse(status_code=exc.http_status, content={'error': type(exc).__name__, 'detail': exc.message})


class SweepRequest(BaseModel):
    q_from: str
    q_to: str
    steps: int = Field(default=50, ge=2, le=1000)
    tol: str = '1e-3'
    M: int = Field(default=1, ge=1)
    n_max: Optional[int] = Field(default=None, ge=2)
    k_max: int = Field(default=64, ge=1)


class VerifyRequest(BaseModel):
    suite: str = 'all'
    M: int = Field(default=1, ge=1)
    k_max: int = Field(default=14, ge=1)
    seed: int = 0


@app.get("/alpha")
def alpha(q: str, M: int = Query(1, ge=1), length: int = Query(32, ge=1, le=4096)):
    """Quasi-greedy expansion of 1 in base q"""
    base = parse_base(q, M)
    prefix = quasi_greedy_alpha(base, length)
    return {'q': base.to_json(), 'digits': str(prefix.digits), 'certified_len': prefix.certified_len}


@app.get("/kl")
def kl(M: int = Query(1, ge=1), width: str = '1e-12', length: int = Query(64, ge=2, le=4096)):
    base = kl_base(M, length, width)
    return {'M': M, 'q': base.to_json(), 'digits': str(kl_alpha_digits(M, length))}


@app.get("/classify")
def classify(q: str, M: int = Query(1, ge=1), depth: int = Query(64, ge=1, le=4096)):
    base = parse_base(q, M)
    return {'q': base.to_json(), **classify_univoque(base, depth).to_json()}


@app.get("/entropy")
def entropy(q: str, M: int = Query(1, ge=1), tol: str = '1e-3',
            n_max: Optional[int] = Query(None, ge=2), k_max: int = Query(64, ge=1)):
    """Certified entropy sandwich; tolerance misses come back flagged, not as errors"""
    return sandwich_entropy(parse_base(q, M), tol, n_max, k_max).to_json()


@app.get("/dimension")
def dimension(q: str, M: int = Query(1, ge=1), tol: str = '1e-3',
              n_max: Optional[int] = Query(None, ge=2), k_max: int = Query(64, ge=1)):
    estimate = sandwich_entropy(parse_base(q, M), tol, n_max, k_max)
    return {
        'q': estimate.q.to_json(),
        'dimension': estimate.dimension.to_json(),
        'n_used': estimate.n_used,
        'tolerance_reached': estimate.tolerance_reached,
    }


@app.get("/plateau")
def plateau(word: str, M: int = Query(1, ge=1), width: str = '1e-12'):
    return plateau_from_word(parse_word(word, M), width).to_json()


@app.post("/sweep")
def run_sweep(body: SweepRequest):
    result = sweep(body.q_from, body.q_to, body.steps, body.tol, body.M, body.n_max, body.k_max)
    return {**result.to_json(), 'performance_metrics': result.performance_metrics}


@app.post("/verify")
def verify(body: VerifyRequest):
    return run_suite(body.suite, body.M, body.k_max, body.seed)
