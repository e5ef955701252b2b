"""HTTP/JSON API over studio sessions.

Session-oriented surface: create a session from a scenario config, read and
patch hyper-parameters, (re)generate sample datasets, and pull overview,
record, time-series, and posterior payloads.  One writer per session; error
types map onto status codes in one handler.
"""

from pathlib import Path

from fastapi import Body, FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import (
    CalibrationError,
    ConfigError,
    DiscalError,
    NoDataError,
    NotFoundError,
    ShapeError,
    UnsupportedViewError,
    ValidationError,
)
from .studio import SessionStore

_STATUS = {
    NotFoundError: 404,
    ValidationError: 422,
    ConfigError: 422,
    ShapeError: 422,
    NoDataError: 409,
    UnsupportedViewError: 400,
    CalibrationError: 500,
}


def create_app(store: SessionStore | None = None, static_dir=None) -> FastAPI:
    app = FastAPI(title="discrepancy sample studio")
    app.state.store = store if store is not None else SessionStore()
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(DiscalError)
    async def _discal_error(request: Request, exc: DiscalError):
        status = 500
        for klass, code in _STATUS.items():
            if isinstance(exc, klass):
                status = code
                break
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    def _session(session_id):
        return app.state.store.get(session_id)

    @app.post("/session")
    def create_session(config: dict = Body(...)):
        session = app.state.store.create(config)
        return {
            "id": session.id,
            "scenario": session.scenario.to_dict(),
            "hyperparams": session.hyper.to_dict(),
            "p": session.basis.count,
            "n_data": session.dataset.n_samples,
        }

    @app.get("/session/{session_id}/hyperparams")
    def get_hyperparams(session_id: str):
        session = _session(session_id)
        return {"hyperparams": session.hyper.to_dict(), "stale": session.stale}

    @app.patch("/session/{session_id}/hyperparams")
    def patch_hyperparams(session_id: str, patch: dict = Body(...)):
        session = _session(session_id)
        hyper = session.update_hyperparams(patch)
        return {
            "hyperparams": hyper.to_dict(),
            "stale": session.stale,
            "p": session.basis.count,
        }

    @app.post("/session/{session_id}/samples")
    def generate_samples(session_id: str, body: dict = Body(default={})):
        session = _session(session_id)
        q = int(body.get("q", 200))
        seed = int(body.get("seed", 0))
        samples = session.generate(q=q, seed=seed)
        return {
            "q": samples.q,
            "p": samples.p,
            "count": samples.n_records,
            "seed": samples.seed,
        }

    @app.get("/session/{session_id}/overview")
    def overview(session_id: str, view: str = Query("control")):
        return _session(session_id).overview(view)

    @app.get("/session/{session_id}/sample/{i}/{k}")
    def sample_record(session_id: str, i: int, k: int):
        return _session(session_id).inspect_payload(i, k)

    @app.get("/session/{session_id}/timeseries")
    def timeseries(session_id: str):
        return _session(session_id).timeseries()

    @app.get("/session/{session_id}/posterior")
    def posterior(session_id: str, n: int = Query(200), seed: int = Query(0)):
        return _session(session_id).posterior_ensemble(n=n, seed=seed)

    @app.get("/session/{session_id}/export")
    def export(session_id: str):
        return _session(session_id).export()

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
