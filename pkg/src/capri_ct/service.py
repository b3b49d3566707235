"""JSON HTTP service exposing prediction and what-if queries.

The model and catalog are loaded once at startup and treated as frozen;
every response carries the checkpoint hash so clients can detect a model
swap and refresh cached vocabularies. All float payload values are
rounded to 6 significant digits so repeated identical requests yield
byte-identical bodies.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .causal import DoAssignment, load_scenarios, default_scenario_path, whatif
from .checkpoint import FORMAT_VERSION
from .data.catalog import ScanCatalog
from .errors import UnknownLevel
from .training import Ensemble

_DO_FIELDS = ("voltage", "current", "agent")


def sig6(value: float) -> float:
    """Round to 6 significant digits (stable decimal serialization)."""
    return float(f"{value:.6g}")


def round_floats(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return sig6(obj)
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


@dataclass
class ServiceConfig:
    checkpoint_path: str
    dataset_root: str
    metadata_file: str
    host: str = "127.0.0.1"
    port: int = 8000
    max_concurrent: int = 8
    assets_path: Optional[str] = None

    ENV_PREFIX = "CAPRI_CT_"
    # one-to-one environment overrides: CAPRI_CT_CHECKPOINT_PATH, _DATASET_ROOT,
    # _METADATA_FILE, _HOST, _PORT, _MAX_CONCURRENT, _ASSETS_PATH


@dataclass
class ServiceState:
    model: object  # TrainedModel or Ensemble
    catalog: ScanCatalog
    checkpoint_hash: str
    scenarios: List[dict] = field(default_factory=list)
    assets_path: Optional[str] = None
    max_concurrent: int = 8


def _error(status: int, message: str, **extra):
    return JSONResponse(status_code=status, content={"error": message, **extra})


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="capri-ct service")
    semaphore = asyncio.Semaphore(max(1, state.max_concurrent))
    is_ensemble = isinstance(state.model, Ensemble)

    def _stamp(payload: dict) -> dict:
        payload["checkpoint_hash"] = state.checkpoint_hash
        return round_floats(payload)

    @app.middleware("http")
    async def _limit_concurrency(request: Request, call_next):
        async with semaphore:
            return await call_next(request)

    @app.get("/health")
    def health():
        return _stamp(
            {
                "status": "ok" if state.model is not None else "unavailable",
                "model_version": f"v{FORMAT_VERSION}-{state.checkpoint_hash[:12]}",
            }
        )

    @app.get("/vocab")
    def vocab():
        return _stamp({"vocab": state.catalog.vocab.as_dict()})

    @app.get("/records")
    def records(limit: int = 25, offset: int = 0):
        if limit < 1 or offset < 0:
            return _error(400, "limit must be >= 1 and offset >= 0", field="limit")
        window = state.catalog.records[offset : offset + limit]
        return _stamp(
            {
                "total": len(state.catalog),
                "limit": limit,
                "offset": offset,
                "records": [
                    {
                        "id": offset + i,
                        "voltage": r.voltage_kvp,
                        "current": r.current_mas,
                        "agent": r.agent,
                        "snr_obs": r.snr,
                    }
                    for i, r in enumerate(window)
                ],
            }
        )

    def _check_loaded():
        if state.model is None:
            return _error(503, "model not loaded")
        return None

    def _resolve_record(record_id):
        if not isinstance(record_id, int) or isinstance(record_id, bool):
            return None, _error(400, "record_id must be an integer", field="record_id")
        if not 0 <= record_id < len(state.catalog):
            return None, _error(404, f"unknown record id: {record_id}", value=record_id)
        return state.catalog.records[record_id], None

    @app.post("/predict")
    async def predict(request: Request):
        unavailable = _check_loaded()
        if unavailable:
            return unavailable
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "request body must be a JSON object")

        has_record = "record_id" in body
        has_params = "params" in body
        if has_record == has_params:
            return _error(
                400, "provide exactly one of record_id or params+image_id", field="record_id"
            )
        if has_record:
            record, err = _resolve_record(body["record_id"])
            if err:
                return err
            assignments: List[DoAssignment] = []
        else:
            params = body["params"]
            if not isinstance(params, dict) or set(params) - set(_DO_FIELDS):
                return _error(400, f"params must map a subset of {_DO_FIELDS}", field="params")
            record, err = _resolve_record(body.get("image_id"))
            if err:
                return err
            assignments = [DoAssignment(k, v) for k, v in sorted(params.items())]

        from .causal import intervene

        try:
            value = intervene(state.model, record, assignments)
        except UnknownLevel as exc:
            return _error(404, str(exc), field=exc.field, value=exc.value)
        payload = {}
        if is_ensemble:
            payload["snr_hat"], payload["std"] = value
        else:
            payload["snr_hat"] = value
        return _stamp(payload)

    @app.post("/whatif")
    async def whatif_endpoint(request: Request):
        unavailable = _check_loaded()
        if unavailable:
            return unavailable
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body must be JSON")
        if not isinstance(body, dict) or "record_id" not in body:
            return _error(400, "record_id is required", field="record_id")
        record, err = _resolve_record(body["record_id"])
        if err:
            return err
        do = body.get("do", {})
        if not isinstance(do, dict):
            return _error(400, "do must be an object", field="do")
        unknown = set(do) - set(_DO_FIELDS)
        if unknown:
            return _error(400, f"unknown do targets: {sorted(unknown)}", field="do")
        assignments = tuple(
            DoAssignment(fname, do[fname]) for fname in _DO_FIELDS if fname in do
        )
        try:
            result = whatif(state.model, record, assignments)
        except UnknownLevel as exc:
            return _error(404, str(exc), field=exc.field, value=exc.value)
        payload = {
            "record_id": body["record_id"],
            "record": result.record,
            "do": {a.target: a.value for a in result.assignments},
            "snr_obs": result.snr_obs,
            "snr_i": result.snr_i,
            "snr_cf": result.snr_cf,
        }
        if result.uncertainty is not None:
            payload["uncertainty"] = {
                "std_obs": result.uncertainty[0],
                "std_i": result.uncertainty[1],
                "std_cf": result.uncertainty[2],
            }
        return _stamp(payload)

    @app.get("/scenarios")
    def scenarios():
        return _stamp({"scenarios": state.scenarios})

    if state.assets_path and Path(state.assets_path).is_dir():
        app.mount("/", StaticFiles(directory=state.assets_path, html=True), name="ui")

    return app


def scenario_payload(scenario_file=None) -> List[dict]:
    """Scenario file parsed into the JSON shape served by GET /scenarios."""
    path = scenario_file or default_scenario_path()
    entries = []
    for scenario in load_scenarios(path):
        voltage, current, agent = scenario["selector"]
        entries.append(
            {
                "voltage": voltage,
                "current": current,
                "agent": agent,
                "do": {a.target: a.value for a in scenario["assignments"]},
            }
        )
    return entries
