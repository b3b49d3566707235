"""Observational, interventional and counterfactual queries over a frozen model.

An intervention re-runs the full forward pass with the assigned parameter
levels overridden, so the latent posterior is re-derived under the new
inputs. A counterfactual instead follows abduction-action-prediction:
the posterior mean is inferred from the factual image and factual
parameters (abduction, realizing the latent noise at its inferred value),
the assigned levels are overridden (action), and the decoder re-predicts
with the factual latent held fixed (prediction). The two answers differ
in general, which is the point of reporting both.

Abduction uses the posterior mean for determinism; pass
``abduct_sample_seed`` to draw a posterior sample instead.
"""

from __future__ import annotations

import csv
import importlib.resources
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from .data.catalog import ScanCatalog, ScanRecord
from .data.images import preprocess
from .errors import MalformedScenario, RecordNotFound, UnknownLevel
from .training import Ensemble, TrainedModel

_TARGET_ALIASES = {
    "v": "voltage",
    "t": "current",
    "a": "agent",
    "voltage": "voltage",
    "current": "current",
    "agent": "agent",
}


@dataclass(frozen=True)
class DoAssignment:
    """Forcibly set one acquisition parameter to a vocabulary level."""

    target: str
    value: Union[int, str]

    def __post_init__(self):
        canonical = _TARGET_ALIASES.get(self.target)
        if canonical is None:
            raise UnknownLevel(self.target, self.value)
        object.__setattr__(self, "target", canonical)

    def label(self) -> str:
        short = {"voltage": "v", "current": "t", "agent": "a"}[self.target]
        return f"{short}={self.value}"


@dataclass
class WhatIfResult:
    snr_obs: float
    snr_i: float
    snr_cf: float
    assignments: Tuple[DoAssignment, ...]
    uncertainty: Optional[Tuple[float, float, float]] = None
    n_matched: int = 1
    record: Optional[dict] = None

    def scenario_label(self) -> str:
        if not self.assignments:
            return "observed"
        return "do(" + ", ".join(a.label() for a in self.assignments) + ")"


def _members(model_or_ensemble) -> List[TrainedModel]:
    if isinstance(model_or_ensemble, Ensemble):
        return list(model_or_ensemble.members)
    return [model_or_ensemble]


def _override_map(assignments: Sequence[DoAssignment]) -> Dict[str, Union[int, str]]:
    overrides: Dict[str, Union[int, str]] = {}
    for assignment in assignments:
        if assignment.target in overrides:
            raise MalformedScenario(
                -1, f"duplicate assignment for {assignment.target}"
            )
        overrides[assignment.target] = assignment.value
    return overrides


def _encode_params(
    model: TrainedModel, record: ScanRecord, overrides: Dict[str, Union[int, str]]
) -> torch.Tensor:
    unknown_fields = set(overrides) - set(model.model_config.fields)
    if unknown_fields:
        fname = sorted(unknown_fields)[0]
        raise UnknownLevel(fname, overrides[fname])
    indices = []
    for fname in model.model_config.fields:
        value = overrides.get(fname, record.raw_value(fname))
        try:
            indices.append(model.vocab.index(fname, value))
        except KeyError:
            raise UnknownLevel(fname, value)
    return torch.tensor([indices], dtype=torch.long)


def _factual_image(model: TrainedModel, record: ScanRecord) -> torch.Tensor:
    return preprocess(record.image_path, model.model_config.input_size)[None]


def _single_intervene(
    model: TrainedModel, record: ScanRecord, overrides: Dict[str, Union[int, str]]
) -> float:
    model.net.eval()
    with torch.no_grad():
        image = _factual_image(model, record)
        params = _encode_params(model, record, overrides)
        prediction = model.net(image, params, mode="deterministic")
    return float(prediction.snr_hat[0])


def _single_counterfactual(
    model: TrainedModel,
    record: ScanRecord,
    overrides: Dict[str, Union[int, str]],
    abduct_sample_seed: Optional[int] = None,
) -> float:
    model.net.eval()
    with torch.no_grad():
        image = _factual_image(model, record)
        factual_params = _encode_params(model, record, {})
        posterior = model.net.encode(image, factual_params)
        if abduct_sample_seed is None:
            z = posterior.mu
        else:
            gen = torch.Generator().manual_seed(abduct_sample_seed)
            eps = torch.randn(posterior.mu.shape, generator=gen, dtype=posterior.mu.dtype)
            z = posterior.mu + torch.exp(0.5 * posterior.log_var) * eps
        intervened_params = _encode_params(model, record, overrides)
        out = model.net.decode(z, intervened_params)
    return float(out[0])


def predict_observational(model_or_ensemble, record: ScanRecord):
    """Deterministic forward under the factual image and parameters.

    Returns a float for a single model, (mean, std) for an ensemble.
    """
    values = [_single_intervene(m, record, {}) for m in _members(model_or_ensemble)]
    if isinstance(model_or_ensemble, Ensemble):
        return float(np.mean(values)), float(np.std(values))
    return values[0]


def intervene(model_or_ensemble, record: ScanRecord, assignments: Sequence[DoAssignment]):
    """Re-run the full model with the assigned levels overridden."""
    overrides = _override_map(assignments)
    values = [
        _single_intervene(m, record, overrides) for m in _members(model_or_ensemble)
    ]
    if isinstance(model_or_ensemble, Ensemble):
        return float(np.mean(values)), float(np.std(values))
    return values[0]


def counterfactual(
    model_or_ensemble,
    record: ScanRecord,
    assignments: Sequence[DoAssignment],
    abduct_sample_seed: Optional[int] = None,
):
    """Abduction-action-prediction with the factual latent held fixed."""
    overrides = _override_map(assignments)
    values = [
        _single_counterfactual(m, record, overrides, abduct_sample_seed)
        for m in _members(model_or_ensemble)
    ]
    if isinstance(model_or_ensemble, Ensemble):
        return float(np.mean(values)), float(np.std(values))
    return values[0]


def whatif(
    model_or_ensemble, record: ScanRecord, assignments: Sequence[DoAssignment]
) -> WhatIfResult:
    """Observed / intervened / counterfactual triple for one record."""
    members = _members(model_or_ensemble)
    overrides = _override_map(assignments)
    obs = [_single_intervene(m, record, {}) for m in members]
    niv = [_single_intervene(m, record, overrides) for m in members]
    ncf = [_single_counterfactual(m, record, overrides) for m in members]
    uncertainty = None
    if isinstance(model_or_ensemble, Ensemble):
        uncertainty = (
            float(np.std(obs)),
            float(np.std(niv)),
            float(np.std(ncf)),
        )
    return WhatIfResult(
        snr_obs=float(np.mean(obs)),
        snr_i=float(np.mean(niv)),
        snr_cf=float(np.mean(ncf)),
        assignments=tuple(assignments),
        uncertainty=uncertainty,
        record={
            "voltage": record.voltage_kvp,
            "current": record.current_mas,
            "agent": record.agent,
            "snr": record.snr,
        },
    )


# --- scenario files ------------------------------------------------------------

SCENARIO_COLUMNS = ("voltage", "current", "agent", "do_voltage", "do_current", "do_agent")


def _parse_scenario_row(row: dict, index: int):
    def _int(column: str, required: bool):
        raw = (row.get(column) or "").strip()
        if not raw:
            if required:
                raise MalformedScenario(index, f"missing {column}")
            return None
        try:
            return int(float(raw))
        except ValueError:
            raise MalformedScenario(index, f"non-numeric {column}: {raw!r}")

    voltage = _int("voltage", required=True)
    current = _int("current", required=True)
    agent = (row.get("agent") or "").strip()
    if not agent:
        raise MalformedScenario(index, "missing agent")

    assignments: List[DoAssignment] = []
    do_voltage = _int("do_voltage", required=False)
    if do_voltage is not None:
        assignments.append(DoAssignment("voltage", do_voltage))
    do_current = _int("do_current", required=False)
    if do_current is not None:
        assignments.append(DoAssignment("current", do_current))
    do_agent = (row.get("do_agent") or "").strip()
    if do_agent:
        assignments.append(DoAssignment("agent", do_agent))
    return (voltage, current, agent), tuple(assignments)


def load_scenarios(scenario_file) -> List[dict]:
    """Parse a scenario CSV into selector + assignment structures."""
    text = Path(scenario_file).read_text()
    reader = csv.DictReader(text.splitlines())
    scenarios = []
    for index, row in enumerate(reader, start=1):
        selector, assignments = _parse_scenario_row(row, index)
        scenarios.append({"selector": selector, "assignments": assignments})
    return scenarios


def default_scenario_path() -> Path:
    """The bundled twelve-scenario what-if battery."""
    resource = importlib.resources.files("capri_ct.resources") / "default_scenarios.csv"
    return Path(str(resource))


def run_scenarios(
    model_or_ensemble, catalog: ScanCatalog, scenario_file
) -> List[WhatIfResult]:
    """One WhatIfResult per scenario row.

    The (voltage, current, agent) selector picks all matching catalog
    records; results are averaged over matches with the match count
    reported. Ensemble uncertainty is the member std of match-averaged
    predictions.
    """
    scenarios = load_scenarios(scenario_file)
    members = _members(model_or_ensemble)
    is_ensemble = isinstance(model_or_ensemble, Ensemble)
    results: List[WhatIfResult] = []
    for scenario in scenarios:
        voltage, current, agent = scenario["selector"]
        matches = catalog.find(voltage, current, agent)
        if not matches:
            raise RecordNotFound(
                f"no record matches (voltage={voltage}, current={current}, agent={agent!r})"
            )
        assignments = scenario["assignments"]
        overrides = _override_map(assignments)
        per_member = []
        for member in members:
            obs = [
                _single_intervene(member, catalog.records[i], {}) for i in matches
            ]
            niv = [
                _single_intervene(member, catalog.records[i], overrides)
                for i in matches
            ]
            ncf = [
                _single_counterfactual(member, catalog.records[i], overrides)
                for i in matches
            ]
            per_member.append(
                (float(np.mean(obs)), float(np.mean(niv)), float(np.mean(ncf)))
            )
        arr = np.asarray(per_member)
        uncertainty = None
        if is_ensemble:
            uncertainty = tuple(float(s) for s in arr.std(axis=0))
        results.append(
            WhatIfResult(
                snr_obs=float(arr[:, 0].mean()),
                snr_i=float(arr[:, 1].mean()),
                snr_cf=float(arr[:, 2].mean()),
                assignments=assignments,
                uncertainty=uncertainty,
                n_matched=len(matches),
                record={"voltage": voltage, "current": current, "agent": agent},
            )
        )
    return results


def results_to_csv(results: Sequence[WhatIfResult], path) -> None:
    """Scenario table mirroring the what-if report layout."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["v", "t", "a", "snr_obs", "scenario", "snr_i", "snr_cf"])
        for res in results:
            rec = res.record or {}
            writer.writerow(
                [
                    rec.get("voltage", ""),
                    rec.get("current", ""),
                    rec.get("agent", ""),
                    repr(res.snr_obs),
                    res.scenario_label(),
                    repr(res.snr_i),
                    repr(res.snr_cf),
                ]
            )


def heatmap_matrix(results: Sequence[WhatIfResult]) -> Tuple[np.ndarray, List[str], List[str]]:
    if not results:
        raise MalformedScenario(0, "no scenarios to render")
    matrix = np.array([[r.snr_obs, r.snr_i, r.snr_cf] for r in results])
    row_labels = [r.scenario_label() for r in results]
    return matrix, row_labels, ["snr_obs", "snr_i", "snr_cf"]


def export_heatmap(results: Sequence[WhatIfResult], csv_path, image_path=None):
    """Write the scenarios x {obs, i, cf} matrix as CSV and a rendered image."""
    matrix, rows, cols = heatmap_matrix(results)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario"] + cols)
        for label, values in zip(rows, matrix):
            writer.writerow([label] + [repr(float(v)) for v in values])

    if image_path is not None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(
            figsize=(6, 0.45 * len(rows) + 1.5), constrained_layout=True
        )
        im = ax.imshow(matrix, aspect="auto", cmap="coolwarm")
        ax.set_xticks(range(len(cols)), cols)
        ax.set_yticks(range(len(rows)), rows)
        for r in range(matrix.shape[0]):
            for c in range(matrix.shape[1]):
                ax.text(
                    c, r, f"{matrix[r, c]:.1f}", ha="center", va="center", fontsize=7
                )
        fig.colorbar(im, ax=ax, label="SNR")
        ax.set_title("SNR under observation, intervention, counterfactual")
        fig.savefig(image_path, dpi=120)
        plt.close(fig)
    return matrix
