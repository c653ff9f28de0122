"""End-to-end analysis of a counts record and its JSON/text serializations.

JSON report fields (schema ``chshcheck.analysis/1``)::

    S                         {value, stderr, n}
    correlators               {"x,y": {E, E_err, mA, mA_err, mB, mB_err}}
    delta                     {a, a_prime, b, b_prime: {value, stderr, noise_dominated}, total}
    eta                       {"x,y": value, total} or null (only for simulated data)
    corrected_bound           2 + eta total, or null
    rough_bound               2 + delta total
    sigmas_above_2            (S - 2) / stderr(S), or null when stderr(S) = 0
    sigmas_above_rough_bound  (S - rough_bound) / stderr(S), or null
    violation_ratio           (S - 2) / delta total, or null when delta total = 0
    verdict                   NO_VIOLATION | WITHIN_ERROR_BUDGET | VIOLATION
    verdict_bound             "corrected" or "rough": the bound the verdict used
    noise_sigmas              threshold for the noise_dominated flags and the verdict
    crosstalk_signature       false when every delta is noise dominated
    provenance                free-form object (input file, or simulation seed/model/settings)

Numbers are written in their shortest round-trip decimal form.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .chsh import (
    CLASSICAL_BOUND,
    DEFAULT_VERDICT_SIGMAS,
    CorrelatorTable,
    EtaTable,
    SettingCorrelators,
    Verdict,
    corrected_classical_bound,
    verdict,
)
from .crosstalk import DELTA_LABELS, DeltaTable, asymmetry_index, crosstalk_parameters, rough_total_estimate
from .formats import pair_key, parse_pair_key
from .simulation import CountsRecord
from .states import SETTING_PAIRS
from .stats import EstimatedQuantity, bell_estimate, table_from_counts

SCHEMA = "chshcheck.analysis/1"
NO_SIGNATURE = "no crosstalk signature detected"


@dataclass(frozen=True)
class AnalysisReport:
    S: EstimatedQuantity
    table: CorrelatorTable
    deltas: DeltaTable
    etas: Optional[EtaTable]
    corrected_bound: Optional[float]
    rough_bound: float
    sigmas_above_2: Optional[float]
    sigmas_above_rough_bound: Optional[float]
    violation_ratio: Optional[float]
    verdict: Verdict
    verdict_bound: str
    noise_sigmas: float = DEFAULT_VERDICT_SIGMAS
    provenance: dict = field(default_factory=dict)

    @property
    def noise_dominated(self) -> dict[str, bool]:
        return self.deltas.noise_dominated(self.noise_sigmas)

    @property
    def crosstalk_signature(self) -> bool:
        return not all(self.noise_dominated.values())


def analyze(
    record: CountsRecord,
    etas: EtaTable | None = None,
    provenance: dict | None = None,
    noise_sigmas: float = DEFAULT_VERDICT_SIGMAS,
) -> AnalysisReport:
    """Bell signal, crosstalk parameters, bounds and verdict for one dataset.

    When ``etas`` are known (simulated data) the verdict is judged against the
    corrected bound 2 + sum(eta); otherwise against the heuristic 2 + delta.
    """
    S = bell_estimate(record)
    table = table_from_counts(record)
    deltas = crosstalk_parameters(table)
    delta_total = deltas.total
    rough_bound = CLASSICAL_BOUND + rough_total_estimate(deltas)
    corrected = corrected_classical_bound(etas) if etas is not None else None
    bound = corrected if corrected is not None else rough_bound
    has_sigma = S.stderr > 0
    return AnalysisReport(
        S=S,
        table=table,
        deltas=deltas,
        etas=etas,
        corrected_bound=corrected,
        rough_bound=rough_bound,
        sigmas_above_2=(S.value - CLASSICAL_BOUND) / S.stderr if has_sigma else None,
        sigmas_above_rough_bound=(S.value - rough_bound) / S.stderr if has_sigma else None,
        violation_ratio=(S.value - CLASSICAL_BOUND) / delta_total if delta_total > 0 else None,
        verdict=verdict(S.value, bound, S.stderr, noise_sigmas),
        verdict_bound="corrected" if corrected is not None else "rough",
        noise_sigmas=noise_sigmas,
        provenance=dict(provenance or {}),
    )


def report_to_dict(report: AnalysisReport) -> dict:
    flags = report.noise_dominated
    delta = {
        label: {
            "value": report.deltas[label],
            "stderr": report.deltas.stderr[label] if report.deltas.stderr else None,
            "noise_dominated": flags[label],
        }
        for label in DELTA_LABELS
    }
    delta["total"] = report.deltas.total
    eta = None
    if report.etas is not None:
        eta = {pair_key(p): report.etas[p] for p in SETTING_PAIRS}
        eta["total"] = report.etas.total
    return {
        "schema": SCHEMA,
        "S": {"value": report.S.value, "stderr": report.S.stderr, "n": report.S.n},
        "correlators": {
            pair_key(p): {
                "E": report.table[p].E,
                "E_err": report.table[p].E_err,
                "mA": report.table[p].mA,
                "mA_err": report.table[p].mA_err,
                "mB": report.table[p].mB,
                "mB_err": report.table[p].mB_err,
            }
            for p in SETTING_PAIRS
        },
        "delta": delta,
        "eta": eta,
        "corrected_bound": report.corrected_bound,
        "rough_bound": report.rough_bound,
        "sigmas_above_2": report.sigmas_above_2,
        "sigmas_above_rough_bound": report.sigmas_above_rough_bound,
        "violation_ratio": report.violation_ratio,
        "verdict": report.verdict.value,
        "verdict_bound": report.verdict_bound,
        "noise_sigmas": report.noise_sigmas,
        "crosstalk_signature": report.crosstalk_signature,
        "asymmetry_index": asymmetry_index(report.deltas),
        "provenance": report.provenance,
    }


def report_from_dict(data: dict) -> AnalysisReport:
    if data.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {data.get('schema')!r}")
    table = CorrelatorTable(
        {parse_pair_key(k): SettingCorrelators(**v) for k, v in data["correlators"].items()},
        tolerance=1e-12,
    )
    d = data["delta"]
    stderr = None
    if all(d[label]["stderr"] is not None for label in DELTA_LABELS):
        stderr = {label: d[label]["stderr"] for label in DELTA_LABELS}
    deltas = DeltaTable(*(d[label]["value"] for label in DELTA_LABELS), stderr=stderr)
    etas = None
    if data["eta"] is not None:
        etas = EtaTable({parse_pair_key(k): v for k, v in data["eta"].items() if k != "total"})
    return AnalysisReport(
        S=EstimatedQuantity(**data["S"]),
        table=table,
        deltas=deltas,
        etas=etas,
        corrected_bound=data["corrected_bound"],
        rough_bound=data["rough_bound"],
        sigmas_above_2=data["sigmas_above_2"],
        sigmas_above_rough_bound=data["sigmas_above_rough_bound"],
        violation_ratio=data["violation_ratio"],
        verdict=Verdict(data["verdict"]),
        verdict_bound=data["verdict_bound"],
        noise_sigmas=data["noise_sigmas"],
        provenance=data["provenance"],
    )


def dumps(data) -> str:
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


def _fmt(x: float | None, digits: int = 4) -> str:
    return "n/a" if x is None else f"{x:.{digits}f}"


def report_to_text(report: AnalysisReport) -> str:
    S = report.S
    lines = [f"Bell signal S = {S.value:.4f} +/- {S.stderr:.4f} ({S.n} shots)"]
    if report.sigmas_above_2 is not None:
        lines.append(f"  {report.sigmas_above_2:.1f} standard deviations above the classical limit 2")

    flags = report.noise_dominated
    lines.append("Crosstalk parameters:")
    for label in DELTA_LABELS:
        err = report.deltas.stderr[label] if report.deltas.stderr else None
        note = "  (noise dominated)" if flags[label] else ""
        lines.append(f"  delta_{label:<8}= {report.deltas[label]:.4f} +/- {_fmt(err)}{note}")
    lines.append(f"  total delta  = {report.deltas.total:.4f}")
    lines.append(f"Rough bound 2 + delta = {report.rough_bound:.4f} (heuristic estimate, not a certified bound)")
    if report.violation_ratio is not None:
        lines.append(f"  (S - 2) / delta = {report.violation_ratio:.2f}")
    if not report.crosstalk_signature:
        lines.append(f"  {NO_SIGNATURE}")
    else:
        lines.append(f"  asymmetry between the A-side and B-side parameters: {asymmetry_index(report.deltas):.3f}")
    if report.corrected_bound is not None:
        lines.append(f"Corrected classical bound 2 + sum(eta) = {report.corrected_bound:.4f}")

    bound = report.corrected_bound if report.verdict_bound == "corrected" else report.rough_bound
    name = "corrected bound" if report.verdict_bound == "corrected" else "rough bound"
    if report.verdict is Verdict.VIOLATION:
        sentence = f"S exceeds the {name} {bound:.4f} by more than {report.noise_sigmas:g} standard deviations."
    elif report.verdict is Verdict.WITHIN_ERROR_BUDGET:
        sentence = f"S exceeds 2 but not the {name} {bound:.4f}; the violation is within the error budget."
    else:
        sentence = "S does not exceed the classical limit 2."
    lines.append(f"Verdict: {report.verdict.value}. {sentence}")
    return "\n".join(lines) + "\n"


def report_emit(report: AnalysisReport, fmt: str = "json") -> str:
    if fmt == "json":
        return dumps(report_to_dict(report))
    if fmt == "text":
        return report_to_text(report)
    raise ValueError(f"unknown format {fmt!r}")
