"""HTTP API for the review workflow: catalog browsing, column context,
annotation sessions with live agreement, disagreement resolution, and gold
dataset export. Serves the built review UI bundle at / when present."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .catalog import (
    ColumnRef,
    DatabaseCatalog,
    sample_rows,
    sample_unique,
)
from .metastore import (
    AnnotationRecord,
    AnnotationTarget,
    DifficultyLevel,
    LabelTargetMismatch,
    MetaStore,
    MissingDifficulty,
    Provenance,
    QualityLabel,
    dataset_rows,
)
from .stats import EmptySeries, LabelSeries, agreement_report

# Reconstructed quality decision tree; terminals map one-to-one onto the
# five quality labels. Annotators may override the suggestion.
DECISION_TREE = {
    "start": "present",
    "nodes": {
        "present": {
            "question": "Is a description present in the submission?",
            "no": {"label": "No Description"},
            "yes": {"next": "incorrect"},
        },
        "incorrect": {
            "question": "Does the submission contain any incorrect or misleading information?",
            "yes": {"label": "Incorrect"},
            "no": {"next": "matches"},
        },
        "matches": {
            "question": "Does the submission fully match the gold description (no missing information)?",
            "no": {"label": "Somewhat Correct"},
            "yes": {"next": "redundant"},
        },
        "redundant": {
            "question": "Does it add extra, redundant information that provides no useful value?",
            "yes": {"label": "Almost Perfect"},
            "no": {"label": "Perfect"},
        },
    },
}


class ColumnBody(BaseModel):
    db_id: str
    table: str
    column: str

    def ref(self) -> ColumnRef:
        return ColumnRef(self.db_id, self.table, self.column)

    def key_str(self) -> str:
        return "|".join(self.ref().key())


class SessionBody(BaseModel):
    target: str
    model: str = ""
    annotators: list[str]
    columns: Optional[list[ColumnBody]] = None
    db_id: Optional[str] = None


class LabelBody(BaseModel):
    annotator: str
    column: ColumnBody
    label: str | int
    version: Optional[int] = None


class ResolveBody(BaseModel):
    column: ColumnBody
    final_label: str | int
    edited_description: Optional[str] = None


def _parse_label(raw: str | int, target: AnnotationTarget):
    if target.wants_difficulty():
        if isinstance(raw, int):
            return DifficultyLevel(raw)
        return DifficultyLevel.parse(raw)
    if isinstance(raw, int):
        return QualityLabel(raw)
    return QualityLabel.parse(raw)


def _label_name(value: int, target: AnnotationTarget) -> str:
    if target.wants_difficulty():
        return DifficultyLevel(value).label
    return QualityLabel(value).label


def create_app(
    catalogs: dict[str, DatabaseCatalog],
    store: MetaStore,
    ui_dir: Optional[Path] = None,
    rows_n: int = 3,
    unique_limit: int = 10,
) -> FastAPI:
    app = FastAPI(title="semlayer review server")

    def resolve_or_404(ref: ColumnRef) -> tuple[DatabaseCatalog, str, str]:
        catalog = catalogs.get(ref.db_id)
        if catalog is None:
            raise HTTPException(404, f"unknown database {ref.db_id!r}")
        try:
            table, column = catalog.resolve(ref)
        except Exception as exc:
            raise HTTPException(404, str(exc))
        return catalog, table.name, column.name

    # -- catalogs -------------------------------------------------------

    @app.get("/api/databases")
    def databases():
        return [
            {
                "db_id": db_id,
                "tables": len(catalog.tables),
                "columns": sum(len(t.columns) for t in catalog.tables),
                "table_names": catalog.table_names(),
            }
            for db_id, catalog in sorted(catalogs.items())
        ]

    @app.get("/api/columns/{db_id}/{table}/{column}/context")
    def column_context(db_id: str, table: str, column: str):
        ref = ColumnRef(db_id, table, column)
        catalog, table_name, column_name = resolve_or_404(ref)
        schema = catalog.find_table(table_name)
        original = store.get_descriptor(ref, Provenance.ORIGINAL_BIRD)
        gold = store.get_descriptor(ref, Provenance.GOLD)
        generated = {
            d.model: {"description": d.description, "no_description": d.no_description}
            for d in store.descriptors(provenance=Provenance.GENERATED)
            if d.ref.key() == ref.key()
        }
        difficulty = store.difficulty(ref)
        return {
            "db_id": catalog.db_id,
            "table": table_name,
            "column": column_name,
            "ddl": schema.ddl,
            "example_rows": sample_rows(catalog, table_name, rows_n),
            "unique_values": sample_unique(catalog, ref, unique_limit),
            "original_description": original.description if original else None,
            "generated_descriptions": generated,
            "gold_description": gold.description if gold else None,
            "difficulty": difficulty.label if difficulty else None,
        }

    @app.get("/api/decision-tree")
    def decision_tree():
        return DECISION_TREE

    # -- sessions ---------------------------------------------------------

    def load_session_or_404(session_id: str) -> dict:
        payload = store.load_session(session_id)
        if payload is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return payload

    def session_target(payload: dict) -> AnnotationTarget:
        return AnnotationTarget.from_string(payload["target"])

    def live_labels(payload: dict) -> dict[str, dict[str, int]]:
        """annotator -> column key -> label value, session-scoped."""
        target = session_target(payload)
        out: dict[str, dict[str, int]] = {a: {} for a in payload["annotators"]}
        for rec in store.annotations(
            target=target, session_id=payload["session_id"]
        ):
            if rec.annotator_id in out:
                out[rec.annotator_id]["|".join(rec.ref.key())] = int(rec.label)
        return out

    def agreement_payload(payload: dict) -> dict:
        ann_a, ann_b = payload["annotators"][:2]
        labels = live_labels(payload)
        series_a, series_b = [], []
        for key in payload["queue"]:
            key_str = "|".join(key)
            if key_str in labels[ann_a] and key_str in labels[ann_b]:
                ref = ColumnRef(*key)
                series_a.append((ref, labels[ann_a][key_str]))
                series_b.append((ref, labels[ann_b][key_str]))
        if not series_a:
            return {"n": 0, "agreement_pct": None, "kappa": None, "degenerate": False}
        try:
            report = agreement_report(LabelSeries(series_a), LabelSeries(series_b))
        except EmptySeries:
            return {"n": 0, "agreement_pct": None, "kappa": None, "degenerate": False}
        return report.to_dict()

    def disagreement_list(payload: dict) -> list[dict]:
        target = session_target(payload)
        ann_a, ann_b = payload["annotators"][:2]
        labels = live_labels(payload)
        resolved = payload.get("resolutions", {})
        out = []
        for key in payload["queue"]:
            key_str = "|".join(key)
            a = labels[ann_a].get(key_str)
            b = labels[ann_b].get(key_str)
            if a is None or b is None or a == b:
                continue
            out.append(
                {
                    "column": {"db_id": key[0], "table": key[1], "column": key[2]},
                    "labels": {
                        ann_a: _label_name(a, target),
                        ann_b: _label_name(b, target),
                    },
                    "resolved": key_str in resolved,
                    "hints": _tree_hints(),
                }
            )
        return out

    def refresh_status(payload: dict) -> dict:
        labels = live_labels(payload)
        queue_keys = ["|".join(k) for k in payload["queue"]]
        fully_labeled = all(
            key in labels[a] for key in queue_keys for a in payload["annotators"]
        )
        if not fully_labeled:
            payload["status"] = "open"
        else:
            unresolved = [
                d for d in disagreement_list(payload) if not d["resolved"]
            ]
            payload["status"] = "reconciling" if unresolved else "finalized"
        store.save_session(payload["session_id"], payload)
        return payload

    @app.post("/api/sessions")
    def create_session(body: SessionBody):
        try:
            target = AnnotationTarget.from_string(
                body.target if not body.model else f"{body.target}:{body.model}"
            )
        except ValueError:
            raise HTTPException(400, f"unknown target {body.target!r}")
        if len(body.annotators) != 2:
            raise HTTPException(400, "a session needs exactly two annotators")
        if body.columns is not None:
            queue = [list(c.ref().key()) for c in body.columns]
        else:
            queue = [
                list(ref.key())
                for db_id, catalog in sorted(catalogs.items())
                if body.db_id is None or db_id == body.db_id
                for ref in catalog.all_column_refs()
            ]
        if not queue:
            raise HTTPException(400, "session queue is empty")
        for key in queue:
            resolve_or_404(ColumnRef(*key))
        canonical = json.dumps(
            {"target": target.as_string(), "annotators": body.annotators, "queue": queue},
            sort_keys=True,
        )
        session_id = hashlib.sha256(canonical.encode()).hexdigest()[:16]
        existing = store.load_session(session_id)
        if existing is None:
            payload = {
                "session_id": session_id,
                "target": target.as_string(),
                "annotators": body.annotators,
                "queue": queue,
                "status": "open",
                "resolutions": {},
            }
            store.save_session(session_id, payload)
        return {"session_id": session_id}

    @app.get("/api/sessions/{session_id}")
    def session_info(session_id: str):
        payload = load_session_or_404(session_id)
        labels = live_labels(payload)
        progress = {
            annotator: len(labelled) for annotator, labelled in labels.items()
        }
        return {
            "session_id": session_id,
            "target": payload["target"],
            "annotators": payload["annotators"],
            "queue": [
                {"db_id": k[0], "table": k[1], "column": k[2]}
                for k in payload["queue"]
            ],
            "status": payload["status"],
            "progress": progress,
            "agreement": agreement_payload(payload),
            "resolutions": payload.get("resolutions", {}),
        }

    @app.post("/api/sessions/{session_id}/labels")
    def post_label(session_id: str, body: LabelBody):
        payload = load_session_or_404(session_id)
        target = session_target(payload)
        if body.annotator not in payload["annotators"]:
            raise HTTPException(400, f"unknown annotator {body.annotator!r}")
        ref = body.column.ref()
        resolve_or_404(ref)
        if body.column.key_str() not in {"|".join(k) for k in payload["queue"]}:
            raise HTTPException(400, "column is not part of this session")
        try:
            label = _parse_label(body.label, target)
        except (ValueError, KeyError):
            raise HTTPException(400, f"cannot parse label {body.label!r}")
        existing = [
            rec
            for rec in store.annotations(
                target=target, annotator_id=body.annotator,
                session_id=session_id,
            )
            if rec.ref.key() == ref.key()
        ]
        identical = existing and int(existing[0].label) == int(label)
        if payload["status"] == "finalized" and not identical:
            raise HTTPException(409, "session is finalized")
        if body.version is not None and existing and existing[0].version != body.version:
            raise HTTPException(
                409,
                f"version conflict: live record is v{existing[0].version}",
            )
        try:
            record = store.record_annotation(
                AnnotationRecord(
                    ref=ref,
                    annotator_id=body.annotator,
                    target=target,
                    label=label,
                    session_id=session_id,
                )
            )
        except LabelTargetMismatch as exc:
            raise HTTPException(400, str(exc))
        payload = refresh_status(payload)
        return {
            "recorded": True,
            "version": record.version,
            "status": payload["status"],
            "agreement": agreement_payload(payload),
        }

    @app.get("/api/sessions/{session_id}/disagreements")
    def disagreements(session_id: str):
        payload = load_session_or_404(session_id)
        return disagreement_list(payload)

    @app.post("/api/sessions/{session_id}/resolve")
    def resolve(session_id: str, body: ResolveBody):
        payload = load_session_or_404(session_id)
        target = session_target(payload)
        ref = body.column.ref()
        resolve_or_404(ref)
        key_str = body.column.key_str()
        try:
            label = _parse_label(body.final_label, target)
        except (ValueError, KeyError):
            raise HTTPException(400, f"cannot parse label {body.final_label!r}")
        existing = payload.get("resolutions", {}).get(key_str)
        identical = existing is not None and existing["label"] == int(label) and (
            existing.get("edited_description") == body.edited_description
        )
        if identical:
            return {"resolved": True, "status": payload["status"]}
        if payload["status"] == "finalized":
            raise HTTPException(409, "session is finalized")
        open_disagreements = {
            "|".join(d["column"][k] for k in ("db_id", "table", "column")).lower()
            for d in disagreement_list(payload)
        }
        if key_str not in open_disagreements:
            raise HTTPException(409, "no disagreement at this column")
        payload.setdefault("resolutions", {})[key_str] = {
            "label": int(label),
            "edited_description": body.edited_description,
        }
        if target.wants_difficulty():
            store.set_difficulty(ref, label)
        if body.edited_description is not None:
            store.promote_to_gold(ref, body.edited_description)
        store.save_session(session_id, payload)
        payload = refresh_status(payload)
        return {"resolved": True, "status": payload["status"]}

    # -- export -----------------------------------------------------------

    @app.get("/api/export/dataset.csv")
    def export_dataset():
        golds = store.descriptors(provenance=Provenance.GOLD)
        try:
            rows = dataset_rows(golds, store.difficulties())
        except MissingDifficulty as exc:
            raise HTTPException(
                409,
                detail={
                    "error": "missing difficulty",
                    "columns": [
                        {"db_id": r.db_id, "table": r.table, "column": r.column}
                        for r in exc.refs
                    ],
                },
            )
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["database", "table", "original_column_name",
                         "gold_description", "difficulty"])
        for row in sorted(rows, key=lambda r: (r.ref.db_id, r.ref.table.lower(), r.ordinal)):
            writer.writerow([row.ref.db_id, row.ref.table, row.ref.column,
                             row.gold_description, row.difficulty.label])
        return PlainTextResponse(buffer.getvalue(), media_type="text/csv")

    # -- static UI ----------------------------------------------------------

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index():
            return (
                "<!doctype html><title>semlayer</title>"
                "<p>Review UI bundle not built; the JSON API is under /api/.</p>"
            )

    return app


def _tree_hints() -> list[str]:
    hints = []
    node_id = DECISION_TREE["start"]
    nodes = DECISION_TREE["nodes"]
    seen = set()
    while node_id and node_id not in seen:
        seen.add(node_id)
        node = nodes[node_id]
        hints.append(node["question"])
        node_id = node.get("yes", {}).get("next") or node.get("no", {}).get("next")
    return hints
