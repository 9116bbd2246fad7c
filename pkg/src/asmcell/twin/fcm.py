"""Shared-schema envelopes: every cross-component document names the schema
it satisfies, and validation happens against shipped JSON Schema files."""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass

import jsonschema


def _load_schemas() -> dict[str, dict]:
    out = {}
    root = importlib.resources.files("asmcell").joinpath("fcm_schemas")
    for entry in root.iterdir():
        if entry.name.endswith(".json"):
            doc = json.loads(entry.read_text(encoding="utf-8"))
            out[doc["$id"]] = doc
    return out


class SchemaRegistry:
    def __init__(self, schemas: dict[str, dict] | None = None):
        self.schemas = schemas if schemas is not None else _load_schemas()

    def ids(self) -> list[str]:
        return sorted(self.schemas)

    def validate(self, schema_id: str, payload) -> None:
        if schema_id not in self.schemas:
            raise KeyError(f"unknown schema {schema_id!r}")
        jsonschema.validate(payload, self.schemas[schema_id])


@dataclass(frozen=True)
class FcmEnvelope:
    schema_id: str
    version: int
    payload: object

    def to_json(self) -> dict:
        return {"schema_id": self.schema_id, "version": self.version, "payload": self.payload}


def wrap(registry: SchemaRegistry, schema_id: str, payload, version: int = 1) -> FcmEnvelope:
    registry.validate(schema_id, payload)
    return FcmEnvelope(schema_id, version, payload)


def validate_envelope(registry: SchemaRegistry, doc: dict) -> FcmEnvelope:
    for field in ("schema_id", "version", "payload"):
        if field not in doc:
            raise KeyError(f"envelope missing {field!r}")
    registry.validate(doc["schema_id"], doc["payload"])
    return FcmEnvelope(doc["schema_id"], int(doc["version"]), doc["payload"])
