"""Tissue-class taxonomy: raw template labels, model classes, morphology rules."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tomlmini
from .errors import TaxonomyError

MODES = ("dilate", "erode")


@dataclass(frozen=True)
class MorphRule:
    """One region-constrained morphology rule.

    ``source`` grows (dilate) or shrinks (erode); voxels change class only
    where the current label is one of ``neighbors``.
    """

    source: int
    mode: str
    neighbors: tuple[int, ...]


@dataclass(frozen=True)
class LabelTaxonomy:
    """Mapping from raw template labels to dense model classes.

    Class ids are dense 0..K-1 with 0 = background.
    """

    classes: tuple[tuple[int, str], ...]
    raw_to_class: dict[int, int]
    morph_rules: tuple[MorphRule, ...] = ()

    def __post_init__(self) -> None:
        ids = [cid for cid, _ in self.classes]
        if ids != list(range(len(ids))):
            raise TaxonomyError(f"class ids must be dense 0..K-1, got {ids}")
        if not ids:
            raise TaxonomyError("taxonomy declares no classes")
        names = [name for _, name in self.classes]
        if len(set(names)) != len(names):
            raise TaxonomyError("class names must be unique")
        declared = set(ids)
        for raw, cid in self.raw_to_class.items():
            if raw < 0:
                raise TaxonomyError(f"raw label {raw} is negative")
            if cid not in declared:
                raise TaxonomyError(f"raw label {raw} maps to undeclared class {cid}")
        for rule in self.morph_rules:
            if rule.mode not in MODES:
                raise TaxonomyError(f"morph rule mode {rule.mode!r} not in {MODES}")
            if rule.source not in declared:
                raise TaxonomyError(f"morph rule source class {rule.source} undeclared")
            for n in rule.neighbors:
                if n not in declared:
                    raise TaxonomyError(f"morph rule neighbor class {n} undeclared")

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_name(self, class_id: int) -> str:
        return self.classes[class_id][1]

    def class_id(self, name: str) -> int:
        for cid, cname in self.classes:
            if cname == name:
                return cid
        raise TaxonomyError(f"unknown class name {name!r}")

    def mapping_array(self) -> np.ndarray:
        """Lookup table raw label -> class id, -1 where unmapped."""
        max_raw = max(self.raw_to_class, default=0)
        lut = np.full(max_raw + 1, -1, dtype=np.int32)
        for raw, cid in self.raw_to_class.items():
            lut[raw] = cid
        return lut

    def map_raw(self, raw: np.ndarray) -> np.ndarray:
        """Map raw template labels to class ids; unmapped values raise."""
        lut = self.mapping_array()
        raw = np.asarray(raw)
        bad = (raw >= lut.size) | (lut[np.minimum(raw, lut.size - 1)] < 0)
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise TaxonomyError(
                f"label value {int(raw[idx])} at voxel {idx} is not in the taxonomy"
            )
        return lut[raw].astype(np.uint16)

    def to_dict(self) -> dict:
        return {
            "classes": [{"id": cid, "name": name} for cid, name in self.classes],
            "raw_to_class": {str(k): v for k, v in sorted(self.raw_to_class.items())},
            "morph_rules": [
                {
                    "source": self.class_name(r.source),
                    "mode": r.mode,
                    "neighbors": [self.class_name(n) for n in r.neighbors],
                }
                for r in self.morph_rules
            ],
        }


def _resolve_class(ref, by_name: dict[str, int]) -> int:
    if isinstance(ref, bool):
        raise TaxonomyError(f"bad class reference {ref!r}")
    if isinstance(ref, int):
        return ref
    if isinstance(ref, str):
        if ref in by_name:
            return by_name[ref]
        raise TaxonomyError(f"unknown class name {ref!r}")
    raise TaxonomyError(f"bad class reference {ref!r}")


def taxonomy_from_dict(doc: dict) -> LabelTaxonomy:
    try:
        classes = tuple(
            (int(entry["id"]), str(entry["name"])) for entry in doc["classes"]
        )
    except (KeyError, TypeError) as exc:
        raise TaxonomyError(f"bad classes array: {exc}") from exc
    by_name = {name: cid for cid, name in classes}
    raw_to_class = {}
    for raw, ref in doc.get("raw_to_class", {}).items():
        raw_to_class[int(raw)] = _resolve_class(ref, by_name)
    rules = []
    for entry in doc.get("morph_rules", []):
        try:
            rules.append(
                MorphRule(
                    source=_resolve_class(entry["source"], by_name),
                    mode=str(entry["mode"]),
                    neighbors=tuple(
                        _resolve_class(n, by_name) for n in entry["neighbors"]
                    ),
                )
            )
        except KeyError as exc:
            raise TaxonomyError(f"morph rule missing field {exc}") from exc
    return LabelTaxonomy(
        classes=classes, raw_to_class=raw_to_class, morph_rules=tuple(rules)
    )


def load_taxonomy(path) -> LabelTaxonomy:
    """Read a taxonomy from a TOML or JSON file (chosen by extension)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        doc = json.loads(path.read_text(encoding="utf-8"))
    else:
        doc = tomlmini.load(path)
    return taxonomy_from_dict(doc)
