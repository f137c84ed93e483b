"""The canonical 261-feature catalog: 87 features per lung segment.

Per segment: 19 first-order + 24 co-occurrence + 16 run-length +
16 size-zone + 12 tone features, concatenated UL, ML, LL. The catalog
ships as a checksummed JSON data file so downstream selections stay
reproducible; the loader verifies the checksum.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources

from ..errors import ArtifactError
from .firstorder import FIRST_ORDER_NAMES
from .texture import GLCM_NAMES, GLRLM_NAMES, GLSZM_NAMES, NGTDM_NAMES

SEGMENTS = ("UL", "ML", "LL")
FAMILIES = (
    ("first_order", FIRST_ORDER_NAMES),
    ("glcm", GLCM_NAMES),
    ("glrlm", GLRLM_NAMES),
    ("glszm", GLSZM_NAMES),
    ("ngtdm", NGTDM_NAMES),
)

FEATURES_PER_SEGMENT = sum(len(names) for _, names in FAMILIES)
TOTAL_FEATURES = FEATURES_PER_SEGMENT * len(SEGMENTS)


@dataclass(frozen=True)
class FeatureDescriptor:
    segment: str
    family: str
    name: str

    @property
    def full_name(self) -> str:
        return f"{self.segment}.{self.family}.{self.name}"


@dataclass(frozen=True)
class FeatureCatalog:
    descriptors: tuple

    @property
    def names(self) -> tuple:
        return tuple(d.full_name for d in self.descriptors)

    def __len__(self) -> int:
        return len(self.descriptors)

    def checksum(self) -> str:
        canon = json.dumps([list((d.segment, d.family, d.name))
                            for d in self.descriptors]).encode()
        return hashlib.sha256(canon).hexdigest()


def default_catalog() -> FeatureCatalog:
    descriptors = tuple(
        FeatureDescriptor(segment, family, name)
        for segment in SEGMENTS
        for family, names in FAMILIES
        for name in names
    )
    return FeatureCatalog(descriptors)


def catalog_to_json(catalog: FeatureCatalog) -> str:
    doc = {
        "version": 1,
        "checksum": catalog.checksum(),
        "features": [
            {"segment": d.segment, "family": d.family, "name": d.name}
            for d in catalog.descriptors
        ],
    }
    return json.dumps(doc, indent=1)


def load_catalog(path=None) -> FeatureCatalog:
    """Load the shipped (or an explicit) catalog file, verifying its checksum."""
    if path is None:
        text = resources.files("circa.radiomics").joinpath("catalog.json").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    catalog = FeatureCatalog(tuple(
        FeatureDescriptor(f["segment"], f["family"], f["name"])
        for f in doc["features"]
    ))
    if catalog.checksum() != doc.get("checksum"):
        raise ArtifactError("feature catalog checksum mismatch")
    names = catalog.names
    if len(set(names)) != len(names):
        raise ArtifactError("feature catalog contains duplicate names")
    return catalog
