"""GeoJSON export: one point feature per register, colored by a channel.

Produces an RFC 7946 FeatureCollection whose point coordinates are
[longitude, latitude] and whose properties carry the selected channel value
and the style label, which is what mapping tools need to render the
colored-track figures.
"""

import json

from .records import Dataset, Register

EXPORTABLE_VARS = ("velocity", "fax", "fay", "faz", "fgx", "fgy", "fgz")


def register_feature(r: Register, var: str) -> dict:
    return {
        "type": "Feature",
        "geometry": {
            "type": "Point",
            "coordinates": [r.longitude, r.latitude],
        },
        "properties": {
            "value": getattr(r, var),
            "style": r.label.name if r.label is not None else None,
        },
    }


def to_geojson(data: Dataset, var: str) -> dict:
    if var not in EXPORTABLE_VARS:
        raise ValueError(f"cannot export {var!r}; choose one of {EXPORTABLE_VARS}")
    return {
        "type": "FeatureCollection",
        "features": [register_feature(r, var) for r in data],
    }


def write_geojson(data: Dataset, var: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(to_geojson(data, var), fh, indent=1)
        fh.write("\n")
