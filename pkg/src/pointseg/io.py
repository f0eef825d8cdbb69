"""Text file formats, atomic writes and the dataset manifest.

Formats (all UTF-8, ``\\n`` line endings, no headers):

* skeleton: CSV, one row per frame, ``J*C`` floats, joint-major/channel-minor
* topology: one integer per line, the parent joint index or ``-1`` for a root
* features: CSV, one row per frame, ``D`` floats
* labels / pseudo-labels / predictions: one integer per line, ``-1`` = UNLABELED
* points: CSV lines ``frame,class`` in ascending frame order
* model, report, manifest: JSON

Floats are written with ``repr`` (shortest round-trip form), so reading a file
back and writing it again reproduces it byte for byte.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import UNLABELED, PointAnnotations, Topology, as_features, as_skeleton
from .errors import LoadError, ValidationError
from .segmenter import PrototypeClassifier

MODALITIES = ("joint", "bone", "motion")


def atomic_write_text(path, text: str) -> Path:
    """Write via a sibling temp file and rename, so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def format_float(x) -> str:
    return repr(float(x))


def _read_lines(path) -> list[str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise LoadError("file not found", path=str(path)) from None
    return text.splitlines()


def matrix_to_text(matrix) -> str:
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in np.asarray(matrix))


def read_matrix(path) -> np.ndarray:
    rows = []
    width = None
    for n, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError:
            raise LoadError("not a list of decimal floats", path=str(path), line=n) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise LoadError(f"expected {width} columns, found {len(row)}", path=str(path), line=n)
        if not all(np.isfinite(row)):
            raise LoadError("non-finite value", path=str(path), line=n)
        rows.append(row)
    if not rows:
        raise LoadError("file holds no rows", path=str(path))
    return np.asarray(rows, dtype=np.float64)


def write_features(path, features) -> Path:
    return atomic_write_text(path, matrix_to_text(as_features(features)))


def read_features(path) -> np.ndarray:
    return as_features(read_matrix(path))


def write_skeleton(path, skeleton) -> Path:
    skel = as_skeleton(skeleton)
    return atomic_write_text(path, matrix_to_text(skel.reshape(len(skel), -1)))


def read_skeleton(path, joint_count: int, channel_count: int) -> np.ndarray:
    rows = read_matrix(path)
    if rows.shape[1] != joint_count * channel_count:
        raise LoadError(
            f"expected {joint_count}x{channel_count}={joint_count * channel_count} columns, "
            f"found {rows.shape[1]}",
            path=str(path),
        )
    return as_skeleton(rows.reshape(len(rows), joint_count, channel_count))


def write_topology(path, topology: Topology) -> Path:
    return atomic_write_text(path, "".join(f"{p}\n" for p in topology.parent))


def read_topology(path) -> Topology:
    parents = []
    for n, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            parents.append(int(line))
        except ValueError:
            raise LoadError("parent index must be an integer", path=str(path), line=n) from None
    try:
        return Topology(tuple(parents))
    except ValidationError as exc:
        raise LoadError(str(exc), path=str(path)) from None


def write_labels(path, labels) -> Path:
    return atomic_write_text(path, "".join(f"{int(v)}\n" for v in np.asarray(labels)))


def read_labels(path, class_count: int | None = None, allow_unlabeled: bool = True) -> np.ndarray:
    out = []
    for n, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            v = int(line)
        except ValueError:
            raise LoadError("label must be an integer", path=str(path), line=n) from None
        if v == UNLABELED and not allow_unlabeled:
            raise LoadError("UNLABELED (-1) not allowed here", path=str(path), line=n)
        if v < UNLABELED or (class_count is not None and v >= class_count):
            bound = f"[0, {class_count})" if class_count is not None else ">= 0"
            raise LoadError(f"class id {v} outside {bound}", path=str(path), line=n)
        out.append(v)
    if not out:
        raise LoadError("file holds no labels", path=str(path))
    return np.asarray(out, dtype=np.int64)


def write_points(path, points: PointAnnotations) -> Path:
    return atomic_write_text(path, "".join(f"{f},{c}\n" for f, c in points.pairs()))


def read_points(path, length: int, class_count: int | None = None) -> PointAnnotations:
    frames, classes = [], []
    for n, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            f, c = (int(v) for v in line.split(","))
        except ValueError:
            raise LoadError("expected 'frame,class'", path=str(path), line=n) from None
        if class_count is not None and not 0 <= c < class_count:
            raise LoadError(f"class id {c} outside [0, {class_count})", path=str(path), line=n)
        if not 0 <= f < length:
            raise LoadError(f"frame {f} outside [0, {length})", path=str(path), line=n)
        if frames and f <= frames[-1]:
            raise LoadError("frames must be strictly increasing", path=str(path), line=n)
        frames.append(f)
        classes.append(c)
    if not frames:
        raise LoadError("file holds no points", path=str(path))
    return PointAnnotations(frames, classes, length)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, dump_json(obj))


def model_to_json(model: PrototypeClassifier) -> dict:
    return {
        "feature_dim": model.feature_dim,
        "class_count": model.class_count,
        "present": [bool(p) for p in model.present],
        "class_means": [[float(v) for v in row] for row in model.class_means],
    }


def model_from_json(obj: dict) -> PrototypeClassifier:
    try:
        means = np.asarray(obj["class_means"], dtype=np.float64)
        present = np.asarray(obj["present"], dtype=bool)
        dim, count = int(obj["feature_dim"]), int(obj["class_count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise LoadError(f"malformed model: {exc}") from None
    if means.shape != (count, dim) or present.shape != (count,):
        raise LoadError("model arrays do not match feature_dim/class_count")
    return PrototypeClassifier(class_means=means, present=present)


def write_model(path, model: PrototypeClassifier) -> Path:
    return write_json(path, model_to_json(model))


def read_model(path) -> PrototypeClassifier:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise LoadError("file not found", path=str(path)) from None
    except json.JSONDecodeError as exc:
        raise LoadError(f"invalid JSON: {exc}", path=str(path)) from None
    return model_from_json(obj)


# -- manifest -----------------------------------------------------------------


@dataclass
class VideoEntry:
    id: str
    labels: Path
    skeleton: Path | None = None
    features: dict = field(default_factory=dict)  # modality -> Path
    points: Path | None = None
    split: str | None = None


@dataclass
class DatasetManifest:
    """Validated manifest; every path is absolute.

    JSON schema (paths are relative to the manifest's directory)::

        {
          "class_count": 5,
          "class_names": ["a", "b", ...],            # optional
          "topology": "topology.txt",                # required if any skeleton
          "joint_count": 25, "channel_count": 3,     # required if any skeleton
          "videos": [
            {"id": "v000",
             "labels": "labels/v000.txt",
             "skeleton": "skeleton/v000.csv",        # optional
             "features": {"joint": "...", "bone": "...", "motion": "..."},
             "points": "points/v000.csv",            # optional
             "split": "train"}                       # optional: train | test
          ]
        }
    """

    path: Path
    class_count: int
    videos: list
    class_names: list | None = None
    topology: Path | None = None
    joint_count: int | None = None
    channel_count: int | None = None

    def video(self, video_id: str) -> VideoEntry:
        for v in self.videos:
            if v.id == video_id:
                return v
        raise KeyError(video_id)

    def split_ids(self, split: str) -> list[str]:
        return [v.id for v in self.videos if v.split == split]


def _require(obj, key, kind, field_name):
    if key not in obj:
        raise LoadError("missing required field", field=field_name)
    value = obj[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise LoadError(f"expected {getattr(kind, '__name__', kind)}", field=field_name)
    return value


def _existing(base: Path, rel, field_name) -> Path:
    if not isinstance(rel, str) or not rel:
        raise LoadError("expected a non-empty path string", field=field_name)
    path = (base / rel).resolve()
    if not path.is_file():
        raise LoadError("referenced file does not exist", field=field_name, path=str(path))
    return path


def load_manifest(path, check_labels: bool = True) -> DatasetManifest:
    """Parse and eagerly validate a manifest file."""
    path = Path(path).resolve()
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise LoadError("manifest not found", path=str(path)) from None
    except json.JSONDecodeError as exc:
        raise LoadError(f"invalid JSON: {exc}", path=str(path)) from None
    if not isinstance(obj, dict):
        raise LoadError("manifest must be a JSON object", path=str(path))
    base = path.parent

    class_count = _require(obj, "class_count", int, "class_count")
    if class_count < 1:
        raise LoadError("must be >= 1", field="class_count")
    names = obj.get("class_names")
    if names is not None and (
        not isinstance(names, list) or len(names) != class_count or not all(isinstance(n, str) for n in names)
    ):
        raise LoadError(f"expected {class_count} strings", field="class_names")

    raw_videos = _require(obj, "videos", list, "videos")
    if not raw_videos:
        raise LoadError("at least one video required", field="videos")
    seen = set()
    videos = []
    for i, rv in enumerate(raw_videos):
        where = f"videos[{i}]"
        if not isinstance(rv, dict):
            raise LoadError("expected an object", field=where)
        vid = _require(rv, "id", str, f"{where}.id")
        if vid in seen:
            raise LoadError(f"duplicate video id {vid!r}", field=f"{where}.id")
        seen.add(vid)
        entry = VideoEntry(id=vid, labels=_existing(base, rv.get("labels"), f"{where}.labels"))
        if "skeleton" in rv:
            entry.skeleton = _existing(base, rv["skeleton"], f"{where}.skeleton")
        feats = rv.get("features", {})
        if not isinstance(feats, dict):
            raise LoadError("expected an object", field=f"{where}.features")
        for modality, rel in sorted(feats.items()):
            if modality not in MODALITIES:
                raise LoadError(f"unknown modality {modality!r}", field=f"{where}.features")
            entry.features[modality] = _existing(base, rel, f"{where}.features.{modality}")
        if entry.skeleton is None and not entry.features:
            raise LoadError("video needs a skeleton or at least one feature file", field=where)
        if "points" in rv:
            entry.points = _existing(base, rv["points"], f"{where}.points")
        split = rv.get("split")
        if split is not None and split not in ("train", "test"):
            raise LoadError("split must be 'train' or 'test'", field=f"{where}.split")
        entry.split = split
        if check_labels:
            read_labels(entry.labels, class_count, allow_unlabeled=False)
        videos.append(entry)

    manifest = DatasetManifest(path=path, class_count=class_count, videos=videos, class_names=names)
    if any(v.skeleton is not None for v in videos):
        manifest.topology = _existing(base, obj.get("topology"), "topology")
        manifest.joint_count = _require(obj, "joint_count", int, "joint_count")
        manifest.channel_count = _require(obj, "channel_count", int, "channel_count")
        topo = read_topology(manifest.topology)
        if topo.joint_count != manifest.joint_count:
            raise LoadError(
                f"topology lists {topo.joint_count} joints, manifest says {manifest.joint_count}",
                field="topology",
            )
        if manifest.channel_count not in (2, 3):
            raise LoadError("must be 2 or 3", field="channel_count")
    return manifest


def manifest_to_json(manifest: DatasetManifest) -> dict:
    base = manifest.path.parent

    def rel(p):
        return os.path.relpath(p, base).replace(os.sep, "/")

    videos = []
    for v in manifest.videos:
        item = {"id": v.id, "labels": rel(v.labels)}
        if v.skeleton is not None:
            item["skeleton"] = rel(v.skeleton)
        if v.features:
            item["features"] = {m: rel(p) for m, p in sorted(v.features.items())}
        if v.points is not None:
            item["points"] = rel(v.points)
        if v.split is not None:
            item["split"] = v.split
        videos.append(item)
    out = {"class_count": manifest.class_count, "videos": videos}
    if manifest.class_names is not None:
        out["class_names"] = list(manifest.class_names)
    if manifest.topology is not None:
        out["topology"] = rel(manifest.topology)
        out["joint_count"] = manifest.joint_count
        out["channel_count"] = manifest.channel_count
    return out


def read_split_file(path) -> dict:
    """``{"train": [ids], "test": [ids]}``."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise LoadError("split file not found", path=str(path)) from None
    except json.JSONDecodeError as exc:
        raise LoadError(f"invalid JSON: {exc}", path=str(path)) from None
    out = {}
    for key in ("train", "test"):
        ids = obj.get(key)
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise LoadError("expected a list of video ids", field=key, path=str(path))
        out[key] = ids
    return out
