"""Dual-gallery recognition pipeline, authentication gate and model files."""
from __future__ import annotations

import csv
import json
import os
import struct
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from . import authenticator as auth
from .corpus import Sample
from .features import PcaModel, dct_compress, pca_fit, pca_project
from .neural import GOAL_REACHED, Mlp, TrainConfig, TrainingError, forward, mlp_init, one_hot, train
from .preprocess import PreprocConfig, preprocess
from .raster import load_image

MAGIC = b"VFMODEL"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


class ChecksumError(ModelFormatError):
    pass


class VersionError(ModelFormatError):
    pass


@dataclass
class Gallery:
    name: str
    labels: list[str] = field(default_factory=list)
    features: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)), repr=False)
    source_paths: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        if self.features.shape[0] != len(self.labels):
            raise ValueError("one feature row per gallery label")
        if any(not lab for lab in self.labels):
            raise ValueError("gallery labels must be non-empty")
        if len(self.source_paths) != len(self.labels):
            raise ValueError("one source path per gallery entry")

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass
class DualDatabase:
    primary: Gallery
    secondary: Gallery

    def __post_init__(self):
        if len(self.secondary) and len(self.primary) and self.primary.dim != self.secondary.dim:
            raise ValueError("primary and secondary galleries differ in feature dimension")


@dataclass
class PipelineModel:
    preproc: PreprocConfig
    dct_keep: int
    pca: PcaModel
    net: Mlp
    classes: list[str]
    dual: DualDatabase
    input_scale: float
    detector: auth.DetectorConfig = field(default_factory=auth.DetectorConfig)
    version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.net.layer_sizes[0] != self.pca.m:
            raise ValueError("network input size must equal the PCA component count")
        if self.net.layer_sizes[2] != len(self.classes):
            raise ValueError("network output size must equal the class count")


@dataclass
class MatchResult:
    gate: auth.Verdict | None
    label: str | None = None
    network_confidence: float | None = None
    nn_label: str | None = None
    nn_distance: float | None = None
    secondary_label: str | None = None
    secondary_distance: float | None = None

    @property
    def blocked(self) -> bool:
        return self.label is None

    @property
    def agreement(self) -> bool:
        return self.label is not None and self.label == self.nn_label


@dataclass(frozen=True)
class PipelineConfig:
    preproc: PreprocConfig = PreprocConfig()
    dct_keep: int = 8
    pca_max: int = 40
    hidden: int = 20
    train: TrainConfig = TrainConfig()
    detector: auth.DetectorConfig = auth.DetectorConfig()


# -- features ---------------------------------------------------------------

def dct_features(image, preproc: PreprocConfig, keep: int, rect=None) -> np.ndarray:
    return dct_compress(preprocess(image, preproc, rect), keep)


def extract_features(image, model: PipelineModel, rect=None) -> np.ndarray:
    """preprocess -> DCT low-frequency block -> PCA coefficients."""
    return pca_project(model.pca, dct_features(image, model.preproc, model.dct_keep, rect))


def euclidean_match(v, gallery: Gallery) -> tuple[str, float]:
    """Nearest gallery entry by L2 distance; ties go to the lowest index."""
    if len(gallery) == 0:
        raise ValueError(f"gallery {gallery.name!r} is empty")
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != gallery.dim:
        raise ValueError(f"feature dimension {v.size} != gallery dimension {gallery.dim}")
    d = np.sqrt(np.sum((gallery.features - v) ** 2, axis=1))
    i = int(np.argmin(d))
    return gallery.labels[i], float(d[i])


# -- training ---------------------------------------------------------------

def _features_for(samples, preproc, keep):
    return np.array([dct_features(s.image, preproc, keep, s.rect) for s in samples])


def train_pipeline(train_samples, config: PipelineConfig = PipelineConfig(),
                   validation_samples=(), strict: bool = True):
    """Fit PCA, train the network and enrol both galleries.

    Returns ``(model, curve)``. With ``strict`` a run that exhausts max_epochs
    raises :class:`TrainingError` carrying the curve.
    """
    train_samples = list(train_samples)
    classes = sorted({s.label for s in train_samples})
    if len(classes) < 2:
        raise ValueError("need >=2 classes to train a recognizer")
    if config.dct_keep > min(config.preproc.target_size):
        raise ValueError("dct_keep exceeds the preprocessing target size")

    dct_train = _features_for(train_samples, config.preproc, config.dct_keep)
    m = min(len(train_samples) - 1, config.pca_max, dct_train.shape[1])
    pca = pca_fit(dct_train, m)
    feats = np.array([pca_project(pca, v) for v in dct_train])
    scale = float(np.sqrt(pca.eigenvalues[0])) if pca.eigenvalues[0] > 0 else 1.0

    index = {c: i for i, c in enumerate(classes)}
    targets = one_hot([index[s.label] for s in train_samples], len(classes))
    net0 = mlp_init([m, config.hidden, len(classes)], config.train.seed)
    net, curve = train(net0, feats / scale, targets, config.train)
    if strict and curve.stop_reason != GOAL_REACHED:
        raise TrainingError(
            f"error goal {config.train.error_goal:g} not reached in "
            f"{config.train.max_epochs} epochs (final MSE {curve.mse[-1]:.6g})", curve)

    validation_samples = list(validation_samples)
    if validation_samples:
        dct_val = _features_for(validation_samples, config.preproc, config.dct_keep)
        val_feats = np.array([pca_project(pca, v) for v in dct_val])
    else:
        val_feats = np.zeros((0, m))
    primary = Gallery("primary", [s.label for s in train_samples], feats,
                      [s.source_path for s in train_samples])
    secondary = Gallery("secondary", [s.label for s in validation_samples], val_feats,
                        [s.source_path for s in validation_samples])
    model = PipelineModel(config.preproc, config.dct_keep, pca, net, classes,
                          DualDatabase(primary, secondary), scale, config.detector)
    return model, curve


# -- recognition ------------------------------------------------------------

def recognize(image, model: PipelineModel, gate_enabled: bool = True, rect=None,
              detector: auth.DetectorConfig | None = None) -> MatchResult:
    """Authenticate (optionally), then classify with the network and cross-check
    against the galleries. A Forged verdict stops before any recognition."""
    verdict = None
    if gate_enabled:
        verdict = auth.authenticate(image, detector or model.detector)
        if verdict.label == auth.FORGED:
            return MatchResult(gate=verdict)
    v = extract_features(image, model, rect)
    out = forward(model.net, v / model.input_scale)
    k = int(np.argmax(out))
    result = MatchResult(gate=verdict, label=model.classes[k], network_confidence=float(out[k]))
    result.nn_label, result.nn_distance = euclidean_match(v, model.dual.primary)
    if len(model.dual.secondary):
        lab, dist = euclidean_match(v, model.dual.secondary)
        if lab != result.nn_label:
            result.secondary_label, result.secondary_distance = lab, dist
    return result


@dataclass
class EvalReport:
    accuracy: float
    totals: dict[str, int]
    correct: dict[str, int]
    confusion: dict[str, dict[str, int]]
    mean_nn_distance: float
    blocked: int

    def to_csv(self) -> str:
        lines = ["label,total,correct,accuracy"]
        for lab in sorted(self.totals):
            t, c = self.totals[lab], self.correct[lab]
            lines.append(f"{lab},{t},{c},{c / t:.9g}")
        n = sum(self.totals.values())
        lines.append(f"ALL,{n},{sum(self.correct.values())},{self.accuracy:.9g}")
        return "\n".join(lines) + "\n"


def evaluate(model: PipelineModel, samples, gate_enabled: bool = False) -> EvalReport:
    """Accuracy of the network label over ``samples``; gate-blocked probes count as errors."""
    samples = list(samples)
    if not samples:
        raise ValueError("empty test manifest")
    totals, correct, confusion, dists = {}, {}, {}, []
    blocked = 0
    for s in samples:
        res = recognize(s.image, model, gate_enabled, s.rect)
        predicted = res.label if res.label is not None else "<blocked>"
        blocked += res.label is None
        totals[s.label] = totals.get(s.label, 0) + 1
        correct[s.label] = correct.get(s.label, 0) + (predicted == s.label)
        row = confusion.setdefault(s.label, {})
        row[predicted] = row.get(predicted, 0) + 1
        if res.nn_distance is not None:
            dists.append(res.nn_distance)
    acc = sum(correct.values()) / len(samples)
    return EvalReport(acc, totals, correct, confusion,
                      float(np.mean(dists)) if dists else float("nan"), blocked)


# -- manifests --------------------------------------------------------------

def read_manifest(path) -> list[Sample]:
    """Rows ``path,label,x0,y0,w,h``; relative paths resolve against the manifest."""
    base = os.path.dirname(os.path.abspath(path))
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, 1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and row[0].strip() == "path":
                continue
            if len(row) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            rel, label = row[0].strip(), row[1].strip()
            if not label:
                raise ValueError(f"{path}:{lineno}: empty label")
            try:
                rect = tuple(int(v) for v in row[2:])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer crop rectangle") from None
            full = rel if os.path.isabs(rel) else os.path.join(base, rel)
            samples.append(Sample(load_image(full), label, rect, rel))
    return samples


# -- persistence ------------------------------------------------------------

_KIND_ARRAY, _KIND_JSON = 0, 1


def _sections(model: PipelineModel):
    d = model.dual
    meta = {
        "preproc": {**asdict(model.preproc), "target_size": list(model.preproc.target_size)},
        "dct_keep": model.dct_keep,
        "classes": model.classes,
        "detector": {**asdict(model.detector), "orders": list(model.detector.orders)},
        "primary": {"labels": d.primary.labels, "paths": d.primary.source_paths},
        "secondary": {"labels": d.secondary.labels, "paths": d.secondary.source_paths},
    }
    yield "meta", _KIND_JSON, json.dumps(meta, sort_keys=True).encode("utf-8"), ()
    arrays = {
        "pca.mean": model.pca.mean, "pca.basis": model.pca.basis,
        "pca.eigenvalues": model.pca.eigenvalues,
        "net.w1": model.net.w1, "net.b1": model.net.b1,
        "net.w2": model.net.w2, "net.b2": model.net.b2,
        "gallery.primary": d.primary.features, "gallery.secondary": d.secondary.features,
        "input_scale": np.array([model.input_scale]),
    }
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        yield name, _KIND_ARRAY, arr.tobytes(), arr.shape


def encode_model(model: PipelineModel) -> bytes:
    """VFMODEL container: magic, version, section table, payloads, CRC-32."""
    sections = list(_sections(model))
    table = bytearray()
    payload = bytearray()
    for name, kind, data, shape in sections:
        raw = name.encode("ascii")
        table += struct.pack("<B", len(raw)) + raw
        table += struct.pack("<BB", kind, len(shape))
        table += struct.pack(f"<{len(shape)}Q", *shape)
        table += struct.pack("<QQ", len(payload), len(data))
        payload += data
    head = MAGIC + struct.pack("<HI", model.version, len(sections))
    body = head + bytes(table) + bytes(payload)
    return body + struct.pack("<I", zlib.crc32(body))


def decode_model(blob: bytes) -> PipelineModel:
    if blob[:len(MAGIC)] != MAGIC:
        raise ModelFormatError("not a VFMODEL file (bad magic)")
    if len(blob) < len(MAGIC) + 10:
        raise ChecksumError("model file truncated")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise ChecksumError("model file checksum mismatch (corrupt or truncated)")
    version, count = struct.unpack_from("<HI", body, len(MAGIC))
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported model format version {version} "
                           f"(this build reads version {FORMAT_VERSION})")
    pos = len(MAGIC) + 6
    entries = []
    for _ in range(count):
        (n,) = struct.unpack_from("<B", body, pos)
        name = body[pos + 1:pos + 1 + n].decode("ascii")
        pos += 1 + n
        kind, ndim = struct.unpack_from("<BB", body, pos)
        pos += 2
        shape = struct.unpack_from(f"<{ndim}Q", body, pos)
        pos += 8 * ndim
        off, length = struct.unpack_from("<QQ", body, pos)
        pos += 16
        entries.append((name, kind, shape, off, length))
    data_start = pos
    sec = {}
    for name, kind, shape, off, length in entries:
        raw = body[data_start + off:data_start + off + length]
        if kind == _KIND_JSON:
            sec[name] = json.loads(raw.decode("utf-8"))
        else:
            sec[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)

    meta = sec["meta"]
    pre = meta["preproc"]
    preproc = PreprocConfig(pre["filter_size"], pre["stretch_low_pct"], pre["stretch_high_pct"],
                            tuple(pre["target_size"]))
    det = meta["detector"]
    detector = auth.DetectorConfig(**{**det, "orders": tuple(det["orders"])})
    pca = PcaModel(sec["pca.mean"], sec["pca.basis"], sec["pca.eigenvalues"])
    net = Mlp(sec["net.w1"], sec["net.b1"], sec["net.w2"], sec["net.b2"])
    primary = Gallery("primary", meta["primary"]["labels"], sec["gallery.primary"],
                      meta["primary"]["paths"])
    secondary = Gallery("secondary", meta["secondary"]["labels"], sec["gallery.secondary"],
                        meta["secondary"]["paths"])
    return PipelineModel(preproc, meta["dct_keep"], pca, net, meta["classes"],
                         DualDatabase(primary, secondary), float(sec["input_scale"][0]),
                         detector, version)


def save_model(model: PipelineModel, path) -> None:
    blob = encode_model(model)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load_model(path) -> PipelineModel:
    with open(path, "rb") as fh:
        return decode_model(fh.read())
