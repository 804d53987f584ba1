"""Seeded synthetic corpora.

* pristine/forged noise pairs for detector calibration;
* a face-like recognition corpus: each subject is a smooth analytic pattern
  (head, eyes, nose, mouth and a few free blobs), and every sample is that
  pattern plus Gaussian pixel noise. Patterns are evaluated on the pixel grid
  directly, so clean samples carry no resampling trace.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .raster import Raster, quantize, save_image
from .resample import KernelSpec, scale_image


def _spawn(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def noise_image(rng, width: int, height: int) -> Raster:
    return Raster(rng.integers(0, 256, (height, width)).astype(np.float64))


def upscaled_noise(rng, size: int, factor: float = 2.0,
                   spec: KernelSpec = KernelSpec("linear")) -> Raster:
    """Noise at size/factor, rescaled by ``factor`` and quantized to 8 bits."""
    src = noise_image(rng, int(round(size / factor)), int(round(size / factor)))
    return Raster(quantize(scale_image(src, factor, spec).pixels).astype(np.float64))


def calibration_pairs(seed: int, trials: int, size: int = 128, factor: float = 2.0,
                      spec: KernelSpec = KernelSpec("linear")):
    """Yield (pristine, forged) pairs, one independent generator per trial."""
    for rng in _spawn(seed, trials):
        yield noise_image(rng, size, size), upscaled_noise(rng, size, factor, spec)


def face_pattern(rng, size: int = 64) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / (size - 1)

    def blob(cx, cy, sx, sy, amp):
        return amp * np.exp(-0.5 * (((xx - cx) / sx) ** 2 + ((yy - cy) / sy) ** 2))

    gx, gy = rng.uniform(-40, 40, 2)
    img = 70.0 + gx * (xx - 0.5) + gy * (yy - 0.5)
    # head: soft-edged ellipse
    hx, hy = rng.uniform(0.3, 0.42), rng.uniform(0.38, 0.48)
    r = np.sqrt(((xx - 0.5) / hx) ** 2 + ((yy - 0.52) / hy) ** 2)
    img += rng.uniform(70, 120) / (1.0 + np.exp((r - 1.0) * 12.0))
    eye_y = rng.uniform(0.36, 0.48)
    eye_dx = rng.uniform(0.12, 0.2)
    eye_s = rng.uniform(0.035, 0.07)
    eye_a = -rng.uniform(50, 100)
    img += blob(0.5 - eye_dx, eye_y, eye_s, eye_s * 0.7, eye_a)
    img += blob(0.5 + eye_dx, eye_y, eye_s, eye_s * 0.7, eye_a)
    img += blob(0.5, rng.uniform(0.52, 0.62), rng.uniform(0.03, 0.06), rng.uniform(0.06, 0.1),
                rng.uniform(15, 45))
    img += blob(0.5, rng.uniform(0.7, 0.8), rng.uniform(0.08, 0.16), rng.uniform(0.02, 0.04),
                -rng.uniform(40, 80))
    for _ in range(3):
        img += blob(*rng.uniform(0.15, 0.85, 2), *rng.uniform(0.05, 0.15, 2),
                    rng.uniform(-40, 40))
    return np.clip(img, 10, 245)


@dataclass(frozen=True)
class Sample:
    image: Raster
    label: str
    rect: tuple[int, int, int, int] | None = None
    source_path: str = ""


@dataclass
class FaceCorpus:
    train: list[Sample]
    validation: list[Sample]
    probes: list[Sample]


def face_corpus(subjects: int = 10, train_per_subject: int = 5, validation_per_subject: int = 1,
                probes_per_subject: int = 5, noise_sigma: float = 4.0, size: int = 64,
                margin: int = 4, seed: int = 0) -> FaceCorpus:
    """Face-like corpus; each image is ``size + 2*margin`` square with the face
    in the centred ``size`` x ``size`` crop rectangle."""
    rngs = _spawn(seed, subjects)
    full = size + 2 * margin
    rect = (margin, margin, size, size)
    train, val, probes = [], [], []
    for i, rng in enumerate(rngs):
        label = f"s{i + 1:02d}"
        canvas = np.full((full, full), 60.0)
        canvas[margin:margin + size, margin:margin + size] = face_pattern(rng, size)
        groups = ((train, train_per_subject, "train"), (val, validation_per_subject, "val"),
                  (probes, probes_per_subject, "probe"))
        for bucket, count, tag in groups:
            for j in range(count):
                noisy = canvas + rng.normal(0.0, noise_sigma, canvas.shape)
                img = Raster(quantize(noisy).astype(np.float64))
                bucket.append(Sample(img, label, rect, f"{tag}/{label}_{j + 1:02d}.pgm"))
    return FaceCorpus(train, val, probes)


def write_manifest(samples, path) -> None:
    lines = ["path,label,x0,y0,w,h"]
    for s in samples:
        x0, y0, w, h = s.rect if s.rect else (0, 0, s.image.width, s.image.height)
        lines.append(f"{s.source_path},{s.label},{x0},{y0},{w},{h}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_face_corpus(corpus: FaceCorpus, out_dir) -> dict[str, str]:
    """Write images plus train/validation/probes manifests; returns manifest paths."""
    manifests = {}
    for name, samples in (("train", corpus.train), ("validation", corpus.validation),
                          ("probes", corpus.probes)):
        for s in samples:
            dest = os.path.join(out_dir, s.source_path)
            os.makedirs(os.path.dirname(dest), exist_ok=True)
            save_image(s.image, dest)
        path = os.path.join(out_dir, f"{name}.csv")
        write_manifest(samples, path)
        manifests[name] = path
    return manifests
