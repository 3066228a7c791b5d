"""Extraction pipeline: image directory -> CWCF features + label file.

The input directory holds one subdirectory per class; every readable image
inside becomes one feature column.  Classes are numbered in sorted directory
order and images are processed in sorted filename order, so repeat runs
produce identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision import transforms

from . import cwcf
from .errors import ExtractorError, UnreadableImage
from .registry import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    build_model,
    layer_spec,
    model_spec,
    resolve_module,
)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".ppm", ".pgm", ".tif", ".tiff")


@dataclass(frozen=True)
class ExtractionSpec:
    model_name: str
    layer_name: str
    input_dir: str
    out_features: str
    out_labels: str
    batch_size: int = 16
    pretrained: bool = True
    untrained_seed: int = 0


@dataclass(frozen=True)
class ExtractionResult:
    num_images: int
    dim: int
    class_names: tuple
    out_features: str
    out_labels: str


def preprocessing(input_size: int):
    """The standard inference pipeline: resize, center crop, normalize.

    Grayscale and palette images are converted to RGB first (channel
    replication for single-channel inputs).
    """
    return transforms.Compose(
        [
            transforms.Lambda(lambda img: img.convert("RGB")),
            transforms.Resize(int(input_size * 256 / 224)),
            transforms.CenterCrop(input_size),
            transforms.ToTensor(),
            transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
        ]
    )


def list_images(input_dir) -> tuple[list, list]:
    """Collect (path, class id) pairs; classes follow sorted directory order."""
    root = Path(input_dir)
    if not root.is_dir():
        raise ExtractorError(f"input directory {root} does not exist")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ExtractorError(f"{root} has no class subdirectories")
    paths = []
    class_names = []
    for class_id, class_dir in enumerate(class_dirs):
        class_names.append(class_dir.name)
        files = sorted(
            p for p in class_dir.iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not files:
            raise ExtractorError(f"class directory {class_dir} has no images")
        paths.extend((p, class_id) for p in files)
    return paths, class_names


def _load_batch(batch, transform) -> torch.Tensor:
    tensors = []
    for path, _ in batch:
        try:
            with Image.open(path) as img:
                tensors.append(transform(img))
        except OSError as exc:
            raise UnreadableImage(path, str(exc)) from exc
    return torch.stack(tensors)


def extract(spec: ExtractionSpec) -> ExtractionResult:
    """Run inference and write the CWCF feature file plus the label file."""
    if spec.batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    mspec = model_spec(spec.model_name)
    lspec = layer_spec(spec.model_name, spec.layer_name)
    model = build_model(spec.model_name, spec.pretrained, spec.untrained_seed)
    transform = preprocessing(mspec.input_size)
    paths, class_names = list_images(spec.input_dir)

    captured = {}
    module = resolve_module(model, lspec.module_path)
    handle = module.register_forward_hook(
        lambda _module, _inp, out: captured.__setitem__("out", out.detach())
    )
    columns = []
    try:
        with torch.no_grad():
            for start in range(0, len(paths), spec.batch_size):
                batch = paths[start : start + spec.batch_size]
                model(_load_batch(batch, transform))
                feats = captured["out"]
                feats = torch.flatten(feats, start_dim=1)  # pooled maps -> vectors
                columns.append(feats.numpy().astype(np.float32).T)
    finally:
        handle.remove()

    features = np.concatenate(columns, axis=1)
    if features.shape[0] != lspec.dim:
        raise ExtractorError(
            f"{spec.model_name}/{spec.layer_name}: backbone produced "
            f"{features.shape[0]}-dim features, registry says {lspec.dim}"
        )
    cwcf.write_features(features, spec.out_features)
    cwcf.write_labels([class_id for _, class_id in paths], spec.out_labels)
    return ExtractionResult(
        num_images=len(paths),
        dim=features.shape[0],
        class_names=tuple(class_names),
        out_features=str(spec.out_features),
        out_labels=str(spec.out_labels),
    )
