"""Model and layer registry.

Maps the six supported model names to a torchvision backbone, the layers that
can be tapped, and each layer's feature dimension.  Three of the names have
no torchvision architecture; they stay registered with their documented
layer tables but cannot be instantiated in this build.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .errors import UnknownLayer, WeightsMissing

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class LayerSpec:
    """One extractable layer: the module to hook and the output dimension."""

    module_path: str
    dim: int


@dataclass(frozen=True)
class ModelSpec:
    name: str
    layers: dict
    input_size: int
    weights_id: str | None  # torchvision weights enum name, None if unavailable
    builder_name: str | None  # torchvision constructor, None if unavailable
    note: str = ""


def _resnet_layers():
    # global_pool is the 2048-wide pooled trunk; the classifier output is
    # exposed under both of its common endpoint names (same 1000-dim values).
    return {
        "global_pool": LayerSpec("avgpool", 2048),
        "logits": LayerSpec("fc", 1000),
        "spatial_squeeze": LayerSpec("fc", 1000),
    }


def _vgg_layers():
    # fc endpoints are the Linear outputs (pre-activation).
    return {
        "fc6": LayerSpec("classifier.0", 4096),
        "fc7": LayerSpec("classifier.3", 4096),
        "fc8": LayerSpec("classifier.6", 1000),
    }


MODELS = {
    "resnet_v1_101": ModelSpec(
        name="resnet_v1_101",
        layers=_resnet_layers(),
        input_size=224,
        weights_id="IMAGENET1K_V1",
        builder_name="resnet101",
    ),
    "resnet_v2_101": ModelSpec(
        name="resnet_v2_101",
        layers=_resnet_layers(),
        input_size=224,
        weights_id=None,
        builder_name=None,
        note="no preactivation ResNet-101 in torchvision",
    ),
    "inception_v4": ModelSpec(
        name="inception_v4",
        layers={
            "global_pool": LayerSpec("avgpool", 1536),
            "Logits": LayerSpec("fc", 1000),
        },
        input_size=299,
        weights_id=None,
        builder_name=None,
        note="no Inception v4 in torchvision",
    ),
    "inception_resnet_v2": ModelSpec(
        name="inception_resnet_v2",
        layers={
            "global_pool": LayerSpec("avgpool", 1536),
            "Logits": LayerSpec("fc", 1000),
        },
        input_size=299,
        weights_id=None,
        builder_name=None,
        note="no Inception-ResNet v2 in torchvision",
    ),
    "vgg_16": ModelSpec(
        name="vgg_16",
        layers=_vgg_layers(),
        input_size=224,
        weights_id="IMAGENET1K_V1",
        builder_name="vgg16",
    ),
    "vgg_19": ModelSpec(
        name="vgg_19",
        layers=_vgg_layers(),
        input_size=224,
        weights_id="IMAGENET1K_V1",
        builder_name="vgg19",
    ),
}


def model_spec(model_name: str) -> ModelSpec:
    if model_name not in MODELS:
        raise ValueError(
            f"unknown model {model_name!r}; available: {', '.join(sorted(MODELS))}"
        )
    return MODELS[model_name]


def layer_spec(model_name: str, layer_name: str) -> LayerSpec:
    spec = model_spec(model_name)
    if layer_name not in spec.layers:
        raise UnknownLayer(model_name, layer_name, spec.layers)
    return spec.layers[layer_name]


def build_model(model_name: str, pretrained: bool = True, untrained_seed: int = 0):
    """Instantiate the backbone in eval mode.

    ``pretrained=False`` builds the architecture with a fixed seed instead of
    loading weights: deterministic and dimension-correct, but the features
    carry no learned semantics (format/smoke testing only).
    """
    import torchvision.models as tvm

    spec = model_spec(model_name)
    if spec.builder_name is None:
        raise WeightsMissing(f"{model_name}: {spec.note}")
    builder = getattr(tvm, spec.builder_name)
    if pretrained:
        try:
            model = builder(weights=spec.weights_id)
        except Exception as exc:  # hub download or checkpoint failure
            raise WeightsMissing(
                f"{model_name}: cannot load pretrained weights ({exc}); "
                "pass --allow-untrained for format/smoke testing"
            ) from exc
    else:
        torch.manual_seed(untrained_seed)
        model = builder(weights=None)
    model.eval()
    return model


def resolve_module(model, module_path: str):
    node = model
    for part in module_path.split("."):
        node = node[int(part)] if part.isdigit() else getattr(node, part)
    return node
