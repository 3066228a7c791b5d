"""Extractor exceptions; all map to CLI exit code 2."""


class ExtractorError(Exception):
    exit_code = 2


class UnknownLayer(ExtractorError):
    def __init__(self, model_name: str, layer_name: str, known):
        super().__init__(
            f"model {model_name!r} has no layer {layer_name!r}; "
            f"available: {', '.join(sorted(known))}"
        )
        self.layer_name = layer_name


class UnreadableImage(ExtractorError):
    def __init__(self, path, reason: str = ""):
        super().__init__(f"cannot read image {path}" + (f": {reason}" if reason else ""))
        self.path = path


class WeightsMissing(ExtractorError):
    pass
