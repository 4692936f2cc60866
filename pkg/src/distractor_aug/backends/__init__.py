from .base import (
    SIZE_CLASSES,
    BackendDescriptor,
    BackendError,
    BackendKind,
    Detector,
    FeatureExtractor,
    MaskInpainter,
    ObjectSuggester,
    PromptedInpainter,
    RetriesExhausted,
    Segmenter,
    Suggestion,
    SuggestionError,
)
from .remote import (
    RemoteDetector,
    RemoteFeatureExtractor,
    RemoteMaskInpainter,
    RemotePromptedInpainter,
    RemoteSegmenter,
    RemoteSuggester,
    ServiceClient,
)
from .server import StubServer
from .stubs import (
    AnnotationDetector,
    ColorHistogramExtractor,
    DictionarySuggester,
    FlatColorObject,
    RectMaskSegmenter,
    RingMeanFill,
    ring_mean_fill,
)

__all__ = [
    "SIZE_CLASSES",
    "BackendDescriptor",
    "BackendError",
    "BackendKind",
    "Detector",
    "FeatureExtractor",
    "MaskInpainter",
    "ObjectSuggester",
    "PromptedInpainter",
    "RetriesExhausted",
    "Segmenter",
    "Suggestion",
    "SuggestionError",
    "RemoteDetector",
    "RemoteFeatureExtractor",
    "RemoteMaskInpainter",
    "RemotePromptedInpainter",
    "RemoteSegmenter",
    "RemoteSuggester",
    "ServiceClient",
    "StubServer",
    "AnnotationDetector",
    "ColorHistogramExtractor",
    "DictionarySuggester",
    "FlatColorObject",
    "RectMaskSegmenter",
    "RingMeanFill",
    "ring_mean_fill",
]
