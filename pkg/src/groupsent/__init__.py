"""Group sentiment classification from pre-detected person, face, torso and poselet boxes."""
from .classifier import LinearModel, LinearSVM
from .geometry import Box, Direction, ImageAnnotation, PoseletDetection, SentimentLabels, load_annotations
from .grouping import GroupingConfig, OrientationWeightedKMeans, PersonPoint
from .matching import PersonRecord, build_person_records
from .orientation import HogConfig, HogTransformer
from .pyramid import FacePyramidTransformer, PyramidConfig

__version__ = "0.1.0"
