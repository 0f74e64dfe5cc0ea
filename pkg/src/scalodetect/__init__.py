"""Frequency-event detection in sensor time series via Gabor-wavelet scalograms.

The pipeline turns a recorded channel into a time-frequency magnitude image,
band-filters it so event energy stands out against a white background,
locates event objects as bounding boxes (built-in blob detector or any
external detector through file interchange), and projects the boxes back to
precise time intervals, with an evaluation harness against ground truth.
"""

from .bandfilter import FilterBand, LabeledRegion, apply_band_filter, calibrate_band
from .config import PipelineConfig, load_config
from .detector import (
    Detection,
    LabeledBox,
    detect_blobs,
    export_training_config,
    export_yolo_detections,
    export_yolo_labels,
    import_detections,
    nms,
)
from .errors import (
    ArgumentError,
    ConfigError,
    DataError,
    FormatError,
    ParseError,
    PipelineError,
    StateError,
)
from .mapback import EventInterval, merge_adjacent, to_event_interval
from .metrics import (
    BoundaryErrors,
    EvalReport,
    GroundTruth,
    boundary_errors,
    classification_metrics,
    evaluate,
    interval_iou,
    match_detections,
)
from .pipeline import process_series, run_pipeline
from .scalogram import (
    PixelMapping,
    ScalogramImage,
    mapping_for_grid,
    px_to_frequency,
    px_to_time,
    render,
    segment,
    time_to_px,
)
from .synth import SynthSpec, corpus_preset, dataset_split, generate_test
from .timeseries import TimeSeries, load_csv, resample, slice_series, write_csv
from .wavelet import (
    ScaleGrid,
    ScalogramGrid,
    build_scale_grid,
    cwt_direct,
    cwt_fft,
    gabor,
)

__version__ = "0.1.0"
