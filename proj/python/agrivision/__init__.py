"""Agricultural pattern recognition pipeline: datasets, mosaics, TTA, ensembles and mIoU."""

from ._core import (
    CLASS_NAMES,
    NUM_CLASSES,
    AgvError,
    ConfusionMatrix,
    Manifest,
    SynthConfig,
    Tile,
    TileRecord,
    apply_plan,
    apply_transform,
    argmax,
    build_mosaic,
    class_counts,
    ensemble,
    evaluate,
    generate_synthetic,
    ingest,
    load_tile,
    make_tile,
    mosaic_grid,
    plan_resample,
    predict,
    read_manifest,
    read_scores,
    render_synthetic_tile,
    write_manifest,
    write_scores,
)

__version__ = "1.0.0"
