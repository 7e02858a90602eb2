"""Synthetic layered-image dataset construction.

Procedural foreground/background generators stand in for curated asset
collections so the whole pipeline runs self-contained; the import
helpers accept directories of real RGBA cutouts and photos with the
same downstream contract.  Every sample records the exact foreground,
background and alpha used to build its composite.
"""

from .procedural import BackgroundAsset, ForegroundAsset, procedural_background, procedural_foreground
from .compose import DatasetSample, matting_trimap, sample_from_seed, standardize, synthesize_sample
from .corpus import DirectoryCorpus, build_corpus, import_backgrounds, import_foregrounds, load_corpus

__all__ = [
    "BackgroundAsset",
    "ForegroundAsset",
    "procedural_background",
    "procedural_foreground",
    "DatasetSample",
    "matting_trimap",
    "sample_from_seed",
    "standardize",
    "synthesize_sample",
    "DirectoryCorpus",
    "build_corpus",
    "import_backgrounds",
    "import_foregrounds",
    "load_corpus",
]
