"""Toolkit for studying coexistence and ensembling of blind image watermarks.

Five classical QIM-style watermarkers over fixed transform domains, binary
linear codes with several exact decoders, series/parallel two-watermark
ensembles with PSNR strength clipping, seeded augmentation suites, a
deterministic evaluation harness, and an exact toy capacity model.
"""

from .accel import JIT_ENABLED, backend_name
from .augment import AugmentationStep, AugmentationSuite, SUITE_NAMES, apply_suite, get_suite
from .ecc import (DecodeFailure, LinearCode, build_named_code, decode, encode,
                  extend_code, load_code, parse_code_spec, puncture_code,
                  save_code, shorten_code)
from .ensemble import (EnsembleSpec, ensemble_embed, ensemble_extract,
                       parallel_ensemble, psnr_clip, series_ensemble)
from .harness import (Corpus, ExperimentReport, coexistence_matrix, derive_seed,
                      eval_accuracy, eval_robustness, load_corpus,
                      psnr_distribution, synthetic_corpus, tradeoff_sweep)
from .image import (Image, Residual, apply_residual, export_residual, psnr,
                    read_png, residual, rgb_to_ycbcr, write_png, ycbcr_to_rgb)
from .toymodel import ToyConfig, quality_ball, tolerance_related, toy_coexistence, watermark_sets
from .watermark import (METHOD_IDS, CapacityError, WatermarkerSpec, embed,
                        extract, secret_from_hex, secret_to_hex)

__version__ = "0.1.0"
