"""Experiment harness: corpora, deterministic evaluation runs, reports.

Every random decision in an experiment comes from a seed derived as
blake2b("master:image_index:trial_index:role"), so results depend only on
(seed, corpus order, parameters) and never on worker count or scheduling.
Per-image work runs on a thread pool sized by the WMX_THREADS environment
variable (read at call time); results are collected in corpus order.

Reports carry ordered rows plus metadata and serialize to a canonical CSV
(floats printed with six decimals) and an optional JSON mirror with the full
metadata. The CSV is the plotting format; nothing downstream needs a parser
beyond a CSV reader.
"""

import csv
import dataclasses
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .augment import AugmentationSuite, apply_suite, get_suite, resize_bilinear
from .ensemble import EnsembleSpec, _capacity_of, _embed_one, _extract_one, ensemble_embed, ensemble_extract
from .image import Image, psnr, read_png


def derive_seed(master_seed: int, image_index: int, trial_index: int, role: str) -> int:
    """Stable per-(image, trial, role) seed; independent of execution order."""
    text = f"{master_seed}:{image_index}:{trial_index}:{role}"
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _worker_count() -> int:
    value = os.environ.get("WMX_THREADS", "").strip()
    if value:
        return max(1, int(value))
    return min(8, os.cpu_count() or 1)


def _map_indexed(fn, count: int) -> list:
    workers = _worker_count()
    if workers == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


# -- corpus ------------------------------------------------------------------


@dataclass(frozen=True)
class Corpus:
    names: tuple
    images: tuple

    def __post_init__(self):
        if not self.images:
            raise ValueError("corpus must contain at least one image")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def content_id(self) -> str:
        """Hash of decoded pixel data; identifies the corpus in reports."""
        h = hashlib.blake2b(digest_size=8)
        for name, img in zip(self.names, self.images):
            h.update(name.encode("utf-8"))
            h.update(np.ascontiguousarray(img.data).tobytes())
        return h.hexdigest()


def _normalize_size(img: Image, max_side: int) -> Image:
    h, w = img.height, img.width
    if max(h, w) <= max_side:
        return img
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    square = img.data[top : top + side, left : left + side]
    return img.with_data(resize_bilinear(square, max_side, max_side))


def load_corpus(directory, max_side: int = 512) -> Corpus:
    """All PNG files in a directory, sorted by name for determinism."""
    root = Path(directory)
    paths = sorted(root.glob("*.png"))
    if not paths:
        raise ValueError(f"no PNG files found in {root}")
    images = tuple(_normalize_size(read_png(p), max_side) for p in paths)
    return Corpus(tuple(p.name for p in paths), images)


def synthetic_corpus(count: int = 20, size: int = 256, seed: int = 0) -> Corpus:
    """Deterministic mix of gradients, texture, and structure for desk runs."""
    if count < 1:
        raise ValueError("count must be at least 1")
    images = []
    for i in range(count):
        rng = np.random.default_rng(derive_seed(seed, i, 0, "corpus"))
        yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
        base = np.empty((size, size, 3))
        angle = rng.uniform(0, 2 * np.pi)
        ramp = np.cos(angle) * xx + np.sin(angle) * yy
        for k in range(3):
            fx, fy = rng.uniform(1.0, 6.0, 2)
            phase = rng.uniform(0, 2 * np.pi)
            wave = np.sin(2 * np.pi * (fx * xx + fy * yy) + phase)
            base[:, :, k] = 0.5 + 0.25 * np.tanh(3 * (ramp - 0.5)) + 0.15 * wave
        blocks = rng.uniform(0.2, 0.8, (8, 8, 3))
        base += 0.25 * resize_bilinear(blocks, size, size)
        base += rng.normal(0.0, 0.02, base.shape)
        data = np.clip(base, 0.0, 1.0) * 255.0
        images.append(Image(np.rint(data)))
    names = tuple(f"synthetic_{i:03d}.png" for i in range(count))
    return Corpus(names, tuple(images))


# -- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentReport:
    kind: str
    columns: tuple
    rows: tuple
    metadata: dict = field(default_factory=dict)

    def _format(self, value):
        if isinstance(value, float):
            return f"{value:.6f}"
        return str(value)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([self._format(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "columns": list(self.columns),
            "rows": [{c: row[c] for c in self.columns} for row in self.rows],
            "metadata": self.metadata,
        }
        return json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n"

    def write(self, csv_path=None, json_path=None):
        if csv_path:
            Path(csv_path).write_text(self.to_csv())
        if json_path:
            Path(json_path).write_text(self.to_json())


def _base_metadata(corpus: Corpus, seed: int, **params) -> dict:
    meta = {"seed": seed, "corpus_id": corpus.content_id, "corpus_size": len(corpus)}
    meta.update(params)
    return meta


def _label(wm, index: int = 0) -> str:
    for attr in ("method_id", "name"):
        value = getattr(wm, attr, None)
        if isinstance(value, str):
            return value
    return f"watermarker_{index}"


def _matches(extracted, secret) -> bool:
    return extracted is not None and np.array_equal(
        np.asarray(extracted).ravel(), np.asarray(secret).ravel()
    )


def _secret_for(wm, master_seed, image_index, trial_index, role):
    rng = np.random.default_rng(derive_seed(master_seed, image_index, trial_index, role))
    return rng.integers(0, 2, _capacity_of(wm))


# -- experiments -------------------------------------------------------------


def eval_accuracy(wm, corpus: Corpus, trials_per_image: int = 1, seed: int = 0,
                  role: str = "first") -> ExperimentReport:
    """Clean embed/extract; scores 1 only when every bit decodes."""
    if trials_per_image < 1:
        raise ValueError("trials_per_image must be at least 1")

    def run_image(i):
        hits = 0
        for t in range(trials_per_image):
            secret = _secret_for(wm, seed, i, t, role)
            marked = _embed_one(wm, corpus.images[i], secret)
            hits += _matches(_extract_one(wm, marked), secret)
        return hits / trials_per_image

    values = _map_indexed(run_image, len(corpus))
    rows = tuple(
        {"image": corpus.names[i], "metric": "accuracy", "value": values[i],
         "count": trials_per_image}
        for i in range(len(corpus))
    )
    meta = _base_metadata(corpus, seed, method=_label(wm), trials_per_image=trials_per_image,
                          role=role, mean=float(np.mean(values)))
    return ExperimentReport("accuracy", ("image", "metric", "value", "count"), rows, meta)


def eval_robustness(wm, corpus: Corpus, suite, trials_per_image: int = 1, seed: int = 0,
                    role: str = "first") -> ExperimentReport:
    """Embed, degrade with the suite, extract; full-secret scoring."""
    if trials_per_image < 1:
        raise ValueError("trials_per_image must be at least 1")
    if isinstance(suite, str):
        suite = get_suite(suite)

    def run_image(i):
        hits = 0
        for t in range(trials_per_image):
            secret = _secret_for(wm, seed, i, t, role)
            marked = _embed_one(wm, corpus.images[i], secret)
            degraded = apply_suite(marked, suite, derive_seed(seed, i, t, "augment"))
            hits += _matches(_extract_one(wm, degraded), secret)
        return hits / trials_per_image

    values = _map_indexed(run_image, len(corpus))
    metric = f"robustness({suite.name})"
    rows = tuple(
        {"image": corpus.names[i], "metric": metric, "value": values[i],
         "count": trials_per_image}
        for i in range(len(corpus))
    )
    meta = _base_metadata(corpus, seed, method=_label(wm), suite=suite.name,
                          trials_per_image=trials_per_image, role=role,
                          mean=float(np.mean(values)))
    return ExperimentReport("robustness", ("image", "metric", "value", "count"), rows, meta)


def coexistence_matrix(methods, corpus: Corpus, seed: int = 0,
                       trials_per_image: int = 1) -> ExperimentReport:
    """Every ordered pair: embed row's mark, then column's, decode both.

    The diagonal re-embeds the same watermarker with an independent secret.
    Standalone baselines reuse the exact secret streams of the pair runs, so
    "alone" and "with" cells are comparable per trial.
    """
    if not methods:
        raise ValueError("at least one watermarker is required")
    labels = [_label(m, i) for i, m in enumerate(methods)]

    alone_first = [eval_accuracy(m, corpus, trials_per_image, seed, role="first").metadata["mean"]
                   for m in methods]
    alone_second = [eval_accuracy(m, corpus, trials_per_image, seed, role="second").metadata["mean"]
                    for m in methods]

    def run_pair(pair):
        row_wm, col_wm = pair

        def run_image(i):
            hit1 = hit2 = 0
            for t in range(trials_per_image):
                s1 = _secret_for(row_wm, seed, i, t, "first")
                s2 = _secret_for(col_wm, seed, i, t, "second")
                once = _embed_one(row_wm, corpus.images[i], s1)
                twice = _embed_one(col_wm, once, s2)
                hit1 += _matches(_extract_one(row_wm, twice), s1)
                hit2 += _matches(_extract_one(col_wm, twice), s2)
            return hit1, hit2

        per_image = _map_indexed(run_image, len(corpus))
        total = len(corpus) * trials_per_image
        return (sum(h1 for h1, _ in per_image) / total,
                sum(h2 for _, h2 in per_image) / total)

    rows = []
    for r, row_wm in enumerate(methods):
        for c, col_wm in enumerate(methods):
            first_after, second_with = run_pair((row_wm, col_wm))
            rows.append({
                "first": labels[r],
                "second": labels[c],
                "first_alone": alone_first[r],
                "first_after_second": first_after,
                "second_with_first": second_with,
                "second_alone": alone_second[c],
            })
    meta = _base_metadata(corpus, seed, methods=labels, trials_per_image=trials_per_image)
    columns = ("first", "second", "first_alone", "first_after_second",
               "second_with_first", "second_alone")
    return ExperimentReport("coexistence", columns, tuple(rows), meta)


def tradeoff_sweep(spec_template: EnsembleSpec, strengths, corpus: Corpus,
                   suites=(), seed: int = 0, trials_per_image: int = 1) -> ExperimentReport:
    """Accuracy/robustness/PSNR per (mode, strength) for scatter plots."""
    if not strengths:
        raise ValueError("at least one strength value is required")
    suites = [get_suite(s) if isinstance(s, str) else s for s in suites]

    rows = []
    for mode in ("series", "parallel"):
        for strength in strengths:
            spec = dataclasses.replace(
                spec_template, mode=mode,
                strength=None if strength is None else float(strength))

            def run_image(i, spec=spec):
                acc = 0
                psnrs = []
                rob = [0] * len(suites)
                for t in range(trials_per_image):
                    msg = _secret_for(spec, seed, i, t, "message")
                    marked = ensemble_embed(spec, corpus.images[i], msg)
                    psnrs.append(psnr(marked, corpus.images[i]))
                    acc += _matches(ensemble_extract(spec, marked), msg)
                    for si, suite in enumerate(suites):
                        aug_seed = derive_seed(seed, i, t, f"augment:{suite.name}")
                        degraded = apply_suite(marked, suite, aug_seed)
                        rob[si] += _matches(ensemble_extract(spec, degraded), msg)
                return acc, rob, psnrs

            per_image = _map_indexed(run_image, len(corpus))
            total = len(corpus) * trials_per_image
            row = {
                "mode": mode,
                "strength": float("nan") if strength is None else float(strength),
                "capacity_bits": spec_template.capacity_bits,
                "accuracy": sum(r[0] for r in per_image) / total,
                "mean_psnr": float(np.mean([p for r in per_image for p in r[2]])),
            }
            for si, suite in enumerate(suites):
                row[f"robustness_{suite.name}"] = sum(r[1][si] for r in per_image) / total
            rows.append(row)

    columns = ["mode", "strength", "capacity_bits", "accuracy"]
    columns += [f"robustness_{s.name}" for s in suites]
    columns += ["mean_psnr"]
    meta = _base_metadata(corpus, seed, trials_per_image=trials_per_image,
                          strengths=[None if s is None else float(s) for s in strengths],
                          suites=[s.name for s in suites])
    return ExperimentReport("tradeoff", tuple(columns), tuple(rows), meta)


def psnr_distribution(spec: EnsembleSpec, corpus: Corpus, seed: int = 0,
                      trials_per_image: int = 1, threshold: float = 35.0) -> ExperimentReport:
    """Per-image PSNR of the same ensemble in series and in parallel."""
    if spec.strength is not None:
        raise ValueError("psnr_distribution requires a spec without strength clipping")

    def run_image(i):
        series_vals, parallel_vals = [], []
        for t in range(trials_per_image):
            msg = _secret_for(spec, seed, i, t, "message")
            for mode, sink in (("series", series_vals), ("parallel", parallel_vals)):
                variant = dataclasses.replace(spec, mode=mode)
                marked = ensemble_embed(variant, corpus.images[i], msg)
                sink.append(psnr(marked, corpus.images[i]))
        return float(np.mean(series_vals)), float(np.mean(parallel_vals))

    per_image = _map_indexed(run_image, len(corpus))
    rows = tuple(
        {"image": corpus.names[i], "series_psnr": per_image[i][0],
         "parallel_psnr": per_image[i][1]}
        for i in range(len(corpus))
    )
    series = np.array([r["series_psnr"] for r in rows])
    parallel = np.array([r["parallel_psnr"] for r in rows])
    meta = _base_metadata(
        corpus, seed, trials_per_image=trials_per_image, threshold=threshold,
        series_mean=float(series.mean()), parallel_mean=float(parallel.mean()),
        series_above_threshold=float((series > threshold).mean()),
        parallel_above_threshold=float((parallel > threshold).mean()))
    return ExperimentReport("psnr_distribution", ("image", "series_psnr", "parallel_psnr"),
                            rows, meta)
