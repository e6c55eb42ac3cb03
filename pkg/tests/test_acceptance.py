"""Acceptance suite: one test per shipping criterion, one PASS/FAIL line each.

Run with `pytest -v tests/test_acceptance.py` (add -s to see the lines while
running). Every test prints "[criterion NN] PASS/FAIL - <what it checks>" so
the suite reads as a checklist. All randomness is seeded; reruns are exact.
"""

import itertools
import math
from contextlib import contextmanager

import numpy as np
import pytest

from wmx.augment import apply_suite, get_suite
from wmx.ecc import build_named_code, decode, encode, extend_code, puncture_code
from wmx.ensemble import (
    EnsembleSpec,
    ensemble_embed,
    ensemble_extract,
    psnr_clip,
    strength_clip_target,
)
from wmx.harness import _map_indexed, coexistence_matrix, derive_seed, eval_accuracy
from wmx.image import Image, psnr
from wmx.toymodel import ToyConfig, naive_max_independent, quality_ball, watermark_sets
from wmx.watermark import METHOD_IDS, WatermarkerSpec
from wmx.cli import run_cli


@contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"[criterion {number:02d}] FAIL - {description}")
        raise
    print(f"[criterion {number:02d}] PASS - {description}")


METHOD_SPECS = {
    "dct": WatermarkerSpec("dct", key=11, capacity_bits=32),
    "dwt": WatermarkerSpec("dwt", key=22, capacity_bits=32),
    "dwtdct": WatermarkerSpec("dwtdct", key=33, capacity_bits=32),
    "dwtdctsvd": WatermarkerSpec("dwtdctsvd", key=44, capacity_bits=32),
    "spread_spectrum": WatermarkerSpec("spread_spectrum", key=55, capacity_bits=32),
}


@pytest.fixture(scope="module")
def coexistence_report(acceptance_corpus):
    methods = [METHOD_SPECS[m] for m in METHOD_IDS]
    return coexistence_matrix(methods, acceptance_corpus, seed=200, trials_per_image=1)


def _ensemble_accuracy(spec, corpus, seed, trials, suite=None):
    if suite is not None:
        suite = get_suite(suite)

    def run_image(i):
        hits = 0
        for t in range(trials):
            rng = np.random.default_rng(derive_seed(seed, i, t, "message"))
            msg = rng.integers(0, 2, spec.capacity_bits)
            marked = ensemble_embed(spec, corpus.images[i], msg)
            img = marked if suite is None else apply_suite(
                marked, suite, derive_seed(seed, i, t, "augment"))
            got = ensemble_extract(spec, img)
            hits += got is not None and np.array_equal(np.asarray(got).ravel(), msg)
        return hits

    per_image = _map_indexed(run_image, len(corpus))
    return sum(per_image) / (len(corpus) * trials)


def _all_codewords(code):
    messages = np.array(list(itertools.product((0, 1), repeat=code.k)), dtype=np.uint8)
    return messages, (messages @ code.generator) % 2


def _error_patterns(n, max_weight):
    for weight in range(max_weight + 1):
        for positions in itertools.combinations(range(n), weight):
            pattern = np.zeros(n, dtype=np.uint8)
            pattern[list(positions)] = 1
            yield pattern


# -- criterion 1: exhaustive decode inside the radius ---------------------------


def test_criterion_01_ecc_exhaustive_decoding():
    codes = [
        build_named_code("repetition", 3),
        build_named_code("repetition", 5),
        build_named_code("repetition", 8),
        build_named_code("hamming", 3),
        build_named_code("extended_hamming", 3),
        build_named_code("reed_muller_1", 3),
        build_named_code("reed_muller_1", 4),
    ]
    with criterion(1, "every weight <= t error decodes exactly, all five families"):
        for code in codes:
            t = (code.d - 1) // 2
            messages, codewords = _all_codewords(code)
            failures = 0
            for msg, word in zip(messages, codewords):
                for pattern in _error_patterns(code.n, t):
                    decoded, _ = decode(code, word ^ pattern)
                    failures += not np.array_equal(decoded, msg)
            assert failures == 0, f"{code.name}: {failures} decode failures"


# -- criterion 2: code transforms and brute-force distance ----------------------


def test_criterion_02_code_transforms_and_distances():
    with criterion(2, "extend/puncture parameters and brute-force distances"):
        extended = extend_code(build_named_code("hamming", 3))
        assert (extended.n, extended.k, extended.d) == (8, 4, 4)
        punctured = puncture_code(build_named_code("repetition", 4), {3})
        assert (punctured.n, punctured.k, punctured.d) == (3, 1, 3)

        built = [build_named_code("repetition", n) for n in range(2, 9)]
        built += [build_named_code("parity", n) for n in range(3, 9)]
        built += [build_named_code("hamming", m) for m in (3, 4)]
        built += [build_named_code("extended_hamming", m) for m in (3, 4)]
        built += [build_named_code("reed_muller_1", m) for m in (2, 3, 4, 5)]
        built += [extended, punctured]
        for code in built:
            assert code.k <= 16
            _, codewords = _all_codewords(code)
            weights = codewords.sum(axis=1)
            assert int(weights[weights > 0].min()) == code.d, code.name


# -- criterion 3: PSNR clip hits its target -------------------------------------


def test_criterion_03_psnr_clip_accuracy():
    rng = np.random.default_rng(1234)
    with criterion(3, "50 clipped triples within 0.05 dB; no-clip is bit-identical"):
        checked = 0
        while checked < 50:
            h, w = rng.integers(32, 96, 2)
            cover = Image(rng.uniform(40.0, 215.0, (int(h), int(w), 3)))
            res = rng.normal(0.0, rng.uniform(1.0, 6.0), cover.data.shape)
            marked = cover.with_data(cover.data + res, clamp=False)
            base = psnr(marked, cover)

            # cover and marked both sit inside the pixel range, so every
            # scaled-down blend of the two does as well: zero samples clamp,
            # satisfying the < 0.1% precondition exactly.
            assert marked.data.min() >= 0.0 and marked.data.max() <= 255.0

            target = base + rng.uniform(0.5, 5.0)  # demands more quality: clips
            clipped = psnr_clip(marked, cover, target)
            assert clipped is not marked
            assert abs(psnr(clipped, cover) - target) <= 0.05

            easy = psnr_clip(marked, cover, base - rng.uniform(0.5, 5.0))
            assert easy is marked  # no-clip branch returns the input unchanged
            checked += 1


# -- criterion 4: strength endpoints --------------------------------------------


def test_criterion_04_strength_endpoints(acceptance_corpus):
    wm1, wm2 = METHOD_SPECS["dct"], METHOD_SPECS["dwt"]
    rng = np.random.default_rng(77)
    with criterion(4, "strength 0/1 clip targets equal min/max standalone PSNR"):
        for img in acceptance_corpus.images[:3]:
            m1 = rng.integers(0, 2, wm1.capacity_bits)
            m2 = rng.integers(0, 2, wm2.capacity_bits)
            lo_target, p1, p2 = strength_clip_target(img, 0.0, wm1, wm2, m1, m2)
            hi_target, q1, q2 = strength_clip_target(img, 1.0, wm1, wm2, m1, m2)
            assert (p1, p2) == (q1, q2)  # deterministic standalone embeds
            assert abs(lo_target - min(p1, p2)) <= 1e-6
            assert abs(hi_target - max(p1, p2)) <= 1e-6


# -- criterion 5: standalone round-trip accuracy --------------------------------


def test_criterion_05_watermarker_round_trip(acceptance_corpus):
    with criterion(5, "five methods >= 95% full-secret accuracy, 20 images x 10 trials"):
        means = {}
        for name in METHOD_IDS:
            report = eval_accuracy(METHOD_SPECS[name], acceptance_corpus,
                                   trials_per_image=10, seed=100)
            means[name] = report.metadata["mean"]
        assert all(v >= 0.95 for v in means.values()), means


# -- criteria 6 and 7: coexistence matrix ----------------------------------------


def test_criterion_06_self_overwrite_diagonal(coexistence_report):
    with criterion(6, "re-embedding the same method kills the first secret (<= 5%)"):
        diagonal = [row for row in coexistence_report.rows if row["first"] == row["second"]]
        assert len(diagonal) == len(METHOD_IDS)
        assert all(row["first_after_second"] <= 0.05 for row in diagonal)


def test_criterion_07_cross_method_coexistence(coexistence_report):
    with criterion(7, ">= 40% of distinct ordered pairs keep 0.5x standalone accuracy"):
        pairs = [row for row in coexistence_report.rows if row["first"] != row["second"]]
        assert len(pairs) == 20
        retained = sum(
            row["first_after_second"] >= 0.5 * row["first_alone"] for row in pairs
        )
        assert retained / len(pairs) >= 0.40, f"only {retained}/20 pairs retained"


# -- criterion 8: capacity addition ----------------------------------------------


def test_criterion_08_capacity_addition(acceptance_corpus):
    spec = EnsembleSpec(WatermarkerSpec("dct", key=101, capacity_bits=32),
                        WatermarkerSpec("dwt", key=202, capacity_bits=32))
    with criterion(8, "uncoded pair reports and round-trips 64-bit messages >= 80%"):
        assert spec.capacity_bits == 64
        accuracy = _ensemble_accuracy(spec, acceptance_corpus, seed=800, trials=1)
        assert accuracy >= 0.80, f"accuracy {accuracy:.3f}"


# -- criterion 9: parallel beats series on quality --------------------------------


def test_criterion_09_parallel_psnr_exceeds_series(acceptance_corpus):
    from wmx.harness import psnr_distribution

    pairs = [("dct", "dwt"), ("dwt", "dwtdct"), ("spread_spectrum", "dct"),
             ("dwtdct", "dwtdctsvd")]
    with criterion(9, "mean PSNR: parallel > series for every tested pair"):
        for a, b in pairs:
            spec = EnsembleSpec(METHOD_SPECS[a], METHOD_SPECS[b])
            report = psnr_distribution(spec, acceptance_corpus, seed=400)
            assert report.metadata["parallel_mean"] > report.metadata["series_mean"], (a, b)


# -- criterion 10: coding rescues robustness --------------------------------------


def test_criterion_10_ecc_rescues_ensembles(acceptance_corpus):
    # spread_spectrum + dct passes criterion 7; both runs use identical
    # strength (no clipping), so the code is the only difference.
    ss = WatermarkerSpec("spread_spectrum", key=71, capacity_bits=8,
                         quantization_step=1200)
    dc = WatermarkerSpec("dct", key=72, capacity_bits=8)
    uncoded = EnsembleSpec(ss, dc)
    coded = EnsembleSpec(ss, dc, code=build_named_code("reed_muller_1", 4))
    with criterion(10, "reed_muller_1(4) strictly lifts trustmark_low robustness"):
        u = _ensemble_accuracy(uncoded, acceptance_corpus, seed=300, trials=5,
                               suite="trustmark_low")
        c = _ensemble_accuracy(coded, acceptance_corpus, seed=300, trials=5,
                               suite="trustmark_low")
        assert c > u, f"coded {c:.3f} <= uncoded {u:.3f}"


# -- criterion 11: eval determinism across workers --------------------------------


def test_criterion_11_eval_determinism(tmp_path, monkeypatch, capsys):
    def run(tag, workers):
        out = tmp_path / f"{tag}.csv"
        monkeypatch.setenv("WMX_THREADS", str(workers))
        rc = run_cli(["eval", "coexist", "--methods", "dct,dwt", "--keys", "5,6",
                      "--capacity", "16", "--synthetic", "4", "--size", "64",
                      "--seed", "42", "--out", str(out)])
        assert rc == 0
        return out.read_bytes()

    with criterion(11, "eval CSV byte-identical across reruns and 1 vs 8 workers"):
        outputs = [run(f"run{i}_w{w}", w) for i, w in enumerate((1, 1, 8, 8))]
        capsys.readouterr()
        assert all(blob == outputs[0] for blob in outputs[1:])


# -- criterion 12: toy model exact results ----------------------------------------


def test_criterion_12_toy_model():
    with criterion(12, "cube: adjacent max 14, size-4 maximal emitted, naive == exact"):
        adjacent = watermark_sets(ToyConfig(conflict_rule="adjacent"))
        assert adjacent["max_size"] == 14

        ball_rule = watermark_sets(ToyConfig())
        fours = [e for e in ball_rule["maximal_sets"] if e["size"] == 4]
        assert fours, "no size-4 maximal set emitted"
        for entry in ball_rule["maximal_sets"]:
            assert entry["capacity_bits"] == pytest.approx(math.log2(entry["size"]))
        assert all(e["capacity_bits"] == 2.0 for e in fours)

        star = ToyConfig(min_psnr=10.78)  # 7-point ball fits the naive search
        ball = quality_ball(star)
        for cfg in (star, ToyConfig(min_psnr=10.78, conflict_rule="adjacent")):
            assert naive_max_independent(ball, cfg) == watermark_sets(cfg)["max_size"]


# -- criterion 13: augmentation census and determinism -----------------------------


def test_criterion_13_suite_census_and_determinism(acceptance_corpus):
    with criterion(13, "suite structure 3 / 1+5 / 2+15, seeded reruns identical, in range"):
        rivagan = get_suite("rivagan")
        assert len(rivagan.always_steps) == 3
        assert len(rivagan.choice_steps) == 0 and rivagan.choice_count == 0

        ssl = get_suite("ssl")
        assert len(ssl.always_steps) == 1
        assert len(ssl.choice_steps) == 5 and ssl.choice_count == 1

        for name in ("trustmark_low", "trustmark_medium", "trustmark_high"):
            suite = get_suite(name)
            assert len(suite.always_steps) == 2
            assert len(suite.choice_steps) == 15 and suite.choice_count == 2

        for name in ("rivagan", "ssl", "trustmark_low", "trustmark_medium",
                     "trustmark_high"):
            suite = get_suite(name)
            for idx, img in enumerate(acceptance_corpus.images[:2]):
                seed = derive_seed(1300, idx, 0, f"augment:{name}")
                once = apply_suite(img, suite, seed)
                again = apply_suite(img, suite, seed)
                assert np.array_equal(once.data, again.data)
                assert once.data.min() >= 0.0 and once.data.max() <= 255.0
