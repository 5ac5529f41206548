"""Feature post-filtering paths and the waveform-generation scenarios.

Two uses of the trained converter pair:

* pseudo features — run natural target features through the self-conversion
  cycle (target-to-source, then source-to-target). The output is temporally
  identical to the natural input but carries the converter's acoustic
  fingerprint, which makes it matched training material for a vocoder.
* enhanced features — run synthetic source features through the
  source-to-target converter, pulling them toward the natural domain at
  test time.

Both replace only the mel-cepstra; prosody (lf0, voicing, aperiodicity)
passes through untouched.

A scenario picks which features a vocoder backend would train on and which
it renders at test time: natural/natural, natural/synthetic (acoustic
mismatch), synthetic/synthetic (temporal mismatch), pseudo/enhanced (the
post-filter pairing). The shipped backend is the deterministic source-filter
resynthesizer, which needs no training; the interface still carries the
training material so learned vocoders can slot in.
"""

from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import acoustics
from .degrade import DegradeConfig, simulate_tts
from .errors import ConfigError, CycleVCError, InputError
from .evaluation import mcd_plane, mcd_set, write_plane_svg, write_plane_tsv
from .features import denormalize_mcep, normalize, write_features, write_manifest
from .model import cycle_path, stot_forward
from .training import TrainConfig, pair_dataset, save_model, train, write_loss_curve
from .wavio import read_wav, write_wav


def generate_pseudo(model, target_feat):
    """Temporally matched vocoder-training features from natural features."""
    y_norm = normalize(target_feat, model.norm_tgt)
    converted = cycle_path(model, y_norm)
    mcep = denormalize_mcep(converted, model.norm_tgt)
    return target_feat.with_mcep(mcep)


def enhance(model, source_feat):
    """Pull synthetic features toward the natural domain (test-time path)."""
    x_norm = normalize(source_feat, model.norm_src)
    converted = stot_forward(model, x_norm)
    mcep = denormalize_mcep(converted, model.norm_tgt)
    return source_feat.with_mcep(mcep)


class VocoderBackend:
    """Turns features into waveforms; `train` consumes training material."""

    name = "abstract"
    trainable = False

    def train(self, pairs):
        """Train on (features, waveform) pairs; no-op for fixed backends."""
        return self

    def generate(self, feat, fs):
        raise NotImplementedError


class ResynthesisBackend(VocoderBackend):
    """Deterministic source-filter resynthesis; needs no training."""

    name = "resynthesis"
    trainable = False

    def generate(self, feat, fs):
        return acoustics.synthesize(feat, fs)


# scenario -> (training role, test role)
SCENARIOS = {
    "natural": ("natural", "natural"),
    "acoustic-mismatch": ("natural", "synthetic"),
    "temporal-mismatch": ("synthetic", "synthetic"),
    "post-filter": ("pseudo", "enhanced"),
}


@dataclass
class ScenarioAssets:
    """Feature sets by role, with per-role source paths for the manifest."""

    features: dict  # role -> list[UtteranceFeatures]
    paths: dict = field(default_factory=dict)  # role -> {utt_id: path}
    train_waveforms: dict = field(default_factory=dict)  # utt_id -> waveform

    def role(self, name, scenario):
        feats = self.features.get(name)
        if not feats:
            raise ConfigError(f"scenario {scenario!r} needs {name!r} features")
        return feats


def _display_path(path, base):
    """Path as written into manifests: relative to `base` when possible."""
    if path is None:
        return "-"
    path = Path(path)
    if base is not None:
        try:
            return str(path.relative_to(base))
        except ValueError:
            pass
    return str(path)


def run_scenario(scenario, assets, out_dir, backend=None, fs=acoustics.FS, path_base=None):
    """Render one scenario's test set; returns the manifest row list.

    Writes `<out_dir>/<utt_id>.wav` per utterance plus `<out_dir>/manifest.tsv`
    with rows utt_id, scenario, feature file (when known), waveform file.
    Paths in the manifest are written relative to `path_base` when given, so
    runs in different directories produce identical manifests.
    """
    if scenario not in SCENARIOS:
        known = ", ".join(sorted(SCENARIOS))
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of: {known}")
    backend = backend or ResynthesisBackend()
    train_role, test_role = SCENARIOS[scenario]
    test_feats = assets.role(test_role, scenario)
    if backend.trainable:
        train_feats = assets.role(train_role, scenario)
        waveforms = [assets.train_waveforms.get(f.utt_id) for f in train_feats]
        if any(w is None for w in waveforms):
            raise InputError(
                f"scenario {scenario!r}: trainable backend needs waveforms "
                f"for every {train_role!r} utterance"
            )
        backend.train(list(zip(train_feats, waveforms)))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    feature_paths = assets.paths.get(test_role, {})
    rows = []
    for feat in sorted(test_feats, key=lambda f: f.utt_id):
        wav = backend.generate(feat, fs)
        expected = feat.n_frames * acoustics.HOP
        if abs(len(wav) - expected) > acoustics.HOP:
            raise ConfigError(
                f"backend {backend.name!r} returned {len(wav)} samples for "
                f"{feat.utt_id!r}, expected about {expected}"
            )
        wav_path = out_dir / f"{feat.utt_id}.wav"
        write_wav(wav_path, np.clip(wav, -1.0, 1.0), fs)
        rows.append(
            (
                feat.utt_id,
                scenario,
                _display_path(feature_paths.get(feat.utt_id), path_base),
                _display_path(wav_path, path_base),
            )
        )
    manifest_path = out_dir / "manifest.tsv"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write("utt_id\tscenario\tfeatures\twaveform\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")
    return rows


def split_train_test(utt_ids, test_fraction=0.2):
    """Deterministic split: sorted ids, the last ~20% (at least one) held out."""
    ids = sorted(utt_ids)
    if len(ids) < 2:
        raise InputError("need at least two utterances to split train/test")
    n_test = max(1, int(round(test_fraction * len(ids))))
    if n_test >= len(ids):
        raise InputError("test fraction leaves no training utterances")
    return ids[:-n_test], ids[-n_test:]


END_TO_END_STAGES = (
    "extract",
    "simulate",
    "split",
    "train",
    "pseudo",
    "enhance",
    "plane",
    "scenarios",
    "report",
)

ORDERINGS = (
    ("enhanced_natural", "synthetic_natural"),
    ("enhanced_pseudo", "synthetic_natural"),
)


@contextmanager
def _stage(name):
    """Prefix any pipeline error with the stage that raised it."""
    try:
        yield
    except CycleVCError as exc:
        raise type(exc)(f"stage {name!r} failed: {exc}") from exc


def write_report(summary, train_config, degrade_config, path):
    """Plain-text run report: config echo, headline MCDs, ordering verdicts.

    Contains no filesystem paths, so identical (corpus, config, seed) runs
    produce byte-identical reports regardless of where they were written.
    """
    lines = ["cycle-vc end-to-end report"]
    lines.append(
        "config: epochs={} rho={} learning_rate={} seed={} teacher_forcing={}".format(
            train_config.epochs,
            train_config.rho,
            train_config.learning_rate,
            train_config.seed,
            train_config.teacher_forcing,
        )
    )
    lines.append(
        "degrade: smooth_window={} variance_scale={} lf0_smooth_window={} "
        "noise_std={} seed={}".format(
            degrade_config.smooth_window,
            degrade_config.variance_scale,
            degrade_config.lf0_smooth_window,
            degrade_config.noise_std,
            degrade_config.seed,
        )
    )
    lines.append("train_utterances: " + " ".join(summary["train_ids"]))
    lines.append("test_utterances: " + " ".join(summary["test_ids"]))
    for key in (
        "synthetic_natural",
        "enhanced_natural",
        "pseudo_natural",
        "enhanced_pseudo",
    ):
        lines.append(f"mcd_{key}_db: {summary['mcd_' + key]:.6f}")
    lines.append(f"plane_stress: {summary['stress']:.6f}")
    for small, big in ORDERINGS:
        margin = summary[f"mcd_{big}"] - summary[f"mcd_{small}"]
        verdict = "PASS" if margin > 0 else "FAIL"
        lines.append(
            f"ordering mcd_{small} < mcd_{big}: {verdict} (margin {margin:.6f} dB)"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def run_end_to_end(
    wav_dir,
    work_dir,
    train_config=None,
    degrade_config=None,
    fs=acoustics.FS,
):
    """Full demonstration pipeline on a directory of WAV files.

    Extracts natural features, simulates degraded synthetic counterparts,
    trains the converter pair on an 80/20 split, produces pseudo and
    enhanced features for the held-out utterances, renders every scenario,
    and writes the distance-map reports. Returns a summary dict with the
    headline MCD numbers and the paths of everything written. Errors name
    the stage that failed.
    """
    train_config = train_config or TrainConfig()
    degrade_config = degrade_config or DegradeConfig()
    wav_paths = sorted(Path(wav_dir).glob("*.wav"))
    if len(wav_paths) < 2:
        raise InputError(f"{wav_dir} holds fewer than two WAV files")
    work = Path(work_dir)
    dirs = {
        role: work / "features" / role
        for role in ("natural", "synthetic", "pseudo", "enhanced")
    }
    for d in dirs.values():
        d.mkdir(parents=True, exist_ok=True)

    natural = {}
    synthetic = {}
    for path in wav_paths:
        with _stage("extract"):
            samples, file_fs = read_wav(path)
            if file_fs != fs:
                raise ConfigError(f"{path} is sampled at {file_fs} Hz, expected {fs}")
            feat = acoustics.analyze(samples, file_fs, utt_id=path.stem)
            natural[feat.utt_id] = feat
            write_features(feat, dirs["natural"] / f"{feat.utt_id}.cvf")
        with _stage("simulate"):
            degraded = simulate_tts(feat, degrade_config)
            synthetic[feat.utt_id] = degraded
            write_features(degraded, dirs["synthetic"] / f"{feat.utt_id}.cvf")

    with _stage("split"):
        train_ids, test_ids = split_train_test(natural)
        manifest_path = work / "train_manifest.tsv"
        # paths relative to the manifest's own directory keep the file
        # byte-identical across runs in different working directories
        write_manifest(
            [
                (u, f"features/natural/{u}.cvf", f"features/synthetic/{u}.cvf")
                for u in train_ids
            ],
            manifest_path,
        )

    with _stage("train"):
        pairs = pair_dataset(manifest_path)
        model, curve = train(pairs, train_config)
        model_path = work / "model.ckpt"
        save_model(model, model_path)
        write_loss_curve(curve, work / "loss.tsv")

    pseudo = {}
    enhanced = {}
    for u in test_ids:
        with _stage("pseudo"):
            pseudo[u] = generate_pseudo(model, natural[u])
            write_features(pseudo[u], dirs["pseudo"] / f"{u}.cvf")
        with _stage("enhance"):
            enhanced[u] = enhance(model, synthetic[u])
            write_features(enhanced[u], dirs["enhanced"] / f"{u}.cvf")

    test_sets = {
        "natural": [natural[u] for u in test_ids],
        "synthetic": [synthetic[u] for u in test_ids],
        "pseudo": [pseudo[u] for u in test_ids],
        "enhanced": [enhanced[u] for u in test_ids],
    }
    with _stage("plane"):
        plane = mcd_plane(**test_sets)
        write_plane_tsv(plane, work / "plane.tsv")
        write_plane_svg(plane, work / "plane.svg")

    with _stage("scenarios"):
        assets = ScenarioAssets(
            features=test_sets,
            paths={
                role: {u: dirs[role] / f"{u}.cvf" for u in test_ids}
                for role in test_sets
            },
        )
        for name in sorted(SCENARIOS):
            run_scenario(name, assets, work / "scenarios" / name, path_base=work)

    summary = {
        "work_dir": work,
        "model_path": model_path,
        "report_path": work / "report.txt",
        "loss_curve": curve,
        "train_ids": train_ids,
        "test_ids": test_ids,
        "feature_dirs": dirs,
        "plane": plane,
        "mcd_synthetic_natural": mcd_set(test_sets["synthetic"], test_sets["natural"]),
        "mcd_enhanced_natural": mcd_set(test_sets["enhanced"], test_sets["natural"]),
        "mcd_pseudo_natural": mcd_set(test_sets["pseudo"], test_sets["natural"]),
        "mcd_enhanced_pseudo": mcd_set(test_sets["enhanced"], test_sets["pseudo"]),
        "stress": plane.stress,
    }
    with _stage("report"):
        write_report(summary, train_config, degrade_config, summary["report_path"])
    return summary
