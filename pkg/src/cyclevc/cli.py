"""Command-line interface.

Every subcommand accepts --config pointing at a flat key=value file whose
keys are the subcommand's option names (underscored); explicit flags win
over config values, and unknown keys are an error. The effective settings
are echoed line-by-line before the run so logs capture exactly what ran.

Exit codes: 0 success, 1 bad input or configuration, 2 internal failure.
"""

import argparse
import sys
from pathlib import Path

from . import acoustics, degrade, fixture
from .errors import ConfigError, CycleVCError, InputError
from .evaluation import mcd_plane, mcd_set, write_plane_svg, write_plane_tsv
from .features import read_features, write_features, write_manifest
from .model import RHO_DEFAULT
from .pipeline import (
    END_TO_END_STAGES,
    SCENARIOS,
    ScenarioAssets,
    enhance,
    generate_pseudo,
    run_end_to_end,
    run_scenario,
)
from .training import (
    EPOCHS_DEFAULT,
    LR_DEFAULT,
    TrainConfig,
    load_model,
    pair_dataset,
    pairing_report,
    save_model,
    train,
    write_loss_curve,
)
from .wavio import read_wav, write_wav

_ROLES = ("natural", "synthetic", "pseudo", "enhanced")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="cyclevc", description="Cycle-VC post-filter toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    parsers = {}

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key=value file with defaults for this command")
        parsers[name] = p
        return p

    p = command("extract", "analyze WAV files into feature files")
    p.add_argument("--wav-dir", required=True)
    p.add_argument("--out-dir", "--out", dest="out_dir", required=True)
    p.add_argument("--fs", type=int, default=acoustics.FS)

    p = command("simulate", "degrade natural features into synthetic-like ones")
    p.add_argument("--features-dir", required=True)
    p.add_argument("--out-dir", "--out", dest="out_dir", required=True)
    p.add_argument("--smooth-window", type=int, default=degrade.DegradeConfig.smooth_window)
    p.add_argument("--variance-scale", type=float, default=degrade.DegradeConfig.variance_scale)
    p.add_argument(
        "--lf0-smooth-window", type=int, default=degrade.DegradeConfig.lf0_smooth_window
    )
    p.add_argument("--noise-std", type=float, default=degrade.DegradeConfig.noise_std)
    p.add_argument("--seed", type=int, default=degrade.DEFAULT_SEED)

    p = command("manifest", "pair natural and synthetic feature dirs by stem")
    p.add_argument("--natural-dir", required=True)
    p.add_argument("--synthetic-dir", required=True)
    p.add_argument("--out", required=True)

    p = command("train", "train the converter pair on a paired manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", "--out", dest="out_dir")
    p.add_argument("--model-out")
    p.add_argument("--loss-out")
    p.add_argument("--epochs", type=int, default=EPOCHS_DEFAULT)
    p.add_argument("--rho", type=float, default=RHO_DEFAULT)
    p.add_argument("--learning-rate", type=float, default=LR_DEFAULT)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--teacher-forcing", action="store_true")

    p = command("pseudo", "self-convert natural features for vocoder training")
    p.add_argument("--model", required=True)
    p.add_argument("--features-dir", required=True)
    p.add_argument("--out-dir", "--out", dest="out_dir", required=True)

    p = command("enhance", "convert synthetic features toward the natural domain")
    p.add_argument("--model", required=True)
    p.add_argument("--features-dir", required=True)
    p.add_argument("--out-dir", "--out", dest="out_dir", required=True)

    p = command("synth", "render feature files to WAV with the resynthesizer")
    p.add_argument("--features-dir", required=True)
    p.add_argument("--out-dir", "--out", dest="out_dir", required=True)
    p.add_argument("--fs", type=int, default=acoustics.FS)

    p = command("scenario", "render one train/test pairing scenario")
    p.add_argument("--name", required=True, choices=sorted(SCENARIOS))
    for role in _ROLES:
        p.add_argument(f"--{role}-dir")
    p.add_argument("--out-dir", "--out", dest="out_dir", required=True)

    p = command("mcd", "mean mel-cepstral distortion between two feature sets")
    p.add_argument("--set-a", required=True)
    p.add_argument("--set-b", required=True)

    p = command("plane", "embed pairwise set MCDs into a labeled 2-D map")
    for role in _ROLES:
        p.add_argument(f"--{role}-dir")
    p.add_argument("--out-dir", "--out", dest="out_dir")
    p.add_argument("--tsv")
    p.add_argument("--svg")

    p = command("fixture", "generate the deterministic demo corpus")
    p.add_argument("--out-dir", "--out", dest="out_dir", required=True)
    p.add_argument("--count", type=int, default=fixture.DEFAULT_UTTERANCES)
    p.add_argument("--seed", type=int, default=fixture.DEFAULT_SEED)

    p = command("end-to-end", "full demo: extract, degrade, train, render, report")
    p.add_argument("--wav-dir", required=True)
    p.add_argument("--work-dir", required=True)
    p.add_argument("--epochs", type=int, default=EPOCHS_DEFAULT)
    p.add_argument("--rho", type=float, default=RHO_DEFAULT)
    p.add_argument("--learning-rate", type=float, default=LR_DEFAULT)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--sim-seed", type=int, default=degrade.DEFAULT_SEED)
    p.add_argument("--teacher-forcing", action="store_true")
    p.add_argument("--dry-run", action="store_true")

    return parser, parsers


def _read_config_file(path):
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _apply_config(parser, sub, argv, args):
    values = _read_config_file(args.config)
    actions = {
        a.dest: a
        for a in sub._actions
        if a.dest not in ("help", "config", "command")
    }
    unknown = sorted(set(values) - set(actions))
    if unknown:
        raise ConfigError(
            f"unknown config keys for {args.command!r}: {', '.join(unknown)}"
        )
    typed = {}
    for key, raw in values.items():
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            low = raw.lower()
            if low in _TRUE:
                typed[key] = True
            elif low in _FALSE:
                typed[key] = False
            else:
                raise ConfigError(f"config key {key}: expected a boolean, got {raw!r}")
        elif action.type is not None:
            try:
                typed[key] = action.type(raw)
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from exc
        else:
            typed[key] = raw
        if action.choices and typed[key] not in action.choices:
            raise ConfigError(
                f"config key {key}: {typed[key]!r} not in {sorted(action.choices)}"
            )
    sub.set_defaults(**typed)
    return parser.parse_args(argv)


def _echo(args):
    skip = {"config"}
    for key in sorted(vars(args)):
        if key in skip:
            continue
        print(f"[config] {key}={getattr(args, key)}")


def _feature_files(directory, what):
    paths = sorted(Path(directory).glob("*.cvf"))
    if not paths:
        raise InputError(f"no feature files (*.cvf) in {what} directory {directory}")
    return paths


def _load_set(directory, what):
    return [read_features(p) for p in _feature_files(directory, what)]


def _cmd_extract(args):
    if args.fs != acoustics.FS:
        raise ConfigError(f"unsupported fs {args.fs}; the analyzer runs at {acoustics.FS} Hz")
    wavs = sorted(Path(args.wav_dir).glob("*.wav"))
    if not wavs:
        raise InputError(f"no WAV files in {args.wav_dir}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for path in wavs:
        samples, fs = read_wav(path)
        if fs != args.fs:
            raise ConfigError(f"{path} is sampled at {fs} Hz, expected {args.fs}")
        feat = acoustics.analyze(samples, fs, utt_id=path.stem)
        write_features(feat, out / f"{path.stem}.cvf")
    print(f"extracted {len(wavs)} utterances -> {out}")
    return 0


def _degrade_config(args):
    return degrade.DegradeConfig(
        smooth_window=args.smooth_window,
        variance_scale=args.variance_scale,
        lf0_smooth_window=args.lf0_smooth_window,
        noise_std=args.noise_std,
        seed=args.seed,
    )


def _cmd_simulate(args):
    config = _degrade_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = _feature_files(args.features_dir, "features")
    for path in paths:
        feat = read_features(path)
        write_features(degrade.simulate_tts(feat, config), out / path.name)
    print(f"simulated {len(paths)} utterances -> {out}")
    return 0


def _cmd_manifest(args):
    nat = {p.stem: p for p in _feature_files(args.natural_dir, "natural")}
    syn = {p.stem: p for p in _feature_files(args.synthetic_dir, "synthetic")}
    missing = sorted(set(nat) ^ set(syn))
    if missing:
        raise InputError(f"utterances present on one side only: {', '.join(missing)}")
    write_manifest([(u, nat[u], syn[u]) for u in sorted(nat)], args.out)
    print(f"wrote {len(nat)} pairs -> {args.out}")
    return 0


def _train_config(args):
    return TrainConfig(
        epochs=args.epochs,
        rho=args.rho,
        learning_rate=args.learning_rate,
        seed=args.seed,
        teacher_forcing=args.teacher_forcing,
    )


def _cmd_train(args):
    if not args.model_out and not args.out_dir:
        raise ConfigError("train needs --model-out or --out-dir")
    model_out = Path(args.model_out) if args.model_out else Path(args.out_dir) / "model.ckpt"
    loss_out = args.loss_out
    if not loss_out and args.out_dir:
        loss_out = Path(args.out_dir) / "loss.tsv"
    model_out.parent.mkdir(parents=True, exist_ok=True)

    pairs = pair_dataset(args.manifest)
    for line in pairing_report(pairs):
        print(f"[pairing] {line}")
    model, curve = train(pairs, _train_config(args))
    save_model(model, model_out)
    if loss_out:
        write_loss_curve(curve, loss_out)
    last = curve[-1]
    print(
        f"trained on {len(pairs)} utterances; "
        f"final stot_l1={last.stot_l1:.6f} cycle_l1={last.cycle_l1:.6f}"
    )
    print(f"model -> {model_out}")
    return 0


def _convert_dir(args, convert):
    model = load_model(args.model)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = _feature_files(args.features_dir, "features")
    for path in paths:
        write_features(convert(model, read_features(path)), out / path.name)
    return len(paths), out


def _cmd_pseudo(args):
    count, out = _convert_dir(args, generate_pseudo)
    print(f"pseudo features for {count} utterances -> {out}")
    return 0


def _cmd_enhance(args):
    count, out = _convert_dir(args, enhance)
    print(f"enhanced features for {count} utterances -> {out}")
    return 0


def _cmd_synth(args):
    if args.fs != acoustics.FS:
        raise ConfigError(f"unsupported fs {args.fs}; the synthesizer runs at {acoustics.FS} Hz")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = _feature_files(args.features_dir, "features")
    for path in paths:
        feat = read_features(path)
        wav = acoustics.synthesize(feat, args.fs)
        write_wav(out / f"{path.stem}.wav", wav.clip(-1.0, 1.0), args.fs)
    print(f"synthesized {len(paths)} utterances -> {out}")
    return 0


def _scenario_assets(args, needed):
    features = {}
    paths = {}
    for role in needed:
        directory = getattr(args, f"{role}_dir")
        if not directory:
            raise ConfigError(f"scenario {args.name!r} requires --{role}-dir")
        files = _feature_files(directory, role)
        features[role] = [read_features(p) for p in files]
        paths[role] = {p.stem: p for p in files}
    return ScenarioAssets(features=features, paths=paths)


def _cmd_scenario(args):
    train_role, test_role = SCENARIOS[args.name]
    assets = _scenario_assets(args, {test_role})
    rows = run_scenario(args.name, assets, args.out_dir)
    print(f"scenario {args.name}: {len(rows)} waveforms -> {args.out_dir}")
    return 0


def _cmd_mcd(args):
    value = mcd_set(_load_set(args.set_a, "set-a"), _load_set(args.set_b, "set-b"))
    print(f"mcd_db={value:.6f}")
    return 0


def _cmd_plane(args):
    sets = {}
    for role in _ROLES:
        directory = getattr(args, f"{role}_dir")
        if directory:
            sets[role] = _load_set(directory, role)
    result = mcd_plane(**sets)
    for i in range(len(result.labels)):
        for j in range(i + 1, len(result.labels)):
            print(
                f"mcd[{result.labels[i]},{result.labels[j]}]="
                f"{result.distances[i, j]:.3f}"
            )
    print(f"stress={result.stress:.6f}")
    tsv, svg = args.tsv, args.svg
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tsv = tsv or out / "plane.tsv"
        svg = svg or out / "plane.svg"
    if tsv:
        write_plane_tsv(result, tsv)
    if svg:
        write_plane_svg(result, svg)
    return 0


def _cmd_fixture(args):
    paths = fixture.make_corpus(args.out_dir, n_utterances=args.count, seed=args.seed)
    print(f"wrote {len(paths)} utterances to {args.out_dir}")
    return 0


def _cmd_end_to_end(args):
    if args.dry_run:
        for step, stage in enumerate(END_TO_END_STAGES, 1):
            print(f"[plan] {step}. {stage}")
        return 0
    summary = run_end_to_end(
        args.wav_dir,
        args.work_dir,
        train_config=_train_config(args),
        degrade_config=degrade.DegradeConfig(seed=args.sim_seed),
    )
    report = Path(summary["report_path"]).read_text(encoding="utf-8")
    for line in report.rstrip("\n").splitlines():
        print(f"[report] {line}")
    print(f"[report] written to {summary['report_path']}")
    return 0


_HANDLERS = {
    "extract": _cmd_extract,
    "simulate": _cmd_simulate,
    "manifest": _cmd_manifest,
    "train": _cmd_train,
    "pseudo": _cmd_pseudo,
    "enhance": _cmd_enhance,
    "synth": _cmd_synth,
    "scenario": _cmd_scenario,
    "mcd": _cmd_mcd,
    "plane": _cmd_plane,
    "fixture": _cmd_fixture,
    "end-to-end": _cmd_end_to_end,
}


def _run(argv):
    parser, parsers = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        args = _apply_config(parser, parsers[args.command], argv, args)
    _echo(args)
    return _HANDLERS[args.command](args)


def main(argv=None):
    try:
        return _run(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return 0 if code is None else int(code)
    except (InputError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CycleVCError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
