"""Command-line surface: ``scorewave <command>``.

Commands
    distort       degrade a manifest of WAV files into (clean, distorted)
                  pairs plus a replayable JSON-lines chain log
    train         DSM-train the toy score network on a GMM task or on
                  amplitude samples from a WAV corpus; writes a checkpoint
                  and a loss trace
    enhance       conditional denoising of a WAV's samples through the
                  annealed Langevin sampler (analytic posterior oracle by
                  default, or a trained checkpoint)
    eval          objective metrics for (reference, estimate) WAV pairs
    sweep         quality-vs-real-time-factor grid over (N, epsilon)
    sample-prior  draw samples from the configured mixture prior

Global flags: ``--config FILE`` (plain ``key = value`` lines, ``#``
comments, dotted section keys, unknown keys rejected), ``--seed N``
(overrides the config seed), ``--jobs N`` (fan-out across independent
files; commands that measure wall time stay sequential).

Every command echoes its fully-resolved configuration and seed as the
first line of its JSON-lines log, so any output can be replayed from its
log alone.

Exit codes: 0 success; 2 configuration error; 3 I/O error (including
per-file distortion failures); 4 numeric failure (non-finite loss or
iterate, undefined metric).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .diffusion import langevin_sample
from .distort import (
    ChainConfig,
    DistortionSpec,
    SoftClipWarning,
    apply_chain,
    sample_chain,
)
from .errors import AudioError, ConfigError, NumericError
from .metrics import evaluate_pair
from .oracle import GmmPrior, posterior_prior, perturbed_score
from .oracle import sample as sample_prior
from .schedule import NoiseSchedule, denoise_only_plan, make_plan
from .scorenet import (
    OptimizerConfig,
    ScoreNet,
    ScoreNetConfig,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .signal import Signal, read_wav, resample, write_wav

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


# ---------------------------------------------------------------------------
# Configuration


def _p_int(s):
    return int(s)


def _p_float(s):
    return float(s)


def _p_str(s):
    return str(s)


def _p_ints(s):
    return tuple(int(v) for v in str(s).split(",") if v.strip())


def _p_floats(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _p_resolutions(s):
    out = []
    for item in str(s).split(","):
        if not item.strip():
            continue
        frame, hop = item.split(":")
        out.append((int(frame), int(hop)))
    return tuple(out)


def _p_weights(s):
    out = {}
    for item in str(s).split(","):
        if not item.strip():
            continue
        name, w = item.split(":")
        out[name.strip()] = float(w)
    return out


# key -> (parser, default). Values given in config files go through the
# parser; defaults are stored already parsed.
CONFIG_KEYS = {
    "seed": (_p_int, 0),
    "schedule.sigma_min": (_p_float, 5e-4),
    "schedule.sigma_max": (_p_float, 5.0),
    "sampling.n_steps": (_p_int, 64),
    "sampling.epsilon": (_p_float, 2.3),
    "sampling.n_realizations": (_p_int, 1),
    "model.hidden": (_p_ints, (64, 64)),
    "model.n_pairs": (_p_int, 32),
    "model.embed_dim": (_p_int, 256),
    "optimizer.peak_lr": (_p_float, 2e-4),
    "optimizer.warmup_frac": (_p_float, 0.05),
    "optimizer.weight_decay": (_p_float, 0.01),
    "optimizer.total_steps": (_p_int, 0),  # 0: use train.iterations
    "train.iterations": (_p_int, 2000),
    "train.batch_size": (_p_int, 128),
    "train.gmm_weights": (_p_floats, (0.3, 0.7)),
    "train.gmm_means": (_p_floats, (-2.0, 2.0)),
    "train.gmm_variances": (_p_floats, (0.1, 0.1)),
    "enhance.noise_std": (_p_float, 1.0),
    "distort.count_probs": (_p_floats, (0.35, 0.45, 0.15, 0.04, 0.01)),
    "distort.clip_level": (_p_float, 4.0),
    "distort.noise_dir": (_p_str, ""),
    "distort.rir_dir": (_p_str, ""),
    "distort.weights": (_p_weights, {}),
    "metrics.resolutions": (_p_resolutions, ((512, 128), (1024, 256), (2048, 512))),
}


class ToolkitConfig:
    """Resolved configuration: defaults overridden by a config file."""

    def __init__(self, values: dict):
        self._values = values

    def __getitem__(self, key: str):
        return self._values[key]

    def to_dict(self) -> dict:
        out = {}
        for key in sorted(self._values):
            value = self._values[key]
            if isinstance(value, tuple):
                value = list(list(v) if isinstance(v, tuple) else v for v in value)
            out[key] = value
        return out


def load_config(path: str | None) -> ToolkitConfig:
    values = {key: default for key, (_, default) in CONFIG_KEYS.items()}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            parser, _ = CONFIG_KEYS[key]
            try:
                values[key] = parser(value)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return ToolkitConfig(values)


def _prior_from(cfg: ToolkitConfig) -> GmmPrior:
    return GmmPrior(
        weights=np.array(cfg["train.gmm_weights"]),
        means=np.array(cfg["train.gmm_means"]),
        variances=np.array(cfg["train.gmm_variances"]),
    )


def _schedule_from(cfg: ToolkitConfig) -> NoiseSchedule:
    return NoiseSchedule(sigma_min=cfg["schedule.sigma_min"],
                         sigma_max=cfg["schedule.sigma_max"])


def _plan_from(schedule: NoiseSchedule, n_steps: int, epsilon: float):
    if n_steps == 1:
        return denoise_only_plan(schedule)
    return make_plan(schedule, n_steps, epsilon)


def _chain_config_from(cfg: ToolkitConfig, rate: int) -> ChainConfig:
    kwargs = {
        "count_probs": tuple(cfg["distort.count_probs"]),
        "clip_level": cfg["distort.clip_level"],
        "noise_pool": _load_pool(cfg["distort.noise_dir"], rate),
        "rir_pool": _load_pool(cfg["distort.rir_dir"], rate),
    }
    if cfg["distort.weights"]:
        kwargs["weights"] = dict(cfg["distort.weights"])
    return ChainConfig(**kwargs)


def _load_pool(directory: str, rate: int) -> tuple:
    if not directory:
        return ()
    entries = []
    for path in sorted(Path(directory).glob("*.wav")):
        sig = read_wav(path, downmix=True)
        if sig.sample_rate != rate:
            sig = resample(sig, rate)
        entries.append(sig.samples)
    return tuple(entries)


def _header(command: str, cfg: ToolkitConfig, seed: int) -> dict:
    return {"command": command, "seed": seed, "config": cfg.to_dict()}


def _write_jsonl(path, lines) -> None:
    with open(path, "w") as fh:
        for line in lines:
            fh.write(json.dumps(line) + "\n")


# ---------------------------------------------------------------------------
# Enhancement core (shared by enhance and sweep)


def _batched_posterior_score(prior: GmmPrior, observed: np.ndarray, noise_std: float):
    """Score function for a batch of independent per-sample posteriors.

    Row i of the batch carries its own conjugate posterior p(x | y_i) for
    y_i = x + noise_std * n under the mixture prior; the returned callable
    evaluates all their perturbed scores in one shot. Equivalent to calling
    posterior_prior + perturbed_score per sample (cross-checked in tests),
    just vectorized.
    """
    if prior.dim != 1:
        raise ConfigError("oracle enhancement needs a 1-D prior")
    y = np.asarray(observed, dtype=np.float64).ravel()[:, None]  # (n, 1)
    mu = prior.means[:, 0][None, :]  # (1, k)
    v = prior.variances[None, :]
    s2 = float(noise_std) ** 2
    post_var = (v * s2 / (v + s2))  # (1, k)
    post_mean = (mu * s2 + y * v) / (v + s2)  # (n, k)
    log_w = (prior.log_weights[None, :]
             - 0.5 * np.log(2.0 * np.pi * (v + s2))
             - 0.5 * (y - mu) ** 2 / (v + s2))
    log_w = log_w - log_w.max(axis=1, keepdims=True)
    log_w = log_w - np.log(np.exp(log_w).sum(axis=1, keepdims=True))

    def score_fn(x, c, sigma):
        var = post_var + float(sigma) ** 2  # (1, k)
        z = x - post_mean  # (n, k) via broadcast of (n, 1)
        t = log_w - 0.5 * np.log(2.0 * np.pi * var) - 0.5 * z**2 / var
        t = t - t.max(axis=1, keepdims=True)
        r = np.exp(t)
        r /= r.sum(axis=1, keepdims=True)
        return np.sum(r * (-z / var), axis=1, keepdims=True)

    return score_fn


def _enhance_samples(observed: np.ndarray, cfg: ToolkitConfig, checkpoint: str | None,
                     n_steps: int, epsilon: float, rng) -> np.ndarray:
    plan = _plan_from(_schedule_from(cfg), n_steps, epsilon)
    n = observed.size
    if checkpoint is not None:
        net, _ = load_checkpoint(checkpoint)
        if net.config.dim_x != 1:
            raise ConfigError(
                f"enhance needs a dim_x=1 checkpoint, got dim_x={net.config.dim_x}")
        if net.config.dim_c not in (0, 1):
            raise ConfigError(
                f"enhance needs dim_c in {{0, 1}}, got dim_c={net.config.dim_c}")
        c = observed[:, None] if net.config.dim_c == 1 else None
        score_fn = net.forward
    else:
        c = None
        score_fn = _batched_posterior_score(prior=_prior_from(cfg), observed=observed,
                                            noise_std=cfg["enhance.noise_std"])
    n_realizations = cfg["sampling.n_realizations"]
    if n_realizations < 1:
        raise ConfigError(f"n_realizations must be >= 1, got {n_realizations}")
    acc = np.zeros((n, 1))
    for child in rng.spawn(n_realizations):
        acc += langevin_sample(score_fn, c, plan, dim=1, rng=child, n_samples=n)
    return (acc / n_realizations).ravel()


# ---------------------------------------------------------------------------
# Commands


def cmd_distort(args, cfg: ToolkitConfig, seed: int, jobs: int) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = Path(args.log) if args.log else out_dir / "distort_log.jsonl"
    try:
        manifest = [line.strip() for line in Path(args.manifest).read_text().splitlines()
                    if line.strip() and not line.strip().startswith("#")]
    except OSError as exc:
        raise AudioError(f"cannot read manifest {args.manifest}: {exc}") from exc

    chain_cfg_cache: dict[int, ChainConfig] = {}

    def process(item):
        index, path = item
        try:
            signal = read_wav(path, downmix=True)
            rate = signal.sample_rate
            if rate not in chain_cfg_cache:
                chain_cfg_cache[rate] = _chain_config_from(cfg, rate)
            chain_cfg = chain_cfg_cache[rate]
            rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
            chain = sample_chain(chain_cfg, rng)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                pair = apply_chain(signal, chain, chain_cfg)
            clipped = any(issubclass(w.category, SoftClipWarning) for w in caught)
            stem = f"{index:05d}_{Path(path).stem}"
            clean_path = out_dir / f"{stem}.clean.wav"
            dist_path = out_dir / f"{stem}.distorted.wav"
            write_wav(clean_path, pair.clean, encoding="float32")
            write_wav(dist_path, pair.distorted, encoding="float32")
            return {
                "input": str(path),
                "clean": str(clean_path),
                "distorted": str(dist_path),
                "file_index": index,
                "offset": pair.offset,
                "clipped": clipped,
                "chain": [spec.to_dict() for spec in chain],
            }
        except Exception as exc:  # logged per file, surfaced via exit code
            return {"input": str(path), "file_index": index, "error": str(exc)}

    if jobs > 1 and manifest:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(process, enumerate(manifest)))
    else:
        results = [process(item) for item in enumerate(manifest)]

    _write_jsonl(log_path, [_header("distort", cfg, seed), *results])
    failures = [r for r in results if "error" in r]
    print(f"distort: {len(results) - len(failures)} pair(s) written to {out_dir}, "
          f"{len(failures)} failure(s); log: {log_path}")
    for failure in failures:
        print(f"  failed: {failure['input']}: {failure['error']}", file=sys.stderr)
    return EXIT_IO if failures else EXIT_OK


def _corpus_sampler(manifest_path: str):
    paths = [line.strip() for line in Path(manifest_path).read_text().splitlines()
             if line.strip() and not line.strip().startswith("#")]
    if not paths:
        raise ConfigError(f"training manifest {manifest_path} lists no files")
    pool = np.concatenate([read_wav(p, downmix=True).samples for p in paths])

    def draw(rng, batch_size):
        idx = rng.integers(0, pool.size, size=batch_size)
        return pool[idx][:, None], None

    return draw


def cmd_train(args, cfg: ToolkitConfig, seed: int) -> int:
    iterations = cfg["train.iterations"] if args.iterations is None else args.iterations
    schedule = _schedule_from(cfg)
    rng = np.random.default_rng(seed)

    if args.resume:
        net, opt_state = load_checkpoint(args.resume)
        if opt_state is None:
            raise ConfigError(f"{args.resume} has no optimizer state; cannot resume")
        opt_config = opt_state.config
        rng_state_path = Path(args.resume).with_suffix(Path(args.resume).suffix + ".rng.json")
        try:
            rng.bit_generator.state = json.loads(rng_state_path.read_text())
        except OSError as exc:
            raise ConfigError(f"missing rng sidecar for resume: {exc}") from exc
    else:
        net = ScoreNet(
            ScoreNetConfig(
                dim_x=1,
                dim_c=0,
                hidden=tuple(cfg["model.hidden"]),
                n_pairs=cfg["model.n_pairs"],
                embed_dim=cfg["model.embed_dim"],
            ),
            rng,
        )
        opt_state = None
        total = cfg["optimizer.total_steps"] or max(iterations, 1)
        opt_config = OptimizerConfig(
            total_steps=total,
            peak_lr=cfg["optimizer.peak_lr"],
            warmup_frac=cfg["optimizer.warmup_frac"],
            weight_decay=cfg["optimizer.weight_decay"],
        )

    data = _prior_from(cfg) if args.data == "gmm" else _corpus_sampler(args.data)

    lines = [_header("train", cfg, seed)]
    if iterations > 0:
        trace = train(net, data, schedule, opt_config, iterations,
                      cfg["train.batch_size"], rng, opt_state=opt_state)
        lines += [{"iteration": i, "loss": float(loss)} for i, loss in enumerate(trace)]
        lines.append({"final_loss": float(trace[-1]), "iterations": iterations})

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out, net, net.opt_state)
    rng_sidecar = out.with_suffix(out.suffix + ".rng.json")
    rng_sidecar.write_text(json.dumps(rng.bit_generator.state))
    trace_path = Path(args.trace) if args.trace else out.with_suffix(out.suffix + ".trace.jsonl")
    _write_jsonl(trace_path, lines)
    print(f"train: {iterations} iteration(s); checkpoint: {out}; trace: {trace_path}")
    return EXIT_OK


def cmd_enhance(args, cfg: ToolkitConfig, seed: int) -> int:
    noisy = read_wav(args.input, downmix=True)
    rng = np.random.default_rng(seed)
    enhanced = _enhance_samples(noisy.samples, cfg, args.checkpoint,
                                cfg["sampling.n_steps"], cfg["sampling.epsilon"], rng)
    out_sig = Signal(samples=enhanced, sample_rate=noisy.sample_rate)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    write_wav(args.output, out_sig, encoding="float32")

    lines = [_header("enhance", cfg, seed)]
    record = {"input": str(args.input), "output": str(args.output),
              "n_steps": cfg["sampling.n_steps"], "epsilon": cfg["sampling.epsilon"],
              "n_realizations": cfg["sampling.n_realizations"]}
    if args.reference:
        ref = read_wav(args.reference, downmix=True)
        if ref.sample_rate != noisy.sample_rate:
            raise ConfigError(
                f"reference rate {ref.sample_rate} != input rate {noisy.sample_rate}")
        if len(ref) != len(noisy):
            raise ConfigError(f"reference length {len(ref)} != input length {len(noisy)}")
        report = evaluate_pair(ref.samples, enhanced,
                               resolutions=tuple(map(tuple, cfg["metrics.resolutions"])))
        record["metrics"] = report.to_dict()
        record["input_snr"] = evaluate_pair(ref.samples, noisy.samples).snr
        print(f"enhance: snr {record['input_snr']:.2f} dB -> {report.snr:.2f} dB")
    else:
        print(f"enhance: wrote {args.output}")
    lines.append(record)
    if args.log:
        _write_jsonl(args.log, lines)
    return EXIT_OK


def cmd_eval(args, cfg: ToolkitConfig, seed: int, jobs: int) -> int:
    if args.pairs:
        pairs = []
        for lineno, raw in enumerate(Path(args.pairs).read_text().splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ConfigError(f"{args.pairs}:{lineno}: expected 'ref est', got {raw!r}")
            pairs.append(tuple(parts))
    elif args.reference and args.estimate:
        pairs = [(args.reference, args.estimate)]
    else:
        raise ConfigError("eval needs either --pairs or both --reference and --estimate")

    resolutions = tuple(map(tuple, cfg["metrics.resolutions"]))

    def process(pair):
        ref_path, est_path = pair
        ref = read_wav(ref_path, downmix=True)
        est = read_wav(est_path, downmix=True)
        if est.sample_rate != ref.sample_rate:
            est = resample(est, ref.sample_rate)
        n = min(len(ref), len(est))
        report = evaluate_pair(ref.samples[:n], est.samples[:n], resolutions=resolutions)
        return {"reference": ref_path, "estimate": est_path, **report.to_dict()}

    if jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(process, pairs))
    else:
        rows = [process(pair) for pair in pairs]

    columns = ("snr", "si_snr", "lsd", "mrstft")
    print(f"{'reference':30s} {'estimate':30s} " + " ".join(f"{c:>8s}" for c in columns))
    for row in rows:
        print(f"{Path(row['reference']).name:30s} {Path(row['estimate']).name:30s} "
              + " ".join(f"{row[c]:8.3f}" for c in columns))
    if args.out:
        _write_jsonl(args.out, [_header("eval", cfg, seed), *rows])
    return EXIT_OK


def cmd_sweep(args, cfg: ToolkitConfig, seed: int) -> int:
    noisy = read_wav(args.input, downmix=True)
    reference = read_wav(args.reference, downmix=True) if args.reference else None
    duration = len(noisy) / noisy.sample_rate
    n_list = _p_ints(args.n_list)
    eps_list = _p_floats(args.eps_list)
    if not n_list or not eps_list:
        raise ConfigError("sweep needs non-empty --n-list and --eps-list")

    rows = []
    for n_steps in n_list:
        for epsilon in eps_list:
            rng = np.random.default_rng(np.random.SeedSequence([seed, n_steps]))
            start = time.perf_counter()
            enhanced = _enhance_samples(noisy.samples, cfg, args.checkpoint,
                                        n_steps, epsilon, rng)
            elapsed = time.perf_counter() - start
            row = {"n_steps": n_steps, "epsilon": epsilon,
                   "rtf": elapsed / duration, "seconds": elapsed}
            if reference is not None:
                report = evaluate_pair(reference.samples, enhanced)
                row["snr"] = report.snr
                row["mrstft"] = report.mrstft
            rows.append(row)

    print(f"{'N':>4s} {'eps':>5s} {'rtf':>10s}"
          + (f" {'snr':>8s} {'mrstft':>8s}" if reference else ""))
    for row in rows:
        line = f"{row['n_steps']:4d} {row['epsilon']:5.2f} {row['rtf']:10.5f}"
        if reference is not None:
            line += f" {row['snr']:8.3f} {row['mrstft']:8.3f}"
        print(line)
    if args.out:
        _write_jsonl(args.out, [_header("sweep", cfg, seed), *rows])
    return EXIT_OK


def cmd_sample_prior(args, cfg: ToolkitConfig, seed: int) -> int:
    prior = _prior_from(cfg)
    rng = np.random.default_rng(seed)
    if args.method == "direct":
        draws = sample_prior(prior, args.n, rng)
    else:
        plan = _plan_from(_schedule_from(cfg), cfg["sampling.n_steps"],
                          cfg["sampling.epsilon"])

        def score_fn(x, c, sigma):
            return perturbed_score(prior, x, sigma)

        draws = langevin_sample(score_fn, None, plan, dim=prior.dim, rng=rng,
                                n_samples=args.n)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(out, draws, fmt="%.17g")
    log_path = args.log or str(out) + ".log.jsonl"
    _write_jsonl(log_path, [_header("sample-prior", cfg, seed),
                            {"n": args.n, "method": args.method, "out": str(out)}])
    print(f"sample-prior: {args.n} draw(s) ({args.method}) -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and entry point


def build_parser() -> argparse.ArgumentParser:
    # Global flags live in a parent parser with SUPPRESS defaults so they are
    # accepted both before and after the subcommand without the subparser's
    # default clobbering a value parsed by the main parser.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="key=value config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override the config seed")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                        help="parallel fan-out over independent files")

    parser = argparse.ArgumentParser(
        prog="scorewave",
        description="Score-diffusion toolkit: distortion synthesis, toy training, "
                    "annealed Langevin enhancement, metrics, and speed-quality sweeps.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distort", parents=[common],
                       help="degrade a manifest of WAVs into pairs")
    p.add_argument("manifest", help="text file: one input WAV path per line")
    p.add_argument("out_dir", help="directory for paired WAVs and the chain log")
    p.add_argument("--log", default=None, help="chain log path (default: out_dir/distort_log.jsonl)")

    p = sub.add_parser("train", parents=[common], help="train the toy score network")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--data", default="gmm",
                   help="'gmm' (config prior) or a manifest of WAVs")
    p.add_argument("--iterations", type=int, default=None,
                   help="override train.iterations")
    p.add_argument("--resume", default=None, help="checkpoint to continue from")
    p.add_argument("--trace", default=None, help="loss trace path")

    p = sub.add_parser("enhance", parents=[common], help="denoise a WAV's samples")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--checkpoint", default=None,
                   help="trained checkpoint (default: analytic posterior oracle)")
    p.add_argument("--reference", default=None, help="clean WAV for metrics")
    p.add_argument("--log", default=None, help="JSON-lines log path")

    p = sub.add_parser("eval", parents=[common], help="objective metrics for WAV pairs")
    p.add_argument("--pairs", default=None, help="manifest: 'reference estimate' per line")
    p.add_argument("--reference", default=None)
    p.add_argument("--estimate", default=None)
    p.add_argument("--out", default=None, help="JSON-lines output path")

    p = sub.add_parser("sweep", parents=[common], help="quality vs real-time factor over (N, epsilon)")
    p.add_argument("--input", required=True)
    p.add_argument("--reference", default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--n-list", default="1,2,4,8,16,32,64")
    p.add_argument("--eps-list", default="1.5,2.3,3.0")
    p.add_argument("--out", default=None, help="JSON-lines output path")

    p = sub.add_parser("sample-prior", parents=[common], help="draw from the configured mixture prior")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--method", choices=("direct", "langevin"), default="direct")
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # The shared flags use SUPPRESS defaults (so a value parsed before
        # the subcommand survives the subparser pass); absent means default.
        cfg = load_config(getattr(args, "config", None))
        seed = getattr(args, "seed", None)
        if seed is None:
            seed = cfg["seed"]
        jobs = max(1, getattr(args, "jobs", 1))
        if args.command == "distort":
            return cmd_distort(args, cfg, seed, jobs)
        if args.command == "train":
            return cmd_train(args, cfg, seed)
        if args.command == "enhance":
            return cmd_enhance(args, cfg, seed)
        if args.command == "eval":
            return cmd_eval(args, cfg, seed, jobs)
        if args.command == "sweep":
            return cmd_sweep(args, cfg, seed)
        if args.command == "sample-prior":
            return cmd_sample_prior(args, cfg, seed)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"scorewave: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AudioError, OSError) as exc:
        print(f"scorewave: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"scorewave: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
