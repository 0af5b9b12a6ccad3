"""Command-line experiment runner.

    neuromorph run --config exp.json [--seed N] [--out DIR]
    neuromorph compare A B [--tolerance X]

Exit codes: 0 success, 1 tolerance breach, 2 config/usage error, 3 runtime error.
Logs go to stderr; results only to files in the output directory (``compare``
prints its JSON report on stdout).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import attention, codec, intra, ssm
from .config import ConfigError, ExperimentConfig, load_config
from .errors import NeuromorphError
from .ledger import OpLedger, energy_proxy
from .rng import derive_rng
from .spikes import SpikeTrain
from .sweep import BernoulliRateTask, sweep_csv, tradeoff_sweep
from .training import SurrogateSpec, train_char_lm, training_log_csv

log = logging.getLogger("neuromorph")

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(NeuromorphError):
    pass


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def matrix_csv(m, prefix: str = "n") -> str:
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    lines = [",".join(f"{prefix}{j + 1}" for j in range(m.shape[1]))]
    lines += [",".join(repr(float(x)) for x in row) for row in m]
    return "\n".join(lines) + "\n"


def ledger_json(ledger: OpLedger) -> str:
    doc = {
        "totals": ledger.totals(),
        "energy_proxy": energy_proxy(ledger),
        "phases": {p: ledger.phase(p) for p in sorted(ledger.phases)},
        "events": dict(sorted(ledger.events.items())),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _codec_spec(cfg: ExperimentConfig, default_t: int = 16) -> codec.EncodingSpec:
    c = cfg.codec or {}
    return codec.EncodingSpec(c.get("scheme", "rate-unary"), c.get("t_steps", default_t),
                              c.get("levels", 1), cfg.seed)


def run_encode(cfg: ExperimentConfig) -> dict[str, str]:
    spec = _codec_spec(cfg)
    train = codec.encode_vector(cfg.input["values"], spec, derive_rng(cfg.seed, 0))
    return {"train.txt": train.to_text()}


def run_intra(cfg: ExperimentConfig) -> dict[str, str]:
    m = cfg.model
    spec = _codec_spec(cfg)
    net = intra.build_network(m["dims"], m.get("alpha", 0.9), m.get("gamma", 1.0),
                              m.get("mode", "deterministic-binary"), spec, cfg.seed, m.get("reset", True))
    if "tokens" in cfg.input:
        tokens = np.asarray(cfg.input["tokens"], dtype=np.float64).T
    else:
        n = cfg.input.get("n_tokens", 4)
        tokens = derive_rng(cfg.seed, 1).random((net.d_in, n))
    ledger = OpLedger()
    y = intra.snn_forward_matrix(tokens, net, ledger, derive_rng(cfg.seed, 2))
    return {"output.csv": matrix_csv(y), "ledger.json": ledger_json(ledger),
            "network.ckpt": intra.save_checkpoint(net)}


def _tokens(cfg: ExperimentConfig, d_z: int) -> np.ndarray:
    n = cfg.input.get("n_tokens", 8)
    return derive_rng(cfg.seed, 1).normal(size=(d_z, n))


def run_ssm(cfg: ExperimentConfig) -> dict[str, str]:
    m = cfg.model
    bundle = ssm.QkvBundle.random(m["d_z"], m["d_k"], m["d_v"], seed=cfg.seed)
    g = m.get("gates", {})
    if g.get("mode", "constant") == "selective":
        w_delta = derive_rng(cfg.seed, 3).normal(size=m["d_z"]) / math.sqrt(m["d_z"])
        sched = ssm.GateSchedule.selective(w_delta, g.get("c_delta", 0.0))
    else:
        sched = ssm.GateSchedule.constant(g.get("a", 1.0), g.get("b", 1.0))
    z = _tokens(cfg, m["d_z"])
    ledger = OpLedger()
    if "spiking" in m:
        sp = m["spiking"]
        y = ssm.spiking_ssm_forward(z, bundle, sched, sp.get("mode", "probabilistic"),
                                    sp.get("gamma", 0.0), derive_rng(cfg.seed, 2), ledger)
    else:
        y = ssm.ssm_forward(z, bundle, sched, ledger)
    return {"output.csv": matrix_csv(y), "ledger.json": ledger_json(ledger)}


def run_attn(cfg: ExperimentConfig) -> dict[str, str]:
    m = cfg.model
    bundle = ssm.QkvBundle.random(m["d_z"], m["d_k"], m["d_v"], seed=cfg.seed)
    z = _tokens(cfg, m["d_z"])
    mask = attention.AttentionMask.of_kind(m.get("mask", "full"), z.shape[1])
    variant = m.get("variant", "exact")
    ledger = OpLedger()
    out = {}
    if variant == "exact":
        v, k, q = ssm.qkv_project(z, bundle)
        scores = attention.attention_scores(q, k, mask)
        y = attention.attend(scores, v)
        out["scores.csv"] = matrix_csv(scores)
        attention.attention_forward(z, bundle, mask, ledger)
    else:
        y, scores = attention.spiking_attention_forward(
            z, bundle, variant, _codec_spec(cfg, 64), mask, cfg.seed, ledger,
            m.get("softmax", True), m.get("alpha", 1.0), m.get("gamma", 0.5), return_scores=True)
        out["scores.csv"] = matrix_csv(scores)
    out["output.csv"] = matrix_csv(y)
    out["ledger.json"] = ledger_json(ledger)
    return out


def run_train(cfg: ExperimentConfig) -> dict[str, str]:
    m = cfg.model or {}
    if "corpus" in cfg.input:
        text = Path(cfg.input["corpus"]).read_text(encoding="utf-8")
    else:
        text = cfg.input.get("text", "hello neuromorphic world. " * 4)
    s = m.get("surrogate", {})
    model, vocab, steps = train_char_lm(
        text, steps=m.get("steps", 200), lr=m.get("lr", 0.5), d_emb=m.get("d_emb", 8),
        hidden=tuple(m.get("hidden", (32,))), alpha=m.get("alpha", 0.5),
        threshold=m.get("threshold", 0.5),
        surrogate=SurrogateSpec(s.get("kind", "sigmoid"), s.get("beta", 4.0)), seed=cfg.seed)
    summary = {"final_loss": steps[-1].loss, "initial_loss": steps[0].loss,
               "uniform_baseline": math.log(len(vocab)), "vocab_size": len(vocab),
               "n_params": model.n_params()}
    return {"train_log.csv": training_log_csv(steps), "vocab.txt": vocab.to_file_text(),
            "summary.json": json.dumps(summary, indent=2, sort_keys=True) + "\n"}


def run_sweep(cfg: ExperimentConfig) -> dict[str, str]:
    m = cfg.model
    task = BernoulliRateTask(tuple(m.get("values", BernoulliRateTask().values)))
    rows = tradeoff_sweep(task, m["t_values"], m.get("trials", 20), cfg.seed, workers=m.get("workers", 1))
    return {"sweep.csv": sweep_csv(rows)}


def run_check(cfg: ExperimentConfig) -> dict[str, str]:
    from .experiments import run_checks

    results = run_checks((cfg.model or {}).get("checks"), cfg.seed)
    for name, res in results.items():
        log.info("%s %s", "PASS" if res["passed"] else "FAIL", name)
    return {"checks.json": json.dumps(results, indent=2, sort_keys=True) + "\n"}


RUNNERS = {"encode": run_encode, "intra": run_intra, "ssm": run_ssm, "attn": run_attn,
           "train": run_train, "sweep": run_sweep, "check": run_check}


def run(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Execute one experiment and write its artifacts; returns the written paths."""
    log.info("running task %s with seed %d", cfg.task, cfg.seed)
    artifacts = RUNNERS[cfg.task](cfg)
    paths = []
    for name, text in sorted(artifacts.items()):
        path = out_dir / name
        write_atomic(path, text)
        paths.append(path)
        log.info("wrote %s", path)
    return paths


def read_table(path: Path) -> tuple[str, list[str], np.ndarray]:
    """Load a CSV (with header) or a spike-train file as (kind, columns, matrix)."""
    text = path.read_text(encoding="utf-8")
    first = text.splitlines()[0] if text else ""
    if path.suffix == ".csv" or "," in first:
        rows = [ln.split(",") for ln in text.splitlines() if ln.strip()]
        header, body = rows[0], rows[1:]
        try:
            data = np.array([[float(x) for x in r] for r in body], dtype=np.float64)
        except ValueError:
            raise UsageError(f"{path}: non-numeric CSV body") from None
        if body and any(len(r) != len(header) for r in body):
            raise UsageError(f"{path}: ragged CSV")
        return "csv", header, data.reshape(len(body), len(header))
    try:
        train = SpikeTrain.from_text(text)
    except NeuromorphError as exc:
        raise UsageError(f"{path}: not a spike train ({exc})") from None
    return f"spikes:{train.levels}", [f"d{j + 1}" for j in range(train.D)], train.data.astype(np.float64)


def compare(path_a: Path, path_b: Path, tolerance: float = 0.0) -> tuple[dict, bool]:
    kind_a, cols_a, a = read_table(path_a)
    kind_b, cols_b, b = read_table(path_b)
    if kind_a != kind_b:
        raise UsageError(f"artifact kinds differ: {kind_a} vs {kind_b}")
    if a.shape != b.shape or cols_a != cols_b:
        raise UsageError(f"shapes differ: {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    scale = np.maximum(np.abs(a), np.abs(b))
    rel = np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0)
    per_col = {
        c: {"max_abs": float(diff[:, j].max(initial=0.0)), "max_rel": float(rel[:, j].max(initial=0.0))}
        for j, c in enumerate(cols_a)
    }
    max_abs = float(diff.max(initial=0.0))
    report = {"kind": kind_a, "shape": list(a.shape), "max_abs": max_abs,
              "max_rel": float(rel.max(initial=0.0)), "tolerance": tolerance, "columns": per_col}
    return report, max_abs <= tolerance


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neuromorph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("--config", required=True, type=Path)
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--out", type=Path, help="output directory (default: config 'out' or ./out)")
    p_cmp = sub.add_parser("compare", help="diff two artifacts column by column")
    p_cmp.add_argument("run_a", type=Path)
    p_cmp.add_argument("run_b", type=Path)
    p_cmp.add_argument("--tolerance", type=float, default=0.0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            for problem in exc.problems:
                print(f"config error: {problem}", file=sys.stderr)
            return EXIT_CONFIG
        if args.seed is not None:
            cfg.seed = args.seed
        out_dir = args.out or Path(cfg.out or "out")
        try:
            run(cfg, out_dir)
        except (NeuromorphError, OSError, ValueError) as exc:
            print(f"runtime error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        return EXIT_OK
    try:
        report, ok = compare(args.run_a, args.run_b, args.tolerance)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if ok else EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
