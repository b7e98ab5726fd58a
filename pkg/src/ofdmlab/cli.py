"""Command-line front end.

Subcommands: train, ber, ccdf, psd, acpr-obo, gradcheck. Exit codes:
0 success, 1 configuration error, 2 numeric or validation failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, load_config, with_overrides
from .errors import ConfigError, NumericError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofdmlab",
        description="MIMO-OFDM waveform experiments: training, BER, PAPR CCDF, spectra.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output file override")
        p.add_argument("--frames", type=int, default=None, help="frames per point override")
        p.add_argument("--workers", type=int, default=None, help="worker thread count")

    add_common(sub.add_parser("train", help="train the autoencoder system"))
    add_common(sub.add_parser("ber", help="bit error rate over the peak-SNR grid"))
    add_common(sub.add_parser("ccdf", help="PAPR exceedance curve"))
    add_common(sub.add_parser("psd", help="averaged amplifier-output spectrum"))
    acpr_p = sub.add_parser("acpr-obo", help="ACPR/OBO table over several configs")
    acpr_p.add_argument("--config", required=True, nargs="+",
                        help="one or more experiment config files")
    acpr_p.add_argument("--seed", type=int, default=None)
    acpr_p.add_argument("--out", default=None)
    acpr_p.add_argument("--frames", type=int, default=None)
    acpr_p.add_argument("--workers", type=int, default=None)
    grad_p = sub.add_parser("gradcheck", help="finite-difference verification")
    grad_p.add_argument("--seed", type=int, default=0)
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    return with_overrides(cfg, seed=args.seed, frames=args.frames,
                          out=args.out, workers=args.workers)


def _cmd_train(args) -> int:
    from .cae.training import TrainConfig, train
    cfg = _load(args)
    t = cfg.train
    s = cfg.system
    taps = 0 if cfg.channel.profile == "awgn" else cfg.channel.taps
    train_cfg = TrainConfig(
        n_tx=s.n_tx, n_rx=s.n_rx, n_subcarriers=s.n_subcarriers,
        oversample=s.oversample, mod_order=s.mod_order,
        channel_taps=taps, channel_decay=cfg.channel.decay,
        lr=t.lr, weight_decay=t.weight_decay, epochs=t.epochs,
        gradual_start_epoch=t.gradual_start_epoch, train_snr_db=t.train_snr_db,
        lambda_2a_init=t.lambda_2a, lambda_2b_init=t.lambda_2b,
        lambda_3_init=t.lambda_3, rho_2a=t.rho_2a, rho_2b=t.rho_2b,
        rho_3=t.rho_3, batch_size=t.batch_size,
        batches_per_epoch=t.batches_per_epoch, acpr_req_db=t.acpr_req_db,
        ibo_db=cfg.rf.ibo_db, total_power=cfg.rf.total_power,
        smoothness=cfg.rf.smoothness, decoder_iterations=t.decoder_iterations,
        activation=t.activation, init_scale=t.init_scale, seed=cfg.run.seed)
    out = Path(cfg.run.out) if cfg.run.out else Path("cae_checkpoint.bin")
    log_path = out.with_suffix(".log.csv")

    def progress(epoch, row):
        print(f"epoch {epoch:4d}  l1={row[1]:.4f}  l2a={row[2]:.4f}  "
              f"l2b={row[3]:.4f}  l3={row[4]:.3f}  grad={row[8]:.2f}")

    result = train(train_cfg, checkpoint_path=out, log_path=log_path, progress=progress)
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"training log: {log_path}")
    return 0


def _cmd_ber(args) -> int:
    from .harness import run_ber
    cfg = _load(args)
    text, records = run_ber(cfg)
    if cfg.run.out is None:
        sys.stdout.write(text)
    for r in records:
        print(f"p_snr={r.x:6.2f} dB  ber={r.y:.6g}  bits={r.count}", file=sys.stderr)
    return 0


def _cmd_ccdf(args) -> int:
    from .harness import run_ccdf
    cfg = _load(args)
    text, _ = run_ccdf(cfg)
    if cfg.run.out is None:
        sys.stdout.write(text)
    return 0


def _cmd_psd(args) -> int:
    from .harness import run_psd
    cfg = _load(args)
    text = run_psd(cfg)
    if cfg.run.out is None:
        sys.stdout.write(text)
    return 0


def _cmd_acpr_obo(args) -> int:
    from .harness import run_acpr_obo
    cfgs = []
    for path in args.config:
        cfg = load_config(path)
        cfg = with_overrides(cfg, seed=args.seed, frames=args.frames,
                             workers=args.workers)
        cfgs.append(cfg)
    text = run_acpr_obo(cfgs, out=args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def _cmd_gradcheck(args) -> int:
    from .harness import run_gradcheck
    results, ok = run_gradcheck(seed=args.seed)
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name:16s} max_rel_err={r.max_relative_error:.3e} "
              f"tol={r.tolerance:.0e}  {status}")
    if not ok:
        raise NumericError("gradient verification failed")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "ber": _cmd_ber,
    "ccdf": _cmd_ccdf,
    "psd": _cmd_psd,
    "acpr-obo": _cmd_acpr_obo,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
