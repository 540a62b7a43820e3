"""Command-line driver: simulate / enroll / auth / rp-serve / analyze / roundtrip.

Salts are secrets: they are read from an environment variable or an
interactive no-echo prompt, never from a flag, and never echoed, logged, or
written to any output. Ceremony failures exit 1 with the rejection reason on
stderr; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import getpass
import json
import os
import sys

from . import analysis, simulator, wire
from .config import PipelineConfig, load_config
from .errors import BidoError
from .protocol import (
    ChallengePurpose,
    RelyingParty,
    authenticate,
    b64url_decode,
    b64url_encode,
    deterministic_nonce_source,
    enroll,
    parse_auth_data,
)
from .rp_http import (
    fetch_auth_challenge,
    fetch_registration_challenge,
    serve_forever,
    submit_assertion,
    submit_registration,
)

EXIT_OK = 0
EXIT_CEREMONY_FAILED = 1
EXIT_USAGE = 2


def _load_pipeline_config(path: str | None) -> PipelineConfig:
    return load_config(path) if path else PipelineConfig()


def _resolve_salt(args) -> str:
    if args.salt_env:
        salt = os.environ.get(args.salt_env)
        if salt is None:
            raise BidoError(f"environment variable {args.salt_env} is not set")
        if salt == "":
            raise BidoError(f"environment variable {args.salt_env} is empty")
        return salt
    salt = getpass.getpass("salt: ")
    if not salt:
        raise BidoError("empty salt")
    return salt


class _RejectSaltFlag(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        parser.error(
            "--salt is not accepted (secrets do not belong in shell history); "
            "use --salt-env VAR or the interactive prompt"
        )


def _add_salt_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--salt-env", metavar="VAR", help="environment variable holding the salt")
    parser.add_argument("--salt", action=_RejectSaltFlag, nargs=1, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bido", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic landmark dataset")
    p_sim.add_argument("--subjects", type=int, required=True)
    p_sim.add_argument("--frames", type=int, required=True)
    p_sim.add_argument("--jitter", type=float, default=0.0, help="per-landmark Gaussian sigma, px")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output JSONL path, or - for stdout")
    p_sim.add_argument("--spread", type=float, default=simulator.DEFAULT_SUBJECT_SPREAD_PX)
    p_sim.add_argument("--invalid-rate", type=float, default=0.0)
    p_sim.add_argument("--nonfrontal-rate", type=float, default=0.0)
    p_sim.add_argument("--pose-rotation", type=float, default=0.12, metavar="RAD")
    p_sim.add_argument("--pose-scale", type=float, nargs=2, default=(2.0, 3.0),
                       metavar=("LO", "HI"))

    p_enroll = sub.add_parser("enroll", help="run the enrollment ceremony")
    p_enroll.add_argument("--frames", required=True, help="landmark JSONL path")
    _add_salt_args(p_enroll)
    p_enroll.add_argument("--rp", help="relying party base URL (HTTP mode)")
    p_enroll.add_argument("--store", help="credential store path (in-process mode)")
    p_enroll.add_argument("--config", help="pipeline config JSON")

    p_auth = sub.add_parser("auth", help="run the authentication ceremony")
    p_auth.add_argument("--frames", required=True)
    _add_salt_args(p_auth)
    p_auth.add_argument("--cred-id", help="base64url credential id to authenticate against")
    p_auth.add_argument("--rp", help="relying party base URL (HTTP mode)")
    p_auth.add_argument("--store", help="credential store path (in-process mode)")
    p_auth.add_argument("--config", help="pipeline config JSON")

    p_serve = sub.add_parser("rp-serve", help="run the mock relying party service")
    p_serve.add_argument("--store", required=True)
    p_serve.add_argument("--listen", default="127.0.0.1:8077", metavar="HOST:PORT")

    p_an = sub.add_parser("analyze", help="entropy / binding / latency reports")
    an_sub = p_an.add_subparsers(dest="analysis", required=True)
    p_ent = an_sub.add_parser("entropy", help="min-entropy bounds from a dataset")
    p_ent.add_argument("--dataset", required=True)
    p_ent.add_argument("--config", help="pipeline config JSON")
    p_ent.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    p_bind = an_sub.add_parser("binding", help="match rate / C-FAR / C-FRR over datasets")
    p_bind.add_argument("--enroll", required=True, help="enrollment JSONL (grouped by subject)")
    p_bind.add_argument("--auth", required=True, help="authentication JSONL (grouped by subject)")
    p_bind.add_argument("--attempts", type=int, default=1,
                        help="split each subject's auth frames into this many attempts")
    p_bind.add_argument("--config", help="pipeline config JSON")
    p_bind.add_argument("--json", action="store_true")
    p_lat = an_sub.add_parser("latency", help="time the post-capture pipeline stages")
    p_lat.add_argument("--config", help="pipeline config JSON")
    p_lat.add_argument("--json", action="store_true")

    p_round = sub.add_parser("roundtrip", help="simulate, enroll, authenticate, verify")
    p_round.add_argument("--seed", type=int, required=True)
    p_round.add_argument("--config", help="pipeline config JSON")

    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    noise = simulator.NoiseConfig(
        jitter_sigma_px=args.jitter,
        pose_rotation_max_rad=args.pose_rotation,
        pose_scale_range=tuple(args.pose_scale),
        invalid_frame_rate=args.invalid_rate,
        nonfrontal_rate=args.nonfrontal_rate,
    )
    if args.out == "-":
        count = simulator.generate_dataset(
            args.subjects, args.frames, noise, sys.stdout,
            master_seed=args.seed, spread_px=args.spread,
        )
    else:
        count = simulator.generate_dataset(
            args.subjects, args.frames, noise, args.out,
            master_seed=args.seed, spread_px=args.spread,
        )
        print(f"wrote {count} frames to {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_enroll(args) -> int:
    config = _load_pipeline_config(args.config)
    salt = _resolve_salt(args)
    frames = wire.read_frames(args.frames)
    if args.rp:
        challenge = fetch_registration_challenge(args.rp)
        msg = enroll(frames, salt, challenge, config)
        cred_id = submit_registration(args.rp, msg)
    else:
        rp = RelyingParty(store_path=args.store)
        challenge = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        msg = enroll(frames, salt, challenge, config)
        record = rp.register(msg)
        cred_id = record.cred_id
    print(json.dumps({"cred_id": b64url_encode(cred_id)}))
    return EXIT_OK


def _cmd_auth(args) -> int:
    config = _load_pipeline_config(args.config)
    salt = _resolve_salt(args)
    frames = wire.read_frames(args.frames)
    cred_id = b64url_decode(args.cred_id) if args.cred_id else None
    if args.rp:
        challenge, allowed = fetch_auth_challenge(args.rp, cred_id)
        msg = authenticate(frames, salt, challenge, allowed, config)
        accepted = submit_assertion(args.rp, msg, challenge.nonce)
    else:
        rp = RelyingParty(store_path=args.store)
        allowed = rp.allow_credentials(cred_id)
        challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        msg = authenticate(frames, salt, challenge, allowed, config)
        rp.finish_auth(msg, challenge.nonce)
        accepted = True
    print(json.dumps({"accepted": accepted, "cred_id": b64url_encode(msg.cred_id)}))
    return EXIT_OK if accepted else EXIT_CEREMONY_FAILED


def _cmd_rp_serve(args) -> int:
    host, _, port = args.listen.rpartition(":")
    rp = RelyingParty(store_path=args.store)
    serve_forever(rp, host or "127.0.0.1", int(port))
    return EXIT_OK


def _group_frames_by_subject(path) -> dict[str, list]:
    grouped: dict[str, list] = {}
    for frame in wire.read_frames(path):
        grouped.setdefault(frame.subject_id, []).append(frame)
    return grouped


def _cmd_analyze(args) -> int:
    config = _load_pipeline_config(args.config)
    if args.analysis == "entropy":
        hists = analysis.bin_frequencies(wire.read_frames(args.dataset), config)
        report = analysis.entropy_report(hists)
        print(json.dumps(report) if args.json else analysis.entropy_table(report))
    elif args.analysis == "binding":
        enroll_streams = _group_frames_by_subject(args.enroll)
        auth_grouped = _group_frames_by_subject(args.auth)
        auth_attempts = {}
        for sid, frames in auth_grouped.items():
            per = max(len(frames) // args.attempts, 1)
            auth_attempts[sid] = [
                frames[i * per:(i + 1) * per] for i in range(args.attempts)
            ]
        # experiment harness: per-subject salts are synthetic and derived
        # from the subject id, not real memorized secrets
        salts = {sid: f"{sid}-salt" for sid in enroll_streams}
        metrics = analysis.binding_metrics(enroll_streams, auth_attempts, salts, config)
        print(json.dumps(metrics.to_dict()) if args.json else analysis.binding_table(metrics))
    else:
        report = analysis.stage_latencies(config)
        print(json.dumps(report) if args.json else analysis.latency_table(report))
    return EXIT_OK


def _cmd_roundtrip(args) -> int:
    """Seeded end-to-end pass: every byte of output derives from --seed."""
    config = _load_pipeline_config(args.config)
    try:
        (template_seed, stream_seed), = simulator.subject_seeds(args.seed, 1)
        subject = simulator.new_subject(template_seed, subject_id=f"roundtrip-{args.seed}")
        salt = f"roundtrip-demo-salt-{args.seed}"

        rp = RelyingParty(nonce_source=deterministic_nonce_source(args.seed))
        reg_challenge = rp.issue_challenge(ChallengePurpose.REGISTRATION)
        enroll_frames = simulator.frame_stream(subject, simulator.NOISELESS, stream_seed)
        msg = enroll(enroll_frames, salt, reg_challenge, config)
        record = rp.register(msg)

        allowed = rp.allow_credentials()
        auth_challenge = rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
        auth_frames = simulator.frame_stream(subject, simulator.NOISELESS, stream_seed + 1)
        assertion = authenticate(auth_frames, salt, auth_challenge, allowed, config)
        rp.finish_auth(assertion, auth_challenge.nonce)
    except BidoError as exc:
        print("FAIL")
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CEREMONY_FAILED

    _, cred_id, public_key = parse_auth_data(msg.auth_data)
    print("PASS")
    print(json.dumps({
        "registration": {
            "auth_data": b64url_encode(msg.auth_data),
            "attestation": b64url_encode(msg.attestation.to_bytes()),
        },
        "cred_id": b64url_encode(cred_id),
        "public_key": b64url_encode(public_key),
        "sign_count": record.sign_count,
    }))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "enroll": _cmd_enroll,
        "auth": _cmd_auth,
        "rp-serve": _cmd_rp_serve,
        "analyze": _cmd_analyze,
        "roundtrip": _cmd_roundtrip,
    }
    try:
        return handlers[args.command](args)
    except BidoError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CEREMONY_FAILED
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
