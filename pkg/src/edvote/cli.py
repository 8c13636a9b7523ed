"""Command line: ``edvote <role> <action> ...``.

Errors print their code name on stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import json
import logging
import secrets
import sys
from pathlib import Path

from . import powcore, wire
from .auditor import audit, forgery_budget
from .authority import AlreadyIssued, Authority, keygen
from .model import ElectionConfig, ID_SIZE, ValidationError, block_zeros, build_preimage

EXIT_FAIL = 1
EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        super().__init__(detail or code)


def _load_config(path) -> ElectionConfig:
    return wire.config_from_json(wire.read_json(path))


def _election_id(value: str) -> bytes:
    if Path(value).is_file():
        return _load_config(value).election_id
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raw = b""
    if len(raw) != ID_SIZE:
        raise CliError("BAD_ARGUMENT", "--election must be a 32-hex-digit id or a config file")
    return raw


def _hex_key(value: str) -> bytes:
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raw = b""
    if len(raw) != 32:
        raise CliError("BAD_ARGUMENT", "public keys are 64 hex digits")
    return raw


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# -- election ---------------------------------------------------------------------


def cmd_election_new(args) -> int:
    cfg = ElectionConfig(
        election_id=bytes.fromhex(args.id) if args.id else secrets.token_bytes(ID_SIZE),
        ballot_choices=tuple(c.strip() for c in args.choices.split(",")),
        voting_window=(args.start, args.end),
        work_floor=args.floor,
        hash_algorithm_id={"sha256": powcore.SHA256, "blake2b": powcore.BLAKE2B_256}[
            args.algorithm
        ],
        stamp_ttl=args.ttl,
        chunk_interval=args.chunk_interval,
    )
    wire.write_json(args.out, wire.config_to_json(cfg))
    print(cfg.election_id.hex())
    return 0


# -- authority ----------------------------------------------------------------------


def cmd_keygen(args) -> int:
    kp = keygen()
    wire.write_json(args.out, kp.to_json(), private=True)
    print(kp.public_key.hex())
    return 0


def cmd_pubkey(args) -> int:
    print(wire.load_keypair(args.key).public_key.hex())
    return 0


def cmd_authority_issue(args) -> int:
    authority = Authority(wire.load_keypair(args.key), args.log)
    try:
        mandate = authority.issue_mandate(_election_id(args.election), args.citizen)
    except AlreadyIssued as exc:
        raise CliError(exc.code, str(exc)) from exc
    doc = wire.mandate_to_json(mandate)
    if args.out:
        wire.write_json(args.out, doc, private=True)
    else:
        _print_json(doc)
    return 0


def cmd_authority_serve(args) -> int:
    import uvicorn

    from .service import create_authority_app

    authority = Authority(wire.load_keypair(args.key), args.log)
    uvicorn.run(create_authority_app(authority, _load_config(args.config)), host=args.host, port=args.port)
    return 0


# -- platform -----------------------------------------------------------------------


def cmd_platform_serve(args) -> int:
    import uvicorn

    from .platform import Platform
    from .service import create_platform_app

    platform = Platform(
        _load_config(args.config),
        wire.load_keypair(args.key),
        _hex_key(args.authority_pk),
        data_dir=args.data_dir,
    )
    uvicorn.run(create_platform_app(platform), host=args.host, port=args.port)
    return 0


def cmd_platform_fetch(args) -> int:
    from .voter import HttpEndpoint

    units = HttpEndpoint(args.platform).published()
    wire.write_all_published(args.out, units)
    print(f"{len(units)} unit(s) written to {args.out}")
    return 0


# -- voter ----------------------------------------------------------------------------


def cmd_voter_cast(args) -> int:
    from .voter import HttpEndpoint, VoterError, cast

    cfg = _load_config(args.election)
    mandate = wire.mandate_from_json(wire.read_json(args.mandate))
    try:
        receipt = cast(
            cfg,
            mandate,
            args.vote,
            powcore.MiningBudget(wall_time=args.budget_ms),
            HttpEndpoint(args.platform),
            receipt_out=args.receipt_out,
            platform_public_key=_hex_key(args.platform_pk) if args.platform_pk else None,
        )
    except (ValidationError, VoterError, powcore.BudgetTooSmall) as exc:
        if isinstance(exc, ValidationError):
            raise CliError(exc.code.value, exc.detail) from exc
        raise CliError(exc.code, getattr(exc, "detail", "") or str(exc)) from exc
    print(f"accepted with {receipt.achieved_zeros} leading zero bits; receipt: {args.receipt_out}")
    return 0


def cmd_voter_verify(args) -> int:
    from .voter import ReceiptFile, self_verify

    receipt = ReceiptFile.load(args.receipt)
    if not self_verify(receipt, wire.read_published(args.published)):
        raise CliError("NOT_VERIFIED", "own record not found intact in the published lists")
    print("verified")
    return 0


# -- audit ------------------------------------------------------------------------------


def cmd_audit_run(args) -> int:
    cfg = _load_config(args.config)
    report = audit(
        wire.read_published(args.published),
        _hex_key(args.authority_pk),
        _hex_key(args.platform_pk),
        cfg,
        args.eligible,
    )
    doc = report.to_json()
    if args.report:
        wire.write_json(args.report, doc)
        from .figures import plot_zeros_histogram

        hist = {z: n for z, n in ((int(k), v) for k, v in doc["zeros_histogram"].items())}
        plot_zeros_histogram(hist, Path(args.report).with_suffix(".zeros.png"), floor=cfg.work_floor)
    _print_json(doc)
    return 0 if report.passed else EXIT_FAIL


def cmd_audit_forgery(args) -> int:
    units = wire.read_published(args.published)
    cfg = _load_config(args.config) if args.config else None
    zeros = []
    for unit in units:
        for block in unit.list_b:
            if cfg is not None:
                zeros.append(block_zeros(cfg, block))
            else:
                stamp = block.receipt.platform_stamp
                prefix = build_preimage(powcore.SHA256, stamp.election_id, block.vote, block.receipt)
                zeros.append(powcore.block_zeros(prefix, block.nonce))
    _print_json(forgery_budget(zeros, args.hashrate, args.seconds).to_json())
    return 0


# -- simulator ---------------------------------------------------------------------------


def cmd_sim_run(args) -> int:
    from . import simulator

    scenario = simulator.Scenario.from_json(wire.read_json(args.scenario))
    report = simulator.run(scenario)
    out = Path(args.out)
    wire.write_json(out, report.to_json())
    hist = report.zeros_histogram()
    rates = [2**k for k in range(0, args.max_log2_hashrate + 1)]
    curve = simulator.deterrence_curve(hist, rates, args.seconds)
    csv_path = out.with_name(out.stem + "_deterrence.csv")
    simulator.write_curve_csv(csv_path, curve)
    if not args.no_figures:
        from .figures import plot_deterrence_curve, plot_zeros_histogram

        plot_deterrence_curve(curve, out.with_name(out.stem + "_deterrence.png"), seconds=args.seconds)
        plot_zeros_histogram(
            hist, out.with_name(out.stem + "_zeros.png"), floor=scenario.config.work_floor
        )
    a = report.audit_report
    print(
        f"audit passed={a.passed} list_a={a.list_a} list_b={a.list_b} "
        f"total_work={a.total_work} adversary={report.adversary_outcome.to_json()}"
    )
    return 0


# -- parser --------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edvote", description="Proof-of-work secured voting.")
    p.add_argument("-v", "--verbose", action="store_true")
    roles = p.add_subparsers(dest="role", required=True)

    election = roles.add_parser("election", help="election configuration files")
    e_sub = election.add_subparsers(dest="action", required=True)
    e = e_sub.add_parser("new", help="write a new election config")
    e.add_argument("--choices", required=True, help="comma-separated ballot choices")
    e.add_argument("--start", type=int, required=True, help="window start, UTC seconds")
    e.add_argument("--end", type=int, required=True, help="window end, UTC seconds")
    e.add_argument("--floor", type=int, default=powcore.DEFAULT_FLOOR)
    e.add_argument("--ttl", type=int, default=3600, help="stamp lifetime in seconds")
    e.add_argument("--chunk-interval", type=int, default=None)
    e.add_argument("--algorithm", choices=("sha256", "blake2b"), default="sha256")
    e.add_argument("--id", help="election id as 32 hex digits (random if omitted)")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_election_new)

    authority = roles.add_parser("authority", help="electoral authority")
    a_sub = authority.add_subparsers(dest="action", required=True)
    a = a_sub.add_parser("keygen")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_keygen)
    a = a_sub.add_parser("issue")
    a.add_argument("--election", required=True, help="election id (hex) or config file")
    a.add_argument("--citizen", required=True)
    a.add_argument("--key", default="authority_key.json")
    a.add_argument("--log", default="issuance.jsonl")
    a.add_argument("--out", help="write the mandate here instead of stdout")
    a.set_defaults(func=cmd_authority_issue)
    a = a_sub.add_parser("pubkey")
    a.add_argument("--key", default="authority_key.json")
    a.set_defaults(func=cmd_pubkey)
    a = a_sub.add_parser("serve", help="POST /mandate endpoint")
    a.add_argument("--config", required=True)
    a.add_argument("--key", default="authority_key.json")
    a.add_argument("--log", default="issuance.jsonl")
    a.add_argument("--host", default="127.0.0.1")
    a.add_argument("--port", type=int, default=8001)
    a.set_defaults(func=cmd_authority_serve)

    platform = roles.add_parser("platform", help="election platform")
    p_sub = platform.add_subparsers(dest="action", required=True)
    q = p_sub.add_parser("keygen")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_keygen)
    q = p_sub.add_parser("pubkey")
    q.add_argument("--key", default="platform_key.json")
    q.set_defaults(func=cmd_pubkey)
    q = p_sub.add_parser("serve")
    q.add_argument("--config", required=True)
    q.add_argument("--key", default="platform_key.json")
    q.add_argument("--authority-pk", required=True)
    q.add_argument("--data-dir", default="platform-data")
    q.add_argument("--host", default="127.0.0.1")
    q.add_argument("--port", type=int, default=8000)
    q.set_defaults(func=cmd_platform_serve)
    q = p_sub.add_parser("fetch", help="download published lists into a directory")
    q.add_argument("--platform", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_platform_fetch)

    voter = roles.add_parser("voter", help="voter client")
    v_sub = voter.add_subparsers(dest="action", required=True)
    v = v_sub.add_parser("cast")
    v.add_argument("--election", required=True, help="election config file")
    v.add_argument("--mandate", required=True, help="mandate JSON file")
    v.add_argument("--vote", required=True)
    v.add_argument("--budget-ms", type=int, default=30_000)
    v.add_argument("--platform", required=True, help="platform base URL")
    v.add_argument("--platform-pk", help="pin the platform key instead of fetching it")
    v.add_argument("--receipt-out", required=True)
    v.set_defaults(func=cmd_voter_cast)
    v = v_sub.add_parser("verify")
    v.add_argument("--receipt", required=True)
    v.add_argument("--published", required=True, help="directory of published lists")
    v.set_defaults(func=cmd_voter_verify)

    aud = roles.add_parser("audit", help="independent auditor")
    u_sub = aud.add_subparsers(dest="action", required=True)
    u = u_sub.add_parser("run")
    u.add_argument("--published", required=True)
    u.add_argument("--authority-pk", required=True)
    u.add_argument("--platform-pk", required=True)
    u.add_argument("--config", required=True)
    u.add_argument("--eligible", type=int)
    u.add_argument("--report")
    u.set_defaults(func=cmd_audit_run)
    u = u_sub.add_parser("forgery")
    u.add_argument("--published", required=True)
    u.add_argument("--hashrate", type=int, required=True)
    u.add_argument("--seconds", type=int, required=True)
    u.add_argument("--config", help="election config (default: SHA-256, id from stamps)")
    u.set_defaults(func=cmd_audit_forgery)

    sim = roles.add_parser("sim", help="simulated elections")
    s_sub = sim.add_subparsers(dest="action", required=True)
    s = s_sub.add_parser("run")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seconds", type=int, default=1, help="adversary time for the curve")
    s.add_argument("--max-log2-hashrate", type=int, default=32)
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_sim_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except wire.MalformedInput as exc:
        print(f"MALFORMED_INPUT: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ValueError) as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
