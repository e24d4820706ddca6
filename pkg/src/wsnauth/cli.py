"""Command-line front end.

Exit codes: 0 success, 1 protocol/step failure, 2 attack ran but failed,
3 input error.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path

from . import attacks, netsim, vectors
from .errors import InputError, MissingInput, ProtocolError
from .netsim import Fault, MessageKind, Scenario, ScenarioConfig

EXIT_OK, EXIT_PROTOCOL, EXIT_ATTACK_FAILED, EXIT_INPUT = 0, 1, 2, 3

ATTACKS = ("pre-pw", "user-pw", "session-key", "impersonate", "full-chain")
HIDDEN = "<hidden>"


class RunReport:
    """Ordered flat key/value report plus the human-readable log."""

    def __init__(self, scenario: str, reveal: bool = False):
        self.reveal = reveal
        self.fields: dict[str, str] = {}
        self.lines: list[str] = []
        self["scenario"] = scenario

    def __setitem__(self, key: str, value) -> None:
        if isinstance(value, bool):
            value = str(value).lower()
        self.fields[key] = str(value)

    def secret(self, key: str, value: bytes | None) -> None:
        if value is None:
            self[key] = "none"
        else:
            self[key] = value.hex() if self.reveal else HIDDEN

    def say(self, line: str) -> None:
        self.lines.append(line)

    def render(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.fields.items())

    def emit(self, out_path: str | None) -> None:
        for line in self.lines:
            print(line)
        if out_path:
            Path(out_path).write_text(self.render())


def demo_credentials(seed: int) -> dict[str, bytes]:
    """The demo user's credentials; derived from the seed alone."""
    rng = random.Random(f"demo-credentials-{seed}")
    return dict(
        id_pre=f"user-{rng.randrange(10**4):04d}-pre".encode(),
        pw_pre=f"pre{rng.randrange(10**6):06d}".encode(),
        ident=b"alice",
        pw=f"pw-{rng.randbytes(4).hex()}".encode(),
        sid=b"sensor-1",
    )


def demo_scenario(seed: int, delta_t: int, faults: tuple[Fault, ...] = ()) -> Scenario:
    config = ScenarioConfig(seed=seed, delta_t=delta_t, faults=faults)
    return netsim.build_deployment(config, **demo_credentials(seed))


def _fmt_bytes(b: bytes) -> str:
    try:
        return b.decode("ascii")
    except UnicodeDecodeError:
        return b.hex()


# ------------------------------------------------------------------- demo

def cmd_demo(args) -> int:
    try:
        faults = tuple(Fault.parse(f) for f in args.fault)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    started = time.perf_counter()
    sc = demo_scenario(args.seed, args.delta_t, faults)
    report = RunReport(f"demo-seed-{args.seed}", args.reveal)
    report["delta_t"] = args.delta_t
    report["faults"] = ",".join(args.fault) or "none"
    code = EXIT_OK
    phases = [
        ("sensor_registration", "S-1..S-3", lambda: netsim.run_sensor_registration(sc)),
        ("user_registration", "U-1..U-3", lambda: netsim.run_user_registration(sc)),
        ("login", "A-1..A-4", lambda: netsim.run_login_session(sc)),
    ]
    session = None
    for name, steps, run in phases:
        try:
            session = run()
        except ProtocolError as exc:
            report[f"phase.{name}"] = "failed"
            report["failure"] = exc.label
            report.say(f"{steps} {name.replace('_', ' ')}: FAILED")
            report.say(str(exc))
            code = EXIT_PROTOCOL
            break
        report[f"phase.{name}"] = "ok"
        report.say(f"{steps} {name.replace('_', ' ')}: ok")
    if code == EXIT_OK:
        record = session.record
        report["gateway.status_bit"] = record.status_bit
        report["gateway.last_login"] = record.last_login
        report["key_match"] = session.keys_match
        report.secret("key.user", session.user_key)
        report.secret("key.sensor", session.sensor_key)
        report.say(f"KEY_ij match: {str(session.keys_match).lower()}")
        if not session.keys_match:
            code = EXIT_PROTOCOL
    report["transcript.messages"] = len(sc.transcript)
    report["exit_code"] = code
    if args.timing:
        report["wall_time_s"] = f"{time.perf_counter() - started:.6f}"
    if args.transcript:
        sc.transcript.dump(args.transcript)
    card = sc.users["U1"].card
    if args.card and card is not None:
        Path(args.card).write_text(attacks.card_to_text(attacks.read_out(card)))
    report.emit(args.out)
    return code


# ----------------------------------------------------------------- attack

def _need(path, what):
    if not path:
        raise MissingInput(f"--{what} is required for this attack")
    return path


def _attack_report(report: RunReport, prefix: str, r: attacks.AttackReport) -> None:
    report[f"{prefix}.success"] = r.success
    report.secret(f"{prefix}.recovered", r.recovered)
    report[f"{prefix}.guesses_tried"] = r.guesses_tried
    report[f"{prefix}.hash_ops"] = r.hash_ops
    shown = _fmt_bytes(r.recovered) if (r.recovered is not None and report.reveal) else (
        HIDDEN if r.recovered is not None else "-")
    report.say(
        f"{prefix}: {'recovered' if r.success else 'not found'} {shown} "
        f"(guesses={r.guesses_tried}, hash_ops={r.hash_ops})"
    )


def run_attack(args, report: RunReport) -> bool:
    which = args.which
    transcript = netsim.Transcript.load(_need(args.transcript, "transcript"))
    dictionary = attacks.load_dictionary(_need(args.dict, "dict"))
    card = attacks.load_card(_need(args.card, "card")) if which != "pre-pw" else None

    regs = netsim.eavesdrop(transcript, MessageKind.USER_REG)
    if not regs:
        raise InputError("transcript holds no user registration message")
    reg = regs[0]
    pre = attacks.guess_pre_password(reg, dictionary)
    _attack_report(report, "pre_pw", pre)
    if which == "pre-pw" or not pre.success:
        return pre.success

    ident, q = attacks.recover_identity_and_verifier(reg, pre.recovered)
    report["identity"] = _fmt_bytes(ident)
    report.secret("verifier", q)
    report.say(f"identity: {_fmt_bytes(ident)}")
    ok = True

    if which in ("user-pw", "full-chain"):
        by_q = attacks.guess_user_password(card, ident, dictionary, verifier=q)
        by_card = attacks.guess_user_password(card, ident, dictionary)
        _attack_report(report, "user_pw.verifier_oracle", by_q)
        _attack_report(report, "user_pw.card_oracle", by_card)
        ok = ok and by_q.success and by_card.success and by_q.recovered == by_card.recovered
        if which == "user-pw":
            return ok

    tc = attacks.extract_temporal_credential(card, q)
    report.secret("temporal_credential", tc)

    if which in ("session-key", "full-chain"):
        pairs = attacks.sessions(transcript)
        report["session_key.sessions"] = len(pairs)
        confirmed = 0
        for n, (login, reply) in enumerate(pairs):
            key = attacks.recover_session_key(login, reply, tc)
            good = attacks.key_confirmed(login, reply, tc, ident)
            confirmed += good
            report.secret(f"session_key.{n}", key)
            report[f"session_key.{n}.confirmed"] = good
        report["session_key.confirmed"] = confirmed
        report.say(f"session keys recovered and confirmed: {confirmed}/{len(pairs)}")
        ok = ok and bool(pairs) and confirmed == len(pairs)

    if which in ("impersonate", "full-chain"):
        sc = demo_scenario(args.seed, args.delta_t)
        netsim.run_all(sc)
        outcome = attacks.impersonate_user(ident, q, tc, card.te, sc)
        report["impersonate.accepted"] = outcome.accepted
        report["impersonate.shared_key"] = outcome.shared_key
        report.secret("impersonate.key", outcome.adversary_key)
        if outcome.error is not None:
            report["impersonate.failure"] = outcome.error.label
        record = sc.gateway.table[ident]
        report["impersonate.gateway_status_bit"] = record.status_bit
        report.say(
            f"impersonation: gateway {'accepted' if outcome.accepted else 'rejected'}, "
            f"shared key with sensor: {str(outcome.shared_key).lower()}"
        )
        ok = ok and outcome.shared_key
    return ok


def cmd_attack(args) -> int:
    started = time.perf_counter()
    report = RunReport(f"attack-{args.which}", args.reveal)
    try:
        ok = run_attack(args, report)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    code = EXIT_OK if ok else EXIT_ATTACK_FAILED
    report["success"] = ok
    report["exit_code"] = code
    if args.timing:
        report["wall_time_s"] = f"{time.perf_counter() - started:.6f}"
    report.say(f"attack {args.which}: {'success' if ok else 'failed'}")
    report.emit(args.out)
    return code


# ---------------------------------------------------------------- vectors

def cmd_export_vectors(args) -> int:
    n = vectors.export_vectors(args.output)
    print(f"wrote {n} vectors to {args.output}")
    return EXIT_OK


# ------------------------------------------------------------------ main

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wsnauth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--delta-t", type=int, default=5, help="freshness window in simulated seconds")
        sp.add_argument("--reveal", action="store_true", help="print secrets and session keys")
        sp.add_argument("--out", help="write the flat key=value report here")
        sp.add_argument("--timing", action="store_true", help="add wall time to the report")

    d = sub.add_parser("demo", help="provision, register and log in one user and one sensor")
    common(d)
    d.add_argument("--fault", action="append", default=[],
                   help="flip:KIND:FIELD:BIT | delay:KIND:SECONDS | drop:KIND (repeatable)")
    d.add_argument("--transcript", help="write the eavesdropped transcript here")
    d.add_argument("--card", help="write the user's smart card contents here")
    d.set_defaults(func=cmd_demo)

    a = sub.add_parser("attack", help="run an attack against a transcript and card")
    common(a)
    a.add_argument("which", choices=ATTACKS)
    a.add_argument("--transcript")
    a.add_argument("--card")
    a.add_argument("--dict")
    a.set_defaults(func=cmd_attack)

    v = sub.add_parser("export-vectors", help="write golden test vectors")
    v.add_argument("output")
    v.set_defaults(func=cmd_export_vectors)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
