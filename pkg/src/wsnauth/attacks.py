"""Offline guessing, card extraction, key recovery and impersonation.

Every attack takes only what a passive eavesdropper with brief card access
can hold: transcript payloads, the card contents, and a dictionary.  None
of the functions here accept gateway keys or user/sensor secrets.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import netsim, scheme
from .bitcodec import Digest, Timestamp, decode_id, decode_ts, encode_ts, h, xor
from .errors import CodecError, InputError, ProtocolError
from .netsim import MessageKind, Scenario
from .scheme import LITERAL_000, LoginRequest, RegistrationRequest, SensorReply, SmartCard

ADVERSARY = "ADV"


@dataclass
class AttackReport:
    success: bool
    recovered: bytes | None = None
    guesses_tried: int = 0
    hash_ops: int = 0


class _CountingHash:
    def __init__(self):
        self.ops = 0

    def __call__(self, *parts) -> Digest:
        self.ops += 1
        return h(*parts)


# ------------------------------------------------------ pre-password (Steps 1-2)

def guess_pre_password(reg: RegistrationRequest, dictionary: Iterable[bytes]) -> AttackReport:
    """Find PW_pre by recomputing VI_i = h(TS1 || h(ID_pre || pw*)) per guess."""
    hsh = _CountingHash()
    tried = 0
    for candidate in dictionary:
        tried += 1
        if hsh(reg.ts1, hsh(reg.id_pre, candidate)) == reg.vi:
            return AttackReport(True, candidate, tried, hsh.ops)
    return AttackReport(False, None, tried, hsh.ops)


def recover_identity_and_verifier(reg: RegistrationRequest, pw_pre: bytes) -> tuple[bytes, Digest]:
    """Unmask ID_i from DI_i and Q_i from CI_i with the recovered pre-password.

    Raises IdNotCanonical when ``pw_pre`` is wrong (the unmasked identity is
    garbage).
    """
    mask = scheme.pre_hash(reg.id_pre, pw_pre)
    return decode_id(xor(reg.di, mask)), xor(reg.ci, mask)


# ---------------------------------------------------- stolen card (Steps 3-6)

def read_out(card: SmartCard) -> SmartCard:
    """One-shot read of a borrowed card; the victim keeps using the original."""
    return SmartCard(hq=card.hq, te=card.te, ptc=card.ptc, r=card.r)


def guess_user_password(
    card: SmartCard,
    ident: bytes,
    dictionary: Iterable[bytes],
    verifier: Digest | None = None,
) -> AttackReport:
    """Find PW_i from h(ID_i || pw* || r_i).

    With ``verifier`` (the Q_i unmasked from CI_i) each guess costs one hash.
    Without it the card's own h(Q_i) is the oracle, at two hashes per guess.
    """
    if card.r is None:
        raise ValueError("card does not hold r_i")
    hsh = _CountingHash()
    tried = 0
    for candidate in dictionary:
        tried += 1
        q = hsh(ident, candidate, card.r)
        hit = q == verifier if verifier is not None else hsh(q) == card.hq
        if hit:
            return AttackReport(True, candidate, tried, hsh.ops)
    return AttackReport(False, None, tried, hsh.ops)


def extract_temporal_credential(card: SmartCard, q: Digest) -> Digest:
    return xor(card.ptc, q)


# ------------------------------------------------------- session-key framing

def recover_session_key(login: LoginRequest, reply: SensorReply, tc: Digest) -> Digest:
    k_i = xor(login.pks, h(tc, login.ts4, LITERAL_000))
    k_j = xor(reply.pks, h(k_i, reply.ts6))
    return scheme.session_key(k_i, k_j)


def key_confirmed(login: LoginRequest, reply: SensorReply, tc: Digest, ident: bytes) -> bool:
    """Check a recovery against C_j = h(K_j || ID_i || SID_j || TS6) from the wire."""
    k_i = xor(login.pks, h(tc, login.ts4, LITERAL_000))
    k_j = xor(reply.pks, h(k_i, reply.ts6))
    return h(k_j, ident, reply.sid, reply.ts6) == reply.c


def sessions(transcript: Iterable[netsim.WireMessage]) -> list[tuple[LoginRequest, SensorReply]]:
    """Pair each eavesdropped login with the sensor reply that closed it."""
    pairs, pending = [], None
    for m in transcript:
        if m.kind == MessageKind.LOGIN:
            pending = m.payload
        elif m.kind == MessageKind.SENSOR_REPLY and pending is not None:
            pairs.append((pending, m.payload))
            pending = None
    return pairs


# ------------------------------------------------------------- impersonation

@dataclass
class ImpersonationOutcome:
    login: LoginRequest
    accepted: bool
    adversary_key: Digest | None = None
    sensor_key: Digest | None = None
    error: ProtocolError | None = None

    @property
    def shared_key(self) -> bool:
        return self.adversary_key is not None and self.adversary_key == self.sensor_key


def impersonate_user(
    ident: bytes,
    q: Digest,
    tc: Digest,
    te: Timestamp,
    scenario: Scenario,
    *,
    ts: Timestamp | None = None,
    rng: random.Random | None = None,
) -> ImpersonationOutcome:
    """Forge a login from extracted values and push it into a live scenario."""
    rng = rng or random.Random("adversary")
    k_a = rng.randbytes(20)
    ts4 = scenario.clock(ADVERSARY) if ts is None else ts
    forged = scheme.login_from_credentials(ident, q, tc, te, k_a, ts4)
    try:
        session = netsim.deliver_login(scenario, forged, ADVERSARY, k_a, ident)
    except ProtocolError as exc:
        return ImpersonationOutcome(forged, accepted=exc.step != "A-2", error=exc)
    return ImpersonationOutcome(forged, True, session.user_key, session.sensor_key)


# --------------------------------------------------------------- full chain

@dataclass
class ChainResult:
    pre_password: AttackReport
    identity: bytes | None = None
    verifier: Digest | None = None
    password_by_verifier: AttackReport | None = None
    password_by_card: AttackReport | None = None
    temporal_credential: Digest | None = None
    session_keys: list[Digest] = field(default_factory=list)
    impersonation: ImpersonationOutcome | None = None

    @property
    def success(self) -> bool:
        stages = [self.pre_password.success, self.identity is not None]
        if self.password_by_verifier is not None:
            stages.append(self.password_by_verifier.success)
        if self.password_by_card is not None:
            stages.append(self.password_by_card.success)
        if self.impersonation is not None:
            stages.append(self.impersonation.shared_key)
        return all(stages)


def full_chain(
    transcript: Iterable[netsim.WireMessage],
    card: SmartCard,
    dictionary: Sequence[bytes],
    scenario: Scenario | None = None,
    *,
    guess_password: bool = True,
) -> ChainResult:
    """Steps 1-6, then key recovery for every eavesdropped session, then
    (given a live scenario) impersonation."""
    transcript = list(transcript)
    regs = netsim.eavesdrop(transcript, MessageKind.USER_REG)
    if not regs:
        raise InputError("transcript holds no user registration message")
    reg = regs[0]
    result = ChainResult(guess_pre_password(reg, dictionary))
    if not result.pre_password.success:
        return result
    try:
        ident, q = recover_identity_and_verifier(reg, result.pre_password.recovered)
    except CodecError:
        return result
    result.identity, result.verifier = ident, q
    if guess_password:
        result.password_by_verifier = guess_user_password(card, ident, dictionary, verifier=q)
        result.password_by_card = guess_user_password(card, ident, dictionary)
    tc = extract_temporal_credential(card, q)
    result.temporal_credential = tc
    result.session_keys = [recover_session_key(lg, rp, tc) for lg, rp in sessions(transcript)]
    if scenario is not None:
        result.impersonation = impersonate_user(ident, q, tc, card.te, scenario)
    return result


# ------------------------------------------------------------------ file IO

def parse_dictionary(data: bytes) -> list[bytes]:
    """One candidate per line; standard backslash escapes are decoded."""
    out = []
    for line in data.splitlines():
        try:
            out.append(line.decode("unicode_escape").encode("latin-1"))
        except (UnicodeDecodeError, UnicodeEncodeError) as exc:
            raise InputError(f"bad escape in dictionary line {line!r}: {exc}") from exc
    return out


def load_dictionary(path: str | Path) -> list[bytes]:
    try:
        return parse_dictionary(Path(path).read_bytes())
    except OSError as exc:
        raise InputError(f"cannot read dictionary {path}: {exc}") from exc


def dump_dictionary(words: Iterable[bytes], path: str | Path) -> None:
    lines = []
    for w in words:
        esc = w.decode("latin-1").encode("unicode_escape")
        lines.append(esc)
    Path(path).write_bytes(b"\n".join(lines) + b"\n")


CARD_FIELDS = ("hq", "te", "ptc", "r")


def card_to_text(card: SmartCard) -> str:
    if card.r is None:
        raise ValueError("card does not hold r_i")
    return "\n".join([card.hq.hex(), encode_ts(card.te).hex(), card.ptc.hex(), card.r.hex()]) + "\n"


def card_from_text(text: str) -> SmartCard:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) != len(CARD_FIELDS):
        raise InputError(f"card file needs {len(CARD_FIELDS)} lines ({', '.join(CARD_FIELDS)})")
    try:
        hq, te, ptc, r = (bytes.fromhex(ln) for ln in lines)
        return SmartCard(hq=hq, te=decode_ts(te), ptc=ptc, r=r)
    except ValueError as exc:
        raise InputError(f"bad card file: {exc}") from exc


def load_card(path: str | Path) -> SmartCard:
    try:
        return card_from_text(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read card {path}: {exc}") from exc
