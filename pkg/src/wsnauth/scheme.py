"""Pure per-step formulas of the temporal-credential scheme.

Every step is a function from explicit state and an incoming message to an
outgoing message (or updated state).  No function here touches a clock,
a channel or a random source; callers pass timestamps and ephemerals in.

Hash operands that are identities use the raw identity octets; identities
that are XOR-masked use the padded 20-octet form from ``encode_id``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Mapping

from .bitcodec import (
    DIGEST_LEN,
    Digest,
    Timestamp,
    check_id,
    decode_id,
    encode_id,
    h,
    xor,
)
from .errors import (
    BadVerifier,
    CardRejected,
    CodecError,
    ExpiredCredential,
    GwnRejected,
    LoginRejected,
    SensorRejected,
    StaleTimestamp,
    TeMismatch,
    UnknownPreId,
    UnknownSensor,
)

LITERAL_000 = b"000"

# Payload fields carrying timestamps; everything else is raw octets.
TIMESTAMP_FIELDS = frozenset({"ts1", "ts2", "ts3", "ts4", "ts5", "ts6", "te"})


def _need_len(obj, names, n=DIGEST_LEN):
    for name in names:
        v = getattr(obj, name)
        if v is not None and len(v) != n:
            raise CodecError(f"{type(obj).__name__}.{name} must be {n} octets, got {len(v)}")


# ---------------------------------------------------------------- state types

@dataclass(frozen=True)
class PreCredential:
    id_pre: bytes
    pw_pre: bytes

    def __post_init__(self):
        check_id(self.id_pre)


@dataclass(frozen=True)
class UserSecret:
    id: bytes
    pw: bytes
    r: bytes

    def __post_init__(self):
        check_id(self.id)
        _need_len(self, ["r"])


@dataclass(frozen=True)
class SmartCard:
    hq: Digest
    te: Timestamp
    ptc: Digest
    r: bytes | None = None

    def __post_init__(self):
        _need_len(self, ["hq", "ptc", "r"])

    @property
    def complete(self) -> bool:
        return self.r is not None


@dataclass(frozen=True)
class GwnUserRecord:
    id: bytes
    q: Digest
    te: Timestamp
    status_bit: bool = False
    last_login: Timestamp | None = None


@dataclass(frozen=True)
class SensorSecret:
    sid: bytes
    r: bytes | None
    tc: Digest | None = None

    def __post_init__(self):
        check_id(self.sid)
        _need_len(self, ["r", "tc"])


@dataclass(frozen=True)
class GwnKeys:
    k_gwn_u: bytes
    k_gwn_s: bytes

    def __post_init__(self):
        _need_len(self, ["k_gwn_u", "k_gwn_s"])

    def __repr__(self) -> str:
        return "GwnKeys(<hidden>)"


# ------------------------------------------------------------- wire payloads

@dataclass(frozen=True)
class RegistrationRequest:
    id_pre: bytes
    ts1: Timestamp
    vi: Digest
    ci: Digest
    di: bytes

    def __post_init__(self):
        _need_len(self, ["vi", "ci", "di"])


@dataclass(frozen=True)
class UserRegReply:
    """Personalised card fields plus the h(Q) echo, sent in the clear."""

    hq: Digest
    te: Timestamp
    ptc: Digest
    echo: Digest

    def __post_init__(self):
        _need_len(self, ["hq", "ptc", "echo"])

    @property
    def card(self) -> SmartCard:
        return SmartCard(hq=self.hq, te=self.te, ptc=self.ptc)


@dataclass(frozen=True)
class SensorRegRequest:
    sid: bytes
    ts2: Timestamp
    vi: Digest

    def __post_init__(self):
        _need_len(self, ["vi"])


@dataclass(frozen=True)
class SensorRegReply:
    ts3: Timestamp
    q: Digest
    reg: Digest

    def __post_init__(self):
        _need_len(self, ["q", "reg"])


@dataclass(frozen=True)
class LoginRequest:
    did: bytes
    ts4: Timestamp
    c: Digest
    pks: Digest
    te: Timestamp

    def __post_init__(self):
        _need_len(self, ["did", "c", "pks"])


@dataclass(frozen=True)
class GwnToSensor:
    ts5: Timestamp
    did: bytes
    did_gwn: bytes
    c_gwn: Digest
    pks_gwn: Digest

    def __post_init__(self):
        _need_len(self, ["did", "did_gwn", "c_gwn", "pks_gwn"])


@dataclass(frozen=True)
class SensorReply:
    sid: bytes
    ts6: Timestamp
    c: Digest
    pks: Digest

    def __post_init__(self):
        _need_len(self, ["c", "pks"])


# ------------------------------------------------------------------ formulas

def pre_hash(id_pre: bytes, pw_pre: bytes) -> Digest:
    """h(ID_pre || PW_pre), the gateway's stored pre-registration verifier."""
    return h(id_pre, pw_pre)


def sensor_pre_hash(sid: bytes, r: bytes) -> Digest:
    return h(sid, r)


def password_verifier(ident: bytes, pw: bytes, r: bytes) -> Digest:
    """Q_i = h(ID_i || PW_i || r_i)."""
    return h(ident, pw, r)


def identity_binding(ident: bytes, te: Timestamp) -> Digest:
    """P_i = h(ID_i || TE_i)."""
    return h(ident, te)


def user_credential(k_gwn_u: bytes, ident: bytes, te: Timestamp) -> Digest:
    """TC_i = h(K_GWN-U || P_i || TE_i)."""
    return h(k_gwn_u, identity_binding(ident, te), te)


def sensor_credential(k_gwn_s: bytes, sid: bytes) -> Digest:
    return h(k_gwn_s, sid)


def login_verifier(q: Digest, ts4: Timestamp, tc: Digest) -> Digest:
    """C_i = h(Q_i || TS4) xor TC_i (both sides use this form)."""
    return xor(h(q, ts4), tc)


def session_key(k_i: bytes, k_j: bytes) -> Digest:
    return h(xor(k_i, k_j))


def check_fresh(ts: Timestamp, now: Timestamp, delta_t: int, step: str) -> None:
    if not abs(ts - now) < delta_t:
        raise StaleTimestamp(f"|{ts} - {now}| >= {delta_t}", step=step)


# ----------------------------------------------------------- user registration

def user_make_registration(pre: PreCredential, secret: UserSecret, ts1: Timestamp) -> RegistrationRequest:
    ph = pre_hash(pre.id_pre, pre.pw_pre)
    return RegistrationRequest(
        id_pre=pre.id_pre,
        ts1=ts1,
        vi=h(ts1, ph),
        ci=xor(ph, password_verifier(secret.id, secret.pw, secret.r)),
        di=xor(encode_id(secret.id), ph),
    )


def gwn_process_registration(
    req: RegistrationRequest,
    db: Mapping[bytes, Digest],
    keys: GwnKeys,
    now: Timestamp,
    delta_t: int,
    te: Timestamp,
) -> tuple[SmartCard, Digest, GwnUserRecord]:
    """Gateway side of user registration.

    Returns the card without ``r``, the h(Q_i) echo, and a fresh identity
    table row with the status bit cleared.
    """
    step = "U-2"
    check_fresh(req.ts1, now, delta_t, step)
    ph = db.get(req.id_pre)
    if ph is None:
        raise UnknownPreId(f"no pre-registration for {req.id_pre!r}", step=step)
    if h(req.ts1, ph) != req.vi:
        raise BadVerifier("VI_i mismatch", step=step)
    q = xor(req.ci, ph)
    try:
        ident = decode_id(xor(req.di, ph))
    except CodecError as exc:
        raise BadVerifier(f"DI_i does not unmask to an identity: {exc}", step=step) from exc
    tc = user_credential(keys.k_gwn_u, ident, te)
    hq = h(q)
    card = SmartCard(hq=hq, te=te, ptc=xor(tc, q))
    return card, hq, GwnUserRecord(id=ident, q=q, te=te)


def user_verify_card(card: SmartCard, echo: Digest, secret: UserSecret) -> SmartCard:
    expected = h(password_verifier(secret.id, secret.pw, secret.r))
    if expected != echo or expected != card.hq:
        raise CardRejected("h(Q_i) does not match the user's own computation", step="U-3")
    return dataclasses.replace(card, r=secret.r)


# --------------------------------------------------------- sensor registration

def sensor_make_registration(s: SensorSecret, ts2: Timestamp) -> SensorRegRequest:
    if s.r is None:
        raise ValueError("sensor random r_j already erased")
    return SensorRegRequest(sid=s.sid, ts2=ts2, vi=h(ts2, sensor_pre_hash(s.sid, s.r)))


def gwn_process_sensor_registration(
    req: SensorRegRequest,
    db: Mapping[bytes, Digest],
    keys: GwnKeys,
    now: Timestamp,
    delta_t: int,
    ts3: Timestamp,
) -> SensorRegReply:
    step = "S-2"
    check_fresh(req.ts2, now, delta_t, step)
    sh = db.get(req.sid)
    if sh is None:
        raise UnknownSensor(f"no pre-configuration for {req.sid!r}", step=step)
    if h(req.ts2, sh) != req.vi:
        raise BadVerifier("VI_j mismatch", step=step)
    tc_j = sensor_credential(keys.k_gwn_s, req.sid)
    return SensorRegReply(ts3=ts3, q=h(ts3, sh), reg=xor(h(sh, ts3), tc_j))


def sensor_finish_registration(
    s: SensorSecret, reply: SensorRegReply, now: Timestamp, delta_t: int
) -> SensorSecret:
    step = "S-3"
    if s.r is None:
        raise ValueError("sensor random r_j already erased")
    check_fresh(reply.ts3, now, delta_t, step)
    sh = sensor_pre_hash(s.sid, s.r)
    if h(reply.ts3, sh) != reply.q:
        raise BadVerifier("Q_j mismatch", step=step)
    # r_j is not needed once TC_j is stored
    return SensorSecret(sid=s.sid, r=None, tc=xor(reply.reg, h(sh, reply.ts3)))


# ------------------------------------------------------------ login and A-2..4

def user_login(card: SmartCard, secret: UserSecret, k_i: bytes, ts4: Timestamp) -> LoginRequest:
    if not card.complete:
        raise ValueError("smart card has not been completed (r_i missing)")
    q = password_verifier(secret.id, secret.pw, card.r)
    tc = xor(card.ptc, q)
    return login_from_credentials(secret.id, q, tc, card.te, k_i, ts4)


def login_from_credentials(
    ident: bytes, q: Digest, tc: Digest, te: Timestamp, k_i: bytes, ts4: Timestamp
) -> LoginRequest:
    """Build the A-1 message from (ID_i, Q_i, TC_i, TE_i); shared by user and forger."""
    return LoginRequest(
        did=xor(encode_id(ident), h(tc, ts4)),
        ts4=ts4,
        c=login_verifier(q, ts4, tc),
        pks=xor(k_i, h(tc, ts4, LITERAL_000)),
        te=te,
    )


def _resolve_user(req: LoginRequest, table: Iterable[GwnUserRecord], keys: GwnKeys):
    """Find the unique record whose recomputed TC_i* unmasks DID_i to its own ID."""
    hits = []
    for rec in table:
        tc = user_credential(keys.k_gwn_u, rec.id, rec.te)
        try:
            ident = decode_id(xor(req.did, h(tc, req.ts4)))
        except CodecError:
            continue
        if ident == rec.id:
            hits.append((rec, tc))
    return hits


def gwn_process_login(
    req: LoginRequest,
    table: Iterable[GwnUserRecord],
    keys: GwnKeys,
    now: Timestamp,
    delta_t: int,
    sid: bytes,
    ts5: Timestamp,
) -> tuple[GwnToSensor, bytes, GwnUserRecord]:
    """Gateway side of A-2.

    Returns the relay message for sensor ``sid``, the recovered ephemeral
    K_i, and the updated identity-table row (status bit set, TS4 recorded).
    """
    step = "A-2"
    check_fresh(req.ts4, now, delta_t, step)
    hits = _resolve_user(req, table, keys)
    if len(hits) != 1:
        raise LoginRejected(f"DID_i resolves to {len(hits)} identity records", step=step)
    rec, tc = hits[0]
    if req.te != rec.te:
        raise TeMismatch("TE_i in login differs from the identity table", step=step)
    if now >= rec.te:
        raise ExpiredCredential(f"credential expired at {rec.te}", step=step)
    if login_verifier(rec.q, req.ts4, tc) != req.c:
        raise LoginRejected("C_i mismatch", step=step)
    updated = dataclasses.replace(rec, status_bit=True, last_login=req.ts4)
    k_i = xor(req.pks, h(tc, req.ts4, LITERAL_000))
    tc_j = sensor_credential(keys.k_gwn_s, sid)
    msg = GwnToSensor(
        ts5=ts5,
        did=req.did,
        did_gwn=xor(encode_id(rec.id), h(req.did, tc_j, ts5)),
        c_gwn=h(rec.id, tc_j, ts5),
        pks_gwn=xor(k_i, h(tc_j, ts5)),
    )
    return msg, k_i, updated


def sensor_process(
    msg: GwnToSensor,
    s: SensorSecret,
    k_j: bytes,
    now: Timestamp,
    delta_t: int,
    ts6: Timestamp,
) -> tuple[SensorReply, bytes]:
    step = "A-3"
    if s.tc is None:
        raise ValueError("sensor has no temporal credential yet")
    check_fresh(msg.ts5, now, delta_t, step)
    try:
        ident = decode_id(xor(msg.did_gwn, h(msg.did, s.tc, msg.ts5)))
    except CodecError as exc:
        raise GwnRejected(f"DID_GWN does not unmask to an identity: {exc}", step=step) from exc
    if h(ident, s.tc, msg.ts5) != msg.c_gwn:
        raise GwnRejected("C_GWN mismatch", step=step)
    k_i = xor(msg.pks_gwn, h(s.tc, msg.ts5))
    reply = SensorReply(
        sid=s.sid,
        ts6=ts6,
        c=h(k_j, ident, s.sid, ts6),
        pks=xor(k_j, h(k_i, ts6)),
    )
    return reply, k_i


def finalize(
    reply: SensorReply,
    k_i: bytes,
    expected_id: bytes,
    expected_sid: bytes,
    now: Timestamp,
    delta_t: int,
) -> Digest:
    """A-4 check run independently by the user and by the gateway."""
    step = "A-4"
    check_fresh(reply.ts6, now, delta_t, step)
    if reply.sid != expected_sid:
        raise SensorRejected("SID_j differs from the expected sensor", step=step)
    k_j = xor(reply.pks, h(k_i, reply.ts6))
    if h(k_j, expected_id, expected_sid, reply.ts6) != reply.c:
        raise SensorRejected("C_j mismatch", step=step)
    return session_key(k_i, k_j)


def sensor_session_key(k_i: bytes, k_j: bytes) -> Digest:
    return session_key(k_i, k_j)

