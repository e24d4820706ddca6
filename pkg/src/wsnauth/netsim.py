"""Deterministic actor harness over an eavesdropped channel.

A :class:`Scenario` owns a gateway, any number of users and sensors, a
single simulated clock and a seeded random source.  Each ``run_*`` driver
walks one protocol phase through :meth:`Scenario.transmit`, which records
every sent message in the transcript, applies scripted faults to the
delivered copies, and advances the clock by the hop latency.
"""

from __future__ import annotations

import dataclasses
import enum
import random
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping

from . import scheme
from .bitcodec import Timestamp, decode_ts, encode_ts
from .errors import InputError, ProtocolError, Timeout
from .scheme import (
    GwnKeys,
    GwnToSensor,
    GwnUserRecord,
    LoginRequest,
    PreCredential,
    RegistrationRequest,
    SensorRegReply,
    SensorRegRequest,
    SensorReply,
    SensorSecret,
    SmartCard,
    UserRegReply,
    UserSecret,
)

GWN = "GWN"


class MessageKind(str, enum.Enum):
    USER_REG = "UserReg"
    USER_REG_REPLY = "UserRegReply"
    SENSOR_REG = "SensorReg"
    SENSOR_REG_REPLY = "SensorRegReply"
    LOGIN = "Login"
    GWN_TO_SENSOR = "GwnToSensor"
    SENSOR_REPLY = "SensorReply"

    @classmethod
    def parse(cls, text: str) -> "MessageKind":
        """Accept ``UserReg``, ``user-reg``, ``user_reg`` or ``userreg``."""
        key = text.replace("-", "").replace("_", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown message kind {text!r}")

    def __str__(self) -> str:
        return self.value


PAYLOAD_TYPES = {
    MessageKind.USER_REG: RegistrationRequest,
    MessageKind.USER_REG_REPLY: UserRegReply,
    MessageKind.SENSOR_REG: SensorRegRequest,
    MessageKind.SENSOR_REG_REPLY: SensorRegReply,
    MessageKind.LOGIN: LoginRequest,
    MessageKind.GWN_TO_SENSOR: GwnToSensor,
    MessageKind.SENSOR_REPLY: SensorReply,
}


def payload_fields(kind: MessageKind) -> list[str]:
    return [f.name for f in dataclasses.fields(PAYLOAD_TYPES[kind])]


@dataclass(frozen=True)
class WireMessage:
    kind: MessageKind
    sender: str
    receiver: str
    sent_at: Timestamp
    payload: object

    def __post_init__(self):
        if not isinstance(self.payload, PAYLOAD_TYPES[self.kind]):
            raise TypeError(f"{self.kind} envelope carries {type(self.payload).__name__}")


class Transcript:
    """Append-only record of everything put on the public channel."""

    def __init__(self, entries: Iterable[WireMessage] = ()):
        self._entries: list[WireMessage] = list(entries)

    def append(self, msg: WireMessage) -> None:
        self._entries.append(msg)

    def __iter__(self) -> Iterator[WireMessage]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, i):
        return self._entries[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, Transcript) and self._entries == other._entries

    def since(self, mark: int) -> "Transcript":
        return Transcript(self._entries[mark:])

    # -- file format: one message per line, fields in dataclass order --

    def to_lines(self) -> list[str]:
        lines = [TRANSCRIPT_HEADER]
        for m in self._entries:
            cols = [m.kind.value, m.sender, m.receiver, str(m.sent_at)]
            for name in payload_fields(m.kind):
                value = getattr(m.payload, name)
                raw = encode_ts(value) if name in scheme.TIMESTAMP_FIELDS else value
                cols.append(f"{name}={raw.hex()}")
            lines.append(" ".join(cols))
        return lines

    def dump(self, dest: str | Path | IO[str]) -> None:
        text = "\n".join(self.to_lines()) + "\n"
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            Path(dest).write_text(text)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Transcript":
        entries = []
        for lineno, line in enumerate(lines, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                entries.append(_parse_line(line))
            except (ValueError, TypeError) as exc:
                raise InputError(f"transcript line {lineno}: {exc}") from exc
        return cls(entries)

    @classmethod
    def load(cls, src: str | Path | IO[str]) -> "Transcript":
        if hasattr(src, "read"):
            return cls.from_lines(src.read().splitlines())
        try:
            text = Path(src).read_text()
        except OSError as exc:
            raise InputError(f"cannot read transcript {src}: {exc}") from exc
        return cls.from_lines(text.splitlines())


TRANSCRIPT_HEADER = "# wsnauth transcript v1: kind sender receiver sent_at field=hex..."


def _parse_line(line: str) -> WireMessage:
    cols = line.split()
    if len(cols) < 4:
        raise ValueError("expected kind, sender, receiver, sent_at")
    kind = MessageKind.parse(cols[0])
    names = payload_fields(kind)
    if len(cols) != 4 + len(names):
        raise ValueError(f"{kind} needs {len(names)} payload fields, got {len(cols) - 4}")
    values = {}
    for expected, col in zip(names, cols[4:]):
        name, sep, hexval = col.partition("=")
        if not sep or name != expected:
            raise ValueError(f"expected field {expected!r}, got {col!r}")
        raw = bytes.fromhex(hexval)
        values[name] = decode_ts(raw) if name in scheme.TIMESTAMP_FIELDS else raw
    return WireMessage(kind, cols[1], cols[2], int(cols[3]), PAYLOAD_TYPES[kind](**values))


def eavesdrop(transcript: Iterable[WireMessage], kind: MessageKind | None = None) -> list:
    """Payloads seen on the wire, optionally restricted to one message kind."""
    return [m.payload for m in transcript if kind is None or m.kind == kind]


# ------------------------------------------------------------------- faults

def flip_bit(payload, name: str, bit: int):
    """Copy of ``payload`` with bit ``bit`` (MSB-first) of field ``name`` inverted."""
    value = getattr(payload, name)
    is_ts = name in scheme.TIMESTAMP_FIELDS
    raw = bytearray(encode_ts(value) if is_ts else value)
    if not 0 <= bit < len(raw) * 8:
        raise ValueError(f"bit {bit} outside field {name!r} of {len(raw)} octets")
    raw[bit // 8] ^= 0x80 >> (bit % 8)
    new = decode_ts(bytes(raw)) if is_ts else bytes(raw)
    return dataclasses.replace(payload, **{name: new})


@dataclass(frozen=True)
class Fault:
    """A scripted channel fault on the ``occurrence``-th message of ``kind``.

    ``to`` restricts the fault to the copy delivered to one receiver
    (only meaningful for the broadcast sensor reply).
    """

    action: str  # "flip" | "delay" | "drop"
    kind: MessageKind
    occurrence: int = 0
    field: str | None = None
    bit: int = 0
    delay: int = 0
    to: str | None = None

    def __post_init__(self):
        if self.action not in ("flip", "delay", "drop"):
            raise ValueError(f"unknown fault action {self.action!r}")
        if self.action == "flip" and self.field not in payload_fields(self.kind):
            raise ValueError(f"{self.kind} has no field {self.field!r}")

    @classmethod
    def parse(cls, spec: str) -> "Fault":
        """Parse ``flip:KIND:FIELD:BIT``, ``delay:KIND:SECONDS`` or ``drop:KIND``.

        KIND may carry ``@RECEIVER`` and every form takes an optional
        trailing ``:OCCURRENCE`` (default 0).
        """
        parts = spec.split(":")
        action = parts[0]
        if len(parts) < 2:
            raise ValueError(f"bad fault spec {spec!r}")
        kind_text, _, to = parts[1].partition("@")
        kind = MessageKind.parse(kind_text)
        rest = parts[2:]
        try:
            if action == "flip":
                if len(rest) not in (2, 3):
                    raise ValueError
                occ = int(rest[2]) if len(rest) == 3 else 0
                return cls("flip", kind, occ, field=rest[0], bit=int(rest[1]), to=to or None)
            if action == "delay":
                if len(rest) not in (1, 2):
                    raise ValueError
                occ = int(rest[1]) if len(rest) == 2 else 0
                return cls("delay", kind, occ, delay=int(rest[0]), to=to or None)
            if action == "drop":
                if len(rest) > 1:
                    raise ValueError
                occ = int(rest[0]) if rest else 0
                return cls("drop", kind, occ, to=to or None)
        except ValueError as exc:
            raise ValueError(f"bad fault spec {spec!r}") from exc
        raise ValueError(f"unknown fault action in {spec!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    delta_t: int = 5
    step: int = 1
    start: Timestamp = 1_000_000
    skews: Mapping[str, int] = field(default_factory=dict)
    faults: tuple[Fault, ...] = ()
    credential_lifetime: int = 30 * 86400
    sensor_choice: str | None = None  # sensor actor label; default first registered


# ------------------------------------------------------------------- actors

@dataclass
class User:
    label: str
    pre: PreCredential
    secret: UserSecret
    card: SmartCard | None = None


@dataclass
class Sensor:
    label: str
    secret: SensorSecret


@dataclass
class Gateway:
    keys: GwnKeys
    pre_db: dict[bytes, bytes] = field(default_factory=dict)
    sensor_db: dict[bytes, bytes] = field(default_factory=dict)
    table: dict[bytes, GwnUserRecord] = field(default_factory=dict)
    registered_sensors: dict[bytes, str] = field(default_factory=dict)


@dataclass
class UserRegistration:
    transcript: Transcript
    card: SmartCard
    record: GwnUserRecord


@dataclass
class SensorRegistration:
    transcript: Transcript
    secret: SensorSecret


@dataclass
class LoginSession:
    transcript: Transcript
    user_key: bytes
    sensor_key: bytes
    gateway_verdicts: dict[str, bool]
    record: GwnUserRecord
    sid: bytes

    @property
    def keys_match(self) -> bool:
        return self.user_key == self.sensor_key


@contextmanager
def _acting(actor: str):
    try:
        yield
    except ProtocolError as exc:
        if exc.actor is None:
            exc.actor = actor
        raise


class Scenario:
    """One simulated deployment: actors, clock, channel and transcript."""

    def __init__(self, config: ScenarioConfig | None = None):
        self.config = config or ScenarioConfig()
        self.rng = random.Random(self.config.seed)
        self.now: Timestamp = self.config.start
        self.transcript = Transcript()
        self.gateway = Gateway(GwnKeys(self.rng.randbytes(20), self.rng.randbytes(20)))
        self.users: dict[str, User] = {}
        self.sensors: dict[str, Sensor] = {}
        self._sent: dict[MessageKind, int] = {k: 0 for k in MessageKind}

    # -- provisioning (off-channel pre-configuration) --

    def add_user(self, id_pre: bytes, pw_pre: bytes, ident: bytes, pw: bytes) -> str:
        label = f"U{len(self.users) + 1}"
        pre = PreCredential(id_pre, pw_pre)
        secret = UserSecret(ident, pw, self.rng.randbytes(20))
        self.users[label] = User(label, pre, secret)
        self.gateway.pre_db[id_pre] = scheme.pre_hash(id_pre, pw_pre)
        return label

    def add_sensor(self, sid: bytes) -> str:
        label = f"S{len(self.sensors) + 1}"
        secret = SensorSecret(sid, self.rng.randbytes(20))
        self.sensors[label] = Sensor(label, secret)
        self.gateway.sensor_db[sid] = scheme.sensor_pre_hash(sid, secret.r)
        return label

    # -- clock and channel --

    def clock(self, actor: str) -> Timestamp:
        return self.now + self.config.skews.get(actor, 0)

    def transmit(self, kind: MessageKind, sender: str, receivers: list[str], payload) -> list:
        """Send ``payload``; return the copy each receiver gets (None if dropped)."""
        occurrence = self._sent[kind]
        self._sent[kind] += 1
        self.transcript.append(WireMessage(kind, sender, "+".join(receivers), self.clock(sender), payload))
        delivered, extra = [], 0
        for rcv in receivers:
            copy, dropped = payload, False
            for f in self.config.faults:
                if f.kind != kind or f.occurrence != occurrence or f.to not in (None, rcv):
                    continue
                if f.action == "flip":
                    copy = flip_bit(copy, f.field, f.bit)
                elif f.action == "delay":
                    extra = max(extra, f.delay)
                else:
                    dropped = True
            delivered.append(None if dropped else copy)
        self.now += self.config.step + extra
        return delivered

    def timeout(self, step: str, actor: str):
        self.now += self.config.delta_t + 1
        raise Timeout("no message within the freshness window", step=step, actor=actor)

    @property
    def delta_t(self) -> int:
        return self.config.delta_t

    def fresh_ephemeral(self) -> bytes:
        return self.rng.randbytes(20)

    def chosen_sensor(self) -> Sensor:
        if not self.gateway.registered_sensors:
            raise ValueError("no sensor has completed registration")
        label = self.config.sensor_choice or next(iter(self.gateway.registered_sensors.values()))
        return self.sensors[label]


# ------------------------------------------------------------------ drivers

def run_user_registration(sc: Scenario, user: str = "U1") -> UserRegistration:
    """U-1 -> U-3 over the public channel."""
    u = sc.users[user]
    mark = len(sc.transcript)
    req = scheme.user_make_registration(u.pre, u.secret, sc.clock(user))
    (got,) = sc.transmit(MessageKind.USER_REG, user, [GWN], req)
    if got is None:
        sc.timeout("U-2", user)
    with _acting(GWN):
        now = sc.clock(GWN)
        card, echo, record = scheme.gwn_process_registration(
            got, sc.gateway.pre_db, sc.gateway.keys, now, sc.delta_t,
            te=now + sc.config.credential_lifetime,
        )
    sc.gateway.table[record.id] = record
    reply = UserRegReply(hq=card.hq, te=card.te, ptc=card.ptc, echo=echo)
    (got,) = sc.transmit(MessageKind.USER_REG_REPLY, GWN, [user], reply)
    if got is None:
        sc.timeout("U-3", user)
    with _acting(user):
        u.card = scheme.user_verify_card(got.card, got.echo, u.secret)
    return UserRegistration(sc.transcript.since(mark), u.card, record)


def run_sensor_registration(sc: Scenario, sensor: str = "S1") -> SensorRegistration:
    """S-1 -> S-3 over the public channel."""
    s = sc.sensors[sensor]
    mark = len(sc.transcript)
    req = scheme.sensor_make_registration(s.secret, sc.clock(sensor))
    (got,) = sc.transmit(MessageKind.SENSOR_REG, sensor, [GWN], req)
    if got is None:
        sc.timeout("S-2", sensor)
    with _acting(GWN):
        now = sc.clock(GWN)
        reply = scheme.gwn_process_sensor_registration(
            got, sc.gateway.sensor_db, sc.gateway.keys, now, sc.delta_t, ts3=now
        )
    sc.gateway.registered_sensors[got.sid] = sensor
    (got,) = sc.transmit(MessageKind.SENSOR_REG_REPLY, GWN, [sensor], reply)
    if got is None:
        sc.timeout("S-3", sensor)
    with _acting(sensor):
        s.secret = scheme.sensor_finish_registration(s.secret, got, sc.clock(sensor), sc.delta_t)
    return SensorRegistration(sc.transcript.since(mark), s.secret)


def run_login_session(sc: Scenario, user: str = "U1") -> LoginSession:
    """A-1 -> A-4 for a registered user and the gateway-chosen sensor."""
    u = sc.users[user]
    if u.card is None:
        raise ValueError(f"{user} has not completed registration")
    k_i = sc.fresh_ephemeral()
    login = scheme.user_login(u.card, u.secret, k_i, sc.clock(user))
    return deliver_login(sc, login, user, k_i, u.secret.id)


def deliver_login(sc: Scenario, login: LoginRequest, origin: str, k_i: bytes, ident: bytes) -> LoginSession:
    """Carry an already-built login through A-2 -> A-4.

    ``origin`` is the actor that sent it and later runs the A-4 check
    with ``k_i`` and ``ident``; it need not be a registered user.
    """
    mark = len(sc.transcript)
    verdicts: dict[str, bool] = {}
    (got,) = sc.transmit(MessageKind.LOGIN, origin, [GWN], login)
    if got is None:
        sc.timeout("A-2", origin)
    sensor = sc.chosen_sensor()
    sid = sensor.secret.sid
    with _acting(GWN):
        now = sc.clock(GWN)
        relay, gwn_k_i, record = scheme.gwn_process_login(
            got, sc.gateway.table.values(), sc.gateway.keys, now, sc.delta_t, sid, ts5=now
        )
    sc.gateway.table[record.id] = record
    verdicts["A-2"] = True

    (got,) = sc.transmit(MessageKind.GWN_TO_SENSOR, GWN, [sensor.label], relay)
    if got is None:
        sc.timeout("A-3", origin)
    k_j = sc.fresh_ephemeral()
    with _acting(sensor.label):
        now = sc.clock(sensor.label)
        reply, sensor_k_i = scheme.sensor_process(got, sensor.secret, k_j, now, sc.delta_t, ts6=now)
    sensor_key = scheme.sensor_session_key(sensor_k_i, k_j)

    to_origin, to_gwn = sc.transmit(MessageKind.SENSOR_REPLY, sensor.label, [origin, GWN], reply)
    if to_origin is None:
        sc.timeout("A-4", origin)
    with _acting(origin):
        # the user learns which sensor was chosen from the reply itself
        user_key = scheme.finalize(to_origin, k_i, ident, to_origin.sid, sc.clock(origin), sc.delta_t)
    if to_gwn is None:
        sc.timeout("A-4", GWN)
    with _acting(GWN):
        scheme.finalize(to_gwn, gwn_k_i, record.id, sid, sc.clock(GWN), sc.delta_t)
    verdicts["A-4"] = True
    return LoginSession(sc.transcript.since(mark), user_key, sensor_key, verdicts, record, sid)


def build_deployment(
    config: ScenarioConfig | None = None,
    *,
    id_pre: bytes = b"alice-pre",
    pw_pre: bytes = b"pw0",
    ident: bytes = b"alice",
    pw: bytes = b"secret",
    sid: bytes = b"s1",
) -> Scenario:
    """One user and one sensor, provisioned but not yet registered."""
    sc = Scenario(config)
    sc.add_user(id_pre, pw_pre, ident, pw)
    sc.add_sensor(sid)
    return sc


def run_all(sc: Scenario, user: str = "U1", sensor: str = "S1") -> LoginSession:
    run_sensor_registration(sc, sensor)
    run_user_registration(sc, user)
    return run_login_session(sc, user)
