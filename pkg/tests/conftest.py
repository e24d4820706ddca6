import random
import sys
from dataclasses import dataclass

import pytest

from wsnauth import scheme
from wsnauth.scheme import GwnKeys, PreCredential, SensorSecret, UserSecret

DELTA_T = 5


@dataclass
class Flow:
    """Every intermediate value of one straight-through honest run."""

    pre: PreCredential
    secret: UserSecret
    keys: GwnKeys
    sensor0: SensorSecret
    k_i: bytes
    k_j: bytes
    ts: dict
    req: scheme.RegistrationRequest = None
    card0: scheme.SmartCard = None
    echo: bytes = None
    record: scheme.GwnUserRecord = None
    card: scheme.SmartCard = None
    sreq: scheme.SensorRegRequest = None
    sreply: scheme.SensorRegReply = None
    sensor: SensorSecret = None
    login: scheme.LoginRequest = None
    relay: scheme.GwnToSensor = None
    gwn_k_i: bytes = None
    record2: scheme.GwnUserRecord = None
    reply: scheme.SensorReply = None
    sensor_k_i: bytes = None

    @property
    def db(self):
        return {self.pre.id_pre: scheme.pre_hash(self.pre.id_pre, self.pre.pw_pre)}

    @property
    def sdb(self):
        return {self.sensor0.sid: scheme.sensor_pre_hash(self.sensor0.sid, self.sensor0.r)}

    def run(self) -> "Flow":
        ts = self.ts
        self.req = scheme.user_make_registration(self.pre, self.secret, ts["ts1"])
        self.card0, self.echo, self.record = scheme.gwn_process_registration(
            self.req, self.db, self.keys, ts["ts1"], DELTA_T, ts["te"])
        self.card = scheme.user_verify_card(self.card0, self.echo, self.secret)
        self.sreq = scheme.sensor_make_registration(self.sensor0, ts["ts2"])
        self.sreply = scheme.gwn_process_sensor_registration(
            self.sreq, self.sdb, self.keys, ts["ts2"], DELTA_T, ts["ts3"])
        self.sensor = scheme.sensor_finish_registration(self.sensor0, self.sreply, ts["ts3"], DELTA_T)
        self.login = scheme.user_login(self.card, self.secret, self.k_i, ts["ts4"])
        self.relay, self.gwn_k_i, self.record2 = scheme.gwn_process_login(
            self.login, [self.record], self.keys, ts["ts4"], DELTA_T, self.sensor.sid, ts["ts5"])
        self.reply, self.sensor_k_i = scheme.sensor_process(
            self.relay, self.sensor, self.k_j, ts["ts5"], DELTA_T, ts["ts6"])
        return self


def fixed_flow() -> Flow:
    return Flow(
        pre=PreCredential(b"alice-pre", b"pw0"),
        secret=UserSecret(b"alice", b"secret", b"\x11" * 20),
        keys=GwnKeys(b"\x33" * 20, b"\x44" * 20),
        sensor0=SensorSecret(b"s1", b"\x22" * 20),
        k_i=b"\x55" * 20,
        k_j=b"\x66" * 20,
        ts=dict(ts1=1000, te=1_000_000, ts2=2000, ts3=2001, ts4=3000, ts5=3001, ts6=3002),
    )


def random_ident(rng: random.Random, lo=1, hi=20) -> bytes:
    return bytes(rng.randrange(0x21, 0x7F) for _ in range(rng.randint(lo, hi)))


def random_flow(rng: random.Random) -> Flow:
    t = rng.randrange(10**6, 10**12)
    return Flow(
        pre=PreCredential(random_ident(rng), rng.randbytes(rng.randrange(1, 16))),
        secret=UserSecret(random_ident(rng), rng.randbytes(rng.randrange(1, 16)), rng.randbytes(20)),
        keys=GwnKeys(rng.randbytes(20), rng.randbytes(20)),
        sensor0=SensorSecret(random_ident(rng), rng.randbytes(20)),
        k_i=rng.randbytes(20),
        k_j=rng.randbytes(20),
        ts=dict(ts1=t, te=t + 10**6, ts2=t + 1, ts3=t + 2, ts4=t + 3, ts5=t + 4, ts6=t + 5),
    )


@pytest.fixture
def flow() -> Flow:
    return fixed_flow().run()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", {})
    lines = [v for _, v in sorted(verdicts.items())]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
