"""Golden test vectors for the codec primitives and every scheme formula.

File format, one vector per line, tab separated::

    <operation>\t<hex input>,<hex input>,...\t<hex output>

An empty octet string is written ``-``; an operation with no inputs has an
empty input column.  Timestamps entering formulas appear as their 8-octet encoding; the
``encode_ts`` vectors take the integer in minimal big-endian form.  Lines
starting with ``#`` are comments.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import NamedTuple

from . import scheme
from .bitcodec import concat, encode_id, encode_ts, hash_bytes, xor
from .scheme import GwnKeys, PreCredential, SensorSecret, UserSecret

HEADER = "# wsnauth golden vectors v1: operation<TAB>inputs<TAB>output"

SCHEME_OPERATIONS = (
    "VI_i", "CI_i", "DI_i", "Q_i", "P_i", "TC_i", "PTC_i", "HQ_i",
    "VI_j", "TC_j", "Q_j", "REG_j",
    "DID_i", "C_i", "PKS_i", "DID_GWN", "C_GWN", "PKS_GWN", "C_j", "PKS_j", "KEY_ij",
)


class Vector(NamedTuple):
    op: str
    inputs: tuple[bytes, ...]
    output: bytes

    def to_line(self) -> str:
        ins = ",".join(x.hex() or "-" for x in self.inputs)
        return f"{self.op}\t{ins}\t{self.output.hex() or '-'}"

    @classmethod
    def from_line(cls, line: str) -> "Vector":
        op, ins, out = line.split("\t")
        inputs = tuple(b"" if x == "-" else bytes.fromhex(x) for x in ins.split(",")) if ins else ()
        return cls(op, inputs, b"" if out == "-" else bytes.fromhex(out))


def _fixtures() -> list[dict]:
    base = dict(
        id_pre=b"alice-pre", pw_pre=b"pw0", id=b"alice", pw=b"secret", r=b"\x11" * 20,
        sid=b"s1", r_j=b"\x22" * 20, k_u=b"\x33" * 20, k_s=b"\x44" * 20,
        k_i=b"\x55" * 20, k_j=b"\x66" * 20,
        ts1=1000, te=1_000_000, ts2=2000, ts3=2001, ts4=3000, ts5=3001, ts6=3002,
    )
    out = [base]
    rng = random.Random(20131)
    for n in (1, 2):
        fx = dict(base)
        fx.update(
            id_pre=f"pre-{n}".encode(), pw_pre=rng.randbytes(6).hex().encode(),
            id=f"user{n:02d}".encode(), pw=rng.randbytes(8).hex().encode(), r=rng.randbytes(20),
            sid=f"sensor-{n}".encode(), r_j=rng.randbytes(20),
            k_u=rng.randbytes(20), k_s=rng.randbytes(20), k_i=rng.randbytes(20), k_j=rng.randbytes(20),
        )
        t = rng.randrange(10**6, 10**9)
        fx.update(ts1=t, te=t + 10**6, ts2=t + 10, ts3=t + 11, ts4=t + 100, ts5=t + 101, ts6=t + 102)
        out.append(fx)
    return out


def _codec_vectors() -> list[Vector]:
    vs = []
    for x in (b"", b"abc", b"\x00" * 20, bytes(range(64))):
        vs.append(Vector("hash", (x,), hash_bytes(x)))
    for fields in ([b"AB"], [b"A", b"B"], [b"", b"AB"], [b"x" * 300, b"\x00"]):
        vs.append(Vector("concat", tuple(fields), concat(fields)))
    for a, b in ((b"\x0f" * 4, b"\xf0" * 4), (b"\x11" * 20, b"\x11" * 20)):
        vs.append(Vector("xor", (a, b), xor(a, b)))
    for ident in (b"A", b"alice", b"x" * 20):
        vs.append(Vector("encode_id", (ident,), encode_id(ident)))
    for ts in (0, 1, 2**64 - 1):
        minimal = ts.to_bytes(max(1, (ts.bit_length() + 7) // 8), "big")
        vs.append(Vector("encode_ts", (minimal,), encode_ts(ts)))
    return vs


def _scheme_vectors(fx: dict) -> list[Vector]:
    T = encode_ts
    ident, sid = fx["id"], fx["sid"]
    keys = GwnKeys(fx["k_u"], fx["k_s"])
    delta_t = 5
    pre = PreCredential(fx["id_pre"], fx["pw_pre"])
    secret = UserSecret(ident, fx["pw"], fx["r"])
    vs = []

    req = scheme.user_make_registration(pre, secret, fx["ts1"])
    vs.append(Vector("VI_i", (T(fx["ts1"]), fx["id_pre"], fx["pw_pre"]), req.vi))
    vs.append(Vector("CI_i", (fx["id_pre"], fx["pw_pre"], ident, fx["pw"], fx["r"]), req.ci))
    vs.append(Vector("DI_i", (ident, fx["id_pre"], fx["pw_pre"]), req.di))

    db = {pre.id_pre: scheme.pre_hash(pre.id_pre, pre.pw_pre)}
    card, echo, rec = scheme.gwn_process_registration(req, db, keys, fx["ts1"], delta_t, fx["te"])
    q = rec.q
    tc = xor(card.ptc, q)
    vs.append(Vector("Q_i", (req.ci, fx["id_pre"], fx["pw_pre"]), q))
    vs.append(Vector("P_i", (ident, T(fx["te"])), scheme.identity_binding(ident, fx["te"])))
    vs.append(Vector("TC_i", (fx["k_u"], ident, T(fx["te"])), tc))
    vs.append(Vector("PTC_i", (fx["k_u"], ident, T(fx["te"]), q), card.ptc))
    vs.append(Vector("HQ_i", (q,), echo))
    card = scheme.user_verify_card(card, echo, secret)

    sensor = SensorSecret(sid, fx["r_j"])
    sreq = scheme.sensor_make_registration(sensor, fx["ts2"])
    sdb = {sid: scheme.sensor_pre_hash(sid, fx["r_j"])}
    sreply = scheme.gwn_process_sensor_registration(sreq, sdb, keys, fx["ts2"], delta_t, fx["ts3"])
    sensor = scheme.sensor_finish_registration(sensor, sreply, fx["ts3"], delta_t)
    tc_j = sensor.tc
    vs.append(Vector("VI_j", (T(fx["ts2"]), sid, fx["r_j"]), sreq.vi))
    vs.append(Vector("TC_j", (fx["k_s"], sid), tc_j))
    vs.append(Vector("Q_j", (T(fx["ts3"]), sid, fx["r_j"]), sreply.q))
    vs.append(Vector("REG_j", (T(fx["ts3"]), sid, fx["r_j"], fx["k_s"]), sreply.reg))

    login = scheme.user_login(card, secret, fx["k_i"], fx["ts4"])
    vs.append(Vector("DID_i", (ident, tc, T(fx["ts4"])), login.did))
    vs.append(Vector("C_i", (q, T(fx["ts4"]), tc), login.c))
    vs.append(Vector("PKS_i", (fx["k_i"], tc, T(fx["ts4"])), login.pks))

    relay, _, _ = scheme.gwn_process_login(login, [rec], keys, fx["ts4"], delta_t, sid, fx["ts5"])
    vs.append(Vector("DID_GWN", (ident, login.did, tc_j, T(fx["ts5"])), relay.did_gwn))
    vs.append(Vector("C_GWN", (ident, tc_j, T(fx["ts5"])), relay.c_gwn))
    vs.append(Vector("PKS_GWN", (fx["k_i"], tc_j, T(fx["ts5"])), relay.pks_gwn))

    reply, _ = scheme.sensor_process(relay, sensor, fx["k_j"], fx["ts5"], delta_t, fx["ts6"])
    vs.append(Vector("C_j", (fx["k_j"], ident, sid, T(fx["ts6"])), reply.c))
    vs.append(Vector("PKS_j", (fx["k_j"], fx["k_i"], T(fx["ts6"])), reply.pks))
    key = scheme.finalize(reply, fx["k_i"], ident, sid, fx["ts6"], delta_t)
    vs.append(Vector("KEY_ij", (fx["k_i"], fx["k_j"]), key))
    return vs


def build_vectors() -> list[Vector]:
    vs = _codec_vectors()
    for fx in _fixtures():
        vs.extend(_scheme_vectors(fx))
    return vs


def render(vectors: list[Vector]) -> str:
    return "\n".join([HEADER, *(v.to_line() for v in vectors)]) + "\n"


def export_vectors(path: str | Path) -> int:
    vs = build_vectors()
    Path(path).write_text(render(vs))
    return len(vs)


def parse_vectors(text: str) -> list[Vector]:
    return [Vector.from_line(ln) for ln in text.splitlines() if ln and not ln.startswith("#")]


def load_vectors(path: str | Path) -> list[Vector]:
    return parse_vectors(Path(path).read_text())
