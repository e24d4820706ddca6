import io

import pytest

from wsnauth import netsim, scheme
from wsnauth.errors import (
    BadVerifier,
    InputError,
    LoginRejected,
    ProtocolError,
    StaleTimestamp,
    Timeout,
)
from wsnauth.netsim import (
    Fault,
    MessageKind,
    ScenarioConfig,
    Transcript,
    build_deployment,
    eavesdrop,
    run_all,
    run_login_session,
    run_sensor_registration,
    run_user_registration,
)


def deployment(*faults, **kw):
    return build_deployment(ScenarioConfig(faults=tuple(faults), **kw))


class TestUserRegistration:
    def test_default_succeeds_with_two_messages(self):
        sc = deployment()
        result = run_user_registration(sc)
        assert len(result.transcript) == 2
        assert [m.kind for m in result.transcript] == [MessageKind.USER_REG, MessageKind.USER_REG_REPLY]
        assert result.card.complete
        assert sc.gateway.table[b"alice"] == result.record

    def test_delay_by_delta_t_is_stale(self):
        sc = deployment(Fault("delay", MessageKind.USER_REG, delay=5))
        with pytest.raises(StaleTimestamp) as ei:
            run_user_registration(sc)
        assert ei.value.step == "U-2" and ei.value.actor == "GWN"

    def test_flipped_vi(self):
        sc = deployment(Fault("flip", MessageKind.USER_REG, field="vi", bit=12))
        with pytest.raises(BadVerifier) as ei:
            run_user_registration(sc)
        assert ei.value.step == "U-2"

    def test_user_clock_skew_beyond_window(self):
        sc = build_deployment(ScenarioConfig(skews={"U1": -5}))
        with pytest.raises(StaleTimestamp):
            run_user_registration(sc)


class TestSensorRegistration:
    def test_default_sensor_holds_credential(self):
        sc = deployment()
        result = run_sensor_registration(sc)
        assert len(result.transcript) == 2
        assert result.secret.tc == scheme.sensor_credential(sc.gateway.keys.k_gwn_s, b"s1")

    def test_delayed_reply_is_stale_at_sensor(self):
        sc = deployment(Fault("delay", MessageKind.SENSOR_REG_REPLY, delay=10))
        with pytest.raises(StaleTimestamp) as ei:
            run_sensor_registration(sc)
        assert ei.value.step == "S-3" and ei.value.actor == "S1"

    def test_dropped_reply_times_out(self):
        sc = deployment(Fault("drop", MessageKind.SENSOR_REG_REPLY))
        before = sc.now
        with pytest.raises(Timeout) as ei:
            run_sensor_registration(sc)
        assert ei.value.step == "S-3" and ei.value.actor == "S1"
        assert sc.now - before > sc.delta_t


class TestLogin:
    def test_default_keys_equal(self):
        sc = deployment()
        run_sensor_registration(sc)
        run_user_registration(sc)
        session = run_login_session(sc)
        assert len(session.transcript) == 3
        assert session.keys_match
        assert session.gateway_verdicts == {"A-2": True, "A-4": True}
        reply = session.transcript[2]
        assert reply.receiver == "U1+GWN"

    def test_flipped_c_stops_at_gateway(self):
        sc = deployment(Fault("flip", MessageKind.LOGIN, field="c", bit=0))
        with pytest.raises(LoginRejected) as ei:
            run_all(sc)
        assert ei.value.step == "A-2"
        assert sc.transcript[-1].kind == MessageKind.LOGIN
        assert sc.gateway.table[b"alice"].status_bit is False

    def test_replayed_login_is_stale(self):
        sc = deployment()
        first = run_all(sc)
        old_login = eavesdrop(first.transcript, MessageKind.LOGIN)[0]
        sc.now += sc.delta_t
        with pytest.raises(StaleTimestamp) as ei:
            netsim.deliver_login(sc, old_login, "ADV", b"\x00" * 20, b"alice")
        assert ei.value.step == "A-2"

    def test_login_before_registration(self):
        sc = deployment()
        with pytest.raises(ValueError):
            run_login_session(sc)

    def test_repeated_logins_update_last_login(self):
        sc = deployment()
        s1 = run_all(sc)
        s2 = run_login_session(sc)
        assert s1.record.last_login < s2.record.last_login
        assert sc.gateway.table[b"alice"].last_login == s2.record.last_login
        assert s1.user_key != s2.user_key

    def test_gateway_picks_configured_sensor(self):
        sc = netsim.Scenario(ScenarioConfig(sensor_choice="S2"))
        sc.add_user(b"bob-pre", b"p", b"bob", b"q")
        sc.add_sensor(b"s-one")
        sc.add_sensor(b"s-two")
        run_sensor_registration(sc, "S1")
        run_sensor_registration(sc, "S2")
        run_user_registration(sc)
        session = run_login_session(sc)
        assert session.sid == b"s-two" and session.keys_match

    def test_several_users_share_gateway(self):
        sc = netsim.Scenario()
        for n in range(5):
            sc.add_user(f"pre{n}".encode(), b"pp", f"user{n}".encode(), b"pw")
        sc.add_sensor(b"s1")
        run_sensor_registration(sc)
        for label in sc.users:
            run_user_registration(sc, label)
        for label in sc.users:
            assert run_login_session(sc, label).keys_match
        assert all(r.status_bit for r in sc.gateway.table.values())


class TestEavesdrop:
    def test_registration_has_one_user_reg(self):
        sc = deployment()
        t = run_user_registration(sc).transcript
        assert len(eavesdrop(t, MessageKind.USER_REG)) == 1

    def test_empty(self):
        assert eavesdrop(Transcript(), MessageKind.LOGIN) == []

    def test_login_is_byte_identical(self):
        sc = deployment()
        run_sensor_registration(sc)
        run_user_registration(sc)
        u = sc.users["U1"]
        k_i = b"\x07" * 20
        login = scheme.user_login(u.card, u.secret, k_i, sc.clock("U1"))
        netsim.deliver_login(sc, login, "U1", k_i, b"alice")
        assert eavesdrop(sc.transcript, MessageKind.LOGIN) == [login]

    def test_read_only(self):
        sc = deployment()
        run_all(sc)
        before = sc.transcript.to_lines()
        eavesdrop(sc.transcript)
        assert sc.transcript.to_lines() == before


class TestDeterminism:
    def test_same_seed_same_transcript(self):
        a, b = deployment(seed=42), deployment(seed=42)
        run_all(a)
        run_all(b)
        assert a.transcript.to_lines() == b.transcript.to_lines()

    def test_different_seed_differs(self):
        a, b = deployment(seed=1), deployment(seed=2)
        run_all(a)
        run_all(b)
        assert a.transcript.to_lines() != b.transcript.to_lines()

    def test_every_send_recorded_once(self, monkeypatch):
        sc = deployment()
        sent = []
        real = sc.transmit

        def spy(kind, sender, receivers, payload):
            sent.append((kind, payload))
            return real(kind, sender, receivers, payload)

        monkeypatch.setattr(sc, "transmit", spy)
        run_all(sc)
        assert [(m.kind, m.payload) for m in sc.transcript] == sent


class TestTranscriptFile:
    def test_round_trip(self, tmp_path):
        sc = deployment()
        run_all(sc)
        path = tmp_path / "t.txt"
        sc.transcript.dump(path)
        loaded = Transcript.load(path)
        assert loaded == sc.transcript
        buf = io.StringIO()
        loaded.dump(buf)
        assert buf.getvalue() == path.read_text()

    def test_fixed_field_order(self):
        sc = deployment()
        run_user_registration(sc)
        line = sc.transcript.to_lines()[1]
        assert line.split()[0:4] == ["UserReg", "U1", "GWN", str(sc.config.start)]
        assert [c.split("=")[0] for c in line.split()[4:]] == ["id_pre", "ts1", "vi", "ci", "di"]

    @pytest.mark.parametrize("line", [
        "Bogus U1 GWN 1",
        "Login U1 GWN 1 did=00",
        "Login U1 GWN 1 c=" + "00" * 20 + " did=" + "00" * 20 + " ts4=" + "00" * 8
        + " pks=" + "00" * 20 + " te=" + "00" * 8,
        "UserReg U1 GWN 1 id_pre=41 ts1=zz vi=00 ci=00 di=00",
    ])
    def test_malformed(self, line):
        with pytest.raises(InputError):
            Transcript.from_lines([line])

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            Transcript.load(tmp_path / "nope")


class TestFaultSpec:
    def test_parse_forms(self):
        assert Fault.parse("flip:login:c:0") == Fault("flip", MessageKind.LOGIN, field="c", bit=0)
        assert Fault.parse("delay:UserReg:6") == Fault("delay", MessageKind.USER_REG, delay=6)
        assert Fault.parse("drop:sensor-reply@GWN:0") == Fault("drop", MessageKind.SENSOR_REPLY, to="GWN")
        assert Fault.parse("flip:gwn_to_sensor:c_gwn:7:1").occurrence == 1

    @pytest.mark.parametrize("bad", ["flip:login:nofield:0", "zap:login", "flip:login:c", "drop:nokind"])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            Fault.parse(bad)

    def test_flip_bit_out_of_range(self):
        sc = deployment(Fault("flip", MessageKind.LOGIN, field="c", bit=160))
        with pytest.raises(ValueError):
            run_all(sc)

    def test_fault_on_one_broadcast_copy(self):
        sc = deployment(Fault("flip", MessageKind.SENSOR_REPLY, field="pks", bit=3, to="GWN"))
        with pytest.raises(ProtocolError) as ei:
            run_all(sc)
        assert ei.value.step == "A-4" and ei.value.actor == "GWN"


@pytest.mark.parametrize("kind", list(MessageKind))
def test_every_single_bit_flip_is_rejected(kind):
    """Covers timestamp fields too: they all enter some verifier hash."""
    for name in netsim.payload_fields(kind):
        # "s1" is only 16 bits wide
        bits = (0, 7, 13) if name == "sid" else (0, 7, 13, 63)
        for bit in bits:
            sc = deployment(Fault("flip", kind, field=name, bit=bit))
            with pytest.raises(ProtocolError):
                run_all(sc)
