import json

import pytest

from officemesh.acl import (
    BROADCAST,
    Envelope,
    Payload,
    PayloadKind,
    Performative,
    EncodingError,
)
from officemesh.bus import (
    FILTER_ALL,
    FILTER_OWN,
    FIREHOSE,
    AlreadySubscribed,
    Broker,
    Forbidden,
    StaleMessage,
    StartupError,
    TcpBusClient,
    UnknownTopic,
    run_broker,
)


def envelope(sender, recipient, seq, performative=Performative.INFORM,
             kind=PayloadKind.STATE_UPDATE, body=None, sim_time=0):
    return Envelope(
        msg_id=f"{sender}#{seq}",
        conversation_id=f"{sender}:1",
        performative=performative,
        sender=sender,
        recipient=recipient,
        payload=Payload(kind, body or {}),
        sim_time=sim_time,
        seq=seq,
    )


def test_publish_without_subscribers_still_hits_transcript():
    broker = Broker()
    s = broker.connect("a")
    s.publish(envelope("a", BROADCAST, 1))
    t = broker.transcript()
    assert len(t) == 1
    assert t[0]["deliver_to"] == []
    assert t[0]["order"] == 0


def test_no_replay_for_late_subscribers():
    broker = Broker()
    a = broker.connect("a")
    b = broker.connect("b")
    a.publish(envelope("a", BROADCAST, 1))
    b.subscribe("/acl/inform")
    assert b.poll() is None
    a.publish(envelope("a", BROADCAST, 2))
    assert b.poll() is not None


def test_duplicate_subscription_rejected():
    broker = Broker()
    a = broker.connect("a")
    a.subscribe("/acl/inform")
    with pytest.raises(AlreadySubscribed):
        a.subscribe("/acl/inform")


def test_unknown_topic_rejected():
    broker = Broker()
    a = broker.connect("a")
    with pytest.raises(UnknownTopic):
        a.subscribe("/acl/gossip")


def test_recipient_filter_matching():
    """Addressed publish reaches the addressee and the monitor, nobody else."""
    broker = Broker()
    sender = broker.connect("px-1")
    tb = broker.connect("turtlebot-1")
    cam = broker.connect("camera-1")
    monitor = broker.connect("monitor")
    for client in (tb, cam):
        client.subscribe("/acl/request", FILTER_OWN)
    monitor.subscribe("/acl/request", FILTER_ALL)
    sender.publish(envelope("px-1", "turtlebot-1", 1,
                            performative=Performative.REQUEST,
                            kind=PayloadKind.ACTION_REQUEST))
    assert tb.poll() is not None
    assert cam.poll() is None
    assert monitor.poll() is not None
    assert broker.transcript()[0]["deliver_to"] == ["monitor", "turtlebot-1"]


def test_broadcast_reaches_own_filter():
    broker = Broker()
    a = broker.connect("a")
    b = broker.connect("b")
    b.subscribe("/acl/inform", FILTER_OWN)
    a.publish(envelope("a", BROADCAST, 1))
    assert b.poll() is not None


def test_per_sender_fifo():
    broker = Broker()
    a = broker.connect("a")
    b = broker.connect("b")
    b.subscribe("/acl/inform")
    for seq in range(1, 21):
        a.publish(envelope("a", BROADCAST, seq, body={"n": seq}))
    received = []
    while (e := b.poll()) is not None:
        received.append(e.payload.body["n"])
    assert received == list(range(1, 21))


def test_seq_regression_is_stale():
    broker = Broker()
    a = broker.connect("a")
    a.publish(envelope("a", BROADCAST, 5))
    with pytest.raises(StaleMessage):
        a.publish(envelope("a", BROADCAST, 5))
    with pytest.raises(StaleMessage):
        a.publish(envelope("a", BROADCAST, 3))
    a.publish(envelope("a", BROADCAST, 6))


def test_sender_mismatch_forbidden():
    broker = Broker()
    a = broker.connect("a")
    with pytest.raises(Forbidden):
        a.publish(envelope("someone-else", BROADCAST, 1))


def test_duplicate_client_id_forbidden():
    broker = Broker()
    broker.connect("a")
    with pytest.raises(Forbidden):
        broker.connect("a")


def test_invalid_envelope_rejected_at_publish():
    broker = Broker()
    a = broker.connect("a")
    bad = envelope("a", BROADCAST, 1, performative=Performative.PROPOSE,
                   kind=PayloadKind.ACTION_REQUEST)
    with pytest.raises(EncodingError):
        a.publish(bad)


def test_transcript_completeness_and_order():
    broker = Broker()
    a = broker.connect("a")
    b = broker.connect("b")
    b.subscribe("/acl/inform")
    for seq in range(1, 6):
        a.publish(envelope("a", BROADCAST, seq))
    t = broker.transcript()
    assert [r["order"] for r in t] == [0, 1, 2, 3, 4]
    assert [r["envelope"]["seq"] for r in t] == [1, 2, 3, 4, 5]


def test_queue_overflow_disconnects_subscriber():
    broker = Broker(queue_capacity=4)
    a = broker.connect("a")
    slow = broker.connect("slow")
    slow.subscribe("/acl/inform")
    for seq in range(1, 7):
        a.publish(envelope("a", BROADCAST, seq))
    assert not slow.alive
    # the broker keeps running for everyone else
    a.publish(envelope("a", BROADCAST, 7))


def test_disconnect_removes_subscriptions():
    broker = Broker()
    a = broker.connect("a")
    b = broker.connect("b")
    b.subscribe("/acl/inform")
    broker.disconnect("b")
    a.publish(envelope("a", BROADCAST, 1))
    assert broker.transcript()[-1]["deliver_to"] == []


def test_firehose_tap_not_in_delivery_record():
    broker = Broker()
    a = broker.connect("a")
    tap = broker.connect("tap")
    tap.subscribe(FIREHOSE, FILTER_ALL)
    a.publish(envelope("a", "nobody", 1))
    assert broker.transcript()[0]["deliver_to"] == []
    assert tap.poll() is not None


def _scripted_session_inproc() -> list[dict]:
    broker = Broker()
    a = broker.connect("alice")
    b = broker.connect("bob")
    b.subscribe("/acl/inform", FILTER_OWN)
    a.subscribe("/acl/confirm", FILTER_OWN)
    a.publish(envelope("alice", BROADCAST, 1, sim_time=1))
    b.publish(envelope("bob", "alice", 1, performative=Performative.CONFIRM,
                       kind=PayloadKind.OBSERVATION, body={"v": 1}, sim_time=2))
    a.publish(envelope("alice", "bob", 2, sim_time=3))
    return broker.transcript()


def _scripted_session_tcp() -> list[dict]:
    handle = run_broker({"transport": "tcp", "listen_addr": "127.0.0.1:0"})
    host, port = handle.address
    try:
        a = TcpBusClient(host, port, "alice")
        b = TcpBusClient(host, port, "bob")
        b.subscribe("/acl/inform", FILTER_OWN)
        a.subscribe("/acl/confirm", FILTER_OWN)
        a.publish(envelope("alice", BROADCAST, 1, sim_time=1))
        assert b.wait_message() is not None
        b.publish(envelope("bob", "alice", 1, performative=Performative.CONFIRM,
                           kind=PayloadKind.OBSERVATION, body={"v": 1}, sim_time=2))
        assert a.wait_message() is not None
        a.publish(envelope("alice", "bob", 2, sim_time=3))
        assert b.wait_message() is not None
        a.close()
        b.close()
        return handle.core.transcript()
    finally:
        handle.shutdown()


def test_inproc_and_tcp_transports_produce_identical_transcripts(tmp_path):
    inproc = _scripted_session_inproc()
    tcp = _scripted_session_tcp()
    dump = lambda t: "\n".join(
        json.dumps(r, sort_keys=True, separators=(",", ":")) for r in t
    )
    assert dump(inproc) == dump(tcp)


def test_tcp_error_reporting():
    handle = run_broker({"transport": "tcp", "listen_addr": "127.0.0.1:0"})
    host, port = handle.address
    try:
        a = TcpBusClient(host, port, "a")
        a.publish(envelope("a", BROADCAST, 5))
        with pytest.raises(StaleMessage):
            a.publish(envelope("a", BROADCAST, 5))
        with pytest.raises(UnknownTopic):
            a.subscribe("/acl/nonsense")
        a.close()
    finally:
        handle.shutdown()


def test_tcp_duplicate_hello_rejected():
    handle = run_broker({"transport": "tcp", "listen_addr": "127.0.0.1:0"})
    host, port = handle.address
    try:
        a = TcpBusClient(host, port, "same")
        with pytest.raises(Exception):
            TcpBusClient(host, port, "same")
        a.close()
    finally:
        handle.shutdown()


def test_run_broker_unknown_transport():
    with pytest.raises(StartupError):
        run_broker({"transport": "carrier-pigeon"})


def test_broker_shutdown_writes_transcript(tmp_path):
    handle = run_broker({"transport": "tcp", "listen_addr": "127.0.0.1:0"})
    host, port = handle.address
    a = TcpBusClient(host, port, "a")
    a.publish(envelope("a", BROADCAST, 1))
    a.close()
    out = tmp_path / "transcript.jsonl"
    handle.shutdown(out)
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["envelope"]["sender"] == "a"
