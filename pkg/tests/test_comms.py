from hypothesis import given, settings
from hypothesis import strategies as st

from swarminspect.comms import Bus, Kind, Message, compose_broadcast
from swarminspect.inference import Decision


def test_negative_feedback_sends_observation():
    assert compose_broadcast(Decision.WHITE, 0, False) == (0, Kind.OBSERVATION)


def test_undecided_sends_observation_under_feedback():
    assert compose_broadcast(Decision.UNDECIDED, 1, True) == (1, Kind.OBSERVATION)


def test_decided_sends_decision_under_feedback():
    assert compose_broadcast(Decision.BLACK, 1, True) == (0, Kind.DECISION)


def test_broadcast_reaches_everyone_but_sender():
    bus = Bus(4)
    bus.deliver(Message(0, 1, Kind.OBSERVATION, 10))
    assert [len(bus.inbox(k)) for k in range(4)] == [0, 1, 1, 1]


def test_same_step_messages_in_sender_order():
    bus = Bus(4)
    bus.deliver(Message(3, 1, Kind.OBSERVATION, 5))
    bus.deliver(Message(1, 0, Kind.OBSERVATION, 5))
    assert [m.sender for m in bus.drain(0)] == [1, 3]
    assert [m.sender for m in bus.drain(2)] == [1, 3]
    assert bus.drain(0) == []


@given(st.integers(2, 8), st.lists(st.tuples(st.integers(0, 7), st.integers(0, 1),
                                            st.booleans(), st.integers(-1, 1)), max_size=30))
@settings(max_examples=60, deadline=None)
def test_conservation_and_kinds(n, emits):
    bus = Bus(n)
    sent = 0
    for sender, colour, fb, d_f in emits:
        sender %= n
        bit, kind = compose_broadcast(d_f, colour, fb)
        if not fb:
            assert kind == Kind.OBSERVATION
        bus.deliver(Message(sender, bit, kind, 0))
        sent += 1
    assert sum(len(bus.drain(k)) for k in range(n)) == sent * (n - 1)
