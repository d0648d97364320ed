"""Small drivers shared by the network tests."""

from photonoc.message import Message
from photonoc.network import msg_class


def push(net, msg):
    """Take a send-queue slot and inject, as the hub does."""
    net.reserve(msg.src, msg_class(msg))
    net.inject(msg)


def msg(kind, src, dst, created=0):
    return Message(kind, src, dst, created=created)


# acceptance bookkeeping: criterion number -> [(check, passed, detail)]
ACCEPTANCE = {}


def record(criterion, check, passed, detail=""):
    """Log one acceptance sub-check; returns ``passed`` for use in an assert."""
    ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
    print(f"[acceptance {criterion}] {'PASS' if passed else 'FAIL'} {check}: {detail}")
    return passed
