"""Exception hierarchy shared by every layer of the package."""


class RisSecError(Exception):
    """Base class for all errors raised by rissec."""


# crypto

class InvalidKey(RisSecError, ValueError):
    pass


class InvalidLength(RisSecError, ValueError):
    pass


# keysched

class ConfigTooLong(RisSecError, ValueError):
    """temp_id_len + key_len exceeds the hash output size."""


class NonceReuse(RisSecError):
    pass


class SqnExhausted(RisSecError):
    """The 32-bit sequence counter is about to wrap; rotate first."""


# wire

class FieldTooLong(RisSecError, ValueError):
    pass


class DecodeError(RisSecError, ValueError):
    """Base for every way a byte string can fail to decode."""


class UnknownTag(DecodeError):
    pass


class Truncated(DecodeError):
    pass


class TrailingBytes(DecodeError):
    pass


class StateOutOfRange(DecodeError):
    """A phase-configuration payload is malformed or holds an oversized state."""


# endpoints

class UnknownId(RisSecError, KeyError):
    pass


class Busy(RisSecError):
    """A registration for this device is already pending."""


class NoPendingTransaction(RisSecError):
    pass


# simnet / bench

class ScriptIndexOutOfRange(RisSecError, IndexError):
    pass


class VectorGateFailed(RisSecError):
    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("test vectors failed: " + ", ".join(self.failures))
