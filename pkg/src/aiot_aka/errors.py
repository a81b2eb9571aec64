"""Exception hierarchy shared by all modules."""


class AkaError(Exception):
    """Base class for every error raised by this package."""


class IntegrityError(AkaError):
    """A MAC, CMAC or AEAD tag failed to verify (the opener's ⊥)."""


class WireFormatError(AkaError):
    """A byte string does not decode to the expected message layout."""


class DuplicateIdError(AkaError):
    pass


class NotFoundError(AkaError):
    pass


class NoPendingError(AkaError):
    pass


class NoNonceError(AkaError):
    pass


class NoSecretError(AkaError):
    pass


class WrongVariantError(AkaError):
    pass


class ReplayError(AkaError):
    """A device nonce was presented twice."""


class UnknownProtocolError(AkaError, KeyError):
    pass


class UncalibratedOpError(AkaError, KeyError):
    pass
