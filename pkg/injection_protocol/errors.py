class InjectionError(Exception):
    """Base class for injection failures; the runner logs them and moves on."""


class NoBackboneCapableDevice(InjectionError):
    pass


class NotBackboneCapable(InjectionError):
    pass


class UnknownItem(InjectionError):
    pass


class ItemNotPresentInClique(InjectionError):
    pass


class TargetUnreachable(InjectionError):
    pass


class NoHolderClique(InjectionError):
    pass


class EmptyRegistry(InjectionError):
    pass


class InvalidWormhole(InjectionError):
    """Source and target clique are the same."""


class ScopeViolation(InjectionError):
    """A clique_local item would leave its clique over the backbone."""


class NotRegistered(InjectionError):
    """The backbone knows no registered device to contact in a clique."""


__all__ = [
    "InjectionError",
    "NoBackboneCapableDevice",
    "NotBackboneCapable",
    "UnknownItem",
    "ItemNotPresentInClique",
    "TargetUnreachable",
    "NoHolderClique",
    "EmptyRegistry",
    "InvalidWormhole",
    "ScopeViolation",
    "NotRegistered",
]
