class JunctionError(ValueError):
    pass


class EmptyDataset(JunctionError):
    pass


class InconsistentAttachment(JunctionError):
    pass


class NoLegalAttachment(JunctionError):
    pass


class OOVCluster(JunctionError, KeyError):
    """A cluster label is absent from the vocabulary."""

    def __str__(self):
        return ValueError.__str__(self)
