"""Set metrics between multivariate dictionaries and the learning algorithms they assess."""

__version__ = "0.1.0"
