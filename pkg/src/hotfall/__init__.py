"""Matter waves released from a helical optical tube: trapped states and free fall."""

__version__ = "0.1.0"
