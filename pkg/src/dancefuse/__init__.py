"""Music- and text-conditioned dance generation at desk scale."""

__version__ = "0.1.0"
