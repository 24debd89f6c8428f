"""Anchorline: anchor-relative inspection mission planning and simulated
execution on a shared map."""

__version__ = "0.1.0"
