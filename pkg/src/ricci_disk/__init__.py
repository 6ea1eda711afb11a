"""Ricci flow on rotationally symmetric disks with prescribed boundary curvature."""

__version__ = "0.1.0"
