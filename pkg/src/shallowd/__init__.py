"""Shallow discourse parsing: explicit relations via connective trees and a
CRF over constituents, non-explicit relations via convolutional networks."""

__version__ = "0.1.0"
