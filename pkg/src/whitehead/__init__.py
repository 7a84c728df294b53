"""Whitehead moves on Farey tessellations and the circle maps they induce."""

__version__ = "0.1.0"
