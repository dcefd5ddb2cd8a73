"""Lunar orbit dynamics."""
