"""Lunar navigation satellite time-transfer simulation toolkit."""
