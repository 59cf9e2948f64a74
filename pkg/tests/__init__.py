"""Tests for the LAA / Wi-Fi coexistence package."""
