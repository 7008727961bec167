"""Syllable-budgeted translation rewards and diagnostics."""
