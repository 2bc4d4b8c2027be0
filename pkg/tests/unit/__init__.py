"""Unit tests for rankmap."""
