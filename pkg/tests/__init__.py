"""Test suite for confmorph."""
