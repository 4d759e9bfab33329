"""Configuration, suites, CLI and report emission."""
