"""CLI commands for rankmap."""
