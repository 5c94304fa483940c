"""Command handlers; each module exposes ``register(subparsers, common)``."""
