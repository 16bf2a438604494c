"""Infrastructure adapters (file system, in-memory testing)."""
