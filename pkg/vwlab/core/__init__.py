"""Core domain, interfaces and numerical kernels."""
