from .app import cli_main

__all__ = ["cli_main"]
