from .base import StateDir, load_package, load_state, read_text, recover, save_package, save_state

__all__ = ["StateDir", "load_state", "save_state", "load_package", "save_package", "read_text", "recover"]
