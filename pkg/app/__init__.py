"""ARRDE benchmark harness package"""

__version__ = "1.0.0"
