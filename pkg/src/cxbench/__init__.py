"""Complex-valued vs real-valued 1-D conv benchmarks on synthetic phase/amplitude signals."""

__version__ = "0.1.0"
