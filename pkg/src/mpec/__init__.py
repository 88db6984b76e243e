"""Message-passing error correction for a level-2 Bacon-Shor CNOT exRec."""

__version__ = "0.1.0"
