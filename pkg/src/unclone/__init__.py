"""Clone removal for MiniJ programs by stepwise unification."""
__version__ = "0.1.0"
