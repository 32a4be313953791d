"""Maximum-gain excitation of coupled, lossy uniform linear arrays."""
__version__ = "0.1.0"
