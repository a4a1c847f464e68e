"""Touch-swipe continuous authentication with GAN-augmented training and population attacks."""
__version__ = "0.1.0"
