"""End-to-end sign language translation: 3D ResNet video encoder, SWM conversion
and a Transformer translator trained jointly, with preprocessing and evaluation tools."""

__version__ = "0.1.0"
