"""EEG-informed attended-speaker extraction from binaural microphone mixtures."""

__version__ = "0.1.0"
