"""Match-three research game platform with BCI mini-games and a synthetic EEG validation loop."""

__version__ = "0.1.0"
