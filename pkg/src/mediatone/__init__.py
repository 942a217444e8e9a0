"""Media tone of earnings news: lexicon calibration, abnormal tone and event-study panels."""

__version__ = "0.1.0"
