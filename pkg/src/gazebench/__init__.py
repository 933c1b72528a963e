"""Eye-gaze interface benchmarking toolkit: head-compensated gaze mapping,
calibration and cursor control, Fitts' law and path-efficiency analysis,
wearable-tracker failure audits, and scene-video circle measurement."""

__version__ = "0.1.0"
