"""Unsupervised quality screening of ECG/PPG windows."""
