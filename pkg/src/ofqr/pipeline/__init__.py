"""Dataset generation, training, evaluation and robustness sweeps."""
