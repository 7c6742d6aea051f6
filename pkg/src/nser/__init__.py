"""Noisy speech emotion recognition on frozen ASR layer representations.

Subpackages:
    nn       -- differentiable numeric kernel (GRU, pooling, norm, Adam)
    model    -- per-layer BiGRU adapters, weighted layer fusion, classifier
    noise    -- WAV I/O and SNR-exact noise mixing
    reprio   -- LRF1 representation files and the synthetic corpus generator
    metrics  -- UAR, F1, WER, confusion matrices
    harness  -- manifests, configs, k-fold CV, training loop, checkpoints
    cli      -- the `nser` command
"""

__version__ = "0.1.0"
