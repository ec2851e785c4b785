# Package marker so `python -m scripts.prove_figures` resolves from the repository root.
