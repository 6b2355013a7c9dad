"""Semi-supervised junction-tree VAE for molecular property prediction and generation."""

__version__ = "0.1.0"


def __getattr__(name):
    # keep `import semole` light; the estimator pulls in scikit-learn
    if name == "SeMole":
        from .train import SeMole
        return SeMole
    raise AttributeError(name)
